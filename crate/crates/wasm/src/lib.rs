//! Browser bindings for three interactive operations: confusion-matrix
//! smoothing and channel application, rule annotation of typed text, and a
//! small synthetic learning curve. Inputs and outputs are plain text (TSV or
//! CSV) so the page needs no serializer.

use wasm_bindgen::prelude::*;

pub mod demo;

fn to_js<T>(r: Result<T, String>) -> Result<T, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// Smooths a TSV confusion matrix (label header, then rows) with exponent `beta`.
#[wasm_bindgen]
pub fn smooth_matrix(tsv: &str, beta: f64) -> Result<String, JsError> {
    to_js(demo::smooth_matrix(tsv, beta))
}

/// Pushes a comma-separated clean distribution through a TSV matrix.
#[wasm_bindgen]
pub fn apply_channel(tsv: &str, distribution: &str) -> Result<String, JsError> {
    to_js(demo::apply_channel(tsv, distribution))
}

/// Tags typed text with DATE rules for `language` plus gazetteer lines of the
/// form `LABEL<TAB>entry`. Returns `token<TAB>tag` lines.
#[wasm_bindgen]
pub fn annotate_text(text: &str, language: &str, gazetteer: &str) -> Result<String, JsError> {
    to_js(demo::annotate_text(text, language, gazetteer))
}

/// Synthetic learning curve comparing clean-only training with training that
/// adds channel-corrected weak labels. Returns summary CSV.
#[wasm_bindgen]
pub fn synthetic_curve(
    flip_mass: f64,
    beta: f64,
    sizes: &str,
    seeds: usize,
    epochs: usize,
) -> Result<String, JsError> {
    to_js(demo::synthetic_curve(flip_mass, beta, sizes, seeds, epochs))
}
