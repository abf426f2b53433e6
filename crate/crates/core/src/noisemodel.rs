//! Confusion-matrix noise channel.
//!
//! `C[i][j] = P(noisy = j | clean = i)`. A clean output distribution `p` is
//! mapped to the noisy one by `q = pᵀC`.

use std::fmt::Write as _;

use crate::error::{Error, Result};

const ROW_TOLERANCE: f64 = 1e-9;

/// Row-stochastic K×K matrix over an ordered label list.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    labels: Vec<String>,
    probs: Vec<f64>,
}

impl ConfusionMatrix {
    /// Validates shape, entry range and row sums.
    pub fn new(labels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = labels.len();
        if k == 0 {
            return Err(Error::Empty("label list"));
        }
        if rows.len() != k || rows.iter().any(|r| r.len() != k) {
            return Err(Error::LengthMismatch(format!(
                "confusion matrix must be {k}x{k}"
            )));
        }
        let probs: Vec<f64> = rows.into_iter().flatten().collect();
        let cm = ConfusionMatrix { labels, probs };
        cm.check()?;
        Ok(cm)
    }

    pub fn identity(labels: Vec<String>) -> Self {
        let k = labels.len();
        let mut probs = vec![0.0; k * k];
        for i in 0..k {
            probs[i * k + i] = 1.0;
        }
        ConfusionMatrix { labels, probs }
    }

    fn check(&self) -> Result<()> {
        for (i, row) in self.rows().enumerate() {
            if row
                .iter()
                .any(|v| !v.is_finite() || !(0.0..=1.0).contains(v))
            {
                return Err(Error::InvalidArgument(format!(
                    "row {i} has entries outside [0, 1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::InvalidArgument(format!("row {i} sums to {sum}")));
            }
        }
        Ok(())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, clean: usize, noisy: usize) -> f64 {
        self.probs[clean * self.size() + noisy]
    }

    pub fn row(&self, clean: usize) -> &[f64] {
        let k = self.size();
        &self.probs[clean * k..(clean + 1) * k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks(self.size())
    }

    /// Tab-separated: a header line of labels, then K rows of probabilities.
    pub fn to_tsv(&self) -> String {
        let mut out = self.labels.join("\t");
        out.push('\n');
        for row in self.rows() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            let _ = writeln!(out, "{}", cells.join("\t"));
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Empty("confusion matrix file"))?;
        let labels: Vec<String> = header.split('\t').map(|s| s.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (i, line) in lines {
            let row = line
                .split('\t')
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::parse(i + 1, format!("not a number: {c:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Self::new(labels, rows)
    }
}

/// Counts label pairs decision by decision. Rows of labels never seen on the
/// clean side become identity rows.
///
/// `clean` and `noisy` hold aligned label sequences (token tags for NER,
/// one class per sentence for topics).
pub fn estimate_confusion_matrix<S: AsRef<str>>(
    clean: &[Vec<S>],
    noisy: &[Vec<S>],
    labels: &[String],
) -> Result<ConfusionMatrix> {
    estimate_confusion_matrix_filtered(clean, noisy, labels, |_| true)
}

/// Like [`estimate_confusion_matrix`], counting only pairs whose clean label
/// satisfies `include` (e.g. to leave the `O` row out of NER estimates).
pub fn estimate_confusion_matrix_filtered<S: AsRef<str>>(
    clean: &[Vec<S>],
    noisy: &[Vec<S>],
    labels: &[String],
    include: impl Fn(&str) -> bool,
) -> Result<ConfusionMatrix> {
    if labels.is_empty() {
        return Err(Error::Empty("label list"));
    }
    if clean.len() != noisy.len() {
        return Err(Error::LengthMismatch(format!(
            "{} clean vs {} noisy sequences",
            clean.len(),
            noisy.len()
        )));
    }
    let index = |l: &str| {
        labels
            .iter()
            .position(|x| x == l)
            .ok_or_else(|| Error::UnknownLabel(l.to_string()))
    };
    let k = labels.len();
    let mut counts = vec![0u64; k * k];
    for (n, (c, w)) in clean.iter().zip(noisy).enumerate() {
        if c.len() != w.len() {
            return Err(Error::LengthMismatch(format!(
                "sequence {n}: {} clean vs {} noisy labels",
                c.len(),
                w.len()
            )));
        }
        for (a, b) in c.iter().zip(w) {
            let (a, b) = (a.as_ref(), b.as_ref());
            let (i, j) = (index(a)?, index(b)?);
            if include(a) {
                counts[i * k + j] += 1;
            }
        }
    }
    let rows = (0..k)
        .map(|i| {
            let row = &counts[i * k..(i + 1) * k];
            let total: u64 = row.iter().sum();
            if total == 0 {
                (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect()
            } else {
                row.iter().map(|&c| c as f64 / total as f64).collect()
            }
        })
        .collect();
    Ok(ConfusionMatrix {
        labels: labels.to_vec(),
        probs: rows_into_flat(rows),
    })
}

fn rows_into_flat(rows: Vec<Vec<f64>>) -> Vec<f64> {
    rows.into_iter().flatten().collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingConfig {
    beta: f64,
}

impl SmoothingConfig {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "beta must lie in (0, 1], got {beta}"
            )));
        }
        Ok(SmoothingConfig { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        SmoothingConfig { beta: 0.8 }
    }
}

/// Raises each entry to the power β and re-normalizes every row.
pub fn smooth_confusion_matrix(
    cm: &ConfusionMatrix,
    cfg: SmoothingConfig,
) -> Result<ConfusionMatrix> {
    let mut rows = Vec::with_capacity(cm.size());
    for (i, row) in cm.rows().enumerate() {
        let powered: Vec<f64> = row
            .iter()
            .map(|&v| if v == 0.0 { 0.0 } else { v.powf(cfg.beta) })
            .collect();
        let total: f64 = powered.iter().sum();
        if total == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "row {i} is all zero and cannot be normalized"
            )));
        }
        rows.push(powered.into_iter().map(|v| v / total).collect::<Vec<_>>());
    }
    Ok(ConfusionMatrix {
        labels: cm.labels.clone(),
        probs: rows_into_flat(rows),
    })
}

/// `q[j] = Σ_i p[i] · C[i][j]`.
pub fn apply_noise_channel(p: &[f64], cm: &ConfusionMatrix) -> Result<Vec<f64>> {
    let k = cm.size();
    if p.len() != k {
        return Err(Error::LengthMismatch(format!(
            "distribution of length {} for a {k}-label channel",
            p.len()
        )));
    }
    Ok(channel_product(p, cm))
}

pub(crate) fn channel_product(p: &[f64], cm: &ConfusionMatrix) -> Vec<f64> {
    let k = cm.size();
    let mut q = vec![0.0; k];
    for (i, &pi) in p.iter().enumerate() {
        let row = cm.row(i);
        for j in 0..k {
            q[j] += pi * row[j];
        }
    }
    q
}
