/* tslint:disable */
/* eslint-disable */

/**
 * Tags typed text with DATE rules for `language` plus gazetteer lines of the
 * form `LABEL<TAB>entry`. Returns `token<TAB>tag` lines.
 */
export function annotate_text(text: string, language: string, gazetteer: string): string;

/**
 * Pushes a comma-separated clean distribution through a TSV matrix.
 */
export function apply_channel(tsv: string, distribution: string): string;

/**
 * Smooths a TSV confusion matrix (label header, then rows) with exponent `beta`.
 */
export function smooth_matrix(tsv: string, beta: number): string;

/**
 * Synthetic learning curve comparing clean-only training with training that
 * adds channel-corrected weak labels. Returns summary CSV.
 */
export function synthetic_curve(flip_mass: number, beta: number, sizes: string, seeds: number, epochs: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly annotate_text: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly apply_channel: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly smooth_matrix: (a: number, b: number, c: number) => [number, number, number, number];
    readonly synthetic_curve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
