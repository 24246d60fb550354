/* tslint:disable */
/* eslint-disable */

/**
 * Divergences between two pmfs given as comma/space separated weights
 * (normalised here).
 */
export function divergences(f: string, g: string): string;

/**
 * Gaussian sequence rate curve on n = 2^6, 2^8, … up to 2^max_log2.
 */
export function gauss_seq_rate(gamma: number, replicates: number, max_log2: number, seed: bigint): string;

/**
 * Covering numbers and Hausdorff α-constants of weighted points on the line
 * over a δ grid.
 */
export function hausdorff_profile(points: string, weights: string, alpha: number, deltas: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly divergences: (a: number, b: number, c: number, d: number) => [number, number];
    readonly gauss_seq_rate: (a: number, b: number, c: number, d: bigint) => [number, number];
    readonly hausdorff_profile: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
