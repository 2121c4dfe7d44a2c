/* tslint:disable */
/* eslint-disable */

/**
 * Approximants m/k of c with |kc − m| ≤ bound/k, as JSON rows
 * `{"k":…, "m":…, "err":…}`.
 */
export function dirichlet_table(c: number, k_max: number, bound: number): string;

/**
 * Lowest `count` eigenvalues of the ∂̄-Laplacian of the flux-m bundle on an
 * N×N grid, divided by 2πm so that Landau levels sit at 0, 1, 2, …
 */
export function landau_levels(grid: number, flux: number, count: number): Float64Array;

/**
 * |s_h| on the grid (row-major, x slowest) for the corrected peak section
 * centred at grid point (i, j), for the flux-m bundle read at level k.
 */
export function peak_profile(grid: number, flux: number, k: number, i: number, j: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly dirichlet_table: (a: number, b: number, c: number) => [number, number];
    readonly landau_levels: (a: number, b: number, c: number) => [number, number, number, number];
    readonly peak_profile: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
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
