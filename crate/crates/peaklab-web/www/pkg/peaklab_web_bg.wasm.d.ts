/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const dirichlet_table: (a: number, b: number, c: number) => [number, number];
export const landau_levels: (a: number, b: number, c: number) => [number, number, number, number];
export const peak_profile: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
