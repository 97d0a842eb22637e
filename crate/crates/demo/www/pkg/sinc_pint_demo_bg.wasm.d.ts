/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_spectrum_free: (a: number, b: number) => void;
export const cond_growth: (a: number, b: number) => [number, number, number, number];
export const preconditioned_spectrum: (a: number, b: number, c: number, d: number) => [number, number, number];
export const spectrum_im: (a: number) => [number, number];
export const spectrum_passed: (a: number) => number;
export const spectrum_re: (a: number) => [number, number];
export const spectrum_verdict: (a: number) => [number, number];
export const z_curve: (a: number, b: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
