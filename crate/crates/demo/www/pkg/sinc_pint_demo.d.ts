/* tslint:disable */
/* eslint-disable */

/**
 * Eigenvalues of the preconditioned matrix and the verdict against the theorem region.
 */
export class Spectrum {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    im(): Float64Array;
    passed(): boolean;
    re(): Float64Array;
    verdict(): string;
}

export function cond_growth(omega: number, max_half_width: number): Float64Array;

export function preconditioned_spectrum(problem: string, half_width: number, omega: number): Spectrum;

export function z_curve(half_width: number, samples: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_spectrum_free: (a: number, b: number) => void;
    readonly cond_growth: (a: number, b: number) => [number, number, number, number];
    readonly preconditioned_spectrum: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly spectrum_im: (a: number) => [number, number];
    readonly spectrum_passed: (a: number) => number;
    readonly spectrum_re: (a: number) => [number, number];
    readonly spectrum_verdict: (a: number) => [number, number];
    readonly z_curve: (a: number, b: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
