/* tslint:disable */
/* eslint-disable */

/**
 * Mean plug-in entropy against dimension `1..=dmax` for one `p`.
 */
export function entropy_curve(n: number, p: number, dmax: number, reps: number, seed: number): string;

/**
 * Reliability verdict for `n` samples of a `width`-bit representation.
 */
export function regime(n: number, width: number): string;

/**
 * Trains the SZT network on the stand-in data and returns every hidden
 * layer's information-plane trajectory.
 */
export function szt_run(lambda: number, epochs: number, stride: number, learning_rate: number, seed: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly entropy_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly regime: (a: number, b: number) => [number, number];
    readonly szt_run: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
