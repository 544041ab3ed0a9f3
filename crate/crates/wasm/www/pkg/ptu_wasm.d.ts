/* tslint:disable */
/* eslint-disable */

export class Embedded {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    coords(): Float64Array;
    /**
     * `NaN` when the dataset has no flat ground truth.
     */
    distortion(): number;
    landmarks(): Uint32Array;
    points(): Float64Array;
    shade(): Float64Array;
    warnings(): string;
}

export class HopChart {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    graph(): Float64Array;
    graph_mean(): number;
    hops(): Uint32Array;
    transported(): Float64Array;
    transported_mean(): number;
}

export function cap_geodesics(n: number, k: number, cap_angle: number): HopChart;

export function embed(dataset: string, n: number, seed: number, noise: number, method: string, k: number, k_tangent: number, landmarks: number): Embedded;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_embedded_free: (a: number, b: number) => void;
    readonly __wbg_hopchart_free: (a: number, b: number) => void;
    readonly cap_geodesics: (a: number, b: number, c: number) => [number, number, number];
    readonly embed: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number) => [number, number, number];
    readonly embedded_coords: (a: number) => [number, number];
    readonly embedded_distortion: (a: number) => number;
    readonly embedded_landmarks: (a: number) => [number, number];
    readonly embedded_points: (a: number) => [number, number];
    readonly embedded_shade: (a: number) => [number, number];
    readonly embedded_warnings: (a: number) => [number, number];
    readonly hopchart_graph: (a: number) => [number, number];
    readonly hopchart_graph_mean: (a: number) => number;
    readonly hopchart_hops: (a: number) => [number, number];
    readonly hopchart_transported: (a: number) => [number, number];
    readonly hopchart_transported_mean: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
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
