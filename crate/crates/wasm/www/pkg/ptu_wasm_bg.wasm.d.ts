/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_embedded_free: (a: number, b: number) => void;
export const __wbg_hopchart_free: (a: number, b: number) => void;
export const cap_geodesics: (a: number, b: number, c: number) => [number, number, number];
export const embed: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number) => [number, number, number];
export const embedded_coords: (a: number) => [number, number];
export const embedded_distortion: (a: number) => number;
export const embedded_landmarks: (a: number) => [number, number];
export const embedded_points: (a: number) => [number, number];
export const embedded_shade: (a: number) => [number, number];
export const embedded_warnings: (a: number) => [number, number];
export const hopchart_graph: (a: number) => [number, number];
export const hopchart_graph_mean: (a: number) => number;
export const hopchart_hops: (a: number) => [number, number];
export const hopchart_transported: (a: number) => [number, number];
export const hopchart_transported_mean: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
