/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_mapsession_free: (a: number, b: number) => void;
export const mapsession_channels: (a: number) => [number, number];
export const mapsession_documentJson: (a: number) => [number, number];
export const mapsession_highlight: (a: number, b: number, c: number) => [number, number, number, number];
export const mapsession_new: (a: number, b: number) => [number, number, number];
export const mapsession_summary: (a: number) => [number, number];
export const mapsession_svg: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const mapsession_warnings: (a: number) => [number, number];
export const sampleGraph: (a: number, b: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_drop_slice: (a: number, b: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
