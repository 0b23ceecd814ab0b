/* tslint:disable */
/* eslint-disable */

export class MapSession {
    free(): void;
    [Symbol.dispose](): void;
    channels(): string[];
    documentJson(): string;
    /**
     * Link ids touching `class_id`.
     */
    highlight(class_id: string): string[];
    /**
     * Builds a map from graph text.
     */
    constructor(graph_text: string);
    summary(): string;
    /**
     * Redraws with buildings colored by `channel` (stored colors when absent).
     */
    svg(channel: string | null | undefined, fixed_height: boolean): string;
    warnings(): string[];
}

/**
 * Seeded toolkit-like sample graph in the text input format.
 */
export function sampleGraph(classes: number, seed: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_mapsession_free: (a: number, b: number) => void;
    readonly mapsession_channels: (a: number) => [number, number];
    readonly mapsession_documentJson: (a: number) => [number, number];
    readonly mapsession_highlight: (a: number, b: number, c: number) => [number, number, number, number];
    readonly mapsession_new: (a: number, b: number) => [number, number, number];
    readonly mapsession_summary: (a: number) => [number, number];
    readonly mapsession_svg: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly mapsession_warnings: (a: number) => [number, number];
    readonly sampleGraph: (a: number, b: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_drop_slice: (a: number, b: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
