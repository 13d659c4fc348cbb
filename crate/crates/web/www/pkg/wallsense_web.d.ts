/* tslint:disable */
/* eslint-disable */

/**
 * dB image, detected lines and path gains of one sensing run.
 */
export class SenseView {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Row-major dB values, row 0 at the smallest `y`.
     */
    db(): Float32Array;
    /**
     * Detected lines as JSON, in pixel coordinates.
     */
    lines(): string;
    /**
     * `[predicted, optimized, perfect]` path gain, dB.
     */
    report(): Float64Array;
    /**
     * Estimated walls as JSON, in meters.
     */
    walls(): string;
    readonly cols: number;
    readonly rows: number;
}

/**
 * Path gain maps around the device for the optimized and unoptimized beams.
 */
export class SweepView {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Path gain with optimized beam phases, dB; NaN where undefined.
     */
    optimized(): Float32Array;
    /**
     * Path gain with the geometry beams as predicted, dB; NaN where undefined.
     */
    predicted(): Float32Array;
    /**
     * `[predicted, optimized, perfect]` path gain at the device, dB.
     */
    report(): Float64Array;
    /**
     * Samples per side; maps are row-major with `y` outer.
     */
    readonly points: number;
}

/**
 * Images the room and extracts its walls.
 */
export function sense(back_y: number, side_x: number, ue_x: number, ue_y: number, freqs: number): SenseView;

export function sweep(back_y: number, side_x: number, ue_x: number, ue_y: number, error_m: number, half_width: number, points: number): SweepView;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_senseview_free: (a: number, b: number) => void;
    readonly __wbg_sweepview_free: (a: number, b: number) => void;
    readonly sense: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly senseview_cols: (a: number) => number;
    readonly senseview_db: (a: number) => [number, number];
    readonly senseview_lines: (a: number) => [number, number];
    readonly senseview_report: (a: number) => [number, number];
    readonly senseview_rows: (a: number) => number;
    readonly senseview_walls: (a: number) => [number, number];
    readonly sweep: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
    readonly sweepview_optimized: (a: number) => [number, number];
    readonly sweepview_points: (a: number) => number;
    readonly sweepview_predicted: (a: number) => [number, number];
    readonly sweepview_report: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
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
