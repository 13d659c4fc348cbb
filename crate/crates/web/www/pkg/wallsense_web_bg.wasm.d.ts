/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_senseview_free: (a: number, b: number) => void;
export const __wbg_sweepview_free: (a: number, b: number) => void;
export const sense: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const senseview_cols: (a: number) => number;
export const senseview_db: (a: number) => [number, number];
export const senseview_lines: (a: number) => [number, number];
export const senseview_report: (a: number) => [number, number];
export const senseview_rows: (a: number) => number;
export const senseview_walls: (a: number) => [number, number];
export const sweep: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
export const sweepview_optimized: (a: number) => [number, number];
export const sweepview_points: (a: number) => number;
export const sweepview_predicted: (a: number) => [number, number];
export const sweepview_report: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
