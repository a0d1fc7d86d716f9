/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const chainComparison: (a: number, b: number, c: bigint, d: bigint) => [number, number, number, number];
export const growthCurve: (a: number) => [number, number];
export const phaseCurve: (a: number, b: number, c: number) => [number, number];
export const recursionTrajectory: (a: number, b: number, c: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
