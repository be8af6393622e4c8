/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_curves_free: (a: number, b: number) => void;
export const __wbg_solution_free: (a: number, b: number) => void;
export const curves_conjugate: (a: number) => [number, number];
export const curves_delta2: (a: number) => number;
export const curves_deriv: (a: number) => [number, number];
export const curves_t: (a: number) => [number, number];
export const curves_value: (a: number) => [number, number];
export const phi_curves: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
export const solution_converged: (a: number) => number;
export const solution_displacement: (a: number) => [number, number];
export const solution_div_u: (a: number) => [number, number];
export const solution_energy: (a: number) => number;
export const solution_estimate_ratio: (a: number) => number;
export const solution_h1_error: (a: number) => number;
export const solution_iterations: (a: number) => number;
export const solution_nodes: (a: number) => [number, number];
export const solution_residuals: (a: number) => [number, number];
export const solution_triangles: (a: number) => [number, number];
export const solve_case: (a: number, b: number, c: number) => [number, number, number];
export const solve_expression: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number, k: number, l: number, m: number, n: number, o: number, p: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
