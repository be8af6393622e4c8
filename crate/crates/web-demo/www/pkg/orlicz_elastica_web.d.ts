/* tslint:disable */
/* eslint-disable */

/**
 * Sampled `φ`, `φ'` and `φ*` on `[0, t_max]`.
 */
export class Curves {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly conjugate: Float64Array;
    /**
     * Whether the doubling condition check passed.
     */
    readonly delta2: boolean;
    readonly deriv: Float64Array;
    readonly t: Float64Array;
    readonly value: Float64Array;
}

/**
 * Mesh, displacement and diagnostics of one solve, flattened for JS.
 */
export class Solution {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly converged: boolean;
    /**
     * `u_x, u_y` per node.
     */
    readonly displacement: Float64Array;
    /**
     * Per triangle.
     */
    readonly div_u: Float64Array;
    readonly energy: number;
    readonly estimate_ratio: number;
    /**
     * NaN unless the case has a known exact solution.
     */
    readonly h1_error: number;
    readonly iterations: number;
    /**
     * `x0, y0, x1, y1, ...`
     */
    readonly nodes: Float64Array;
    /**
     * Newton residual norms, one per iterate.
     */
    readonly residuals: Float64Array;
    readonly triangles: Uint32Array;
}

export function phi_curves(family: string, kappa: number, p: number, beta: number, lambda_tilde: number, t_max: number, samples: number): Curves;

/**
 * Solves a registered case on an `n × n` grid and reports its `H¹` error.
 */
export function solve_case(id: string, n: number): Solution;

/**
 * Solves with a load given by three expressions in `x`, `y` and zero
 * boundary data on the Dirichlet sides of `bc` (e.g. `left:D,right:N`).
 */
export function solve_expression(xx: string, xy: string, yy: string, mu: number, family: string, kappa: number, p: number, beta: number, lambda_tilde: number, bc: string, n: number): Solution;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_curves_free: (a: number, b: number) => void;
    readonly __wbg_solution_free: (a: number, b: number) => void;
    readonly curves_conjugate: (a: number) => [number, number];
    readonly curves_delta2: (a: number) => number;
    readonly curves_deriv: (a: number) => [number, number];
    readonly curves_t: (a: number) => [number, number];
    readonly curves_value: (a: number) => [number, number];
    readonly phi_curves: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
    readonly solution_converged: (a: number) => number;
    readonly solution_displacement: (a: number) => [number, number];
    readonly solution_div_u: (a: number) => [number, number];
    readonly solution_energy: (a: number) => number;
    readonly solution_estimate_ratio: (a: number) => number;
    readonly solution_h1_error: (a: number) => number;
    readonly solution_iterations: (a: number) => number;
    readonly solution_nodes: (a: number) => [number, number];
    readonly solution_residuals: (a: number) => [number, number];
    readonly solution_triangles: (a: number) => [number, number];
    readonly solve_case: (a: number, b: number, c: number) => [number, number, number];
    readonly solve_expression: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number, k: number, l: number, m: number, n: number, o: number, p: number) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
