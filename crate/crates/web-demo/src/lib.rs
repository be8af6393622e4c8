//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Everything here is plain Rust returning `Result<_, String>`, so the same
//! functions are exercised natively by `cargo test`.

use std::sync::Arc;

use orlicz_elastica::tensorfield::{compute_strain, ExprLoad};
use orlicz_elastica::verify::{estimate_a, h1_error, manufactured};
use orlicz_elastica::{
    solve, DisplacementField, Family, InitialGuess, LoadTensor, Mesh, NFunction, Params, Problem, RectangleSides,
    SolveReport, SolverConfig,
};
use wasm_bindgen::prelude::*;

/// Largest grid the page will ask for; keeps a solve under a second or so.
pub const MAX_GRID: usize = 48;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn n_function(family: &str, kappa: f64, p: f64, beta: f64, lambda_tilde: f64) -> Result<NFunction, String> {
    let fam = Family::from_tag(family)
        .filter(|f| *f != Family::Custom)
        .ok_or_else(|| format!("unknown family `{family}`"))?;
    NFunction::make_family(fam, Params { kappa, p, beta, lambda_tilde }).map_err(err)
}

/// Sampled `φ`, `φ'` and `φ*` on `[0, t_max]`.
#[wasm_bindgen]
pub struct Curves {
    t: Vec<f64>,
    value: Vec<f64>,
    deriv: Vec<f64>,
    conjugate: Vec<f64>,
    delta2: bool,
}

#[wasm_bindgen]
impl Curves {
    #[wasm_bindgen(getter)]
    pub fn t(&self) -> Vec<f64> {
        self.t.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn value(&self) -> Vec<f64> {
        self.value.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn deriv(&self) -> Vec<f64> {
        self.deriv.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn conjugate(&self) -> Vec<f64> {
        self.conjugate.clone()
    }
    /// Whether the doubling condition check passed.
    #[wasm_bindgen(getter)]
    pub fn delta2(&self) -> bool {
        self.delta2
    }
}

#[wasm_bindgen]
pub fn phi_curves(
    family: &str,
    kappa: f64,
    p: f64,
    beta: f64,
    lambda_tilde: f64,
    t_max: f64,
    samples: usize,
) -> Result<Curves, String> {
    let phi = n_function(family, kappa, p, beta, lambda_tilde)?;
    if !(t_max.is_finite() && t_max > 0.0) || !(2..=4096).contains(&samples) {
        return Err("need t_max > 0 and 2..=4096 samples".into());
    }
    let t: Vec<f64> = (0..samples).map(|k| t_max * k as f64 / (samples - 1) as f64).collect();
    let conjugate = t.iter().map(|&s| phi.conjugate(s)).collect::<Result<Vec<_>, _>>().map_err(err)?;
    Ok(Curves {
        value: t.iter().map(|&s| phi.value(s)).collect(),
        deriv: t.iter().map(|&s| phi.deriv(s)).collect(),
        conjugate,
        delta2: phi.check_delta2(1e6, 200).satisfied,
        t,
    })
}

/// Mesh, displacement and diagnostics of one solve, flattened for JS.
#[wasm_bindgen]
pub struct Solution {
    nodes: Vec<f64>,
    triangles: Vec<u32>,
    displacement: Vec<f64>,
    div_u: Vec<f64>,
    residuals: Vec<f64>,
    iterations: usize,
    converged: bool,
    energy: f64,
    h1_error: f64,
    estimate_ratio: f64,
}

#[wasm_bindgen]
impl Solution {
    /// `x0, y0, x1, y1, ...`
    #[wasm_bindgen(getter)]
    pub fn nodes(&self) -> Vec<f64> {
        self.nodes.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn triangles(&self) -> Vec<u32> {
        self.triangles.clone()
    }
    /// `u_x, u_y` per node.
    #[wasm_bindgen(getter)]
    pub fn displacement(&self) -> Vec<f64> {
        self.displacement.clone()
    }
    /// Per triangle.
    #[wasm_bindgen(getter)]
    pub fn div_u(&self) -> Vec<f64> {
        self.div_u.clone()
    }
    /// Newton residual norms, one per iterate.
    #[wasm_bindgen(getter)]
    pub fn residuals(&self) -> Vec<f64> {
        self.residuals.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn iterations(&self) -> usize {
        self.iterations
    }
    #[wasm_bindgen(getter)]
    pub fn converged(&self) -> bool {
        self.converged
    }
    #[wasm_bindgen(getter)]
    pub fn energy(&self) -> f64 {
        self.energy
    }
    /// NaN unless the case has a known exact solution.
    #[wasm_bindgen(getter)]
    pub fn h1_error(&self) -> f64 {
        self.h1_error
    }
    #[wasm_bindgen(getter)]
    pub fn estimate_ratio(&self) -> f64 {
        self.estimate_ratio
    }
}

fn check_grid(n: usize) -> Result<(), String> {
    if (1..=MAX_GRID).contains(&n) {
        Ok(())
    } else {
        Err(format!("grid must be 1..={MAX_GRID}, got {n}"))
    }
}

fn pack(prob: &Problem, u: &DisplacementField, rep: &SolveReport, h1: f64) -> Result<Solution, String> {
    let mesh = prob.mesh();
    let strain = compute_strain(mesh, u).map_err(err)?;
    Ok(Solution {
        nodes: mesh.nodes().iter().flatten().copied().collect(),
        triangles: mesh.elements().iter().flatten().map(|&v| v as u32).collect(),
        displacement: u.values().iter().flatten().copied().collect(),
        div_u: strain.strains.iter().map(|s| s.div).collect(),
        residuals: rep.residual_history.clone(),
        iterations: rep.iterations,
        converged: rep.converged,
        energy: rep.final_energy.total,
        h1_error: h1,
        estimate_ratio: estimate_a(prob, u).map_err(err)?.ratio,
    })
}

/// Solves a registered case on an `n × n` grid and reports its `H¹` error.
#[wasm_bindgen]
pub fn solve_case(id: &str, n: usize) -> Result<Solution, String> {
    check_grid(n)?;
    let (prob, exact) = manufactured(id, n).map_err(err)?;
    let (u, rep) = solve(&prob, &SolverConfig::default(), &InitialGuess::Zero).map_err(err)?;
    let h1 = h1_error(prob.mesh(), &u, &exact).map_err(err)?;
    pack(&prob, &u, &rep, h1)
}

/// Solves with a load given by three expressions in `x`, `y` and zero
/// boundary data on the Dirichlet sides of `bc` (e.g. `left:D,right:N`).
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn solve_expression(
    xx: &str,
    xy: &str,
    yy: &str,
    mu: f64,
    family: &str,
    kappa: f64,
    p: f64,
    beta: f64,
    lambda_tilde: f64,
    bc: &str,
    n: usize,
) -> Result<Solution, String> {
    check_grid(n)?;
    let phi = n_function(family, kappa, p, beta, lambda_tilde)?;
    let mesh = Mesh::unit_square(n, RectangleSides::parse(bc).map_err(err)?).map_err(err)?;
    let source = ExprLoad::parse(xx, xy, yy).map_err(err)?;
    let load = LoadTensor::sample(&mesh, Arc::new(source)).map_err(err)?;
    let u0 = DisplacementField::zeros(mesh.n_nodes());
    let prob = Problem::new(mesh, mu, phi, load, u0).map_err(err)?;
    let (u, rep) = solve(&prob, &SolverConfig::default(), &InitialGuess::Zero).map_err(err)?;
    pack(&prob, &u, &rep, f64::NAN)
}
