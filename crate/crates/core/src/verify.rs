//! Checks of structural properties on computed solutions: the a-priori energy
//! estimate, harmonicity of the bulk quantity, the Poisson equation for the
//! rotation, and manufactured-solution convergence.
//!
//! Interior checks use P1 hat functions centred at least `margin` away from
//! the boundary, because the properties hold on compact subsets only.

use std::fmt;
use std::sync::Arc;

use crate::energy::Problem;
use crate::error::{Error, Result};
use crate::expr::VectorExpr;
use crate::mesh::{BoundaryTag, Mesh, RectangleSides, DIM};
use crate::nfunction::NFunction;
use crate::numeric::{fitted_order, CompensatedSum};
use crate::solver::{solve, InitialGuess, SolverConfig};
use crate::sparse::{CsrMatrix, SkylineCholesky};
use crate::tensor::{self, Mat2};
use crate::tensorfield::{compute_strain, DisplacementField, LoadSource, LoadTensor};

/// Default interior margin as a fraction of the domain diameter.
pub const DEFAULT_MARGIN_FRACTION: f64 = 0.2;

/// Minimum fitted order accepted by the ladder suites.
pub const MIN_ORDER: f64 = 0.9;

/// Largest log-log slope of the estimate ratio against `1/h` still read as
/// "no growth".
pub const RATIO_GROWTH_TOL: f64 = 0.05;

/// Absolute tolerance of the competitor inequality `J(u) ≤ J(lift u₀)`.
pub const COMPETITOR_TOL: f64 = 1e-12;

/// Edge-midpoint rule on a triangle (barycentric points, weight 1/3 each);
/// exact for quadratics.
const MIDPOINTS: [[f64; 3]; 3] = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];

fn quad_points(mesh: &Mesh, e: usize) -> [[f64; 2]; 3] {
    let v = mesh.vertices(e);
    MIDPOINTS.map(|b| {
        [
            b[0] * v[0][0] + b[1] * v[1][0] + b[2] * v[2][0],
            b[0] * v[0][1] + b[1] * v[1][1] + b[2] * v[2][1],
        ]
    })
}

/// Area-weighted average of element values at the nodes.
pub fn nodal_average(mesh: &Mesh, element_values: &[f64]) -> Vec<f64> {
    let mut num = vec![0.0; mesh.n_nodes()];
    let mut den = vec![0.0; mesh.n_nodes()];
    for ((tri, geo), &val) in mesh.elements().iter().zip(mesh.geometry()).zip(element_values) {
        for &v in tri {
            num[v] += geo.area * val;
            den[v] += geo.area;
        }
    }
    num.iter().zip(&den).map(|(n, d)| n / d).collect()
}

/// Non-boundary nodes at distance `>= margin` from the boundary; their hat
/// functions are the interior test functions.
pub fn interior_nodes(mesh: &Mesh, margin: f64) -> Vec<usize> {
    let boundary = mesh.boundary_node_flags();
    (0..mesh.n_nodes())
        .filter(|&a| !boundary[a] && mesh.distance_to_boundary(mesh.nodes()[a]) >= margin)
        .collect()
}

fn resolve_margin(mesh: &Mesh, margin: Option<f64>) -> Result<(f64, Vec<usize>)> {
    let m = margin.unwrap_or(DEFAULT_MARGIN_FRACTION * mesh.diameter());
    if !(m.is_finite() && m >= 0.0) {
        return Err(Error::InvalidParameter(format!("interior margin {m}")));
    }
    let nodes = interior_nodes(mesh, m);
    if nodes.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no interior test functions at margin {m:.3e}; reduce the margin or refine the mesh"
        )));
    }
    Ok((m, nodes))
}

/// `Σ_T ∫_T ∇w · ∇λ_a` and `‖∇λ_a‖_{L¹}` for every node `a`, with `w`
/// piecewise linear (`grad_w` per element).
fn tested_gradients(mesh: &Mesh, grad_w: &[[f64; 2]]) -> (Vec<f64>, Vec<f64>) {
    let n = mesh.n_nodes();
    let mut tested = vec![0.0; n];
    let mut l1 = vec![0.0; n];
    for ((tri, geo), gw) in mesh.elements().iter().zip(mesh.geometry()).zip(grad_w) {
        for (a, &v) in tri.iter().enumerate() {
            let g = geo.grads[a];
            tested[v] += geo.area * (gw[0] * g[0] + gw[1] * g[1]);
            l1[v] += geo.area * g[0].hypot(g[1]);
        }
    }
    (tested, l1)
}

fn p1_gradients(mesh: &Mesh, nodal: &[f64]) -> Vec<[f64; 2]> {
    mesh.elements()
        .iter()
        .zip(mesh.geometry())
        .map(|(tri, geo)| {
            let mut g = [0.0; 2];
            for a in 0..3 {
                g[0] += nodal[tri[a]] * geo.grads[a][0];
                g[1] += nodal[tri[a]] * geo.grads[a][1];
            }
            g
        })
        .collect()
}

/// Solves `∫ ∇w·∇v = rhs(v)` for P1 `w` vanishing on every boundary node.
fn poisson_zero_dirichlet(mesh: &Mesh, rhs: &[f64]) -> Result<Vec<f64>> {
    let boundary = mesh.boundary_node_flags();
    let mut index = vec![usize::MAX; mesh.n_nodes()];
    let mut interior = Vec::new();
    for v in 0..mesh.n_nodes() {
        if !boundary[v] {
            index[v] = interior.len();
            interior.push(v);
        }
    }
    let mut w = vec![0.0; mesh.n_nodes()];
    if interior.is_empty() {
        return Ok(w);
    }
    let mut triplets = Vec::with_capacity(9 * mesh.n_elements());
    for (tri, geo) in mesh.elements().iter().zip(mesh.geometry()) {
        for a in 0..3 {
            for b in 0..3 {
                let (i, j) = (index[tri[a]], index[tri[b]]);
                if i != usize::MAX && j != usize::MAX {
                    let g = (geo.grads[a], geo.grads[b]);
                    triplets.push((i, j, geo.area * (g.0[0] * g.1[0] + g.0[1] * g.1[1])));
                }
            }
        }
    }
    let k = CsrMatrix::from_triplets(interior.len(), &triplets);
    let b: Vec<f64> = interior.iter().map(|&v| rhs[v]).collect();
    let x = SkylineCholesky::factor(&k)
        .map_err(|e| Error::Numerical(format!("Poisson system for g: {e}")))?
        .solve(&b);
    for (&v, xv) in interior.iter().zip(x) {
        w[v] = xv;
    }
    Ok(w)
}

/// Load vector `∫ (div F)·∇λ_a`.
///
/// With an analytic source, `div F` is integrated by the edge-midpoint rule.
/// Otherwise the distributional divergence of the piecewise-constant tensor
/// is used: jumps `[F] n_E` across interior edges, tested against the average
/// of the two one-sided gradients.
fn div_load_vector(mesh: &Mesh, load: &LoadTensor) -> Vec<f64> {
    let mut rhs = vec![0.0; mesh.n_nodes()];
    if let Some(src) = load.source() {
        for (e, (tri, geo)) in mesh.elements().iter().zip(mesh.geometry()).enumerate() {
            let mut m = [0.0; 2];
            for q in quad_points(mesh, e) {
                let d = src.divergence(q);
                m[0] += d[0] / 3.0;
                m[1] += d[1] / 3.0;
            }
            for (a, &v) in tri.iter().enumerate() {
                rhs[v] += geo.area * (m[0] * geo.grads[a][0] + m[1] * geo.grads[a][1]);
            }
        }
        return rhs;
    }
    for (e1, e2, (p, q)) in interior_edges(mesh) {
        let t = [q[0] - p[0], q[1] - p[1]];
        let len = t[0].hypot(t[1]);
        // unit normal pointing out of e1
        let mut nrm = [t[1] / len, -t[0] / len];
        let c1 = mesh.centroid(e1);
        if (c1[0] - p[0]) * nrm[0] + (c1[1] - p[1]) * nrm[1] > 0.0 {
            nrm = [-nrm[0], -nrm[1]];
        }
        let jump = tensor::add(&load.values()[e2], &tensor::scale(&load.values()[e1], -1.0));
        let jn = [jump[0][0] * nrm[0] + jump[0][1] * nrm[1], jump[1][0] * nrm[0] + jump[1][1] * nrm[1]];
        for e in [e1, e2] {
            let geo = &mesh.geometry()[e];
            for (a, &v) in mesh.elements()[e].iter().enumerate() {
                rhs[v] += 0.5 * len * (jn[0] * geo.grads[a][0] + jn[1] * geo.grads[a][1]);
            }
        }
    }
    rhs
}

/// Interior edges as `(e1, e2, endpoints)` with `e1 < e2`, sorted.
fn interior_edges(mesh: &Mesh) -> Vec<(usize, usize, ([f64; 2], [f64; 2]))> {
    let mut owners: std::collections::BTreeMap<(usize, usize), Vec<usize>> = Default::default();
    for (e, tri) in mesh.elements().iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            owners.entry((a.min(b), a.max(b))).or_default().push(e);
        }
    }
    owners
        .into_iter()
        .filter(|(_, es)| es.len() == 2)
        .map(|((a, b), es)| (es[0], es[1], (mesh.nodes()[a], mesh.nodes()[b])))
        .collect()
}

/// Particular solution of `Δg = div div F` with zero boundary values.
pub fn solve_g(mesh: &Mesh, load: &LoadTensor) -> Result<Vec<f64>> {
    if load.len() != mesh.n_elements() {
        return Err(Error::Mismatch("load does not match mesh".into()));
    }
    poisson_zero_dirichlet(mesh, &div_load_vector(mesh, load))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicityReport {
    pub g_field: Vec<f64>,
    /// `2μ(d-1)/d · div u + φ'(div u) - g` at the nodes.
    pub chi_field: Vec<f64>,
    /// `max_a |∫ ∇χ·∇λ_a| / ‖∇λ_a‖_{L¹}` over interior hats.
    pub interior_defect: f64,
    pub n_interior: usize,
    pub margin: f64,
    pub mesh_size: f64,
}

/// Tests harmonicity of `χ = 2μ(d-1)/d · div u + φ'(div u) - g` on interior
/// hat functions. `margin = None` uses `0.2 · diam(Ω)`.
pub fn harmonicity_check(prob: &Problem, u: &DisplacementField, margin: Option<f64>) -> Result<HarmonicityReport> {
    let mesh = prob.mesh();
    let (margin, interior) = resolve_margin(mesh, margin)?;
    let strain = compute_strain(mesh, u)?;
    let divs: Vec<f64> = strain.strains.iter().map(|s| s.div).collect();
    let div_nodal = nodal_average(mesh, &divs);
    let g = solve_g(mesh, prob.load())?;
    let d = DIM as f64;
    let coef = 2.0 * prob.mu() * (d - 1.0) / d;
    let chi: Vec<f64> = div_nodal
        .iter()
        .zip(&g)
        .map(|(&s, &gv)| coef * s + prob.phi().deriv(s) - gv)
        .collect();
    let (tested, l1) = tested_gradients(mesh, &p1_gradients(mesh, &chi));
    let defect = interior.iter().map(|&a| tested[a].abs() / l1[a]).fold(0.0, f64::max);
    Ok(HarmonicityReport {
        g_field: g,
        chi_field: chi,
        interior_defect: defect,
        n_interior: interior.len(),
        margin,
        mesh_size: mesh.mesh_size(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurlReport {
    /// `ω = ∂u₁/∂x₂ - ∂u₂/∂x₁` at the nodes.
    pub omega: Vec<f64>,
    /// `max_a |∫ μ∇ω·∇λ_a - ∫ G·∇λ_a| / ‖∇λ_a‖_{L¹}` over interior hats, with
    /// `G_k = ∂F_{1k}/∂x₂ - ∂F_{2k}/∂x₁`.
    pub weak_residual: f64,
    pub n_interior: usize,
    pub margin: f64,
    pub mesh_size: f64,
}

/// Sign applied to the load side of the rotation equation. Flipping it is
/// what the golden test guards against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurlSign {
    Certified,
    Flipped,
}

/// Tests `μΔω = div G` weakly on interior hats. Needs the analytic load.
pub fn curl_check(prob: &Problem, u: &DisplacementField, margin: Option<f64>) -> Result<CurlReport> {
    curl_check_with_sign(prob, u, margin, CurlSign::Certified)
}

pub fn curl_check_with_sign(
    prob: &Problem,
    u: &DisplacementField,
    margin: Option<f64>,
    sign: CurlSign,
) -> Result<CurlReport> {
    let mesh = prob.mesh();
    let src = prob
        .load()
        .source()
        .ok_or_else(|| Error::InvalidParameter("curl check needs an analytic load source".into()))?;
    let (margin, interior) = resolve_margin(mesh, margin)?;
    let strain = compute_strain(mesh, u)?;
    let rot: Vec<f64> = strain.strains.iter().map(|s| s.rotation()).collect();
    let omega = nodal_average(mesh, &rot);
    let mu_grad: Vec<[f64; 2]> =
        p1_gradients(mesh, &omega).iter().map(|g| [prob.mu() * g[0], prob.mu() * g[1]]).collect();
    let (lhs, l1) = tested_gradients(mesh, &mu_grad);
    let s = match sign {
        CurlSign::Certified => 1.0,
        CurlSign::Flipped => -1.0,
    };
    let g_avg: Vec<[f64; 2]> = (0..mesh.n_elements())
        .map(|e| {
            let mut m = [0.0; 2];
            for q in quad_points(mesh, e) {
                let [dx, dy] = src.gradient(q);
                for k in 0..2 {
                    m[k] += s * (dy[0][k] - dx[1][k]) / 3.0;
                }
            }
            m
        })
        .collect();
    let (rhs, _) = tested_gradients(mesh, &g_avg);
    let res = interior.iter().map(|&a| (lhs[a] - rhs[a]).abs() / l1[a]).fold(0.0, f64::max);
    Ok(CurlReport { omega, weak_residual: res, n_interior: interior.len(), margin, mesh_size: mesh.mesh_size() })
}

/// Explicit constant `C(μ, d)` in
/// `‖Dᵈu‖² + ∫φ(div u) ≤ C (‖Fᵈ‖² + ‖Dᵈu₀‖² + ∫φ*(tr F) + ∫φ(div u₀))`.
pub fn estimate_constant(mu: f64, d: usize) -> f64 {
    let d = d as f64;
    [2.0 * mu + 1.0, 3.0, 1.0 + 1.0 / mu, 6.0 / d].into_iter().fold(0.0, f64::max) / mu.min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateAReport {
    /// `‖Dᵈu‖² + ∫φ(div u)`.
    pub lhs: f64,
    /// `‖Fᵈ‖²`.
    pub dev_load_sq: f64,
    /// `‖Dᵈu₀‖²` of the lifted Dirichlet data.
    pub dev_lift_sq: f64,
    /// `∫φ*(tr F)`.
    pub conj_trace: f64,
    /// `∫φ(div u₀)`.
    pub bulk_lift: f64,
    pub rhs_sum: f64,
    /// `lhs / (rhs_sum + 1)`.
    pub ratio: f64,
    pub constant: f64,
    /// `lhs ≤ constant · rhs_sum`.
    pub bound_holds: bool,
    pub energy_u: f64,
    pub energy_lift: f64,
    /// `J(u) ≤ J(lift u₀)` to `COMPETITOR_TOL`.
    pub competitor_holds: bool,
}

pub fn estimate_a(prob: &Problem, u: &DisplacementField) -> Result<EstimateAReport> {
    let mesh = prob.mesh();
    let su = compute_strain(mesh, u)?;
    let lift = prob.lifted_dirichlet();
    let sl = compute_strain(mesh, &lift)?;
    let phi = prob.phi();
    let (mut lhs, mut dev_load, mut dev_lift, mut conj, mut bulk_lift) = Default::default();
    let sums: [&mut CompensatedSum; 5] = [&mut lhs, &mut dev_load, &mut dev_lift, &mut conj, &mut bulk_lift];
    let [lhs, dev_load, dev_lift, conj, bulk_lift] = sums;
    for (e, geo) in mesh.geometry().iter().enumerate() {
        let a = geo.area;
        let f: &Mat2 = &prob.load().values()[e];
        let (x, w) = (&su.strains[e], &sl.strains[e]);
        lhs.add(a * tensor::norm_sq(&x.dev));
        lhs.add(a * phi.value(x.div));
        dev_load.add(a * tensor::norm_sq(&tensor::deviatoric(f)));
        dev_lift.add(a * tensor::norm_sq(&w.dev));
        conj.add(a * phi.conjugate(tensor::trace(f))?);
        bulk_lift.add(a * phi.value(w.div));
    }
    let (lhs, dev_load_sq, dev_lift_sq, conj_trace, bulk_lift) =
        (lhs.value(), dev_load.value(), dev_lift.value(), conj.value(), bulk_lift.value());
    let rhs_sum = dev_load_sq + dev_lift_sq + conj_trace + bulk_lift;
    let constant = estimate_constant(prob.mu(), DIM);
    let energy_u = prob.energy_unchecked(u).total;
    let energy_lift = prob.energy_unchecked(&lift).total;
    Ok(EstimateAReport {
        lhs,
        dev_load_sq,
        dev_lift_sq,
        conj_trace,
        bulk_lift,
        rhs_sum,
        ratio: lhs / (rhs_sum + 1.0),
        constant,
        bound_holds: lhs <= constant * rhs_sum * (1.0 + 1e-12) + 1e-14,
        energy_u,
        energy_lift,
        competitor_holds: energy_u <= energy_lift + COMPETITOR_TOL,
    })
}

/// Discrete `H¹` error `(‖∇(u_h - u*)‖² + ‖u_h - u*‖²)^{1/2}` with the
/// edge-midpoint rule on every element.
pub fn h1_error(mesh: &Mesh, u_h: &DisplacementField, exact: &VectorExpr) -> Result<f64> {
    u_h.check_mesh(mesh)?;
    let per = crate::par::map_indexed(mesh.n_elements(), |e| {
        let tri = mesh.elements()[e];
        let geo = &mesh.geometry()[e];
        let gh = crate::tensorfield::element_gradient(mesh, u_h, e);
        let mut s = 0.0;
        for (q, b) in quad_points(mesh, e).iter().zip(MIDPOINTS) {
            let ge = exact.gradient(*q);
            let ue = exact.value(*q);
            for i in 0..DIM {
                let uh: f64 = (0..3).map(|a| b[a] * u_h.values()[tri[a]][i]).sum();
                s += (uh - ue[i]).powi(2);
                for j in 0..DIM {
                    s += (gh[i][j] - ge[i][j]).powi(2);
                }
            }
        }
        geo.area * s / 3.0
    });
    Ok(per.into_iter().collect::<CompensatedSum>().value().sqrt())
}

/// `F = 2μDᵈu* + φ'(div u*) I` for a smooth exact field `u*`.
#[derive(Clone)]
pub struct ManufacturedLoad {
    exact: VectorExpr,
    mu: f64,
    phi: NFunction,
}

impl fmt::Debug for ManufacturedLoad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ManufacturedLoad(u = ({}, {}), mu = {}, {:?})", self.exact.components[0], self.exact.components[1], self.mu, self.phi)
    }
}

impl ManufacturedLoad {
    pub fn new(exact: VectorExpr, mu: f64, phi: NFunction) -> Self {
        Self { exact, mu, phi }
    }
}

impl LoadSource for ManufacturedLoad {
    fn value(&self, p: [f64; 2]) -> Mat2 {
        let g = self.exact.gradient(p);
        let dev = tensor::deviatoric(&tensor::sym(&g));
        tensor::add(&tensor::scale(&dev, 2.0 * self.mu), &tensor::spherical::<2>(self.phi.deriv(tensor::trace(&g))))
    }

    fn gradient(&self, p: [f64; 2]) -> [Mat2; 2] {
        let g = self.exact.gradient(p);
        let h = self.exact.hessian(p);
        let div = tensor::trace(&g);
        let phi2 = self.phi.deriv2(div);
        std::array::from_fn(|k| {
            let dg: Mat2 = std::array::from_fn(|i| std::array::from_fn(|j| h[i][j][k]));
            let ddiv = dg[0][0] + dg[1][1];
            let dev = tensor::deviatoric(&tensor::sym(&dg));
            tensor::add(&tensor::scale(&dev, 2.0 * self.mu), &tensor::spherical::<2>(phi2 * ddiv))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CaseInfo {
    pub id: &'static str,
    pub description: &'static str,
}

/// Registered cases in listing order.
pub const CASES: [CaseInfo; 5] = [
    CaseInfo {
        id: "quadratic_hooke",
        description: "quadratic bulk (lambda_tilde = 1), mu = 1, u = (sin(pi x) sin(pi y), 0), clamped unit square",
    },
    CaseInfo {
        id: "mms_p4",
        description: "shifted power bulk (kappa = 1, p = 4), mu = 1, u = (sin(pi x) sin(pi y), x(1-x)y(1-y)), clamped unit square",
    },
    CaseInfo {
        id: "mms_mixed",
        description: "log-corrected bulk (kappa = 1, p = 3, beta = 1), mu = 0.5, clamped left side, traction elsewhere",
    },
    CaseInfo {
        id: "rigid_rotation",
        description: "u = (-y, x) with traction boundary everywhere; zero strain, zero load",
    },
    CaseInfo { id: "zero_load", description: "zero load and zero boundary data; the solution is zero" },
];

pub fn list_cases() -> &'static [CaseInfo] {
    &CASES
}

/// Material, exact field and boundary layout of a registered case.
#[derive(Debug, Clone)]
pub struct CaseSpec {
    pub id: &'static str,
    pub mu: f64,
    pub phi: NFunction,
    pub exact: VectorExpr,
    pub sides: RectangleSides,
}

pub fn case_spec(id: &str) -> Result<CaseSpec> {
    let clamped = RectangleSides::all(BoundaryTag::Dirichlet);
    let info = CASES.iter().find(|c| c.id == id).ok_or_else(|| Error::UnknownCase(id.to_string()))?;
    let (mu, phi, exact, sides) = match info.id {
        "quadratic_hooke" => (
            1.0,
            NFunction::quadratic(1.0)?,
            VectorExpr::parse("sin(pi*x)*sin(pi*y)", "0")?,
            clamped,
        ),
        "mms_p4" => (
            1.0,
            NFunction::power_shifted(1.0, 4.0)?,
            VectorExpr::parse("sin(pi*x)*sin(pi*y)", "x*(1-x)*y*(1-y)")?,
            clamped,
        ),
        "mms_mixed" => (
            0.5,
            NFunction::log_corrected(1.0, 3.0, 1.0)?,
            VectorExpr::parse("0.5*sin(pi*x)*cos(pi*y)", "x*y*(1-y)")?,
            RectangleSides::parse("left:D,right:N,bottom:N,top:N")?,
        ),
        "rigid_rotation" => (
            1.0,
            NFunction::power_shifted(1.0, 4.0)?,
            VectorExpr::parse("-y", "x")?,
            RectangleSides::all(BoundaryTag::Neumann),
        ),
        "zero_load" => (1.0, NFunction::power_shifted(1.0, 4.0)?, VectorExpr::parse("0", "0")?, clamped),
        _ => unreachable!("registry and match agree"),
    };
    Ok(CaseSpec { id: info.id, mu, phi, exact, sides })
}

impl CaseSpec {
    /// Problem on `mesh` with the manufactured load and `u₀ = u*`.
    pub fn problem_on(&self, mesh: Mesh) -> Result<Problem> {
        let src = ManufacturedLoad::new(self.exact.clone(), self.mu, self.phi.clone());
        let load = LoadTensor::sample(&mesh, Arc::new(src))?;
        let u0 = DisplacementField::from_fn(&mesh, |p| self.exact.value(p));
        Problem::new(mesh, self.mu, self.phi.clone(), load, u0)
    }

    pub fn unit_square_mesh(&self, n: usize) -> Result<Mesh> {
        Mesh::unit_square(n, self.sides)
    }
}

/// Problem on an `n × n` unit-square grid and its exact solution.
pub fn manufactured(id: &str, n: usize) -> Result<(Problem, VectorExpr)> {
    let spec = case_spec(id)?;
    let prob = spec.problem_on(spec.unit_square_mesh(n)?)?;
    Ok((prob, spec.exact))
}

/// Cases used by the harmonic, curl and estimate ladders.
pub const LADDER_CASES: [&str; 2] = ["quadratic_hooke", "mms_p4"];

/// Cases used by the convergence ladder.
pub const MMS_CASES: [&str; 3] = ["quadratic_hooke", "mms_p4", "mms_mixed"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Mms,
    Harmonic,
    Curl,
    Estimate,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Mms, Suite::Harmonic, Suite::Curl, Suite::Estimate];

    pub fn tag(self) -> &'static str {
        match self {
            Suite::Mms => "mms",
            Suite::Harmonic => "harmonic",
            Suite::Curl => "curl",
            Suite::Estimate => "estimate",
        }
    }

    /// `all` expands to every suite.
    pub fn parse_selection(s: &str) -> Result<Vec<Suite>> {
        if s == "all" {
            return Ok(Self::ALL.to_vec());
        }
        s.split(',')
            .map(|t| {
                Self::ALL
                    .into_iter()
                    .find(|x| x.tag() == t.trim())
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown suite '{t}'")))
            })
            .collect()
    }

    pub fn cases(self) -> &'static [&'static str] {
        match self {
            Suite::Mms => &MMS_CASES,
            _ => &LADDER_CASES,
        }
    }
}

/// All diagnostics of one ladder level.
#[derive(Debug, Clone)]
pub struct LevelResult {
    pub n: usize,
    pub h: f64,
    pub converged: bool,
    pub iterations: usize,
    pub h1_error: f64,
    pub harmonic: HarmonicityReport,
    pub curl: CurlReport,
    pub estimate: EstimateAReport,
}

/// Grids `base · 2^l` for `l < levels`.
pub fn ladder_sizes(base: usize, levels: usize) -> Vec<usize> {
    (0..levels).map(|l| base << l).collect()
}

/// Solves the case on each grid and collects every diagnostic.
pub fn run_ladder(id: &str, sizes: &[usize], cfg: &SolverConfig, margin: Option<f64>) -> Result<Vec<LevelResult>> {
    let spec = case_spec(id)?;
    sizes
        .iter()
        .map(|&n| {
            let mesh = spec.unit_square_mesh(n)?;
            let h = mesh.mesh_size();
            let prob = spec.problem_on(mesh)?;
            let (u, rep) = solve(&prob, cfg, &InitialGuess::Zero)?;
            Ok(LevelResult {
                n,
                h,
                converged: rep.converged,
                iterations: rep.iterations,
                h1_error: h1_error(prob.mesh(), &u, &spec.exact)?,
                harmonic: harmonicity_check(&prob, &u, margin)?,
                curl: curl_check(&prob, &u, margin)?,
                estimate: rep.estimate,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderRow {
    pub suite: Suite,
    pub case: String,
    pub level: usize,
    pub n: usize,
    pub h: f64,
    pub value: f64,
    /// Observed order against the previous level.
    pub rate: Option<f64>,
}

impl LadderRow {
    pub const CSV_HEADER: &'static str = "suite,case,level,n,h,value,rate";

    pub fn csv_row(&self) -> String {
        let rate = self.rate.map(|r| format!("{r:.17e}")).unwrap_or_default();
        format!("{},{},{},{},{:.17e},{:.17e},{}", self.suite.tag(), self.case, self.level, self.n, self.h, self.value, rate)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub case: String,
    pub rows: Vec<LadderRow>,
    /// Fitted order of `value` against `h` (for the estimate suite: slope of
    /// the ratio against `1/h`).
    pub fitted: f64,
    pub monotone: bool,
    pub all_converged: bool,
    pub passed: bool,
    pub note: String,
}

/// Evaluates one suite on precomputed ladder levels.
pub fn evaluate_suite(suite: Suite, case: &str, levels: &[LevelResult]) -> SuiteOutcome {
    let hs: Vec<f64> = levels.iter().map(|l| l.h).collect();
    let values: Vec<f64> = levels
        .iter()
        .map(|l| match suite {
            Suite::Mms => l.h1_error,
            Suite::Harmonic => l.harmonic.interior_defect,
            Suite::Curl => l.curl.weak_residual,
            Suite::Estimate => l.estimate.ratio,
        })
        .collect();
    let rows: Vec<LadderRow> = levels
        .iter()
        .enumerate()
        .map(|(k, l)| LadderRow {
            suite,
            case: case.to_string(),
            level: k,
            n: l.n,
            h: l.h,
            value: values[k],
            rate: (k > 0).then(|| (values[k - 1] / values[k]).ln() / (hs[k - 1] / hs[k]).ln()),
        })
        .collect();
    let all_converged = levels.iter().all(|l| l.converged);
    let monotone = values.windows(2).all(|w| w[1] <= w[0]);
    let (fitted, ok, note) = match suite {
        Suite::Estimate => {
            let inv_h: Vec<f64> = hs.iter().map(|h| 1.0 / h).collect();
            let slope = fitted_order(&inv_h, &values);
            let ledger = levels.iter().all(|l| l.estimate.competitor_holds && l.estimate.bound_holds);
            let ok = ledger && slope <= RATIO_GROWTH_TOL;
            (slope, ok, format!("ratio slope {slope:.3} vs 1/h, competitor and bound {}", if ledger { "hold" } else { "FAIL" }))
        }
        _ => {
            let order = if values.iter().all(|v| *v > 0.0) { fitted_order(&hs, &values) } else { f64::NAN };
            let ok = order >= MIN_ORDER && (suite == Suite::Mms || monotone);
            (order, ok, format!("fitted order {order:.3}, monotone {monotone}"))
        }
    };
    SuiteOutcome {
        suite,
        case: case.to_string(),
        rows,
        fitted,
        monotone,
        all_converged,
        passed: ok && all_converged,
        note,
    }
}
