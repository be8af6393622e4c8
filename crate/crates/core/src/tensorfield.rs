//! Discrete tensor calculus on P1 fields: gradients, symmetric and deviatoric
//! strain, divergence, and the load tensor with its trace split.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::mesh::{Mesh, DIM};
use crate::tensor::{self, Mat2};

/// Nodal displacement values.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    values: Vec<[f64; 2]>,
}

impl DisplacementField {
    pub fn zeros(n_nodes: usize) -> Self {
        Self { values: vec![[0.0; 2]; n_nodes] }
    }

    pub fn new(values: Vec<[f64; 2]>) -> Result<Self> {
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("displacement field has non-finite entries".into()));
        }
        Ok(Self { values })
    }

    pub fn from_fn(mesh: &Mesh, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        Self { values: mesh.nodes().iter().map(|&p| f(p)).collect() }
    }

    /// From a component-major dof vector.
    pub fn from_dofs(dofs: &[f64]) -> Self {
        let n = dofs.len() / DIM;
        Self { values: (0..n).map(|v| [dofs[v], dofs[n + v]]).collect() }
    }

    pub fn to_dofs(&self) -> Vec<f64> {
        let n = self.values.len();
        let mut out = vec![0.0; DIM * n];
        for (v, u) in self.values.iter().enumerate() {
            out[v] = u[0];
            out[n + v] = u[1];
        }
        out
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    pub fn n_nodes(&self) -> usize {
        self.values.len()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().flatten().all(|v| v.is_finite())
    }

    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if self.values.len() != mesh.n_nodes() {
            return Err(Error::Mismatch(format!(
                "field has {} nodes, mesh has {}",
                self.values.len(),
                mesh.n_nodes()
            )));
        }
        Ok(())
    }

    /// `α self + β other`.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Self {
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| [alpha * a[0] + beta * b[0], alpha * a[1] + beta * b[1]])
                .collect(),
        }
    }
}

/// Constant strain data of one P1 element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Strain {
    /// `grad[i][j] = ∂u_i/∂x_j`.
    pub grad: Mat2,
    pub sym: Mat2,
    pub dev: Mat2,
    pub div: f64,
}

impl Strain {
    pub fn from_grad(grad: Mat2) -> Self {
        let sym = tensor::sym(&grad);
        Self { grad, sym, dev: tensor::deviatoric(&sym), div: tensor::trace(&grad) }
    }

    /// `∂u₁/∂x₂ - ∂u₂/∂x₁`.
    pub fn rotation(&self) -> f64 {
        self.grad[0][1] - self.grad[1][0]
    }
}

/// Per-element strains of a displacement field.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementStrain {
    pub strains: Vec<Strain>,
}

/// Gradient of the P1 interpolant of `u` on element `e`.
pub fn element_gradient(mesh: &Mesh, u: &DisplacementField, e: usize) -> Mat2 {
    let tri = mesh.elements()[e];
    let g = &mesh.geometry()[e].grads;
    let mut grad = [[0.0; 2]; 2];
    for a in 0..3 {
        let ua = u.values[tri[a]];
        for i in 0..2 {
            for j in 0..2 {
                grad[i][j] += ua[i] * g[a][j];
            }
        }
    }
    grad
}

pub fn compute_strain(mesh: &Mesh, u: &DisplacementField) -> Result<ElementStrain> {
    u.check_mesh(mesh)?;
    let strains = crate::par::map_indexed(mesh.n_elements(), |e| {
        Strain::from_grad(element_gradient(mesh, u, e))
    });
    Ok(ElementStrain { strains })
}

/// Analytic description of a load tensor field `F(x)` and its first
/// derivatives.
pub trait LoadSource: Send + Sync + fmt::Debug {
    fn value(&self, p: [f64; 2]) -> Mat2;

    /// `gradient(p)[k] = ∂F/∂x_k`.
    fn gradient(&self, p: [f64; 2]) -> [Mat2; 2];

    /// `(div F)_k = Σ_i ∂F_ik/∂x_i`.
    fn divergence(&self, p: [f64; 2]) -> [f64; 2] {
        let g = self.gradient(p);
        [g[0][0][0] + g[1][1][0], g[0][0][1] + g[1][1][1]]
    }
}

/// Load given by three expressions `F_xx`, `F_xy (= F_yx)`, `F_yy`.
#[derive(Debug, Clone)]
pub struct ExprLoad {
    entries: [Expr; 3],
    /// `d_entries[k][m]`: derivative of entry `m` w.r.t. `x_k`.
    d_entries: [[Expr; 3]; 2],
}

impl ExprLoad {
    pub fn new(xx: Expr, xy: Expr, yy: Expr) -> Self {
        let entries = [xx, xy, yy];
        let d_entries = [Var::X, Var::Y].map(|v| std::array::from_fn(|m| entries[m].derivative(v)));
        Self { entries, d_entries }
    }

    pub fn parse(xx: &str, xy: &str, yy: &str) -> Result<Self> {
        Ok(Self::new(Expr::parse(xx)?, Expr::parse(xy)?, Expr::parse(yy)?))
    }
}

fn sym_from_entries(xx: f64, xy: f64, yy: f64) -> Mat2 {
    [[xx, xy], [xy, yy]]
}

impl LoadSource for ExprLoad {
    fn value(&self, p: [f64; 2]) -> Mat2 {
        let [a, b, c] = self.entries.each_ref().map(|e| e.eval(p[0], p[1]));
        sym_from_entries(a, b, c)
    }

    fn gradient(&self, p: [f64; 2]) -> [Mat2; 2] {
        self.d_entries.each_ref().map(|d| {
            let [a, b, c] = d.each_ref().map(|e| e.eval(p[0], p[1]));
            sym_from_entries(a, b, c)
        })
    }
}

/// Symmetry defect tolerated in load tensors.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Piecewise-constant symmetric load tensor, one value per element.
#[derive(Debug, Clone)]
pub struct LoadTensor {
    values: Vec<Mat2>,
    source: Option<Arc<dyn LoadSource>>,
}

impl LoadTensor {
    pub fn zero(mesh: &Mesh) -> Self {
        Self { values: vec![[[0.0; 2]; 2]; mesh.n_elements()], source: None }
    }

    /// Validates symmetry of every element tensor.
    pub fn from_elements(values: Vec<Mat2>) -> Result<Self> {
        for (e, f) in values.iter().enumerate() {
            let defect = (f[0][1] - f[1][0]).abs();
            let scale = 1.0 + f.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
            if !(defect <= SYMMETRY_TOL * scale) {
                return Err(Error::AsymmetricLoad { element: e, defect });
            }
        }
        Ok(Self { values, source: None })
    }

    /// Samples an analytic load at element centroids and keeps the source for
    /// derivative-based checks.
    pub fn sample(mesh: &Mesh, source: Arc<dyn LoadSource>) -> Result<Self> {
        let values = crate::par::map_indexed(mesh.n_elements(), |e| source.value(mesh.centroid(e)));
        let mut load = Self::from_elements(values)?;
        load.source = Some(source);
        Ok(load)
    }

    pub fn uniform(mesh: &Mesh, f: Mat2) -> Result<Self> {
        Self::from_elements(vec![f; mesh.n_elements()])
    }

    pub fn values(&self) -> &[Mat2] {
        &self.values
    }

    pub fn source(&self) -> Option<&Arc<dyn LoadSource>> {
        self.source.as_ref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Per-element `(Fᵈ, tr F)` with `F = Fᵈ + (tr F / d) I`.
    pub fn decompose(&self) -> (Vec<Mat2>, Vec<f64>) {
        self.values
            .iter()
            .map(|f| (tensor::deviatoric(f), tensor::trace(f)))
            .unzip()
    }

    /// Elementwise sum; the analytic source is dropped.
    pub fn plus(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::Mismatch("load tensors on different meshes".into()));
        }
        Self::from_elements(self.values.iter().zip(&other.values).map(|(a, b)| tensor::add(a, b)).collect())
    }
}
