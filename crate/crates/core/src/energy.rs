//! Discrete energy `J(u) = ∫ μ|Dᵈu|² + φ(div u) - F:Du` with its first and
//! second variations on P1 elements.
//!
//! The shear potential is fixed to `μ s²` (constant shear modulus); only the
//! bulk potential `φ` is nonlinear. All integrands are constant per element,
//! so every integral below is exact.

use crate::error::{Error, Result};
use crate::mesh::{DofMap, Mesh, DIM};
use crate::nfunction::NFunction;
use crate::numeric::CompensatedSum;
use crate::sparse::CsrMatrix;
use crate::tensor::{self, Mat2};
use crate::tensorfield::{element_gradient, DisplacementField, LoadTensor, Strain};

/// Tolerance on `|u - u₀|` at Dirichlet dofs.
pub const DIRICHLET_TOL: f64 = 1e-10;

/// Lower bound enforced on Hessian diagonal entries.
pub const HESSIAN_DIAG_FLOOR: f64 = 1e-14;

/// A fully specified boundary value problem.
#[derive(Debug, Clone)]
pub struct Problem {
    mesh: Mesh,
    dofs: DofMap,
    mu: f64,
    phi: NFunction,
    load: LoadTensor,
    u0: DisplacementField,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyBreakdown {
    /// `∫ μ|Dᵈu|²`.
    pub shear: f64,
    /// `∫ φ(div u)`.
    pub bulk: f64,
    /// `∫ F:Du`.
    pub load: f64,
    /// `shear + bulk - load`.
    pub total: f64,
}

impl EnergyBreakdown {
    pub const CSV_HEADER: &'static str = "shear,bulk,load,total";

    pub fn csv_row(&self) -> String {
        format!("{:.17e},{:.17e},{:.17e},{:.17e}", self.shear, self.bulk, self.load, self.total)
    }
}

impl Problem {
    pub fn new(
        mesh: Mesh,
        mu: f64,
        phi: NFunction,
        load: LoadTensor,
        u0: DisplacementField,
    ) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::InvalidParameter(format!("shear modulus must be positive, got {mu}")));
        }
        if !phi.check_convexity(64) {
            return Err(Error::InvalidParameter(format!("{phi:?} failed the convexity check")));
        }
        if load.len() != mesh.n_elements() {
            return Err(Error::Mismatch(format!(
                "load has {} element values, mesh has {} elements",
                load.len(),
                mesh.n_elements()
            )));
        }
        u0.check_mesh(&mesh)?;
        if !u0.is_finite() {
            return Err(Error::InvalidParameter("Dirichlet data is not finite".into()));
        }
        let dofs = DofMap::build(&mesh);
        Ok(Self { mesh, dofs, mu, phi, load, u0 })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn phi(&self) -> &NFunction {
        &self.phi
    }

    pub fn load(&self) -> &LoadTensor {
        &self.load
    }

    pub fn dirichlet_data(&self) -> &DisplacementField {
        &self.u0
    }

    pub fn is_pure_neumann(&self) -> bool {
        self.dofs.rigid_modes().is_some()
    }

    /// Same problem with a different load.
    pub fn with_load(&self, load: LoadTensor) -> Result<Self> {
        Self::new(self.mesh.clone(), self.mu, self.phi.clone(), load, self.u0.clone())
    }

    /// Flags bulk potentials that grow slower than quadratically on `[1, 100]`,
    /// where coercivity of the energy is not guaranteed by the shear term alone.
    pub fn coercivity_note(&self) -> Option<String> {
        let slow = [1.0, 10.0, 100.0]
            .iter()
            .any(|&t| self.phi.value(2.0 * t) < 3.99 * self.phi.value(t));
        slow.then(|| format!("bulk potential {:?} grows subquadratically on the sampled range", self.phi))
    }

    fn check_dirichlet(&self, u: &DisplacementField) -> Result<()> {
        u.check_mesh(&self.mesh)?;
        let n = self.mesh.n_nodes();
        let mask = self.dofs.dirichlet_mask();
        for (v, (a, b)) in u.values().iter().zip(self.u0.values()).enumerate() {
            for c in 0..DIM {
                let dof = c * n + v;
                if mask[dof] {
                    let defect = (a[c] - b[c]).abs();
                    if !(defect <= DIRICHLET_TOL) {
                        return Err(Error::ConstraintViolation { dof, defect });
                    }
                }
            }
        }
        Ok(())
    }

    fn element_strain(&self, u: &DisplacementField, e: usize) -> Strain {
        Strain::from_grad(element_gradient(&self.mesh, u, e))
    }

    /// Exact energy with compensated summation over elements.
    pub fn evaluate_energy(&self, u: &DisplacementField) -> Result<EnergyBreakdown> {
        self.check_dirichlet(u)?;
        Ok(self.energy_unchecked(u))
    }

    pub(crate) fn energy_unchecked(&self, u: &DisplacementField) -> EnergyBreakdown {
        let per_element = crate::par::map_indexed(self.mesh.n_elements(), |e| {
            let s = self.element_strain(u, e);
            let area = self.mesh.geometry()[e].area;
            (
                area * self.mu * tensor::norm_sq(&s.dev),
                area * self.phi.value(s.div),
                area * tensor::ddot(&self.load.values()[e], &s.sym),
            )
        });
        let (mut shear, mut bulk, mut load, mut total) =
            (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new());
        for (s, b, l) in per_element {
            shear.add(s);
            bulk.add(b);
            load.add(l);
            total.add(s);
            total.add(b);
            total.add(-l);
        }
        EnergyBreakdown { shear: shear.value(), bulk: bulk.value(), load: load.value(), total: total.value() }
    }

    /// Local dof ids of element `e`, ordered `(vertex a, component c)` → `3c + a`.
    fn local_dofs(&self, e: usize) -> [usize; 6] {
        let tri = self.mesh.elements()[e];
        let n = self.mesh.n_nodes();
        std::array::from_fn(|l| (l / 3) * n + tri[l % 3])
    }

    /// Gradient of `J` with respect to every dof (Dirichlet rows included).
    pub(crate) fn full_residual(&self, u: &DisplacementField) -> Vec<f64> {
        let locals = crate::par::map_indexed(self.mesh.n_elements(), |e| {
            let s = self.element_strain(u, e);
            let geo = &self.mesh.geometry()[e];
            // σ - F with σ = 2μDᵈu + φ'(div u) I
            let stress = tensor::add(
                &tensor::scale(&s.dev, 2.0 * self.mu),
                &tensor::spherical::<2>(self.phi.deriv(s.div)),
            );
            let net: Mat2 = tensor::add(&stress, &tensor::scale(&self.load.values()[e], -1.0));
            let mut r = [0.0; 6];
            for c in 0..DIM {
                for a in 0..3 {
                    r[3 * c + a] =
                        geo.area * (net[c][0] * geo.grads[a][0] + net[c][1] * geo.grads[a][1]);
                }
            }
            r
        });
        let mut full = vec![0.0; self.dofs.n_dofs()];
        for (e, r) in locals.iter().enumerate() {
            for (l, dof) in self.local_dofs(e).into_iter().enumerate() {
                full[dof] += r[l];
            }
        }
        full
    }

    /// Weak-form residual on free dofs:
    /// `r[v] = ∫ 2μDᵈu:Dᵈv + φ'(div u) div v - F:Dv`.
    /// For pure Neumann problems the rigid-motion component is removed.
    pub fn residual(&self, u: &DisplacementField) -> Result<Vec<f64>> {
        self.check_dirichlet(u)?;
        Ok(self.residual_unchecked(u))
    }

    pub(crate) fn residual_unchecked(&self, u: &DisplacementField) -> Vec<f64> {
        let mut full = self.full_residual(u);
        self.dofs.project_dual(&mut full);
        self.dofs.free_dofs().iter().map(|&d| full[d]).collect()
    }

    /// Second variation on free dofs:
    /// `H[v,w] = ∫ 2μDᵈv:Dᵈw + φ''(div u) div v div w`.
    pub fn hessian(&self, u: &DisplacementField) -> Result<CsrMatrix> {
        self.check_dirichlet(u)?;
        Ok(self.hessian_unchecked(u))
    }

    pub(crate) fn hessian_unchecked(&self, u: &DisplacementField) -> CsrMatrix {
        let d = DIM as f64;
        let locals = crate::par::map_indexed(self.mesh.n_elements(), |e| {
            let s = self.element_strain(u, e);
            let geo = &self.mesh.geometry()[e];
            let g = &geo.grads;
            let bulk = self.phi.deriv2(s.div) - 2.0 * self.mu / d;
            let mut k = [[0.0; 6]; 6];
            for c in 0..DIM {
                for a in 0..3 {
                    for kc in 0..DIM {
                        for b in 0..3 {
                            let gg = g[a][0] * g[b][0] + g[a][1] * g[b][1];
                            let shear = self.mu
                                * (if c == kc { gg } else { 0.0 } + g[a][kc] * g[b][c]);
                            k[3 * c + a][3 * kc + b] = geo.area * (shear + bulk * g[a][c] * g[b][kc]);
                        }
                    }
                }
            }
            k
        });
        let mut triplets = Vec::with_capacity(36 * locals.len());
        for (e, k) in locals.iter().enumerate() {
            let ids = self.local_dofs(e).map(|dof| self.dofs.free_index(dof));
            for (l, row) in ids.iter().enumerate() {
                let Some(i) = row else { continue };
                for (m, col) in ids.iter().enumerate() {
                    if let Some(j) = col {
                        triplets.push((*i, *j, k[l][m]));
                    }
                }
            }
        }
        let mut h = CsrMatrix::from_triplets(self.dofs.n_free(), &triplets);
        h.floor_diagonal(HESSIAN_DIAG_FLOOR);
        h
    }

    /// Full field from free-dof values: `u = u₀` on Dirichlet dofs. For pure
    /// Neumann problems the result is projected off the rigid motions.
    pub fn apply_dirichlet_lifting(&self, free_values: &[f64]) -> Result<DisplacementField> {
        if free_values.len() != self.dofs.n_free() {
            return Err(Error::Mismatch(format!(
                "{} free values for {} free dofs",
                free_values.len(),
                self.dofs.n_free()
            )));
        }
        let mut full = self.u0.to_dofs();
        for (&dof, &v) in self.dofs.free_dofs().iter().zip(free_values) {
            full[dof] = v;
        }
        if self.is_pure_neumann() {
            self.dofs.project_out_rigid(&mut full);
        }
        Ok(DisplacementField::from_dofs(&full))
    }

    /// Free-dof values of a full field.
    pub fn extract_free(&self, u: &DisplacementField) -> Vec<f64> {
        let full = u.to_dofs();
        self.dofs.free_dofs().iter().map(|&d| full[d]).collect()
    }

    /// The lifted Dirichlet data: `u₀` on `Γ_D`, zero on free dofs.
    pub fn lifted_dirichlet(&self) -> DisplacementField {
        self.apply_dirichlet_lifting(&vec![0.0; self.dofs.n_free()])
            .expect("length matches by construction")
    }

    /// Discrete H¹ norm `(Σ|T| |∇w|² + Σ m_v |w_v|²)^{1/2}` with lumped mass.
    pub fn h1_norm(&self, w: &DisplacementField) -> f64 {
        let grad_sq = CompensatedSum::from_iter((0..self.mesh.n_elements()).map(|e| {
            self.mesh.geometry()[e].area * tensor::norm_sq(&element_gradient(&self.mesh, w, e))
        }));
        let mass = self.dofs.lumped_mass();
        let l2 = CompensatedSum::from_iter(
            w.values().iter().zip(mass).map(|(v, m)| m * (v[0] * v[0] + v[1] * v[1])),
        );
        (grad_sq.value() + l2.value()).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{BoundaryTag, RectangleSides};
    use crate::numeric::{dot, fitted_order};
    use crate::tensorfield::compute_strain;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square(n: usize, tag: BoundaryTag) -> Mesh {
        Mesh::unit_square(n, RectangleSides::all(tag)).unwrap()
    }

    fn random_field(n: usize, amp: f64, rng: &mut ChaCha8Rng) -> DisplacementField {
        DisplacementField::new((0..n).map(|_| [rng.random_range(-amp..amp), rng.random_range(-amp..amp)]).collect()).unwrap()
    }

    fn loaded_problem(n: usize, tag: BoundaryTag, phi: NFunction) -> Problem {
        let mesh = square(n, tag);
        let src = crate::tensorfield::ExprLoad::parse("1 + x*y", "sin(x) - y", "x^2 - 2").unwrap();
        let load = LoadTensor::sample(&mesh, std::sync::Arc::new(src)).unwrap();
        let u0 = DisplacementField::zeros(mesh.n_nodes());
        Problem::new(mesh, 1.3, phi, load, u0).unwrap()
    }

    #[test]
    fn zero_state_has_zero_energy() {
        let mesh = square(3, BoundaryTag::Dirichlet);
        let n = mesh.n_nodes();
        let load = LoadTensor::zero(&mesh);
        let p = Problem::new(mesh, 1.0, NFunction::power_shifted(1.0, 4.0).unwrap(), load, DisplacementField::zeros(n)).unwrap();
        assert_eq!(p.evaluate_energy(&DisplacementField::zeros(n)).unwrap().total, 0.0);
    }

    #[test]
    fn rigid_rotation_has_zero_energy() {
        let mesh = square(4, BoundaryTag::Neumann);
        let n = mesh.n_nodes();
        let rot = DisplacementField::from_fn(&mesh, |p| [-p[1], p[0]]);
        let load = LoadTensor::zero(&mesh);
        let p = Problem::new(mesh, 1.0, NFunction::quadratic(1.0).unwrap(), load, DisplacementField::zeros(n)).unwrap();
        assert!(p.evaluate_energy(&rot).unwrap().total.abs() < 1e-14);
    }

    #[test]
    fn uniaxial_stretch_by_hand() {
        let mesh = square(1, BoundaryTag::Neumann);
        let n = mesh.n_nodes();
        let u = DisplacementField::from_fn(&mesh, |p| [p[0], 0.0]);
        let load = LoadTensor::zero(&mesh);
        let p = Problem::new(mesh, 1.0, NFunction::quadratic(1.0).unwrap(), load, DisplacementField::zeros(n)).unwrap();
        let e = p.evaluate_energy(&u).unwrap();
        // Du = diag(1, 0), Dᵈu = diag(1/2, -1/2), div u = 1
        assert!((e.shear - 0.5).abs() < 1e-15);
        assert!((e.bulk - 1.0).abs() < 1e-15);
        assert!((e.total - 1.5).abs() < 1e-15);
    }

    #[test]
    fn dirichlet_violation_is_reported() {
        let p = loaded_problem(2, BoundaryTag::Dirichlet, NFunction::quadratic(1.0).unwrap());
        let mut vals = vec![[0.0; 2]; p.mesh().n_nodes()];
        vals[0] = [1e-6, 0.0];
        let u = DisplacementField::new(vals).unwrap();
        assert!(matches!(p.evaluate_energy(&u), Err(Error::ConstraintViolation { dof: 0, .. })));
        assert!(p.residual(&u).is_err());
        assert!(p.hessian(&u).is_err());
    }

    #[test]
    fn invalid_problem_inputs() {
        let mesh = square(2, BoundaryTag::Dirichlet);
        let n = mesh.n_nodes();
        let phi = NFunction::quadratic(1.0).unwrap();
        assert!(Problem::new(mesh.clone(), 0.0, phi.clone(), LoadTensor::zero(&mesh), DisplacementField::zeros(n)).is_err());
        let concave = NFunction::custom(|t: f64| t.sqrt(), |t: f64| 0.5 / t.sqrt(), |t: f64| -0.25 * t.powf(-1.5));
        assert!(Problem::new(mesh.clone(), 1.0, concave, LoadTensor::zero(&mesh), DisplacementField::zeros(n)).is_err());
        assert!(Problem::new(mesh.clone(), 1.0, phi, LoadTensor::zero(&mesh), DisplacementField::zeros(n + 1)).is_err());
    }

    /// Central-difference slope errors for ε = 1e-3, 1e-4, 1e-5.
    fn gradient_errors(p: &Problem, u: &DisplacementField, v_free: &[f64]) -> Vec<f64> {
        let uf = p.extract_free(u);
        let r = p.residual(u).unwrap();
        let exact = dot(&r, v_free);
        [1e-3, 1e-4, 1e-5]
            .iter()
            .map(|&eps| {
                let plus: Vec<f64> = uf.iter().zip(v_free).map(|(a, b)| a + eps * b).collect();
                let minus: Vec<f64> = uf.iter().zip(v_free).map(|(a, b)| a - eps * b).collect();
                let jp = p.evaluate_energy(&p.apply_dirichlet_lifting(&plus).unwrap()).unwrap().total;
                let jm = p.evaluate_energy(&p.apply_dirichlet_lifting(&minus).unwrap()).unwrap().total;
                ((jp - jm) / (2.0 * eps) - exact).abs()
            })
            .collect()
    }

    #[test]
    fn residual_matches_energy_differences() {
        let p = loaded_problem(6, BoundaryTag::Dirichlet, NFunction::power_shifted(1.0, 4.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = p.apply_dirichlet_lifting(&(0..p.dofs().n_free()).map(|_| rng.random_range(-0.05..0.05)).collect::<Vec<_>>()).unwrap();
        let v: Vec<f64> = (0..p.dofs().n_free()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let errs = gradient_errors(&p, &u, &v);
        let order = fitted_order(&[1e-3, 1e-4, 1e-5], &errs);
        assert!(order >= 1.9, "{errs:?} order {order}");
    }

    #[test]
    fn hessian_matches_residual_differences() {
        let p = loaded_problem(5, BoundaryTag::Dirichlet, NFunction::power_shifted(1.0, 4.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let nf = p.dofs().n_free();
        let uf: Vec<f64> = (0..nf).map(|_| rng.random_range(-0.5..0.5)).collect();
        let w: Vec<f64> = (0..nf).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u = p.apply_dirichlet_lifting(&uf).unwrap();
        let hw = p.hessian(&u).unwrap().mul_vec(&w);
        let errs: Vec<f64> = [1e-1, 3e-2, 1e-2]
            .iter()
            .map(|&eps| {
                let up: Vec<f64> = uf.iter().zip(&w).map(|(a, b)| a + eps * b).collect();
                let um: Vec<f64> = uf.iter().zip(&w).map(|(a, b)| a - eps * b).collect();
                let rp = p.residual(&p.apply_dirichlet_lifting(&up).unwrap()).unwrap();
                let rm = p.residual(&p.apply_dirichlet_lifting(&um).unwrap()).unwrap();
                rp.iter().zip(&rm).zip(&hw).map(|((a, b), h)| ((a - b) / (2.0 * eps) - h).abs()).fold(0.0, f64::max)
            })
            .collect();
        assert!(fitted_order(&[1e-1, 3e-2, 1e-2], &errs) >= 1.9, "{errs:?}");
    }

    #[test]
    fn quadratic_hessian_is_hooke_stiffness() {
        let lt = 0.8;
        let p = loaded_problem(3, BoundaryTag::Neumann, NFunction::quadratic(lt).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = p.mesh().n_nodes();
        let h1 = p.hessian(&random_field(n, 1.0, &mut rng)).unwrap();
        let h2 = p.hessian(&random_field(n, 1.0, &mut rng)).unwrap();
        assert_eq!(h1, h2);
        assert!(h1.max_asymmetry() <= 1e-13);
        // oracle: ∫ 2μ Dᵈv:Dᵈw + 2λ̃ div v div w from strains of unit dof fields
        let unit = |dof: usize| {
            let mut d = vec![0.0; 2 * n];
            d[dof] = 1.0;
            compute_strain(p.mesh(), &DisplacementField::from_dofs(&d)).unwrap()
        };
        let strains: Vec<_> = (0..2 * n).map(unit).collect();
        for i in 0..2 * n {
            for j in 0..2 * n {
                let mut s = 0.0;
                for (e, geo) in p.mesh().geometry().iter().enumerate() {
                    let (a, b) = (&strains[i].strains[e], &strains[j].strains[e]);
                    s += geo.area * (2.0 * p.mu() * tensor::ddot(&a.dev, &b.dev) + 2.0 * lt * a.div * b.div);
                }
                assert!((h1.get(i, j) - s).abs() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn quadratic_residual_is_affine() {
        let p = loaded_problem(4, BoundaryTag::Dirichlet, NFunction::quadratic(2.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let nf = p.dofs().n_free();
        let a: Vec<f64> = (0..nf).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..nf).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ua = p.apply_dirichlet_lifting(&a).unwrap();
        let ub = p.apply_dirichlet_lifting(&b).unwrap();
        let k = p.hessian(&ua).unwrap();
        let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let kd = k.mul_vec(&diff);
        let ra = p.residual(&ua).unwrap();
        let rb = p.residual(&ub).unwrap();
        for i in 0..nf {
            assert!((ra[i] - rb[i] - kd[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn lifting_round_trip_and_zero_free_values() {
        let mesh = square(3, BoundaryTag::Dirichlet);
        let u0 = DisplacementField::from_fn(&mesh, |p| [p[0] * p[1], 1.0 - p[0]]);
        let load = LoadTensor::zero(&mesh);
        let p = Problem::new(mesh, 1.0, NFunction::quadratic(1.0).unwrap(), load, u0.clone()).unwrap();
        let lifted = p.apply_dirichlet_lifting(&vec![0.0; p.dofs().n_free()]).unwrap();
        let b = p.mesh().dirichlet_node_flags();
        for (v, (l, g)) in lifted.values().iter().zip(u0.values()).enumerate() {
            if b[v] {
                assert_eq!(l, g);
            } else {
                assert_eq!(*l, [0.0, 0.0]);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let free: Vec<f64> = (0..p.dofs().n_free()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u = p.apply_dirichlet_lifting(&free).unwrap();
        assert_eq!(p.apply_dirichlet_lifting(&p.extract_free(&u)).unwrap(), u);
        assert!(p.apply_dirichlet_lifting(&free[1..]).is_err());
    }

    #[test]
    fn pure_neumann_lifting_projects_rigid_modes() {
        let p = loaded_problem(3, BoundaryTag::Neumann, NFunction::quadratic(1.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let free: Vec<f64> = (0..p.dofs().n_free()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u = p.apply_dirichlet_lifting(&free).unwrap();
        let ud = u.to_dofs();
        for m in p.dofs().rigid_modes().unwrap() {
            assert!(p.dofs().mass_inner(&ud, m).abs() < 1e-13);
        }
        // the non-rigid part is untouched
        let again = p.apply_dirichlet_lifting(&p.extract_free(&u)).unwrap();
        for (a, b) in again.values().iter().zip(u.values()) {
            assert!((a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn rigid_invariance_of_energy_and_residual() {
        let p = loaded_problem(5, BoundaryTag::Neumann, NFunction::power_shifted(1.0, 4.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = p.mesh().n_nodes();
        let u = random_field(n, 0.1, &mut rng);
        let j = p.evaluate_energy(&u).unwrap().total;
        for m in p.dofs().rigid_modes().unwrap() {
            let shifted: Vec<f64> = u.to_dofs().iter().zip(m).map(|(a, b)| a + 0.7 * b).collect();
            let js = p.evaluate_energy(&DisplacementField::from_dofs(&shifted)).unwrap().total;
            assert!((js - j).abs() <= 1e-12 * (1.0 + j.abs()));
            // the unprojected gradient already annihilates rigid motions
            let full = p.full_residual(&u);
            assert!(dot(&full, m).abs() < 1e-12);
        }
    }

    #[test]
    fn convexity_along_segments() {
        let p = loaded_problem(4, BoundaryTag::Dirichlet, NFunction::log_corrected(1.0, 3.0, 1.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let nf = p.dofs().n_free();
        for _ in 0..20 {
            let a: Vec<f64> = (0..nf).map(|_| rng.random_range(-0.3..0.3)).collect();
            let b: Vec<f64> = (0..nf).map(|_| rng.random_range(-0.3..0.3)).collect();
            let theta: f64 = rng.random_range(0.0..1.0);
            let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| theta * x + (1.0 - theta) * y).collect();
            let j = |v: &[f64]| p.evaluate_energy(&p.apply_dirichlet_lifting(v).unwrap()).unwrap().total;
            assert!(j(&mix) <= theta * j(&a) + (1.0 - theta) * j(&b) + 1e-12);
        }
    }

    #[test]
    fn weak_form_integrand_bound() {
        let phi = NFunction::power_shifted(1.0, 4.0).unwrap();
        let c = phi.check_good_phi_prime(1e6, 200).c_observed;
        let p = loaded_problem(4, BoundaryTag::Neumann, phi.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = p.mesh().n_nodes();
        for _ in 0..10 {
            let su = compute_strain(p.mesh(), &random_field(n, 0.5, &mut rng)).unwrap();
            let sv = compute_strain(p.mesh(), &random_field(n, 0.5, &mut rng)).unwrap();
            for (a, b) in su.strains.iter().zip(&sv.strains) {
                let lhs = (phi.deriv(a.div) * b.div).abs();
                assert!(lhs <= 2.0 * c * (1.0 + phi.value(a.div) + phi.value(b.div)));
            }
        }
    }

    #[test]
    fn coercivity_note_for_slow_growth() {
        let p = loaded_problem(2, BoundaryTag::Dirichlet, NFunction::power_kappa(0.0, 1.5).unwrap());
        assert!(p.coercivity_note().is_some());
        let p = loaded_problem(2, BoundaryTag::Dirichlet, NFunction::power_shifted(1.0, 4.0).unwrap());
        assert!(p.coercivity_note().is_none());
    }
}
