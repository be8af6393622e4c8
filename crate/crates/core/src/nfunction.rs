//! Orlicz N-functions: even convex potentials `φ` with `φ(t) = ∫₀ᵗ φ'(s) ds`.
//!
//! The bulk part of the stored energy is `φ(div u)`. Every built-in family
//! carries analytic first and second derivatives because the Newton solver
//! needs `φ''` for the Hessian; numerical differentiation is only used in
//! tests as a cross-check.
//!
//! All closures are defined on `t >= 0` and extended to the real line by
//! evenness: `φ(-t) = φ(t)`, `φ'(-t) = -φ'(t)`, `φ''(-t) = φ''(t)`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numeric::{log_space, ls_slope, GAUSS_LEGENDRE_10};

/// Arguments below this are clamped before evaluating `φ''`, which may be
/// singular at the origin for `p < 2`.
pub const DERIV2_FLOOR: f64 = 1e-12;

/// Lower end of the log-spaced sampling grid used by the structural checks.
pub const CHECK_GRID_MIN: f64 = 1e-6;

/// Default upper end of the sampling grid.
pub const DEFAULT_T_MAX: f64 = 1e6;

/// Slope threshold on `ln(ratio)` against `ln(t)` over the top decade of the
/// grid above which a sampled ratio is considered unbounded.
pub const TREND_SLOPE_TOL: f64 = 0.05;

const CONVEXITY_SEED: u64 = 0x6f72_6c69_637a;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// `φ₁(t) = κt²/2 + tᵖ/p`.
    PowerKappa,
    /// `φ₂` with integrand `(κ + s²)^((p-2)/2) s`.
    PowerShifted,
    /// `φ₃` with integrand `(κ + s²)^((p-2)/2) s ln^β(e + s)`.
    LogCorrected,
    /// `λ̃ t²`, the linear (Hooke) bulk response.
    Quadratic,
    Custom,
}

impl Family {
    pub fn tag(self) -> &'static str {
        match self {
            Family::PowerKappa => "power_kappa",
            Family::PowerShifted => "power_shifted",
            Family::LogCorrected => "log_corrected",
            Family::Quadratic => "quadratic",
            Family::Custom => "custom",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "power_kappa" => Family::PowerKappa,
            "power_shifted" => Family::PowerShifted,
            "log_corrected" => Family::LogCorrected,
            "quadratic" => Family::Quadratic,
            "custom" => Family::Custom,
            _ => return None,
        })
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Family parameters; each family reads only the ones it needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub kappa: f64,
    pub p: f64,
    pub beta: f64,
    pub lambda_tilde: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self { kappa: 0.0, p: 2.0, beta: 0.0, lambda_tilde: 1.0 }
    }
}

type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;

struct CustomParts {
    value: Box<ScalarFn>,
    deriv: Box<ScalarFn>,
    deriv2: Box<ScalarFn>,
}

/// An N-function with analytic derivative access. Cheap to clone.
#[derive(Clone)]
pub struct NFunction {
    family: Family,
    params: Params,
    custom: Option<Arc<CustomParts>>,
}

impl fmt::Debug for NFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NFunction")
            .field("family", &self.family)
            .field("params", &self.params)
            .finish()
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

impl NFunction {
    /// Builds one of the built-in families after validating its parameters.
    pub fn make_family(family: Family, params: Params) -> Result<Self> {
        let Params { kappa, p, beta, lambda_tilde } = params;
        match family {
            Family::PowerKappa | Family::PowerShifted | Family::LogCorrected => {
                if !(kappa.is_finite() && kappa >= 0.0) {
                    return Err(invalid(format!("{family}: kappa must be >= 0, got {kappa}")));
                }
                if !(p.is_finite() && p > 1.0) {
                    return Err(invalid(format!("{family}: p must be > 1, got {p}")));
                }
                if family == Family::LogCorrected && !(beta.is_finite() && beta >= 0.0) {
                    return Err(invalid(format!("{family}: beta must be >= 0, got {beta}")));
                }
            }
            Family::Quadratic => {
                if !(lambda_tilde.is_finite() && lambda_tilde > 0.0) {
                    return Err(invalid(format!(
                        "quadratic: lambda_tilde must be > 0, got {lambda_tilde}"
                    )));
                }
            }
            Family::Custom => {
                return Err(invalid("custom N-functions are built with NFunction::custom"));
            }
        }
        Ok(Self { family, params, custom: None })
    }

    pub fn power_kappa(kappa: f64, p: f64) -> Result<Self> {
        Self::make_family(Family::PowerKappa, Params { kappa, p, ..Params::default() })
    }

    pub fn power_shifted(kappa: f64, p: f64) -> Result<Self> {
        Self::make_family(Family::PowerShifted, Params { kappa, p, ..Params::default() })
    }

    pub fn log_corrected(kappa: f64, p: f64, beta: f64) -> Result<Self> {
        Self::make_family(Family::LogCorrected, Params { kappa, p, beta, ..Params::default() })
    }

    pub fn quadratic(lambda_tilde: f64) -> Result<Self> {
        Self::make_family(Family::Quadratic, Params { lambda_tilde, ..Params::default() })
    }

    /// A user-supplied potential. The closures are evaluated on `t >= 0` only.
    /// Nothing is validated here; use the `check_*` diagnostics.
    pub fn custom<V, D, D2>(value: V, deriv: D, deriv2: D2) -> Self
    where
        V: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
        D2: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            family: Family::Custom,
            params: Params::default(),
            custom: Some(Arc::new(CustomParts {
                value: Box::new(value),
                deriv: Box::new(deriv),
                deriv2: Box::new(deriv2),
            })),
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn params(&self) -> Params {
        self.params
    }

    /// `φ(t)`.
    pub fn value(&self, t: f64) -> f64 {
        self.value_pos(t.abs())
    }

    /// `φ'(t)`, odd in `t`.
    pub fn deriv(&self, t: f64) -> f64 {
        let d = self.deriv_pos(t.abs());
        if t < 0.0 {
            -d
        } else {
            d
        }
    }

    /// `φ''(t)`, even in `t`, evaluated at `max(|t|, DERIV2_FLOOR)`.
    pub fn deriv2(&self, t: f64) -> f64 {
        self.deriv2_pos(t.abs().max(DERIV2_FLOOR))
    }

    fn value_pos(&self, t: f64) -> f64 {
        let Params { kappa, p, lambda_tilde, .. } = self.params;
        match self.family {
            Family::PowerKappa => 0.5 * kappa * t * t + t.powf(p) / p,
            Family::PowerShifted => {
                if kappa == 0.0 {
                    t.powf(p) / p
                } else {
                    // ((κ + t²)^{p/2} - κ^{p/2}) / p without cancellation near 0
                    kappa.powf(0.5 * p) * (0.5 * p * (t * t / kappa).ln_1p()).exp_m1() / p
                }
            }
            Family::LogCorrected => self.integrate_deriv(t),
            Family::Quadratic => lambda_tilde * t * t,
            Family::Custom => (self.custom.as_ref().expect("custom parts").value)(t),
        }
    }

    fn deriv_pos(&self, s: f64) -> f64 {
        if s == 0.0 && self.family != Family::Custom {
            return 0.0;
        }
        let Params { kappa, p, beta, lambda_tilde } = self.params;
        match self.family {
            Family::PowerKappa => kappa * s + s.powf(p - 1.0),
            Family::PowerShifted => shifted_power(kappa, s, p - 2.0) * s,
            Family::LogCorrected => {
                shifted_power(kappa, s, p - 2.0) * s * (std::f64::consts::E + s).ln().powf(beta)
            }
            Family::Quadratic => 2.0 * lambda_tilde * s,
            Family::Custom => (self.custom.as_ref().expect("custom parts").deriv)(s),
        }
    }

    fn deriv2_pos(&self, s: f64) -> f64 {
        let Params { kappa, p, beta, lambda_tilde } = self.params;
        match self.family {
            Family::PowerKappa => kappa + (p - 1.0) * s.powf(p - 2.0),
            Family::PowerShifted => shifted_power(kappa, s, p - 4.0) * (kappa + (p - 1.0) * s * s),
            Family::LogCorrected => {
                let es = std::f64::consts::E + s;
                let l = es.ln();
                let main = shifted_power(kappa, s, p - 4.0) * (kappa + (p - 1.0) * s * s) * l.powf(beta);
                let corr = if beta == 0.0 {
                    0.0
                } else {
                    shifted_power(kappa, s, p - 2.0) * s * beta * l.powf(beta - 1.0) / es
                };
                main + corr
            }
            Family::Quadratic => 2.0 * lambda_tilde,
            Family::Custom => (self.custom.as_ref().expect("custom parts").deriv2)(s),
        }
    }

    /// `∫₀ᵗ φ'(s) ds` on geometrically graded panels with 10-point
    /// Gauss–Legendre per panel. The grading resolves the `s^{p-1}` behaviour
    /// of the integrand at the origin.
    fn integrate_deriv(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        const RATIO: f64 = 0.25;
        const PANELS: usize = 30;
        let mut hi = t;
        let mut total = 0.0;
        // smallest panels first so the sum accumulates from small to large
        let mut panels = [(0.0, 0.0); PANELS];
        for panel in panels.iter_mut() {
            let lo = hi * RATIO;
            *panel = (lo, hi);
            hi = lo;
        }
        for &(lo, hi) in panels.iter().rev() {
            let (mid, half) = (0.5 * (hi + lo), 0.5 * (hi - lo));
            let mut acc = 0.0;
            for &(x, w) in GAUSS_LEGENDRE_10.iter() {
                acc += w * self.deriv_pos(mid + half * x);
            }
            total += half * acc;
        }
        total
    }

    /// Convex conjugate `φ*(t) = sup_s (s t - φ(s))`.
    ///
    /// The objective is concave, so its maximiser is the root of
    /// `φ'(s) = |t|`. The root is bracketed by doubling from `s = 1` and then
    /// bisected to machine resolution.
    pub fn conjugate(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(Error::Numerical(format!("conjugate: non-finite argument {t}")));
        }
        let t = t.abs();
        if t == 0.0 {
            return Ok(0.0);
        }
        let s = self.conjugate_maximiser(t)?;
        Ok((s * t - self.value_pos(s)).max(0.0))
    }

    /// The maximiser `s ≥ 0` of `s t - φ(s)` for `t ≥ 0`.
    pub fn conjugate_maximiser(&self, t: f64) -> Result<f64> {
        let t = t.abs();
        if t == 0.0 {
            return Ok(0.0);
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut doublings = 0;
        while self.deriv_pos(hi) < t {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > 1100 || !hi.is_finite() {
                return Err(Error::Numerical(format!(
                    "conjugate: could not bracket φ'(s) = {t:e}; φ'({lo:e}) = {:e} ({} family)",
                    self.deriv_pos(lo),
                    self.family
                )));
            }
        }
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.deriv_pos(mid) < t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if !(hi - lo <= 4.0 * f64::EPSILON * hi.max(f64::MIN_POSITIVE)) {
            return Err(Error::Numerical(format!(
                "conjugate: bisection stalled with bracket [{lo:e}, {hi:e}] for t = {t:e}"
            )));
        }
        // pick the endpoint with the larger objective
        let f = |s: f64| s * t - self.value_pos(s);
        Ok(if f(lo) >= f(hi) { lo } else { hi })
    }

    /// Doubling-condition diagnostic on a log-spaced grid from
    /// [`CHECK_GRID_MIN`] to `t_max`.
    pub fn check_delta2(&self, t_max: f64, samples: usize) -> Delta2Report {
        let grid = log_space(CHECK_GRID_MIN, t_max, samples.max(2));
        let ratios: Vec<f64> = grid
            .iter()
            .map(|&t| self.value(2.0 * t) / (self.value(t) + 1.0))
            .collect();
        let (c_observed, slope) = sup_and_trend(&grid, &ratios, t_max);
        let satisfied = c_observed.is_finite() && slope <= TREND_SLOPE_TOL;
        Delta2Report { satisfied, c_observed, top_decade_slope: slope }
    }

    /// Checks `φ(t) ≤ tφ'(t)` on the grid and reports the smallest `C` with
    /// `tφ'(t) ≤ C(φ(t) + 1)` over the samples.
    pub fn check_good_phi_prime(&self, t_max: f64, samples: usize) -> GoodPhiPrimeReport {
        let grid = log_space(CHECK_GRID_MIN, t_max, samples.max(2));
        let mut lower_ok = true;
        let mut ratios = Vec::with_capacity(grid.len());
        for &t in &grid {
            let v = self.value(t);
            let tv = t * self.deriv(t);
            if v.is_finite() && tv.is_finite() && v > tv + 1e-12 * (1.0 + v.abs()) {
                lower_ok = false;
            }
            ratios.push(tv / (v + 1.0));
        }
        let (c_observed, slope) = sup_and_trend(&grid, &ratios, t_max);
        GoodPhiPrimeReport {
            lower_ok,
            c_observed,
            unbounded_trend: !c_observed.is_finite() || slope > TREND_SLOPE_TOL,
        }
    }

    /// Midpoint convexity on seeded random pairs in `[-10, 10]` plus
    /// monotonicity of `φ'` on a log grid up to `10³`.
    pub fn check_convexity(&self, samples: usize) -> bool {
        let n = samples.max(3);
        let mut rng = ChaCha8Rng::seed_from_u64(CONVEXITY_SEED);
        for _ in 0..n {
            let a: f64 = rng.random_range(-10.0..10.0);
            let b: f64 = rng.random_range(-10.0..10.0);
            let (fa, fb) = (self.value(a), self.value(b));
            let fm = self.value(0.5 * (a + b));
            if !(fm <= 0.5 * (fa + fb) + 1e-12 * (1.0 + fa.abs() + fb.abs())) {
                return false;
            }
        }
        let grid = log_space(CHECK_GRID_MIN, 1e3, n);
        let mut prev = self.deriv(0.0);
        for &t in &grid {
            let d = self.deriv(t);
            if !(d >= prev - 1e-12 * (1.0 + prev.abs())) {
                return false;
            }
            prev = d;
        }
        true
    }

    /// `φ''(t) > 0` at every nonzero grid point of `[-t_max, t_max]`.
    pub fn is_strictly_convex_on(&self, t_max: f64, samples: usize) -> bool {
        log_space(CHECK_GRID_MIN, t_max, samples.max(2))
            .iter()
            .all(|&t| self.deriv2(t) > 0.0)
    }
}

/// `(κ + s²)^(e/2)` with the `κ = 0, s = 0` corner returning 0 for `e > 0`
/// and `+∞` for `e < 0`.
fn shifted_power(kappa: f64, s: f64, e: f64) -> f64 {
    let base = kappa + s * s;
    if base == 0.0 {
        return if e > 0.0 { 0.0 } else if e == 0.0 { 1.0 } else { f64::INFINITY };
    }
    base.powf(0.5 * e)
}

/// Supremum of the sampled ratios and the least-squares slope of `ln(ratio)`
/// against `ln(t)` over the top decade of the grid. Non-finite samples make
/// both results infinite.
fn sup_and_trend(grid: &[f64], ratios: &[f64], t_max: f64) -> (f64, f64) {
    if ratios.iter().any(|r| !r.is_finite()) {
        return (f64::INFINITY, f64::INFINITY);
    }
    let sup = ratios.iter().cloned().fold(0.0_f64, f64::max);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (t, r) in grid.iter().zip(ratios) {
        if *t >= 0.1 * t_max && *r > 0.0 {
            xs.push(t.ln());
            ys.push(r.ln());
        }
    }
    let slope = if xs.len() >= 2 { ls_slope(&xs, &ys) } else { 0.0 };
    (sup, slope)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delta2Report {
    pub satisfied: bool,
    /// Largest sampled `φ(2t) / (φ(t) + 1)`.
    pub c_observed: f64,
    pub top_decade_slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoodPhiPrimeReport {
    pub lower_ok: bool,
    /// Largest sampled `tφ'(t) / (φ(t) + 1)`.
    pub c_observed: f64,
    pub unbounded_trend: bool,
}
