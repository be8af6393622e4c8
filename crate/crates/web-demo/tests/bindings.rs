use orlicz_elastica_web::{phi_curves, solve_case, solve_expression, MAX_GRID};

#[test]
fn curves_are_consistent() {
    let c = phi_curves("power_kappa", 1.0, 3.0, 0.0, 1.0, 2.0, 21).unwrap();
    assert_eq!(c.t().len(), 21);
    assert!(c.delta2());
    for ((t, v), d) in c.t().iter().zip(c.value()).zip(c.deriv()) {
        assert!((v - (t * t / 2.0 + t.powi(3) / 3.0)).abs() < 1e-12);
        assert!((d - (t + t * t)).abs() < 1e-12);
    }
    // φ*(φ'(t)) + φ(t) = tφ'(t) at t = 1, where φ'(1) = 2 is on the grid.
    let k = 20;
    assert!((c.conjugate()[k] - (2.0 - 5.0 / 6.0)).abs() < 1e-8);
}

#[test]
fn bad_inputs_are_errors() {
    assert!(phi_curves("custom", 0.0, 2.0, 0.0, 1.0, 1.0, 10).is_err());
    assert!(phi_curves("power_kappa", 0.0, 0.5, 0.0, 1.0, 1.0, 10).is_err());
    assert!(phi_curves("quadratic", 0.0, 2.0, 0.0, 1.0, 1.0, 1).is_err());
    assert!(solve_case("mms_p4", MAX_GRID + 1).is_err());
    assert!(solve_case("nope", 4).is_err());
    assert!(solve_expression("x +", "0", "0", 1.0, "quadratic", 0.0, 2.0, 0.0, 1.0, "", 4).is_err());
}

#[test]
fn case_solution_layout() {
    let s = solve_case("mms_p4", 8).unwrap();
    assert!(s.converged());
    assert_eq!(s.nodes().len(), 2 * 81);
    assert_eq!(s.displacement().len(), 2 * 81);
    assert_eq!(s.triangles().len(), 3 * 128);
    assert_eq!(s.div_u().len(), 128);
    assert_eq!(s.residuals().len(), s.iterations() + 1);
    assert!((s.h1_error() - 0.459).abs() < 5e-3, "{}", s.h1_error());
}

#[test]
fn expression_load_solves() {
    let s = solve_expression("1 + x", "0", "y", 1.0, "power_shifted", 1.0, 3.0, 0.0, 1.0, "left:D,right:N,bottom:N,top:N", 6)
        .unwrap();
    assert!(s.converged());
    assert!(s.h1_error().is_nan());
    assert!(s.energy() < 0.0);
    assert!(s.displacement().iter().any(|v| v.abs() > 1e-3));
}
