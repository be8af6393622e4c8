//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so
//! the summary is printed on every `cargo test`.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use num_rational::Rational64;
use orlicz_elastica::identity::{polynomial_identity_check, Poly};
use orlicz_elastica::nfunction::NFunction;
use orlicz_elastica::numeric::fitted_order;
use orlicz_elastica::solver::{solve, uniqueness_probe, InitialGuess, SolverConfig};
use orlicz_elastica::verify::{
    evaluate_suite, ladder_sizes, manufactured, run_ladder, LevelResult, Suite, LADDER_CASES,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn n_functions() -> Vec<(String, NFunction)> {
    let mut out = Vec::new();
    for kappa in [0.0, 1.0] {
        for p in [1.5, 2.0, 3.0, 4.0] {
            out.push((format!("phi1(k={kappa},p={p})"), NFunction::power_kappa(kappa, p).unwrap()));
            out.push((format!("phi2(k={kappa},p={p})"), NFunction::power_shifted(kappa, p).unwrap()));
            for beta in [0.0, 1.0] {
                out.push((
                    format!("phi3(k={kappa},p={p},b={beta})"),
                    NFunction::log_corrected(kappa, p, beta).unwrap(),
                ));
            }
        }
    }
    out
}

fn criterion_1() -> Outcome {
    let fams = n_functions();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_gap = f64::INFINITY;
    let mut worst_eq: f64 = 0.0;
    let per_family = 10_000 / 3 + 1;
    for family in ["phi1", "phi2", "phi3"] {
        let members: Vec<&NFunction> = fams.iter().filter(|(n, _)| n.starts_with(family)).map(|(_, f)| f).collect();
        for k in 0..per_family {
            let phi = members[k % members.len()];
            let s: f64 = rng.random_range(-5.0..5.0);
            let t: f64 = rng.random_range(-50.0..50.0);
            let Ok(conj) = phi.conjugate(t) else {
                return outcome(false, format!("conjugate failed for {phi:?} at {t}"));
            };
            let gap = phi.value(s) + conj - s * t;
            worst_gap = worst_gap.min(gap / (1.0 + (s * t).abs()));
            let t_eq = phi.deriv(s);
            let lhs = phi.value(s) + phi.conjugate(t_eq).unwrap();
            let rhs = s * t_eq;
            worst_eq = worst_eq.max((lhs - rhs).abs() / rhs.abs().max(1e-12));
        }
    }
    let passed = worst_gap >= -1e-12 && worst_eq <= 1e-8;
    outcome(passed, format!("min relative gap {worst_gap:.2e}, max equality defect {worst_eq:.2e}"))
}

fn criterion_2() -> Outcome {
    let mut all = n_functions();
    all.push(("quadratic".into(), NFunction::quadratic(1.0).unwrap()));
    let failing: Vec<&String> = all.iter().filter(|(_, f)| !f.check_delta2(1e6, 200).satisfied).map(|(n, _)| n).collect();
    let exp = NFunction::custom(|t: f64| t.exp() - t - 1.0, |t: f64| t.exp() - 1.0, |t: f64| t.exp());
    let exp_rejected = !exp.check_delta2(1e6, 200).satisfied;
    outcome(
        failing.is_empty() && exp_rejected,
        format!("{} built-in families pass, e^t-t-1 rejected: {exp_rejected}, failures {failing:?}", all.len() - failing.len()),
    )
}

fn random_field(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Poly> {
    (0..dim)
        .map(|_| {
            let mut terms = Vec::new();
            for _ in 0..rng.random_range(1..8) {
                let mut exps = vec![0u32; dim];
                let deg = rng.random_range(0..=3u32);
                for _ in 0..deg {
                    exps[rng.random_range(0..dim)] += 1;
                }
                terms.push((exps, Rational64::new(rng.random_range(-50..=50), rng.random_range(1..=12))));
            }
            Poly::from_terms(dim, terms)
        })
        .collect()
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut zero = 0;
    for k in 0..100 {
        let dim = if k % 4 == 3 { 3 } else { 2 };
        let f = random_field(&mut rng, dim);
        match polynomial_identity_check(&f) {
            Ok(r) if r == Rational64::from_integer(0) => zero += 1,
            Ok(r) => return outcome(false, format!("field {k}: residual {r}")),
            Err(e) => return outcome(false, format!("field {k}: {e}")),
        }
    }
    outcome(zero == 100, "100 random fields (75 in 2D, 25 in 3D), residual exactly 0")
}

fn criterion_4() -> Outcome {
    let (prob, _) = manufactured("mms_p4", 16).unwrap();
    let nf = prob.dofs().n_free();
    let eps = [1e-2, 5e-3, 2.5e-3];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut min_g, mut min_h) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..20 {
        let base: Vec<f64> = (0..nf).map(|_| rng.random_range(-0.5..0.5)).collect();
        let v: Vec<f64> = (0..nf).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u = prob.apply_dirichlet_lifting(&base).unwrap();
        let r = prob.residual(&u).unwrap();
        let hv = prob.hessian(&u).unwrap().mul_vec(&v);
        let slope: f64 = r.iter().zip(&v).map(|(a, b)| a * b).sum();
        let shifted = |e: f64| {
            let w: Vec<f64> = base.iter().zip(&v).map(|(a, b)| a + e * b).collect();
            prob.apply_dirichlet_lifting(&w).unwrap()
        };
        let mut ge = Vec::new();
        let mut he = Vec::new();
        for &e in &eps {
            let (up, um) = (shifted(e), shifted(-e));
            let jp = prob.evaluate_energy(&up).unwrap().total;
            let jm = prob.evaluate_energy(&um).unwrap().total;
            ge.push(((jp - jm) / (2.0 * e) - slope).abs());
            let (rp, rm) = (prob.residual(&up).unwrap(), prob.residual(&um).unwrap());
            he.push(rp.iter().zip(&rm).zip(&hv).map(|((a, b), h)| ((a - b) / (2.0 * e) - h).abs()).fold(0.0, f64::max));
        }
        min_g = min_g.min(fitted_order(&eps, &ge));
        min_h = min_h.min(fitted_order(&eps, &he));
    }
    outcome(min_g >= 1.9 && min_h >= 1.9, format!("min gradient order {min_g:.3}, min Hessian order {min_h:.3}"))
}

/// Dense Gaussian elimination with partial pivoting.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

fn criterion_5() -> Outcome {
    let (prob, _) = manufactured("quadratic_hooke", 16).unwrap();
    let (u, rep) = solve(&prob, &SolverConfig::default(), &InitialGuess::Zero).unwrap();
    let lift = prob.lifted_dirichlet();
    let k = prob.hessian(&lift).unwrap().to_dense();
    let b: Vec<f64> = prob.residual(&lift).unwrap().iter().map(|r| -r).collect();
    let x = dense_solve(k, b);
    let newton = prob.extract_free(&u);
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let diff = newton.iter().zip(&x).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())) / scale;
    let passed = rep.converged && rep.iterations == 1 && diff <= 1e-12;
    outcome(passed, format!("{} Newton iteration(s), relative difference to dense solve {diff:.2e}", rep.iterations))
}

struct Ladders {
    cases: Vec<(String, Vec<LevelResult>)>,
    elapsed: Duration,
}

fn ladders() -> Ladders {
    let t = Instant::now();
    let sizes = ladder_sizes(8, 4);
    let cases = ["quadratic_hooke", "mms_p4", "mms_mixed"]
        .iter()
        .map(|id| (id.to_string(), run_ladder(id, &sizes, &SolverConfig::default(), None).unwrap()))
        .collect();
    Ladders { cases, elapsed: t.elapsed() }
}

fn ladder_criterion(l: &Ladders, suite: Suite, cases: &[&str]) -> Outcome {
    let mut passed = true;
    let mut notes = Vec::new();
    for (id, levels) in l.cases.iter().filter(|(id, _)| cases.contains(&id.as_str())) {
        let o = evaluate_suite(suite, id, levels);
        let values: Vec<String> = o.rows.iter().map(|r| format!("{:.2e}", r.value)).collect();
        passed &= o.passed;
        notes.push(format!("{id}: {} [{}]", o.note, values.join(", ")));
    }
    outcome(passed, notes.join("; "))
}

fn criterion_7() -> Outcome {
    let (prob, _) = manufactured("mms_p4", 16).unwrap();
    let rep = uniqueness_probe(&prob, &SolverConfig { seed: 7, ..Default::default() }, 3).unwrap();
    let rel = rep.relative_distance();
    outcome(
        !rep.advisory && rep.all_converged && rel <= 1e-8,
        format!("max relative H1 distance {rel:.2e} over 3 starts"),
    )
}

fn criterion_10(l: &Ladders) -> Outcome {
    let mut passed = true;
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut solved = 0;
    for (_, levels) in &l.cases {
        for lv in levels {
            let e = &lv.estimate;
            passed &= e.competitor_holds && e.bound_holds;
            worst = worst.max(e.energy_u - e.energy_lift);
            solved += 1;
        }
    }
    for id in ["rigid_rotation", "zero_load"] {
        let (prob, _) = manufactured(id, 16).unwrap();
        let (_, rep) = solve(&prob, &SolverConfig::default(), &InitialGuess::Zero).unwrap();
        passed &= rep.estimate.competitor_holds && rep.estimate.bound_holds;
        worst = worst.max(rep.estimate.energy_u - rep.estimate.energy_lift);
        solved += 1;
    }
    let growth = ladder_criterion(l, Suite::Estimate, &["quadratic_hooke", "mms_p4", "mms_mixed"]);
    outcome(
        passed && growth.passed,
        format!("{solved} solves, max J(u) - J(lift) = {worst:.3e}; {}", growth.detail),
    )
}

fn binary() -> Option<PathBuf> {
    option_env!("CARGO_BIN_EXE_orlicz-elastica").map(PathBuf::from)
}

fn criterion_11() -> Outcome {
    let Some(bin) = binary() else {
        return outcome(false, "binary not built (enable the cli feature)");
    };
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("cases/mms_p4.cfg");
    let dir = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for (k, threads) in ["1", "4"].iter().enumerate() {
        let out = dir.path().join(format!("run{k}"));
        let status = Command::new(&bin)
            .args(["solve", &format!("--config={}", cfg.display()), &format!("--out={}", out.display()), "--suite=mms"])
            .env("ORLICZ_ELASTICA_THREADS", threads)
            .output()
            .unwrap();
        if !status.status.success() {
            return outcome(false, format!("run {k} exited with {:?}", status.status.code()));
        }
        outs.push(out);
    }
    let mut compared = Vec::new();
    for f in ["solution.csv", "report.csv", "energy.csv", "ladder.csv", "solution.vtk"] {
        let a = std::fs::read(outs[0].join(f)).unwrap();
        let b = std::fs::read(outs[1].join(f)).unwrap();
        if a != b {
            return outcome(false, format!("{f} differs"));
        }
        compared.push(f);
    }
    outcome(true, format!("byte-identical across 1 and 4 threads: {}", compared.join(", ")))
}

type Row = (usize, &'static str, Outcome, Duration, Option<Duration>);

fn run(n: usize, name: &'static str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Row {
    let t = Instant::now();
    let o = f();
    (n, name, o, t.elapsed(), limit)
}

fn main() {
    // Extra arguments from `cargo test -- <filter>` are ignored; the suite always runs whole.
    let s = Duration::from_secs;
    let mut results = vec![
        run(1, "N-function laws", Some(s(5)), criterion_1),
        run(2, "Delta2 discrimination", Some(s(1)), criterion_2),
        run(3, "exact identity", Some(s(1)), criterion_3),
        run(4, "variational consistency", Some(s(30)), criterion_4),
        run(5, "quadratic exactness", Some(s(5)), criterion_5),
    ];
    let l = ladders();
    let lt = l.elapsed;
    results.push((6, "manufactured convergence", ladder_criterion(&l, Suite::Mms, &LADDER_CASES), lt, Some(s(120))));
    results.push(run(7, "uniqueness", Some(s(60)), criterion_7));
    results.push((8, "harmonicity", ladder_criterion(&l, Suite::Harmonic, &LADDER_CASES), lt, Some(s(120))));
    results.push((9, "curl-Poisson", ladder_criterion(&l, Suite::Curl, &LADDER_CASES), lt, Some(s(120))));
    results.push(run(10, "energy estimate ledger", None, || criterion_10(&l)));
    results.push(run(11, "determinism", None, criterion_11));

    let mut failures = 0;
    for (n, name, o, elapsed, limit) in &results {
        let in_time = limit.is_none_or(|lim| *elapsed <= lim);
        let ok = o.passed && in_time;
        failures += usize::from(!ok);
        let budget = limit.map(|l| format!(" / {}s", l.as_secs())).unwrap_or_default();
        println!(
            "criterion {n:>2} {name:<26} {} ({:.2}s{budget}) {}",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {} of {} criteria pass", results.len() - failures, results.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
