//! Command implementations behind the `orlicz-elastica` binary. Each returns
//! a process exit code and writes human-readable progress to `log`.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::CaseConfig;
use crate::error::{Error, Result};
use crate::output;
use crate::solver::{solve, SolveReport, SolverConfig};
use crate::energy::EnergyBreakdown;
use crate::verify::{evaluate_suite, ladder_sizes, list_cases, run_ladder, LadderRow, LevelResult, Suite, SuiteOutcome};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;

/// Coarsest grid of every refinement ladder.
pub const LADDER_BASE: usize = 8;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "ORLICZ_ELASTICA_THREADS";

/// Reads the thread cap from the environment; unset or unparsable means
/// hardware parallelism.
pub fn init_threads_from_env() {
    let cap = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0);
    crate::par::init_threads(cap);
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

/// Runs the selected suites over their cases (or only `case` when given).
/// Each case is solved once per level and shared between suites.
pub fn run_suites(
    suites: &[Suite],
    case: Option<&str>,
    levels: usize,
    cfg: &SolverConfig,
    margin: Option<f64>,
) -> Result<Vec<SuiteOutcome>> {
    let sizes = ladder_sizes(LADDER_BASE, levels);
    let mut cache: Vec<(String, Vec<LevelResult>)> = Vec::new();
    let mut outcomes = Vec::new();
    for &suite in suites {
        let ids: Vec<&str> = match case {
            Some(c) => vec![c],
            None => suite.cases().to_vec(),
        };
        for id in ids {
            if !cache.iter().any(|(c, _)| c == id) {
                cache.push((id.to_string(), run_ladder(id, &sizes, cfg, margin)?));
            }
            let levels = &cache.iter().find(|(c, _)| c == id).expect("just inserted").1;
            outcomes.push(evaluate_suite(suite, id, levels));
        }
    }
    Ok(outcomes)
}

fn ladder_csv(outcomes: &[SuiteOutcome]) -> String {
    output::csv(LadderRow::CSV_HEADER, outcomes.iter().flat_map(|o| o.rows.iter().map(LadderRow::csv_row)))
}

fn summarize(outcomes: &[SuiteOutcome], log: &mut dyn Write) -> bool {
    let mut ok = true;
    for o in outcomes {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(log, "{tag} {:<9} {:<16} {}", o.suite.tag(), o.case, o.note);
        ok &= o.passed;
    }
    ok
}

fn report_error(log: &mut dyn Write, e: &Error) {
    let _ = writeln!(log, "error: {e}");
}

/// `solve --config=<file> [--out=<dir>] [--suite=<sel>]`.
pub fn run_case(config: &Path, out: Option<&Path>, suite: Option<&str>, log: &mut dyn Write) -> i32 {
    let setup = || -> Result<(CaseConfig, PathBuf, Vec<Suite>)> {
        let cfg = CaseConfig::load(config)?;
        let suites = match suite {
            None => cfg.suites.clone(),
            Some("none") => Vec::new(),
            Some(s) => Suite::parse_selection(s)?,
        };
        if !suites.is_empty() && cfg.case.is_none() {
            return Err(Error::InvalidParameter("verification suites need a registered case in the config".into()));
        }
        let dir = out
            .map(Path::to_path_buf)
            .or_else(|| cfg.output_dir.clone())
            .ok_or_else(|| Error::InvalidParameter("no output directory: pass --out or set output.dir".into()))?;
        std::fs::create_dir_all(&dir)?;
        Ok((cfg, dir, suites))
    };
    let (cfg, dir, suites) = match setup() {
        Ok(v) => v,
        Err(e) => {
            report_error(log, &e);
            return EXIT_CONFIG;
        }
    };
    let prob = match cfg.build_problem() {
        Ok(p) => p,
        Err(e) => {
            report_error(log, &e);
            return EXIT_CONFIG;
        }
    };
    if let Some(note) = prob.coercivity_note() {
        let _ = writeln!(log, "note: {note}");
    }
    let (u, report) = match solve(&prob, &cfg.solver, &cfg.init.guess()) {
        Ok(v) => v,
        Err(e) => {
            report_error(log, &e);
            return EXIT_NONCONVERGENCE;
        }
    };
    let written = (|| -> Result<()> {
        write_file(&dir, "solution.csv", &output::solution_csv(prob.mesh(), &u)?)?;
        write_file(&dir, "report.csv", &output::csv(SolveReport::CSV_HEADER, report.csv_rows()))?;
        write_file(&dir, "energy.csv", &output::csv(EnergyBreakdown::CSV_HEADER, [report.final_energy.csv_row()]))?;
        if cfg.vtk {
            write_file(&dir, "solution.vtk", &output::vtk(prob.mesh(), &u)?)?;
        }
        Ok(())
    })();
    if let Err(e) = written {
        report_error(log, &e);
        return EXIT_CONFIG;
    }
    let _ = writeln!(
        log,
        "solve: {} Newton iterations, residual {:.3e}, energy {:.12e}, converged {}",
        report.iterations,
        report.final_residual(),
        report.final_energy.total,
        report.converged
    );
    if !report.converged {
        return EXIT_NONCONVERGENCE;
    }
    let est = &report.estimate;
    let _ = writeln!(
        log,
        "estimate: lhs {:.6e}, rhs {:.6e}, ratio {:.6e}, C {}, bound {}, J(u) <= J(lift) {}",
        est.lhs, est.rhs_sum, est.ratio, est.constant, est.bound_holds, est.competitor_holds
    );
    let mut ok = est.bound_holds && est.competitor_holds;

    let outcomes = if suites.is_empty() {
        Vec::new()
    } else {
        match run_suites(&suites, cfg.case.as_deref(), cfg.levels, &cfg.solver, cfg.margin) {
            Ok(o) => o,
            Err(e) => {
                report_error(log, &e);
                return EXIT_NONCONVERGENCE;
            }
        }
    };
    if let Err(e) = write_file(&dir, "ladder.csv", &ladder_csv(&outcomes)) {
        report_error(log, &e);
        return EXIT_CONFIG;
    }
    ok &= summarize(&outcomes, log);
    if ok {
        EXIT_OK
    } else {
        EXIT_VERIFICATION
    }
}

/// `verify --suite=<sel> --levels=<n> --out=<dir> [--config=<file>]`.
pub fn run_verify(suite: &str, levels: usize, out: &Path, config: Option<&Path>, log: &mut dyn Write) -> i32 {
    let setup = || -> Result<(Vec<Suite>, Option<CaseConfig>)> {
        let suites = Suite::parse_selection(suite)?;
        if levels < 2 {
            return Err(Error::InvalidParameter("at least two levels are needed to fit a rate".into()));
        }
        let cfg = config.map(CaseConfig::load).transpose()?;
        if let Some(c) = &cfg {
            if c.case.is_none() {
                return Err(Error::InvalidParameter("verify --config needs a registered case in the config".into()));
            }
        }
        std::fs::create_dir_all(out)?;
        Ok((suites, cfg))
    };
    let (suites, cfg) = match setup() {
        Ok(v) => v,
        Err(e) => {
            report_error(log, &e);
            return EXIT_CONFIG;
        }
    };
    let (solver, case, margin) = match &cfg {
        Some(c) => (c.solver.clone(), c.case.as_deref(), c.margin),
        None => (SolverConfig::default(), None, None),
    };
    let outcomes = match run_suites(&suites, case, levels, &solver, margin) {
        Ok(o) => o,
        Err(e) => {
            report_error(log, &e);
            return EXIT_NONCONVERGENCE;
        }
    };
    if let Err(e) = write_file(out, "ladder.csv", &ladder_csv(&outcomes)) {
        report_error(log, &e);
        return EXIT_CONFIG;
    }
    if summarize(&outcomes, log) {
        EXIT_OK
    } else {
        EXIT_VERIFICATION
    }
}

/// `list-cases`: one `id  description` line per registered case.
pub fn run_list_cases(log: &mut dyn Write) -> i32 {
    for c in list_cases() {
        let _ = writeln!(log, "{:<16} {}", c.id, c.description);
    }
    EXIT_OK
}
