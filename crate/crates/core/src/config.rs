//! `key = value` case configuration.
//!
//! Keys are dotted (`solver.tol`) or grouped under `[section]` headers. `#`
//! starts a comment. Every key must be known; duplicates are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::energy::Problem;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::mesh::{BoundaryTag, Mesh, RectangleSides};
use crate::nfunction::{Family, NFunction, Params};
use crate::solver::{InitialGuess, SolverConfig};
use crate::tensorfield::{DisplacementField, ExprLoad, LoadTensor};
use crate::verify::{case_spec, CaseSpec, Suite};

/// Every accepted key.
pub const KEYS: [&str; 26] = [
    "case",
    "mesh.file",
    "mesh.grid",
    "mesh.extent",
    "mesh.bc",
    "mu",
    "nfunction.family",
    "nfunction.kappa",
    "nfunction.p",
    "nfunction.beta",
    "nfunction.lambda_tilde",
    "load.xx",
    "load.xy",
    "load.yy",
    "dirichlet.x",
    "dirichlet.y",
    "solver.tol",
    "solver.max_newton",
    "solver.linear",
    "solver.init",
    "solver.seed",
    "output.dir",
    "output.vtk",
    "verify.suite",
    "verify.levels",
    "verify.margin",
];

/// Keys describing the material, load and boundary data, which a registered
/// `case` already fixes.
const CASE_OWNED: [&str; 12] = [
    "mesh.bc",
    "mesh.extent",
    "mu",
    "nfunction.family",
    "nfunction.kappa",
    "nfunction.p",
    "nfunction.beta",
    "nfunction.lambda_tilde",
    "load.xx",
    "load.xy",
    "load.yy",
    "dirichlet.x",
];

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Grid { nx: usize, ny: usize, extent: [f64; 4], sides: RectangleSides },
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitChoice {
    Zero,
    Random { amplitude: f64 },
}

impl InitChoice {
    pub fn guess(self) -> InitialGuess {
        match self {
            InitChoice::Zero => InitialGuess::Zero,
            InitChoice::Random { amplitude } => InitialGuess::Random { amplitude },
        }
    }
}

#[derive(Debug, Clone)]
pub struct CaseConfig {
    pub case: Option<String>,
    pub mesh: MeshSource,
    pub mu: f64,
    pub family: Family,
    pub params: Params,
    /// `F_xx`, `F_xy`, `F_yy`.
    pub load: [String; 3],
    pub dirichlet: [String; 2],
    pub solver: SolverConfig,
    pub init: InitChoice,
    pub output_dir: Option<PathBuf>,
    pub vtk: bool,
    pub suites: Vec<Suite>,
    pub levels: usize,
    pub margin: Option<f64>,
}

/// Raw entries with their line numbers.
#[derive(Debug, Default)]
struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = Entries::default();
        let mut section = String::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| Error::Config {
                    line,
                    key: content.to_string(),
                    msg: "unterminated section header".into(),
                })?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                key: content.to_string(),
                msg: "expected key = value".into(),
            })?;
            let key = key.trim();
            let full = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
            if !KEYS.contains(&full.as_str()) {
                return Err(Error::Config { line, key: full, msg: "unknown key".into() });
            }
            if let Some((first, _)) = entries.map.get(&full) {
                return Err(Error::Config { line, key: full, msg: format!("duplicate key (first set on line {first})") });
            }
            entries.map.insert(full, (line, value.trim().to_string()));
        }
        Ok(entries)
    }

    fn get(&self, key: &str) -> Option<&(usize, String)> {
        self.map.get(key)
    }

    fn line(&self, key: &str) -> usize {
        self.get(key).map_or(0, |e| e.0)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some((line, v)) => v.parse().map_err(|e| Error::Config {
                line: *line,
                key: key.to_string(),
                msg: format!("cannot parse '{v}': {e}"),
            }),
        }
    }

    fn string(&self, key: &str, default: &str) -> String {
        self.get(key).map_or_else(|| default.to_string(), |e| e.1.clone())
    }

    fn err(&self, key: &str, msg: impl Into<String>) -> Error {
        Error::Config { line: self.line(key), key: key.to_string(), msg: msg.into() }
    }
}

/// Re-labels a lower-level error as a config error on `key`.
fn at_key<'a>(entries: &'a Entries, key: &str) -> impl Fn(Error) -> Error + 'a {
    let key = key.to_string();
    move |e| entries.err(&key, e.to_string())
}

impl CaseConfig {
    /// Parses a configuration; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let e = Entries::parse(text)?;
        let case = e.get("case").map(|c| c.1.clone());
        if let Some(id) = &case {
            case_spec(id).map_err(at_key(&e, "case"))?;
            if let Some(k) = CASE_OWNED.iter().chain(["dirichlet.y"].iter()).find(|k| e.get(k).is_some()) {
                return Err(e.err(k, "set by the registered case; remove it or drop 'case'"));
            }
        }

        let mesh = if let Some((_, file)) = e.get("mesh.file") {
            if e.get("mesh.grid").is_some() {
                return Err(e.err("mesh.grid", "mesh.grid and mesh.file are mutually exclusive"));
            }
            let path = base_dir.join(file);
            if !path.is_file() {
                return Err(e.err("mesh.file", format!("file {} not found", path.display())));
            }
            MeshSource::File(path)
        } else {
            let grid = e.string("mesh.grid", "16");
            let (nx, ny) = match grid.split_once('x') {
                Some((a, b)) => (a.trim().parse(), b.trim().parse()),
                None => (grid.parse(), grid.parse()),
            };
            let (nx, ny): (usize, usize) = match (nx, ny) {
                (Ok(a), Ok(b)) if a > 0 && b > 0 => (a, b),
                _ => return Err(e.err("mesh.grid", format!("expected N or NxM with positive integers, got '{grid}'"))),
            };
            let ext: Vec<f64> = e
                .string("mesh.extent", "0,1,0,1")
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|err| e.err("mesh.extent", err.to_string()))?;
            let extent: [f64; 4] = ext
                .try_into()
                .map_err(|_| e.err("mesh.extent", "expected x0,x1,y0,y1"))?;
            let sides = match &case {
                Some(id) => case_spec(id)?.sides,
                None => {
                    let bc = e.string("mesh.bc", "D");
                    match bc.parse::<BoundaryTag>() {
                        Ok(tag) => RectangleSides::all(tag),
                        Err(_) => RectangleSides::parse(&bc).map_err(at_key(&e, "mesh.bc"))?,
                    }
                }
            };
            MeshSource::Grid { nx, ny, extent, sides }
        };

        let mu = e.parsed("mu", 1.0)?;
        let family_tag = e.string("nfunction.family", "quadratic");
        let family = Family::from_tag(&family_tag)
            .ok_or_else(|| e.err("nfunction.family", format!("unknown family '{family_tag}'")))?;
        if family == Family::Custom {
            return Err(e.err("nfunction.family", "custom N-functions are only available through the library API"));
        }
        let d = Params::default();
        let params = Params {
            kappa: e.parsed("nfunction.kappa", d.kappa)?,
            p: e.parsed("nfunction.p", d.p)?,
            beta: e.parsed("nfunction.beta", d.beta)?,
            lambda_tilde: e.parsed("nfunction.lambda_tilde", d.lambda_tilde)?,
        };
        if case.is_none() {
            NFunction::make_family(family, params).map_err(at_key(&e, "nfunction.family"))?;
        }
        let load = ["load.xx", "load.xy", "load.yy"].map(|k| e.string(k, "0"));
        let dirichlet = ["dirichlet.x", "dirichlet.y"].map(|k| e.string(k, "0"));
        for (k, v) in ["load.xx", "load.xy", "load.yy", "dirichlet.x", "dirichlet.y"]
            .iter()
            .zip(load.iter().chain(dirichlet.iter()))
        {
            Expr::parse(v).map_err(at_key(&e, k))?;
        }

        let defaults = SolverConfig::default();
        let solver = SolverConfig {
            tol_residual: e.parsed("solver.tol", defaults.tol_residual)?,
            max_newton: e.parsed("solver.max_newton", defaults.max_newton)?,
            linear_solver: e.parsed("solver.linear", defaults.linear_solver)?,
            seed: e.parsed("solver.seed", defaults.seed)?,
            ..defaults
        };
        solver.validate().map_err(at_key(&e, "solver.tol"))?;
        let init = match e.string("solver.init", "zero").as_str() {
            "zero" => InitChoice::Zero,
            s => match s.strip_prefix("random") {
                Some("") => InitChoice::Random { amplitude: 0.1 },
                Some(rest) => {
                    let amp = rest
                        .trim()
                        .strip_prefix(':')
                        .and_then(|a| a.trim().parse::<f64>().ok())
                        .filter(|a| a.is_finite() && *a >= 0.0)
                        .ok_or_else(|| e.err("solver.init", format!("expected random or random:<amplitude>, got '{s}'")))?;
                    InitChoice::Random { amplitude: amp }
                }
                None => return Err(e.err("solver.init", format!("expected zero, random or random:<amplitude>, got '{s}'"))),
            },
        };

        let output_dir = e.get("output.dir").map(|(_, v)| base_dir.join(v));
        let vtk = e.parsed("output.vtk", false)?;
        let suites = match e.string("verify.suite", "none").as_str() {
            "none" => Vec::new(),
            s => Suite::parse_selection(s).map_err(at_key(&e, "verify.suite"))?,
        };
        if !suites.is_empty() && case.is_none() {
            return Err(e.err("verify.suite", "ladder suites need a registered 'case'"));
        }
        let levels: usize = e.parsed("verify.levels", 4)?;
        if levels < 2 {
            return Err(e.err("verify.levels", "at least two levels are needed to fit a rate"));
        }
        let margin = match e.get("verify.margin") {
            None => None,
            Some(_) => {
                let m: f64 = e.parsed("verify.margin", 0.0)?;
                if !(m.is_finite() && m >= 0.0) {
                    return Err(e.err("verify.margin", "margin must be non-negative"));
                }
                Some(m)
            }
        };
        Ok(Self {
            case,
            mesh,
            mu,
            family,
            params,
            load,
            dirichlet,
            solver,
            init,
            output_dir,
            vtk,
            suites,
            levels,
            margin,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn case_spec(&self) -> Option<CaseSpec> {
        self.case.as_deref().map(|id| case_spec(id).expect("validated at parse time"))
    }

    pub fn build_mesh(&self) -> Result<Mesh> {
        match &self.mesh {
            MeshSource::Grid { nx, ny, extent, sides } => Mesh::generate_rectangle(*nx, *ny, *extent, *sides),
            MeshSource::File(path) => Mesh::load(path),
        }
    }

    pub fn build_problem(&self) -> Result<Problem> {
        let mesh = self.build_mesh()?;
        if let Some(spec) = self.case_spec() {
            return spec.problem_on(mesh);
        }
        let phi = NFunction::make_family(self.family, self.params)?;
        let [xx, xy, yy] = &self.load;
        let load = LoadTensor::sample(&mesh, Arc::new(ExprLoad::parse(xx, xy, yy)?))?;
        let (dx, dy) = (Expr::parse(&self.dirichlet[0])?, Expr::parse(&self.dirichlet[1])?);
        let u0 = DisplacementField::from_fn(&mesh, |p| [dx.eval(p[0], p[1]), dy.eval(p[0], p[1])]);
        Problem::new(mesh, self.mu, phi, load, u0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<CaseConfig> {
        CaseConfig::parse(text, Path::new("."))
    }

    #[test]
    fn sections_and_dotted_keys_are_equivalent() {
        let a = parse("mu = 2\n[nfunction]\nfamily = power_shifted\nkappa = 1\np = 4\n").unwrap();
        let b = parse("mu = 2\nnfunction.family = power_shifted # comment\nnfunction.kappa=1\nnfunction.p = 4").unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.family, Family::PowerShifted);
        assert_eq!(a.mu, 2.0);
    }

    #[test]
    fn unknown_key_names_key_and_line() {
        let err = parse("mu = 1\n\nnfunction.q = 3\n").unwrap_err();
        match err {
            Error::Config { line, key, .. } => assert_eq!((line, key.as_str()), (3, "nfunction.q")),
            other => panic!("{other:?}"),
        }
        let err = parse("[nfunction]\nq = 3\n").unwrap_err();
        assert!(err.to_string().contains("nfunction.q"), "{err}");
    }

    #[test]
    fn malformed_entries() {
        assert!(matches!(parse("mu 1"), Err(Error::Config { line: 1, .. })));
        assert!(matches!(parse("[solver\ntol=1"), Err(Error::Config { line: 1, .. })));
        assert!(matches!(parse("mu = 1\nmu = 2"), Err(Error::Config { line: 2, .. })));
        assert!(matches!(parse("mu = abc"), Err(Error::Config { .. })));
        assert!(parse("load.xx = sin(").is_err());
        assert!(parse("nfunction.family = custom").is_err());
        assert!(parse("nfunction.family = power_kappa\nnfunction.p = 0.5").is_err());
        assert!(parse("solver.tol = -1").is_err());
        assert!(parse("solver.linear = lu").is_err());
        assert!(parse("mesh.grid = 0").is_err());
        assert!(parse("mesh.file = /no/such/mesh.txt").is_err());
        assert!(parse("verify.suite = mms").is_err());
        assert!(parse("case = nope").is_err());
        assert!(parse("case = mms_p4\nmu = 2").is_err());
    }

    #[test]
    fn defaults() {
        let c = parse("").unwrap();
        assert_eq!(c.family, Family::Quadratic);
        assert_eq!(c.solver, SolverConfig::default());
        assert_eq!(c.init, InitChoice::Zero);
        assert!(c.suites.is_empty());
        assert_eq!(
            c.mesh,
            MeshSource::Grid { nx: 16, ny: 16, extent: [0.0, 1.0, 0.0, 1.0], sides: RectangleSides::all(BoundaryTag::Dirichlet) }
        );
    }

    #[test]
    fn grid_bc_and_init_forms() {
        let c = parse("mesh.grid = 8x4\nmesh.extent = 0, 2, 0, 1\nmesh.bc = left:D,right:N,bottom:N,top:N\nsolver.init = random:0.25").unwrap();
        match c.mesh {
            MeshSource::Grid { nx, ny, extent, .. } => assert_eq!((nx, ny, extent), (8, 4, [0.0, 2.0, 0.0, 1.0])),
            _ => panic!(),
        }
        assert_eq!(c.init, InitChoice::Random { amplitude: 0.25 });
        let p = c.build_problem().unwrap();
        assert_eq!(p.mesh().n_nodes(), 45);
    }

    #[test]
    fn registered_case_builds_its_problem() {
        let c = parse("case = mms_p4\nmesh.grid = 8\nverify.suite = mms,harmonic\nverify.levels = 3").unwrap();
        assert_eq!(c.suites, vec![Suite::Mms, Suite::Harmonic]);
        let p = c.build_problem().unwrap();
        assert_eq!(p.phi().family(), Family::PowerShifted);
        assert!(p.load().source().is_some());
    }

    #[test]
    fn mesh_file_resolves_relative_to_config() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = Mesh::unit_square(2, RectangleSides::all(BoundaryTag::Dirichlet)).unwrap();
        std::fs::write(dir.path().join("m.txt"), mesh.to_text()).unwrap();
        std::fs::write(dir.path().join("c.cfg"), "mesh.file = m.txt\n").unwrap();
        let c = CaseConfig::load(dir.path().join("c.cfg")).unwrap();
        assert_eq!(c.build_mesh().unwrap().n_nodes(), 9);
    }
}
