use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("mesh parse error at line {line}: {msg}")]
    MeshParse { line: usize, msg: String },

    #[error("element {element} is not counterclockwise (signed area {area:e})")]
    Orientation { element: usize, area: f64 },

    #[error("boundary edge ({0}, {1}) carries no Dirichlet/Neumann tag")]
    UntaggedEdge(usize, usize),

    #[error("size mismatch: {0}")]
    Mismatch(String),

    #[error("load tensor on element {element} is not symmetric (|F12 - F21| = {defect:e})")]
    AsymmetricLoad { element: usize, defect: f64 },

    #[error("Dirichlet constraint violated at dof {dof} (|u - u0| = {defect:e})")]
    ConstraintViolation { dof: usize, defect: f64 },

    #[error(
        "line search failed at Newton iteration {iteration}: energy {energy:e}, directional slope {slope:e}; {reason}"
    )]
    LineSearch {
        iteration: usize,
        energy: f64,
        slope: f64,
        reason: String,
        /// Free-dof values of the iterate at which the search failed.
        iterate: Vec<f64>,
    },

    #[error("expression error at column {column}: {msg}")]
    Expression { column: usize, msg: String },

    #[error("config error at line {line} (key `{key}`): {msg}")]
    Config { line: usize, key: String, msg: String },

    #[error("unknown case id `{0}`")]
    UnknownCase(String),

    #[error("polynomial degree {0} exceeds the supported maximum of 3")]
    DegreeOverflow(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
