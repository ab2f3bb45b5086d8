use std::path::PathBuf;

use thiserror::Error;

use crate::minimize::TraceRow;

pub type Result<T> = std::result::Result<T, WallError>;

#[derive(Debug, Error)]
pub enum WallError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("vector {0:?} is not a unit vector")]
    NonUnitVector([f64; 3]),

    #[error("field contains a non-finite value at node (i1={i1}, i3={i3})")]
    NonFiniteField { i1: usize, i3: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("outside hypothesis: {0}")]
    OutsideHypothesis(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("field is not admissible: {0}")]
    NotAdmissible(String),

    #[error("relaxation aborted at iteration {iteration}: non-finite energy")]
    RelaxAborted {
        iteration: usize,
        trace: Box<Vec<TraceRow>>,
    },

    #[error("no sign change of E_bloch - E_neel on [{a}, {b}]: f(a)={fa:.6e}, f(b)={fb:.6e}")]
    NoSignChange { a: f64, b: f64, fa: f64, fb: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("parse error in {path}: line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl WallError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        WallError::Io {
            path: path.into(),
            source,
        }
    }
}
