//! Certification of quantum observable sets from contextuality witnesses.
//!
//! The crate covers the whole pipeline: the catalog of state-independent
//! contextuality sets, their orthogonality graphs and exact combinatorics, the
//! semidefinite programs behind the robustness thresholds, the alignment that
//! recovers a realization up to unitary or antiunitary equivalence, a
//! sequential-measurement simulator, the certifier, and the Kochen-Specker game.

pub mod catalog;
pub mod certify;
pub mod constructor;
pub mod equiv;
pub mod graphcore;
pub mod ksgame;
pub mod kscolor;
pub mod qcore;
pub mod sdpsolve;
pub mod simulate;
pub mod witness;

pub use kscert_sdp as sdp;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("outcome impossible (probability {prob:.3e})")]
    OutcomeImpossible { prob: f64 },
    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },
    #[error("unknown set {0:?}")]
    UnknownSet(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("pair ({0}, {1}) is an edge")]
    PairIsEdge(usize, usize),
    #[error("set is not complete: {0}")]
    NotComplete(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("bisection bracket failure: {0}")]
    Bracket(String),
    #[error("alignment failed: {0}")]
    Alignment(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("missing witness term: {0}")]
    MissingTerm(String),
    #[error(transparent)]
    Sdp(#[from] kscert_sdp::SdpError),
}

pub type Result<T> = std::result::Result<T, Error>;
