//! Dense semidefinite programming for problems with a few hundred rows and
//! PSD blocks of modest size.
//!
//! ```
//! use kscert_sdp::{solve, Coeff, SdpProblem, Sense, Status};
//!
//! // min t  s.t.  [[t, 1], [1, t]] is PSD
//! let mut p = SdpProblem::new(vec![2], Sense::Minimize);
//! p.objective = Coeff::entry(0, 0, 0, 1.0);
//! p.add_eq(Coeff::entry(0, 0, 1, 1.0), 1.0);
//! p.add_eq(Coeff::entry(0, 0, 0, 1.0).with(0, 1, 1, -1.0), 0.0);
//! let sol = solve(&p, 1e-8, 100).unwrap();
//! assert_eq!(sol.status, Status::Optimal);
//! assert!((sol.value - 1.0).abs() < 1e-6);
//! ```

mod problem;
mod sdpa;
mod solver;

pub use problem::{Coeff, Row, RowOrigin, SdpProblem, Sense, StandardForm, Term};
pub use sdpa::to_sdpa;
pub use solver::{
    solve, solve_with, verify_certificate, Certificate, Residuals, SdpSolution, Settings, Status,
};

#[derive(Debug, thiserror::Error)]
pub enum SdpError {
    #[error("malformed problem: {0}")]
    Malformed(String),
}
