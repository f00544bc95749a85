//! ADMM, an exact reference solver, and solution-quality metrics.

mod admm;
mod lsi;
mod quality;

pub use admm::{admm_solve, AdmmResult, AdmmSettings};
pub use lsi::{nnls, solve_lsi, LsiSolution};
pub use quality::{mu_f, quality, shifted_geomean, QualityMetrics};
