//! Variable reduction for parametric constrained least-squares problems.
//!
//! Equality constraints are removed by a QR nullspace elimination, the free
//! variables are further compressed with SVD or K-SVD bases selected by neural
//! classifiers, and the reduced problems are solved with over-relaxed ADMM.
//! Model predictive control problems get a structured QR factorization with
//! exact flop accounting.
//!
//! ```
//! use pcls::pcls::{eliminate_equalities, PClsInstance};
//! use pcls::solve::solve_lsi;
//! use pcls::Matrix;
//!
//! let p = PClsInstance::new(
//!     Matrix::identity(3),
//!     vec![1.0, 2.0, 3.0],
//!     Matrix::from_rows(&[&[1.0, 1.0, 1.0]]),
//!     vec![1.0],
//!     Matrix::from_rows(&[&[1.0, 0.0, 0.0]]),
//!     vec![0.5],
//! )?;
//! let (elim, reduced) = eliminate_equalities(&p)?;
//! let s = solve_lsi(&reduced)?.s;
//! let z = elim.recover_z(&s)?;
//! assert!((z.iter().sum::<f64>() - 1.0).abs() < 1e-12);
//! assert!(z[0] <= 0.5 + 1e-12);
//! # Ok::<(), pcls::Error>(())
//! ```

pub mod bench;
pub mod classifier;
pub mod error;
pub mod linalg;
pub mod mpc;
pub mod pcls;
pub mod reduction;
pub mod solve;

pub use error::{Error, Result};
pub use linalg::Matrix;
