//! Dense kernels: Givens rotations, QR, SVD, triangular solves.

mod givens;
mod matrix;
mod qr;
mod real;
mod svd;
mod tri;

pub use givens::{givens, GivensRotation};
pub use matrix::Matrix;
pub use qr::{lstsq, normalize_signs, HouseholderQr, qr_full, qr_rank_revealing, QrFactors, RankRevealingQr};
pub use real::{vec_ops, Real};
pub use svd::{complete_orthonormal_columns, cond, svd_econ, SvdFactors};
pub use tri::{
    solve_lower_tri, solve_upper_tri, solve_upper_tri_mat, solve_upper_tri_transposed,
    solve_upper_tri_transposed_mat,
};
