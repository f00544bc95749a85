use serde::Serialize;

use crate::error::{dim_check, Error, Result};
use crate::linalg::{normalize_signs, GivensRotation, Matrix, Real};

/// Flop counts split by phase of a condensing routine.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FlopCounter {
    /// Rotations applied to `R`.
    pub r_phase: u64,
    /// Rotations accumulated into `Q`.
    pub q_phase: u64,
    /// Triangular substitution.
    pub substitution: u64,
    /// Matrix products and vector updates forming the reduced problem.
    pub products: u64,
}

impl FlopCounter {
    pub fn total(&self) -> u64 {
        self.r_phase + self.q_phase + self.substitution + self.products
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QrMpcFactors<T: Real = f64> {
    pub q: Matrix<T>,
    pub r: Matrix<T>,
    pub flops: FlopCounter,
    pub rotations: usize,
    pub swaps: usize,
    pub skipped: usize,
}

impl<T: Real> QrMpcFactors<T> {
    pub fn n_e(&self) -> usize {
        self.r.cols()
    }

    pub fn q1(&self) -> Matrix<T> {
        self.q.columns(0, self.n_e())
    }

    pub fn q2(&self) -> Matrix<T> {
        self.q.columns(self.n_e(), self.q.cols() - self.n_e())
    }

    pub fn r1(&self) -> Matrix<T> {
        self.r.block(0, 0, self.n_e(), self.n_e())
    }
}

/// Rows of column `j` (0-based) of `C'` that may be nonzero: from the first
/// entry of `x_k` through the last entry of `x_{k+1}`.
fn band_rows(j: usize, n_x: usize, n_u: usize) -> (usize, usize) {
    let w = n_x + n_u;
    let k = j / n_x;
    let lo = if k == 0 { 0 } else { (k - 1) * w + n_u };
    (lo, (k + 1) * w)
}

pub fn default_eps0<T: Real>(ct: &Matrix<T>) -> T {
    T::lit(1e-14) * ct.max_abs()
}

/// Structured Givens QR of the transposed dynamics matrix `C'`
/// (`ℓ × T n_x`). Only the band touched by each rotation is updated. When the
/// entry to annihilate is at most `eps0` the rotation is skipped, and when the
/// pivot is at most `eps0` a signed swap replaces it without arithmetic.
/// Finally rows of `R` and columns of `Q` are sign-normalized so that
/// `diag(R) ≥ 0`.
pub fn qr_mpc<T: Real>(ct: &Matrix<T>, n_x: usize, n_u: usize, horizon: usize, eps0: Option<T>) -> Result<QrMpcFactors<T>> {
    let w = n_x + n_u;
    let ell = horizon * w;
    let ne = horizon * n_x;
    if n_x == 0 || n_u == 0 || horizon == 0 {
        return Err(Error::InvalidArgument("qr_mpc needs positive n_x, n_u and T".into()));
    }
    dim_check(ct.shape() == (ell, ne), || format!("C' is {:?}, expected {ell}x{ne}", ct.shape()))?;
    for j in 0..ne {
        let (lo, hi) = band_rows(j, n_x, n_u);
        let col = ct.col(j);
        if col[..lo].iter().chain(&col[hi..]).any(|&x| x != T::zero()) {
            return Err(Error::Structure(format!("column {j} of C' has entries outside the dynamics band")));
        }
    }
    let eps0 = eps0.unwrap_or_else(|| default_eps0(ct));
    if eps0 < T::zero() {
        return Err(Error::InvalidArgument("eps0 must be nonnegative".into()));
    }

    let mut r = ct.clone();
    let mut q = Matrix::<T>::identity(ell);
    let mut flops = FlopCounter::default();
    let (mut rotations, mut swaps, mut skipped) = (0, 0, 0);
    // 1-based loop indices
    for j in 1..=ne {
        let k = (j - 1) / n_x;
        let r1 = j + n_u * (k + 1);
        let r2 = n_x * (k + 2).min(horizon);
        for i in (j + 1..=r1).rev() {
            let q1 = 1 + w * ((i - j - 1) / n_u);
            let a = r[(i - 2, j - 1)];
            let b = r[(i - 1, j - 1)];
            if b.abs() <= eps0 {
                skipped += 1;
                continue;
            }
            if a.abs() <= eps0 {
                let swap = GivensRotation { c: T::zero(), s: T::one(), i: i - 2, j: i - 1 };
                swap.apply_rows(&mut r, j - 1, r2);
                swap.apply_cols_transposed(&mut q, q1 - 1, r1);
                r[(i - 1, j - 1)] = T::zero();
                swaps += 1;
                continue;
            }
            let (g, _) = GivensRotation::new(a, b, i - 2, i - 1)?;
            g.apply_rows(&mut r, j - 1, r2);
            r[(i - 1, j - 1)] = T::zero();
            g.apply_cols_transposed(&mut q, q1 - 1, r1);
            flops.r_phase += 6 * (r2 - j + 1) as u64;
            flops.q_phase += 6 * (r1 - q1 + 1) as u64;
            rotations += 1;
        }
    }
    normalize_signs(&mut q, &mut r);
    Ok(QrMpcFactors { q, r, flops, rotations, swaps, skipped })
}

/// Whether entry `(row, col)` of `Q = [Q1 Q2]` may be nonzero.
pub fn q_pattern(row: usize, col: usize, n_x: usize, n_u: usize, horizon: usize) -> bool {
    let ne = horizon * n_x;
    let w = n_x + n_u;
    if col < ne {
        let j = col + 1;
        let k = col / n_x;
        row < j + n_u * (k + 1)
    } else {
        let c = col - ne;
        let block = c / n_u;
        let t = c % n_u;
        row >= block * w + t
    }
}

/// Whether entry `(row, col)` of `R` may be nonzero: upper-triangular blocks on
/// the diagonal and one dense block to their right.
pub fn r_pattern(row: usize, col: usize, n_x: usize, horizon: usize) -> bool {
    row < horizon * n_x && col >= row && col / n_x <= row / n_x + 1
}

/// Largest magnitude found outside the structured patterns of `Q` and `R`.
pub fn pattern_violation<T: Real>(f: &QrMpcFactors<T>, n_x: usize, n_u: usize, horizon: usize) -> T {
    let mut worst = T::zero();
    for col in 0..f.q.cols() {
        for row in 0..f.q.rows() {
            if !q_pattern(row, col, n_x, n_u, horizon) {
                worst = worst.max(f.q[(row, col)].abs());
            }
        }
    }
    for col in 0..f.r.cols() {
        for row in 0..f.r.rows() {
            if !r_pattern(row, col, n_x, horizon) {
                worst = worst.max(f.r[(row, col)].abs());
            }
        }
    }
    worst
}
