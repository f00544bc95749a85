use super::matrix::Matrix;
use super::real::Real;
use crate::error::{Error, Result};

/// Plane rotation acting on rows `i < j`. Applied to a pair `(x_i, x_j)` it
/// produces `(c·x_i − s·x_j, s·x_i + c·x_j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GivensRotation<T: Real = f64> {
    pub c: T,
    pub s: T,
    pub i: usize,
    pub j: usize,
}

/// Rotation zeroing `b` against `a`: `[c −s; s c]·[a; b] = [r; 0]` with `r > 0`.
pub fn givens<T: Real>(a: T, b: T) -> Result<(T, T, T)> {
    if a == T::zero() && b == T::zero() {
        return Err(Error::Domain("givens rotation of a zero vector".into()));
    }
    if b == T::zero() {
        return Ok((a.signum(), T::zero(), a.abs()));
    }
    if a == T::zero() {
        return Ok((T::zero(), -b.signum(), b.abs()));
    }
    let r = a.hypot(b);
    Ok((a / r, -b / r, r))
}

impl<T: Real> GivensRotation<T> {
    pub fn new(a: T, b: T, i: usize, j: usize) -> Result<(Self, T)> {
        if i >= j {
            return Err(Error::InvalidArgument(format!("rotation rows {i} >= {j}")));
        }
        let (c, s, r) = givens(a, b)?;
        Ok((Self { c, s, i, j }, r))
    }

    #[inline]
    pub fn apply_pair(&self, x: T, y: T) -> (T, T) {
        (self.c * x - self.s * y, self.s * x + self.c * y)
    }

    /// Rotates rows `i, j` of `m` over columns `c0..c1`.
    pub fn apply_rows(&self, m: &mut Matrix<T>, c0: usize, c1: usize) {
        for col in c0..c1 {
            let (x, y) = self.apply_pair(m[(self.i, col)], m[(self.j, col)]);
            m[(self.i, col)] = x;
            m[(self.j, col)] = y;
        }
    }

    /// Right-multiplies columns `i, j` of `m` by the transpose rotation over rows `r0..r1`,
    /// so that accumulating `Q ← Q·G'` keeps `Q·(G·M) = M`.
    pub fn apply_cols_transposed(&self, m: &mut Matrix<T>, r0: usize, r1: usize) {
        for row in r0..r1 {
            let x = m[(row, self.i)];
            let y = m[(row, self.j)];
            m[(row, self.i)] = self.c * x - self.s * y;
            m[(row, self.j)] = self.s * x + self.c * y;
        }
    }
}
