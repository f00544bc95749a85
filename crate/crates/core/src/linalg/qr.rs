use super::givens::GivensRotation;
use super::matrix::Matrix;
use super::real::{vec_ops, Real};
use crate::error::Result;

/// `M = Q·R` with `Q` square orthogonal and `R` upper trapezoidal.
#[derive(Debug, Clone, PartialEq)]
pub struct QrFactors<T: Real = f64> {
    pub q: Matrix<T>,
    pub r: Matrix<T>,
    /// Flops spent on rotation applications (6 per rotated pair).
    pub flops: u64,
}

impl<T: Real> QrFactors<T> {
    /// Leading `k` columns of `Q`.
    pub fn q1(&self, k: usize) -> Matrix<T> {
        self.q.columns(0, k)
    }

    /// Trailing columns of `Q` after the first `k`.
    pub fn q2(&self, k: usize) -> Matrix<T> {
        self.q.columns(k, self.q.cols() - k)
    }

    /// Leading `k×k` block of `R`.
    pub fn r1(&self, k: usize) -> Matrix<T> {
        self.r.block(0, 0, k, k)
    }

    /// Economy factors `(Q1, R1)` with `min(rows, cols)` columns.
    pub fn economy(&self) -> (Matrix<T>, Matrix<T>) {
        let k = self.r.rows().min(self.r.cols());
        (self.q1(k), self.r.block(0, 0, k, self.r.cols()))
    }
}

/// Full QR by Givens rotations on adjacent rows, bottom-up in each column,
/// accumulating `Q` explicitly. The diagonal of `R` is returned nonnegative.
pub fn qr_full<T: Real>(m: &Matrix<T>) -> QrFactors<T> {
    let (rows, cols) = m.shape();
    let mut r = m.clone();
    let mut q = Matrix::identity(rows);
    let mut flops = 0u64;
    for j in 0..cols.min(rows) {
        for i in (j + 1..rows).rev() {
            let a = r[(i - 1, j)];
            let b = r[(i, j)];
            let (c, s) = if b == T::zero() {
                (T::one(), T::zero())
            } else {
                let (c, s, _) = super::givens::givens(a, b).expect("b is nonzero");
                (c, s)
            };
            let g = GivensRotation { c, s, i: i - 1, j: i };
            g.apply_rows(&mut r, j, cols);
            r[(i, j)] = T::zero();
            g.apply_cols_transposed(&mut q, 0, rows);
            flops += 6 * ((cols - j) + rows) as u64;
        }
    }
    normalize_signs(&mut q, &mut r);
    QrFactors { q, r, flops }
}

/// Flips rows of `R` and matching columns of `Q` so that `diag(R) ≥ 0`.
pub fn normalize_signs<T: Real>(q: &mut Matrix<T>, r: &mut Matrix<T>) {
    let k = r.rows().min(r.cols());
    for i in 0..k {
        if r[(i, i)] < T::zero() {
            for j in 0..r.cols() {
                r[(i, j)] = -r[(i, j)];
            }
            for v in q.col_mut(i) {
                *v = -*v;
            }
        }
    }
}

/// Result of a column-pivoted QR: `M·P = Q·R`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankRevealingQr<T: Real = f64> {
    pub factors: QrFactors<T>,
    /// `perm[k]` is the original column placed at position `k`.
    pub perm: Vec<usize>,
    pub rank: usize,
}

impl<T: Real> RankRevealingQr<T> {
    /// Permutation matrix `P` with `M·P` the pivoted matrix.
    pub fn permutation_matrix(&self) -> Matrix<T> {
        let n = self.perm.len();
        let mut p = Matrix::zeros(n, n);
        for (k, &j) in self.perm.iter().enumerate() {
            p[(j, k)] = T::one();
        }
        p
    }
}

/// Householder QR with column pivoting (largest remaining column norm,
/// lowest index on ties). The rank is the smallest `k` for which the
/// trailing block `R22 = R[k.., k..]` has Frobenius norm at most `eps`.
pub fn qr_rank_revealing<T: Real>(m: &Matrix<T>, eps: T) -> RankRevealingQr<T> {
    let (rows, cols) = m.shape();
    let mut r = m.clone();
    let mut q = Matrix::identity(rows);
    let mut perm: Vec<usize> = (0..cols).collect();
    let steps = rows.min(cols);
    let mut flops = 0u64;

    for k in 0..steps {
        let mut best = k;
        let mut best_norm = T::neg_infinity();
        for j in k..cols {
            let nj = vec_ops::norm2(&r.col(j)[k..]);
            if nj > best_norm {
                best_norm = nj;
                best = j;
            }
        }
        r.swap_cols(k, best);
        perm.swap(k, best);

        let x: Vec<T> = r.col(k)[k..].to_vec();
        let alpha = vec_ops::norm2(&x);
        if alpha == T::zero() {
            continue;
        }
        // v = x + sign(x0)·‖x‖·e1, reflector H = I − 2vv'/v'v
        let mut v = x;
        let sign = if v[0] >= T::zero() { T::one() } else { -T::one() };
        v[0] += sign * alpha;
        let vtv = vec_ops::dot(&v, &v);
        let two = T::lit(2.0);
        for j in k..cols {
            let col = &mut r.col_mut(j)[k..];
            let f = two * vec_ops::dot(&v, col) / vtv;
            vec_ops::axpy(-f, &v, col);
        }
        for i in 0..rows {
            let mut d = T::zero();
            for (t, &vt) in v.iter().enumerate() {
                d += q[(i, k + t)] * vt;
            }
            let f = two * d / vtv;
            for (t, &vt) in v.iter().enumerate() {
                q[(i, k + t)] -= f * vt;
            }
        }
        for i in k + 1..rows {
            r[(i, k)] = T::zero();
        }
        flops += (4 * (rows - k) * (cols - k + rows)) as u64;
    }
    normalize_signs(&mut q, &mut r);

    let mut rank = steps;
    for k in 0..=steps {
        let mut ss = T::zero();
        for j in k..cols {
            for i in k..rows {
                ss += r[(i, j)] * r[(i, j)];
            }
        }
        if ss.sqrt() <= eps {
            rank = k;
            break;
        }
    }
    RankRevealingQr {
        factors: QrFactors { q, r, flops },
        perm,
        rank,
    }
}

/// Householder QR with `Q` kept implicitly as reflectors. Used for
/// least-squares solves where forming `Q` would waste work.
#[derive(Debug, Clone)]
pub struct HouseholderQr<T: Real = f64> {
    rows: usize,
    cols: usize,
    // reflector k is I − beta_k v_k v_k' acting on entries k..
    vs: Vec<Vec<T>>,
    betas: Vec<T>,
    r: Matrix<T>,
}

impl<T: Real> HouseholderQr<T> {
    pub fn new(m: &Matrix<T>) -> Self {
        let (rows, cols) = m.shape();
        let mut a = m.clone();
        let steps = rows.min(cols);
        let mut vs = Vec::with_capacity(steps);
        let mut betas = Vec::with_capacity(steps);
        for k in 0..steps {
            let x = &a.col(k)[k..];
            let alpha = vec_ops::norm2(x);
            let mut v = x.to_vec();
            if alpha == T::zero() {
                vs.push(v);
                betas.push(T::zero());
                continue;
            }
            let sign = if v[0] >= T::zero() { T::one() } else { -T::one() };
            v[0] += sign * alpha;
            let vtv = vec_ops::dot(&v, &v);
            let beta = T::lit(2.0) / vtv;
            for j in k..cols {
                let col = &mut a.col_mut(j)[k..];
                let f = beta * vec_ops::dot(&v, col);
                vec_ops::axpy(-f, &v, col);
            }
            for i in k + 1..rows {
                a[(i, k)] = T::zero();
            }
            vs.push(v);
            betas.push(beta);
        }
        let r = a.block(0, 0, steps, cols);
        Self { rows, cols, vs, betas, r }
    }

    /// Upper-trapezoidal factor, `min(rows, cols) × cols`.
    pub fn r(&self) -> &Matrix<T> {
        &self.r
    }

    /// `Q'·y`
    pub fn apply_qt(&self, y: &[T]) -> Result<Vec<T>> {
        crate::error::dim_check(y.len() == self.rows, || {
            format!("Q' of order {} times vector of length {}", self.rows, y.len())
        })?;
        let mut x = y.to_vec();
        for (k, (v, &beta)) in self.vs.iter().zip(&self.betas).enumerate() {
            let seg = &mut x[k..];
            let f = beta * vec_ops::dot(v, seg);
            vec_ops::axpy(-f, v, seg);
        }
        Ok(x)
    }

    /// `Q·y`
    pub fn apply_q(&self, y: &[T]) -> Result<Vec<T>> {
        crate::error::dim_check(y.len() == self.rows, || {
            format!("Q of order {} times vector of length {}", self.rows, y.len())
        })?;
        let mut x = y.to_vec();
        for (k, (v, &beta)) in self.vs.iter().zip(&self.betas).enumerate().rev() {
            let seg = &mut x[k..];
            let f = beta * vec_ops::dot(v, seg);
            vec_ops::axpy(-f, v, seg);
        }
        Ok(x)
    }

    /// First `min(rows, cols)` columns of `Q`.
    pub fn thin_q(&self) -> Matrix<T> {
        let k = self.rows.min(self.cols);
        let cols: Vec<Vec<T>> = (0..k)
            .map(|j| {
                let mut e = vec![T::zero(); self.rows];
                e[j] = T::one();
                self.apply_q(&e).expect("length matches")
            })
            .collect();
        Matrix::from_columns(self.rows, &cols).expect("shape")
    }

    /// True when some `|R_ii|` falls below `rel · max_j |R_jj|` or the matrix is wide.
    pub fn is_rank_deficient(&self, rel: T) -> bool {
        if self.rows < self.cols {
            return true;
        }
        let d = self.r.diag();
        let dmax = vec_ops::max_abs(&d);
        dmax == T::zero() || d.iter().any(|x| x.abs() <= rel * dmax)
    }

    /// `argmin ‖M x − y‖` for full column rank.
    pub fn solve_ls(&self, y: &[T]) -> Result<Vec<T>> {
        let qty = self.apply_qt(y)?;
        let n = self.cols;
        if self.rows < n {
            return Err(crate::error::Error::Singular("underdetermined least squares".into()));
        }
        super::tri::solve_upper_tri(&self.r.block(0, 0, n, n), &qty[..n])
    }

    /// Solves `(M'M) x = rhs` as `R'R x = rhs`.
    pub fn solve_normal(&self, rhs: &[T]) -> Result<Vec<T>> {
        let n = self.cols;
        if self.rows < n {
            return Err(crate::error::Error::Singular("normal matrix is rank deficient".into()));
        }
        let r = self.r.block(0, 0, n, n);
        let w = super::tri::solve_upper_tri_transposed(&r, rhs)?;
        super::tri::solve_upper_tri(&r, &w)
    }
}

/// Least-squares solve `min ‖M x − y‖` for full-column-rank `M`.
pub fn lstsq<T: Real>(m: &Matrix<T>, y: &[T]) -> Result<Vec<T>> {
    HouseholderQr::new(m).solve_ls(y)
}
