use super::matrix::Matrix;
use super::real::{vec_ops, Real};
use crate::error::{Error, Result};

/// Economy SVD `S = U·diag(sigma)·V'` with `min(rows, cols)` singular values.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors<T: Real = f64> {
    pub u: Matrix<T>,
    pub sigma: Vec<T>,
    pub v: Matrix<T>,
}

impl<T: Real> SvdFactors<T> {
    pub fn reconstruct(&self) -> Matrix<T> {
        let mut us = self.u.clone();
        for (j, &s) in self.sigma.iter().enumerate() {
            for x in us.col_mut(j) {
                *x *= s;
            }
        }
        us.matmul(&self.v.transpose()).expect("consistent factors")
    }
}

const MAX_SWEEPS: usize = 80;

/// One-sided Jacobi SVD. Singular values are sorted nonincreasing and each
/// right singular vector has its largest-magnitude entry positive (lowest
/// index among equal magnitudes).
pub fn svd_econ<T: Real>(s: &Matrix<T>) -> SvdFactors<T> {
    if s.rows() < s.cols() {
        let t = svd_econ(&s.transpose());
        let mut f = SvdFactors {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        };
        fix_signs(&mut f);
        return f;
    }
    let (m, n) = s.shape();
    let mut a = s.clone();
    let mut v = Matrix::<T>::identity(n);
    let eps = T::epsilon();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = vec_ops::norm2_sq(a.col(p));
                let beta = vec_ops::norm2_sq(a.col(q));
                let gamma = vec_ops::dot(a.col(p), a.col(q));
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let sn = c * t;
                rotate_cols(&mut a, p, q, c, sn);
                rotate_cols(&mut v, p, q, c, sn);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma: Vec<T> = (0..n).map(|j| vec_ops::norm2(a.col(j))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j)));
    let smax = order.first().map_or(T::zero(), |&i| sigma[i]);
    let tiny = smax * eps * T::lit(m.max(n) as f64);

    let mut ucols = Vec::with_capacity(n);
    let mut vcols = Vec::with_capacity(n);
    let mut sorted = Vec::with_capacity(n);
    let mut keep = Vec::with_capacity(n);
    for &j in &order {
        let sj = sigma[j];
        vcols.push(v.col(j).to_vec());
        sorted.push(sj);
        if sj > tiny && sj > T::zero() {
            ucols.push(vec_ops::scale(T::one() / sj, a.col(j)));
            keep.push(true);
        } else {
            ucols.push(vec![T::zero(); m]);
            keep.push(false);
        }
    }
    sigma = sorted;
    let mut u = Matrix::from_columns(m, &ucols).expect("shape");
    fill_missing_columns(&mut u, &keep);
    let v = Matrix::from_columns(n, &vcols).expect("shape");
    let mut f = SvdFactors { u, sigma, v };
    fix_signs(&mut f);
    f
}

fn rotate_cols<T: Real>(m: &mut Matrix<T>, p: usize, q: usize, c: T, s: T) {
    for i in 0..m.rows() {
        let x = m[(i, p)];
        let y = m[(i, q)];
        m[(i, p)] = c * x - s * y;
        m[(i, q)] = s * x + c * y;
    }
}

fn fix_signs<T: Real>(f: &mut SvdFactors<T>) {
    for j in 0..f.v.cols() {
        let col = f.v.col(j);
        let mut best = 0;
        for (i, &x) in col.iter().enumerate() {
            if x.abs() > col[best].abs() {
                best = i;
            }
        }
        if col.get(best).is_some_and(|&x| x < T::zero()) {
            for x in f.v.col_mut(j) {
                *x = -*x;
            }
            for x in f.u.col_mut(j) {
                *x = -*x;
            }
        }
    }
}

/// Replaces columns flagged `false` with unit vectors orthogonal to all others.
fn fill_missing_columns<T: Real>(u: &mut Matrix<T>, keep: &[bool]) {
    let m = u.rows();
    let mut basis: Vec<Vec<T>> = (0..u.cols()).filter(|&j| keep[j]).map(|j| u.col(j).to_vec()).collect();
    let mut candidate = 0;
    for j in 0..u.cols() {
        if keep[j] {
            continue;
        }
        while candidate < m {
            let mut e = vec![T::zero(); m];
            e[candidate] = T::one();
            candidate += 1;
            if let Some(w) = orthogonalize(&e, &basis) {
                u.col_mut(j).copy_from_slice(&w);
                basis.push(w);
                break;
            }
        }
    }
}

fn orthogonalize<T: Real>(x: &[T], basis: &[Vec<T>]) -> Option<Vec<T>> {
    let mut w = x.to_vec();
    for _ in 0..2 {
        for b in basis {
            let d = vec_ops::dot(b, &w);
            vec_ops::axpy(-d, b, &mut w);
        }
    }
    let nw = vec_ops::norm2(&w);
    if nw > T::lit(1e-3) {
        Some(vec_ops::scale(T::one() / nw, &w))
    } else {
        None
    }
}

/// Extends `m` (orthonormal columns) to `target` orthonormal columns with
/// Gram–Schmidt on canonical directions, lowest index first.
pub fn complete_orthonormal_columns<T: Real>(m: &Matrix<T>, target: usize) -> Result<Matrix<T>> {
    if target > m.rows() {
        return Err(Error::InvalidArgument(format!(
            "cannot fit {target} orthonormal columns in dimension {}",
            m.rows()
        )));
    }
    let mut cols: Vec<Vec<T>> = (0..m.cols().min(target)).map(|j| m.col(j).to_vec()).collect();
    let mut candidate = 0;
    while cols.len() < target && candidate < m.rows() {
        let mut e = vec![T::zero(); m.rows()];
        e[candidate] = T::one();
        candidate += 1;
        if let Some(w) = orthogonalize(&e, &cols) {
            cols.push(w);
        }
    }
    Matrix::from_columns(m.rows(), &cols)
}

/// Generalized condition number `σ_max / σ_min⁺`.
pub fn cond<T: Real>(m: &Matrix<T>) -> Result<T> {
    if m.is_empty() || m.max_abs() == T::zero() {
        return Err(Error::Domain("condition number of a zero matrix".into()));
    }
    let f = svd_econ(m);
    let smax = f.sigma[0];
    let tiny = smax * T::epsilon() * T::lit(m.rows().max(m.cols()) as f64);
    let smin = f
        .sigma
        .iter()
        .copied()
        .filter(|&s| s > tiny)
        .fold(smax, T::min);
    Ok(smax / smin)
}
