use super::matrix::Matrix;
use super::real::Real;
use crate::error::{dim_check, Error, Result};

fn check<T: Real>(r: &Matrix<T>, rhs: &[T]) -> Result<()> {
    dim_check(r.rows() == r.cols() && r.rows() == rhs.len(), || {
        format!("{}x{} triangular system with rhs of length {}", r.rows(), r.cols(), rhs.len())
    })?;
    if let Some(i) = (0..r.rows()).find(|&i| r[(i, i)] == T::zero()) {
        return Err(Error::Singular(format!("zero diagonal entry at {i}")));
    }
    Ok(())
}

/// Back substitution for `R x = rhs`, `R` upper triangular.
pub fn solve_upper_tri<T: Real>(r: &Matrix<T>, rhs: &[T]) -> Result<Vec<T>> {
    check(r, rhs)?;
    let n = rhs.len();
    let mut x = rhs.to_vec();
    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in i + 1..n {
            acc -= r[(i, j)] * x[j];
        }
        x[i] = acc / r[(i, i)];
    }
    Ok(x)
}

/// Forward substitution for `L x = rhs`, `L` lower triangular.
pub fn solve_lower_tri<T: Real>(l: &Matrix<T>, rhs: &[T]) -> Result<Vec<T>> {
    check(l, rhs)?;
    let n = rhs.len();
    let mut x = rhs.to_vec();
    for i in 0..n {
        let mut acc = x[i];
        for j in 0..i {
            acc -= l[(i, j)] * x[j];
        }
        x[i] = acc / l[(i, i)];
    }
    Ok(x)
}

/// Forward substitution for `R' x = rhs` without forming the transpose.
pub fn solve_upper_tri_transposed<T: Real>(r: &Matrix<T>, rhs: &[T]) -> Result<Vec<T>> {
    check(r, rhs)?;
    let n = rhs.len();
    let mut x = rhs.to_vec();
    for i in 0..n {
        let col = r.col(i);
        let mut acc = x[i];
        for j in 0..i {
            acc -= col[j] * x[j];
        }
        x[i] = acc / col[i];
    }
    Ok(x)
}

/// Solves `R X = B` column by column.
pub fn solve_upper_tri_mat<T: Real>(r: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    let cols: Vec<Vec<T>> = (0..b.cols())
        .map(|j| solve_upper_tri(r, b.col(j)))
        .collect::<Result<_>>()?;
    Matrix::from_columns(b.rows(), &cols)
}

/// Solves `R' X = B` column by column.
pub fn solve_upper_tri_transposed_mat<T: Real>(r: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    let cols: Vec<Vec<T>> = (0..b.cols())
        .map(|j| solve_upper_tri_transposed(r, b.col(j)))
        .collect::<Result<_>>()?;
    Matrix::from_columns(b.rows(), &cols)
}
