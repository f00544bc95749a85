use super::instance::PClsInstance;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Real};

/// Instance whose selected inequality rows are relaxed by grouped slacks:
/// `G z ≤ g + V_g ζ` with `Λ_ζ ζ` added to the residual.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftenedPcls<T: Real = f64> {
    pub base: PClsInstance<T>,
    pub rows: Vec<usize>,
    /// `n_i × n̄_ζ`, already multiplied by `E_ζ`.
    pub v_g: Matrix<T>,
    pub lambda_zeta: Matrix<T>,
    pub e_zeta: Matrix<T>,
}

/// Softens `rows` of `p` with `n_bar_zeta` slacks weighted by `weights`
/// (one weight per slack). Softened rows are split into contiguous groups,
/// one group per slack.
pub fn soften<T: Real>(p: &PClsInstance<T>, rows: &[usize], weights: &[T], n_bar_zeta: usize) -> Result<SoftenedPcls<T>> {
    p.validate()?;
    let n_zeta = rows.len();
    if n_zeta == 0 {
        return Err(Error::InvalidArgument("no rows selected for softening".into()));
    }
    if n_bar_zeta == 0 || n_bar_zeta > n_zeta {
        return Err(Error::InvalidArgument(format!(
            "{n_bar_zeta} slacks for {n_zeta} softened rows"
        )));
    }
    if weights.len() != n_bar_zeta || weights.iter().any(|&w| !(w > T::zero())) {
        return Err(Error::InvalidArgument("slack weights must be positive, one per slack".into()));
    }
    if let Some(&r) = rows.iter().find(|&&r| r >= p.n_i()) {
        return Err(Error::InvalidArgument(format!("row {r} out of {} inequalities", p.n_i())));
    }
    let mut sorted = rows.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != rows.len() {
        return Err(Error::InvalidArgument("duplicate softened rows".into()));
    }

    let mut v_full = Matrix::zeros(p.n_i(), n_zeta);
    let mut e_zeta = Matrix::zeros(n_zeta, n_bar_zeta);
    for (t, &r) in rows.iter().enumerate() {
        v_full[(r, t)] = T::one();
        e_zeta[(t, t * n_bar_zeta / n_zeta)] = T::one();
    }
    let v_g = v_full.matmul(&e_zeta)?;
    Ok(SoftenedPcls {
        base: p.clone(),
        rows: rows.to_vec(),
        v_g,
        lambda_zeta: Matrix::from_diag(weights),
        e_zeta,
    })
}

impl<T: Real> SoftenedPcls<T> {
    pub fn n_slack(&self) -> usize {
        self.v_g.cols()
    }

    /// Plain instance over `[z; ζ]`.
    pub fn extended(&self) -> PClsInstance<T> {
        let p = &self.base;
        let nz = self.n_slack();
        let ell = p.ell();
        let a = Matrix::block_diag(&[&p.a, &self.lambda_zeta]);
        let mut b = p.b.clone();
        b.extend(std::iter::repeat_n(T::zero(), nz));
        let c = Matrix::hstack(&[&p.c, &Matrix::zeros(p.n_e(), nz)]).expect("row counts agree");
        let g_mat = Matrix::hstack(&[&p.g_mat, &self.v_g.scale(-T::one())]).expect("row counts agree");
        debug_assert_eq!(a.cols(), ell + nz);
        PClsInstance {
            a,
            b,
            c,
            e: p.e.clone(),
            g_mat,
            g: p.g.clone(),
        }
    }
}
