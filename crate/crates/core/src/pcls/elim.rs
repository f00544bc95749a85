use super::instance::{PClsInstance, ReducedPcls, Transform};
use crate::error::{dim_check, Error, Result};
use crate::linalg::{
    qr_full, qr_rank_revealing, solve_upper_tri_transposed, vec_ops, HouseholderQr, Matrix, Real,
};

/// QR factors of `C'` and the particular solution `z̄ = Q1 s̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct EqElimination<T: Real = f64> {
    pub q1: Matrix<T>,
    pub q2: Matrix<T>,
    pub r1: Matrix<T>,
    pub s_bar: Vec<T>,
    pub z_bar: Vec<T>,
    /// Rank of `C` used for the split (`n_e` on the full-rank path).
    pub rank: usize,
}

impl<T: Real> EqElimination<T> {
    pub fn transform(&self) -> Transform<T> {
        Transform {
            z_mat: self.q2.clone(),
            z_off: self.z_bar.clone(),
        }
    }

    /// `z = Q2 s + z̄`
    pub fn recover_z(&self, s: &[T]) -> Result<Vec<T>> {
        Ok(vec_ops::add(&self.q2.matvec(s)?, &self.z_bar))
    }

    /// Number of free variables.
    pub fn n(&self) -> usize {
        self.q2.cols()
    }
}

/// Rank tolerance `‖C‖_F · ε · max(n_e, ℓ)`.
pub fn default_rank_eps<T: Real>(c: &Matrix<T>) -> T {
    c.norm_fro() * T::epsilon() * T::lit(c.rows().max(c.cols()).max(1) as f64)
}

/// Removes `Cz = e` through `C' = Q R`, assuming `C` has full row rank.
pub fn eliminate_equalities<T: Real>(p: &PClsInstance<T>) -> Result<(EqElimination<T>, ReducedPcls<T>)> {
    p.validate()?;
    let ell = p.ell();
    let n_e = p.n_e();
    if n_e > 0 {
        let rank = qr_rank_revealing(&p.c.transpose(), default_rank_eps(&p.c)).rank;
        if rank < n_e {
            return Err(Error::RankDeficient { rank, expected: n_e });
        }
    }
    let f = qr_full(&p.c.transpose());
    let q1 = f.q1(n_e);
    let q2 = f.q2(n_e);
    let r1 = f.r1(n_e);
    let s_bar = solve_upper_tri_transposed(&r1, &p.e)?;
    let z_bar = if n_e == 0 { vec![T::zero(); ell] } else { q1.matvec(&s_bar)? };
    let elim = EqElimination {
        q1,
        q2,
        r1,
        s_bar,
        z_bar,
        rank: n_e,
    };
    let reduced = elim.transform().reduce(p)?;
    Ok((elim, reduced))
}

/// Elimination through a column-pivoted QR `C'P = Q[R11 R12; 0 R22]`,
/// keeping only the numerically independent equalities.
pub fn eliminate_equalities_rank_deficient<T: Real>(
    p: &PClsInstance<T>,
    eps: T,
) -> Result<(EqElimination<T>, ReducedPcls<T>)> {
    p.validate()?;
    if !(eps > T::zero()) {
        return Err(Error::InvalidArgument("rank tolerance must be positive".into()));
    }
    let ell = p.ell();
    let rr = qr_rank_revealing(&p.c.transpose(), eps);
    let n3 = rr.rank;
    let q1 = rr.factors.q.columns(0, n3);
    let q2 = rr.factors.q.columns(n3, ell - n3);
    let r11 = rr.factors.r.block(0, 0, n3, n3);
    let pe: Vec<T> = rr.perm[..n3].iter().map(|&i| p.e[i]).collect();
    let s_bar = solve_upper_tri_transposed(&r11, &pe)?;
    let z_bar = if n3 == 0 { vec![T::zero(); ell] } else { q1.matvec(&s_bar)? };
    let resid = vec_ops::norm2(&vec_ops::sub(&p.c.matvec(&z_bar)?, &p.e));
    if resid > eps * T::one().max(vec_ops::norm2(&p.e)) {
        return Err(Error::Infeasible(format!(
            "equality residual {resid:e} after projection exceeds tolerance"
        )));
    }
    let elim = EqElimination {
        q1,
        q2,
        r1: r11,
        s_bar,
        z_bar,
        rank: n3,
    };
    let reduced = elim.transform().reduce(p)?;
    Ok((elim, reduced))
}

/// Per-row feasibility slack `1e−8 + 1e−8·|g_i|`.
pub fn feasibility_tol<T: Real>(g: T) -> T {
    T::lit(1e-8) + T::lit(1e-8) * g.abs()
}

pub fn is_feasible<T: Real>(g_mat: &Matrix<T>, g: &[T], s: &[T]) -> Result<bool> {
    let gs = g_mat.matvec(s)?;
    Ok(gs.iter().zip(g).all(|(&x, &gi)| x <= gi + feasibility_tol(gi)))
}

/// Least-squares minimizer ignoring inequalities and whether it satisfies them.
pub fn unconstrained_solution<T: Real>(r: &ReducedPcls<T>) -> Result<(Vec<T>, bool)> {
    let n = r.n();
    if n == 0 {
        return Ok((Vec::new(), is_feasible(&r.g_mat, &r.g, &[])?));
    }
    if r.a.rows() < n {
        return Err(Error::SingularHessian);
    }
    let h = HouseholderQr::new(&r.a);
    let rel = T::epsilon() * T::lit(r.a.rows().max(n) as f64);
    if h.is_rank_deficient(rel) {
        return Err(Error::SingularHessian);
    }
    let s = h.solve_ls(&r.b).map_err(|_| Error::SingularHessian)?;
    let feasible = is_feasible(&r.g_mat, &r.g, &s)?;
    Ok((s, feasible))
}

/// Elimination that keeps the leading `k` variables as free coordinates:
/// `z = Q̃2 s + z̄` with `s = [z_1; s_2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreservingElimination<T: Real = f64> {
    pub k: usize,
    pub q_bar: Matrix<T>,
    pub r_bar1: Matrix<T>,
    pub q2_tilde: Matrix<T>,
    pub z_bar: Vec<T>,
}

impl<T: Real> PreservingElimination<T> {
    pub fn transform(&self) -> Transform<T> {
        Transform {
            z_mat: self.q2_tilde.clone(),
            z_off: self.z_bar.clone(),
        }
    }

    pub fn recover_z(&self, s: &[T]) -> Result<Vec<T>> {
        self.transform().apply(s)
    }

    pub fn n(&self) -> usize {
        self.q2_tilde.cols()
    }
}

pub fn eliminate_preserving<T: Real>(
    p: &PClsInstance<T>,
    k: usize,
) -> Result<(PreservingElimination<T>, ReducedPcls<T>)> {
    p.validate()?;
    let ell = p.ell();
    let n_e = p.n_e();
    if k + n_e > ell {
        return Err(Error::InvalidArgument(format!(
            "cannot preserve {k} of {ell} variables under {n_e} equalities"
        )));
    }
    let c1 = p.c.columns(0, k);
    let c2 = p.c.columns(k, ell - k);
    if n_e > 0 {
        let rank = qr_rank_revealing(&c2.transpose(), default_rank_eps(&c2)).rank;
        if rank < n_e {
            return Err(Error::RankDeficient { rank, expected: n_e });
        }
    }
    let f = qr_full(&c2.transpose());
    let qb1 = f.q1(n_e);
    let qb2 = f.q2(n_e);
    let rb1 = f.r1(n_e);

    // W = (R̄1')⁻¹ C1, columns solved one at a time
    let w_cols: Vec<Vec<T>> = (0..k)
        .map(|j| solve_upper_tri_transposed(&rb1, c1.col(j)))
        .collect::<Result<_>>()?;
    let w = Matrix::from_columns(n_e, &w_cols)?;
    let lower_left = qb1.matmul(&w)?.scale(-T::one());

    let ncols = ell - n_e;
    let mut q2t = Matrix::zeros(ell, ncols);
    q2t.set_block(0, 0, &Matrix::identity(k));
    q2t.set_block(k, 0, &lower_left);
    q2t.set_block(k, k, &qb2);

    let mut z_bar = vec![T::zero(); ell];
    if n_e > 0 {
        let y = qb1.matvec(&solve_upper_tri_transposed(&rb1, &p.e)?)?;
        z_bar[k..].copy_from_slice(&y);
    }
    let elim = PreservingElimination {
        k,
        q_bar: f.q,
        r_bar1: rb1,
        q2_tilde: q2t,
        z_bar,
    };
    let reduced = elim.transform().reduce(p)?;
    Ok((elim, reduced))
}

/// Multiplies the first `k` entries of every sample by `tau`.
pub fn tau_scale_samples(samples: &[Vec<f64>], k: usize, tau: f64) -> Result<Vec<Vec<f64>>> {
    check_tau(tau)?;
    samples
        .iter()
        .map(|s| {
            dim_check(k <= s.len(), || format!("k = {k} exceeds sample length {}", s.len()))?;
            let mut out = s.clone();
            out[..k].iter_mut().for_each(|x| *x *= tau);
            Ok(out)
        })
        .collect()
}

/// Divides the first `k` entries of an offset by `tau`.
pub fn tau_unscale_offset(phi0: &[f64], k: usize, tau: f64) -> Result<Vec<f64>> {
    check_tau(tau)?;
    dim_check(k <= phi0.len(), || format!("k = {k} exceeds offset length {}", phi0.len()))?;
    let mut out = phi0.to_vec();
    out[..k].iter_mut().for_each(|x| *x /= tau);
    Ok(out)
}

fn check_tau(tau: f64) -> Result<()> {
    if tau >= 1.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("tau = {tau} must be at least 1")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(c: Matrix, e: Vec<f64>) -> PClsInstance {
        let ell = c.cols();
        PClsInstance::new(
            Matrix::identity(ell),
            vec![0.0; ell],
            c,
            e,
            Matrix::zeros(0, ell),
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn axis_constraint() {
        let p = inst(Matrix::from_rows(&[&[1.0, 0.0]]), vec![2.0]);
        let (el, r) = eliminate_equalities(&p).unwrap();
        assert!((el.z_bar[0] - 2.0).abs() < 1e-15 && el.z_bar[1].abs() < 1e-15);
        assert_eq!(r.n(), 1);
        assert!(el.q2[(0, 0)].abs() < 1e-15 && (el.q2[(1, 0)].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn symmetric_constraint() {
        let p = inst(Matrix::from_rows(&[&[1.0, 1.0]]), vec![2.0]);
        let (el, _) = eliminate_equalities(&p).unwrap();
        assert!((el.z_bar[0] - 1.0).abs() < 1e-14 && (el.z_bar[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rank_deficient_paths() {
        let p = inst(Matrix::from_rows(&[&[1.0, 0.0], &[2.0, 0.0]]), vec![1.0, 2.0]);
        assert!(matches!(eliminate_equalities(&p), Err(Error::RankDeficient { rank: 1, expected: 2 })));
        let (el, r) = eliminate_equalities_rank_deficient(&p, 1e-10).unwrap();
        assert_eq!(el.rank, 1);
        assert_eq!(r.n(), 1);
        assert!((el.z_bar[0] - 1.0).abs() < 1e-14 && el.z_bar[1].abs() < 1e-14);

        let bad = inst(Matrix::from_rows(&[&[1.0, 0.0], &[1.0, 0.0]]), vec![1.0, 2.0]);
        assert!(matches!(eliminate_equalities_rank_deficient(&bad, 1e-10), Err(Error::Infeasible(_))));
    }

    #[test]
    fn no_equalities() {
        let p = inst(Matrix::zeros(0, 3), vec![]);
        let (el, r) = eliminate_equalities(&p).unwrap();
        assert_eq!(el.q2, Matrix::identity(3));
        assert_eq!(el.z_bar, vec![0.0; 3]);
        assert_eq!(r.a, p.a);
    }

    #[test]
    fn unconstrained_cases() {
        let r = ReducedPcls::new(Matrix::identity(2), vec![0.0; 2], Matrix::identity(2), vec![0.5, 0.0]).unwrap();
        let (s, ok) = unconstrained_solution(&r).unwrap();
        assert_eq!(s, vec![0.0, 0.0]);
        assert!(ok);
        let r = ReducedPcls::<f64>::new(Matrix::identity(1), vec![2.0], Matrix::identity(1), vec![1.0]).unwrap();
        let (s, ok) = unconstrained_solution(&r).unwrap();
        assert!((s[0] - 2.0).abs() < 1e-15);
        assert!(!ok);
        let sing = ReducedPcls::new(
            Matrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]),
            vec![1.0, 1.0],
            Matrix::zeros(0, 2),
            vec![],
        )
        .unwrap();
        assert_eq!(unconstrained_solution(&sing), Err(Error::SingularHessian));
    }

    #[test]
    fn preserving_simple() {
        let p = inst(Matrix::from_rows(&[&[0.0, 1.0]]), vec![3.0]);
        let (el, r) = eliminate_preserving(&p, 1).unwrap();
        assert_eq!(r.n(), 1);
        let z = el.recover_z(&[-4.0]).unwrap();
        assert!((z[0] + 4.0).abs() < 1e-15 && (z[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn tau_helpers() {
        let s = vec![vec![1.0, 2.0]];
        assert_eq!(tau_scale_samples(&s, 1, 20.0).unwrap(), vec![vec![20.0, 2.0]]);
        assert_eq!(tau_scale_samples(&s, 1, 1.0).unwrap(), s);
        assert_eq!(tau_unscale_offset(&[20.0, 2.0], 1, 20.0).unwrap(), vec![1.0, 2.0]);
        assert!(tau_scale_samples(&s, 1, 0.5).is_err());
    }
}
