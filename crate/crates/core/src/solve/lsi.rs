use crate::error::{Error, Result};
use crate::linalg::{solve_upper_tri, solve_upper_tri_transposed, vec_ops, HouseholderQr, Matrix};
use crate::pcls::ReducedPcls;

/// Exact solution of an inequality-constrained least-squares problem and
/// the multipliers of `G s ≤ g`.
#[derive(Debug, Clone, PartialEq)]
pub struct LsiSolution {
    pub s: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl LsiSolution {
    pub fn lambda_max(&self) -> f64 {
        self.lambda.iter().copied().fold(0.0, f64::max)
    }
}

/// Nonnegative least squares `min ‖E x − f‖, x ≥ 0` (Lawson–Hanson active set).
pub fn nnls(e: &Matrix, f: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = e.shape();
    if f.len() != m {
        return Err(Error::DimensionMismatch(format!("{m}x{n} system with rhs of length {}", f.len())));
    }
    let norm1 = (0..n).map(|j| e.col(j).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let tol = 10.0 * f64::EPSILON * norm1.max(1.0) * m.max(n) as f64;
    let mut x = vec![0.0; n];
    let mut passive = vec![false; n];
    // columns whose positive gradient is rounding noise, until x moves
    let mut banned = vec![false; n];
    let cap = 10 * n + 100;
    let mut outer = 0;
    loop {
        let resid = vec_ops::sub(f, &e.matvec(&x)?);
        let w = e.tr_matvec(&resid)?;
        let pick = (0..n)
            .filter(|&j| !passive[j] && !banned[j])
            .fold(None, |best: Option<usize>, j| match best {
                Some(b) if w[b] >= w[j] => Some(b),
                _ => Some(j),
            });
        let Some(t) = pick.filter(|&t| w[t] > tol) else { break };
        outer += 1;
        if outer > cap {
            return Err(Error::IterationCap(cap));
        }
        passive[t] = true;
        let mut first = true;
        loop {
            let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let z_p = HouseholderQr::new(&e.select_columns(&idx)).solve_ls(f)?;
            if z_p.iter().all(|&v| v > tol) {
                x.iter_mut().for_each(|v| *v = 0.0);
                for (&j, &v) in idx.iter().zip(&z_p) {
                    x[j] = v;
                }
                banned.iter_mut().for_each(|b| *b = false);
                break;
            }
            if first {
                let pos = idx.iter().position(|&j| j == t).expect("t is passive");
                if z_p[pos] <= tol {
                    passive[t] = false;
                    banned[t] = true;
                    break;
                }
            }
            first = false;
            let mut step = 1.0f64;
            for (&j, &v) in idx.iter().zip(&z_p) {
                if v <= tol {
                    let d = x[j] - v;
                    if d > 0.0 {
                        step = step.min(x[j] / d);
                    }
                }
            }
            let mut z = vec![0.0; n];
            for (&j, &v) in idx.iter().zip(&z_p) {
                z[j] = v;
            }
            for j in 0..n {
                x[j] += step * (z[j] - x[j]);
                if passive[j] && x[j] <= tol {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
            banned.iter_mut().for_each(|b| *b = false);
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    Ok(x)
}

/// Solves `min ½‖A s − b‖²  s.t.  G s ≤ g` for full-column-rank `A` by
/// reduction to least distance programming and NNLS.
pub fn solve_lsi(r: &ReducedPcls) -> Result<LsiSolution> {
    let n = r.n();
    let n_i = r.g_mat.rows();
    if n == 0 {
        if r.g.iter().any(|&gi| gi < -crate::pcls::feasibility_tol(gi)) {
            return Err(Error::Infeasible("no free variables and violated constraints".into()));
        }
        return Ok(LsiSolution { s: Vec::new(), lambda: vec![0.0; n_i] });
    }
    if r.a.rows() < n {
        return Err(Error::SingularHessian);
    }
    let h = HouseholderQr::new(&r.a);
    if h.is_rank_deficient(f64::EPSILON * (r.a.rows().max(n) as f64)) {
        return Err(Error::SingularHessian);
    }
    let rr = h.r().block(0, 0, n, n);
    let c: Vec<f64> = h.apply_qt(&r.b)?[..n].to_vec();
    let s_u = solve_upper_tri(&rr, &c)?;
    if n_i == 0 {
        return Ok(LsiSolution { s: s_u, lambda: Vec::new() });
    }
    // y = R s − c turns the problem into min ½‖y‖² s.t. E y ≤ f
    // with E = G R⁻¹ and f = g − G s_u
    let e_rows: Vec<Vec<f64>> = (0..n_i)
        .map(|i| solve_upper_tri_transposed(&rr, &r.g_mat.row(i)))
        .collect::<Result<_>>()?;
    let gsu = r.g_mat.matvec(&s_u)?;
    let f: Vec<f64> = r.g.iter().zip(&gsu).map(|(&g, &x)| g - x).collect();
    if f.iter().zip(&r.g).all(|(&fi, &gi)| fi >= -crate::pcls::feasibility_tol(gi)) {
        return Ok(LsiSolution { s: s_u, lambda: vec![0.0; n_i] });
    }

    // LDP for −E y ≥ −f: NNLS on [−E'; −f'] u ≈ e_{n+1}
    let mut mat = Matrix::zeros(n + 1, n_i);
    for (i, row) in e_rows.iter().enumerate() {
        for j in 0..n {
            mat[(j, i)] = -row[j];
        }
        mat[(n, i)] = -f[i];
    }
    let mut rhs = vec![0.0; n + 1];
    rhs[n] = 1.0;
    let u = nnls(&mat, &rhs)?;
    let resid = vec_ops::sub(&mat.matvec(&u)?, &rhs);
    let denom = -resid[n];
    if vec_ops::norm2(&resid) <= 1e-12 || denom <= 1e-14 {
        return Err(Error::Infeasible("inequality constraints admit no solution".into()));
    }
    let y: Vec<f64> = resid[..n].iter().map(|&v| -v / resid[n]).collect();
    let lambda: Vec<f64> = u.iter().map(|&v| v / denom).collect();
    let rhs_s = vec_ops::add(&y, &c);
    let s = solve_upper_tri(&rr, &rhs_s)?;
    Ok(LsiSolution { s, lambda })
}
