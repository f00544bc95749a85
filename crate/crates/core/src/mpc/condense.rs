use serde::{Deserialize, Serialize};

use super::model::{build_equality, u_offset, x_offset, LtvModel, MpcProblem, MpcWeights};
use super::qr_mpc::{qr_mpc, FlopCounter, QrMpcFactors};
use crate::error::{dim_check, Error, Result};
use crate::linalg::{cond, vec_ops, HouseholderQr, Matrix, Real};
use crate::pcls::{ReducedPcls, SoftenedPcls, Transform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CondenseMethod {
    Standard,
    Riccati,
    QrMpc,
}

impl CondenseMethod {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Standard => "standard",
            Self::Riccati => "riccati",
            Self::QrMpc => "qr",
        }
    }
}

/// Reduced problem in `s` with `z = Z s + z0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CondensedForm<T: Real = f64> {
    pub method: CondenseMethod,
    pub transform: Transform<T>,
    pub reduced: ReducedPcls<T>,
    pub flops: FlopCounter,
    pub gains: Option<Vec<Matrix<T>>>,
    pub factors: Option<QrMpcFactors<T>>,
}

impl<T: Real> CondensedForm<T> {
    pub fn recover_z(&self, s: &[T]) -> Result<Vec<T>> {
        self.transform.apply(s)
    }

    /// `κ(A_r'A_r) = κ(A_r)²`.
    pub fn hessian_condition(&self) -> Result<T> {
        let k = cond(&self.reduced.a)?;
        Ok(k * k)
    }
}

fn mv_flops(rows: usize, inner: usize) -> u64 {
    if inner == 0 {
        0
    } else {
        (rows * (2 * inner - 1)) as u64
    }
}

/// Affine map from free inputs to `z`, optionally with state feedback
/// `u_k = K_k x_k + s_k`.
struct InputMap<T: Real> {
    f_mat: Matrix<T>,
    f_off: Vec<T>,
    /// Leading nonzero input-blocks of the rows of each weight group.
    extent: Vec<usize>,
    /// Groups whose rows of `F` are a plain selection of `s` entries.
    selection: Vec<bool>,
    flops: u64,
}

fn input_map<T: Real>(model: &LtvModel<T>, x0: &[T], gains: Option<&[Matrix<T>]>) -> Result<InputMap<T>> {
    let (nx, nu, horizon) = (model.n_x(), model.n_u(), model.horizon());
    let n = horizon * nu;
    let mut f_mat = Matrix::zeros(model.ell(), n);
    let mut f_off = vec![T::zero(); model.ell()];
    let mut extent = Vec::with_capacity(2 * horizon);
    let mut selection = Vec::with_capacity(2 * horizon);
    let mut flops = 0u64;

    if gains.is_none() && model.is_lti() {
        // shared blocks A^i B
        let mut powers = vec![model.b[0].clone()];
        for _ in 1..horizon {
            let next = model.a[0].matmul(powers.last().unwrap())?;
            flops += (nx * nu) as u64 * (2 * nx - 1) as u64;
            powers.push(next);
        }
        let mut x = x0.to_vec();
        for k in 0..horizon {
            let (uo, xo) = (u_offset(k, nx, nu), x_offset(k, nx, nu));
            for j in 0..nu {
                f_mat[(uo + j, k * nu + j)] = T::one();
            }
            for i in 0..=k {
                f_mat.set_block(xo, i * nu, &powers[k - i]);
            }
            x = model.a[0].matvec(&x)?;
            flops += mv_flops(nx, nx);
            f_off[xo..xo + nx].copy_from_slice(&x);
            extent.extend([k + 1, k + 1]);
            selection.extend([true, false]);
        }
        return Ok(InputMap { f_mat, f_off, extent, selection, flops });
    }

    // state map X_k (n_x × k n_u) and offset ξ_k
    let mut xm = Matrix::<T>::zeros(nx, n);
    let mut xi = x0.to_vec();
    for k in 0..horizon {
        let (uo, xo) = (u_offset(k, nx, nu), x_offset(k, nx, nu));
        let known = k * nu;
        let mut um = Matrix::<T>::zeros(nu, n);
        let mut upsilon = vec![T::zero(); nu];
        if let Some(gains) = gains {
            let kk = &gains[k];
            if known > 0 {
                um.set_block(0, 0, &kk.matmul(&xm.columns(0, known))?);
                flops += (nu * known) as u64 * (2 * nx - 1) as u64;
            }
            upsilon = kk.matvec(&xi)?;
            flops += mv_flops(nu, nx);
        }
        for j in 0..nu {
            um[(j, known + j)] = T::one();
        }
        for j in 0..nu {
            for c in 0..known + nu {
                f_mat[(uo + j, c)] = um[(j, c)];
            }
            f_off[uo + j] = upsilon[j];
        }
        let mut next = Matrix::<T>::zeros(nx, n);
        if known > 0 {
            next.set_block(0, 0, &model.a[k].matmul(&xm.columns(0, known))?);
            flops += (nx * known) as u64 * (2 * nx - 1) as u64;
        }
        if gains.is_some() {
            let bu = model.b[k].matmul(&um.columns(0, known + nu))?;
            flops += (nx * (known + nu)) as u64 * (2 * nu - 1) as u64 + (nx * known) as u64;
            for c in 0..known + nu {
                for r in 0..nx {
                    next[(r, c)] += bu[(r, c)];
                }
            }
        } else {
            next.set_block(0, known, &model.b[k]);
        }
        let mut xi_next = model.a[k].matvec(&xi)?;
        flops += mv_flops(nx, nx);
        if gains.is_some() {
            xi_next = vec_ops::add(&xi_next, &model.b[k].matvec(&upsilon)?);
            flops += mv_flops(nx, nu) + nx as u64;
        }
        if let Some(d) = model.offset(k) {
            xi_next = vec_ops::add(&xi_next, d);
            flops += nx as u64;
        }
        for r in 0..nx {
            for c in 0..known + nu {
                f_mat[(xo + r, c)] = next[(r, c)];
            }
            f_off[xo + r] = xi_next[r];
        }
        xm = next;
        xi = xi_next;
        extent.extend([k + 1, k + 1]);
        selection.extend([gains.is_none(), false]);
    }
    Ok(InputMap { f_mat, f_off, extent, selection, flops })
}

/// Row offset of each weight group within `A`, and its column offset within `z`.
fn group_offsets<T: Real>(weights: &MpcWeights<T>, n_x: usize, n_u: usize) -> Vec<(usize, usize, usize, usize)> {
    let mut out = Vec::new();
    let mut row = 0;
    for (k, (ru, rx)) in weights.r_u.iter().zip(&weights.r_x).enumerate() {
        out.push((row, ru.rows(), u_offset(k, n_x, n_u), n_u));
        row += ru.rows();
        out.push((row, rx.rows(), x_offset(k, n_x, n_u), n_x));
        row += rx.rows();
    }
    out
}

fn reduce_inequalities<T: Real>(p: &MpcProblem<T>, z_mat: &Matrix<T>, z_off: &[T]) -> Result<(Matrix<T>, Vec<T>)> {
    let g_r = p.g_mat.matmul(z_mat)?;
    let gz = p.g_mat.matvec(z_off)?;
    Ok((g_r, vec_ops::sub(&p.g, &gz)))
}

fn condense_with_map<T: Real>(p: &MpcProblem<T>, map: InputMap<T>, method: CondenseMethod, gains: Option<Vec<Matrix<T>>>) -> Result<CondensedForm<T>> {
    let (nx, nu) = (p.model.n_x(), p.model.n_u());
    let blocks = p.weights.blocks();
    let groups = group_offsets(&p.weights, nx, nu);
    let rows: usize = groups.iter().map(|g| g.1).sum();
    let n = map.f_mat.cols();
    let mut a_r = Matrix::zeros(rows, n);
    let mut b_r = vec![T::zero(); rows];
    let mut flops = map.flops;
    let targets: Vec<&Vec<T>> = p.weights.t_u.iter().zip(&p.weights.t_x).flat_map(|(u, x)| [u, x]).collect();
    for (gi, &(row0, nr, col0, width)) in groups.iter().enumerate() {
        let w = blocks[gi];
        let cols = map.extent[gi] * nu;
        if map.selection[gi] {
            // rows of F are unit vectors picking s entries of the last block
            let first = cols - nu;
            for r in 0..nr {
                for j in 0..nu {
                    a_r[(row0 + r, first + j)] = w[(r, j)];
                }
            }
        } else {
            let fb = map.f_mat.block(col0, 0, width, cols);
            a_r.set_block(row0, 0, &w.matmul(&fb)?);
            flops += (nr * cols) as u64 * (2 * width - 1) as u64;
        }
        let off = &map.f_off[col0..col0 + width];
        let t = targets[gi];
        if off.iter().any(|&v| v != T::zero()) || !map.selection[gi] {
            let wf = w.matvec(off)?;
            flops += mv_flops(nr, width);
            for r in 0..nr {
                b_r[row0 + r] = t[r] - wf[r];
            }
        } else {
            b_r[row0..row0 + nr].copy_from_slice(t);
        }
    }
    flops += rows as u64;
    let (g_r, g_red) = reduce_inequalities(p, &map.f_mat, &map.f_off)?;
    Ok(CondensedForm {
        method,
        transform: Transform { z_mat: map.f_mat, z_off: map.f_off },
        reduced: ReducedPcls::new(a_r, b_r, g_r, g_red)?,
        flops: FlopCounter { products: flops, ..Default::default() },
        gains,
        factors: None,
    })
}

/// Eliminates the states by substituting the simulated response, `z = F s + f`.
pub fn condense_standard<T: Real>(p: &MpcProblem<T>) -> Result<CondensedForm<T>> {
    let map = input_map(&p.model, &p.x0, None)?;
    condense_with_map(p, map, CondenseMethod::Standard, None)
}

fn solve_square<T: Real>(m: &Matrix<T>, rhs: &Matrix<T>) -> Result<Matrix<T>> {
    let h = HouseholderQr::new(m);
    if h.is_rank_deficient(T::epsilon() * T::lit(16.0 * m.rows() as f64)) {
        return Err(Error::Singular("R + B'PB is singular".into()));
    }
    let cols = (0..rhs.cols()).map(|j| h.solve_ls(rhs.col(j))).collect::<Result<Vec<_>>>()?;
    Matrix::from_columns(m.rows(), &cols)
}

/// Backward recursion producing feedback gains `K_k` for `u_k = K_k x_k + u^c_k`
/// and the closed-loop model `(A_k + B_k K_k, B_k)`. The state weight of `x_0`
/// reuses that of `x_1`.
pub fn riccati_prestabilize<T: Real>(model: &LtvModel<T>, weights: &MpcWeights<T>) -> Result<(Vec<Matrix<T>>, LtvModel<T>)> {
    model.validate()?;
    let horizon = model.horizon();
    weights.validate(model.n_x(), model.n_u(), horizon)?;
    let q_of = |k: usize| {
        let r = &weights.r_x[k.max(1) - 1];
        r.tr_matmul(r)
    };
    let mut p_next = q_of(horizon)?;
    let mut gains = vec![Matrix::zeros(model.n_u(), model.n_x()); horizon];
    for k in (0..horizon).rev() {
        let (a, b) = (&model.a[k], &model.b[k]);
        let r = weights.r_u[k].tr_matmul(&weights.r_u[k])?;
        let pb = p_next.matmul(b)?;
        let pa = p_next.matmul(a)?;
        let m = r.add(&b.tr_matmul(&pb)?)?;
        let bpa = b.tr_matmul(&pa)?;
        let correction = pb.transpose().tr_matmul(&solve_square(&m, &bpa)?)?;
        let correction = a.tr_matmul(&correction)?;
        let p_k = q_of(k)?.sub(&correction)?.add(&a.tr_matmul(&pa)?)?;
        let p_k = p_k.add(&p_k.transpose())?.scale(T::lit(0.5));
        let pk_b = p_k.matmul(b)?;
        let mk = r.add(&b.tr_matmul(&pk_b)?)?;
        gains[k] = solve_square(&mk, &b.tr_matmul(&p_k.matmul(a)?)?)?.scale(-T::one());
        p_next = p_k;
    }
    let closed = LtvModel::new(
        model.a.iter().zip(&model.b).zip(&gains).map(|((a, b), kk)| a.add(&b.matmul(kk)?)).collect::<Result<_>>()?,
        model.b.clone(),
        model.d.clone(),
    )?;
    Ok((gains, closed))
}

/// Standard condensing of the prestabilized loop with `u^c` as free variables.
pub fn condense_riccati<T: Real>(p: &MpcProblem<T>) -> Result<CondensedForm<T>> {
    let (gains, _) = riccati_prestabilize(&p.model, &p.weights)?;
    let map = input_map(&p.model, &p.x0, Some(&gains))?;
    condense_with_map(p, map, CondenseMethod::Riccati, Some(gains))
}

/// Equality elimination through the structured QR of `C'`: `z = Q2 s + z̄`
/// with the minimum-norm `z̄ = Q1 (R1')⁻¹ e`.
pub fn condense_qr<T: Real>(p: &MpcProblem<T>) -> Result<CondensedForm<T>> {
    condense_qr_with(p, None)
}

pub fn condense_qr_with<T: Real>(p: &MpcProblem<T>, eps0: Option<T>) -> Result<CondensedForm<T>> {
    let (nx, nu, horizon) = (p.model.n_x(), p.model.n_u(), p.model.horizon());
    let (c, e) = build_equality(&p.model, &p.x0)?;
    let f = qr_mpc(&c.transpose(), nx, nu, horizon, eps0)?;
    let mut flops = f.flops;
    let ne = horizon * nx;
    let w = nx + nu;

    // forward substitution on the block-bidiagonal R1'
    let mut s_bar = vec![T::zero(); ne];
    for i in 1..=ne {
        let k = super::flops::substitution_start(i, nx);
        let mut acc = e[i - 1];
        for t in k..i {
            acc -= f.r[(t - 1, i - 1)] * s_bar[t - 1];
        }
        let d = f.r[(i - 1, i - 1)];
        if d == T::zero() {
            return Err(Error::RankDeficient { rank: i - 1, expected: ne });
        }
        s_bar[i - 1] = acc / d;
        flops.substitution += 2 * (i - k) as u64 + 2;
    }

    // z̄ = Q1 s̄ over the nonzero rows of each column
    let mut z_bar = vec![T::zero(); p.model.ell()];
    for j in 1..=ne {
        let k = (j - 1) / nx;
        let rows = j + nu * (k + 1);
        let col = f.q.col(j - 1);
        for r in 0..rows {
            z_bar[r] += col[r] * s_bar[j - 1];
        }
        flops.products += 2 * rows as u64;
    }

    // A Q2 and b − A z̄ over the weight blocks
    let q2 = f.q2();
    let n = q2.cols();
    let starts: Vec<usize> = (0..n).map(|c| (c / nu) * w + c % nu).collect();
    let blocks = p.weights.blocks();
    let groups = group_offsets(&p.weights, nx, nu);
    let rows: usize = groups.iter().map(|g| g.1).sum();
    let targets: Vec<&Vec<T>> = p.weights.t_u.iter().zip(&p.weights.t_x).flat_map(|(u, x)| [u, x]).collect();
    let mut a_r = Matrix::zeros(rows, n);
    let mut b_r = vec![T::zero(); rows];
    for (gi, &(row0, nr, col0, width)) in groups.iter().enumerate() {
        let wm = blocks[gi];
        for c in 0..n {
            let lo = starts[c].max(col0);
            let hi = col0 + width;
            if lo >= hi {
                continue;
            }
            let qc = q2.col(c);
            for r in 0..nr {
                let mut acc = T::zero();
                for z in lo..hi {
                    acc += wm[(r, z - col0)] * qc[z];
                }
                a_r[(row0 + r, c)] = acc;
            }
            flops.products += mv_flops(nr, hi - lo);
        }
        for r in 0..nr {
            let mut acc = targets[gi][r];
            for z in 0..width {
                acc -= wm[(r, z)] * z_bar[col0 + z];
            }
            b_r[row0 + r] = acc;
        }
        flops.products += 2 * (nr * width) as u64;
    }
    flops.products += rows as u64;

    let (g_r, g_red) = reduce_inequalities(p, &q2, &z_bar)?;
    Ok(CondensedForm {
        method: CondenseMethod::QrMpc,
        transform: Transform { z_mat: q2, z_off: z_bar },
        reduced: ReducedPcls::new(a_r, b_r, g_r, g_red)?,
        flops,
        gains: None,
        factors: Some(f),
    })
}

pub fn condense<T: Real>(p: &MpcProblem<T>, method: CondenseMethod) -> Result<CondensedForm<T>> {
    match method {
        CondenseMethod::Standard => condense_standard(p),
        CondenseMethod::Riccati => condense_riccati(p),
        CondenseMethod::QrMpc => condense_qr(p),
    }
}

/// Appends the slack variables of `soft` to a condensed problem, reusing the
/// equality elimination: `[z; ζ] = blockdiag(Z, I)[s; ζ] + [z0; 0]`.
pub fn extend_slack<T: Real>(cond: &CondensedForm<T>, soft: &SoftenedPcls<T>) -> Result<CondensedForm<T>> {
    let nz = soft.n_slack();
    let r = &cond.reduced;
    dim_check(soft.v_g.rows() == r.g_mat.rows(), || {
        format!("slack map over {} rows for {} inequalities", soft.v_g.rows(), r.g_mat.rows())
    })?;
    let a = Matrix::block_diag(&[&r.a, &soft.lambda_zeta]);
    let mut b = r.b.clone();
    b.extend(std::iter::repeat_n(T::zero(), soft.lambda_zeta.rows()));
    let g_mat = Matrix::hstack(&[&r.g_mat, &soft.v_g.scale(-T::one())])?;
    let z_mat = Matrix::block_diag(&[&cond.transform.z_mat, &Matrix::identity(nz)]);
    let mut z_off = cond.transform.z_off.clone();
    z_off.extend(std::iter::repeat_n(T::zero(), nz));
    Ok(CondensedForm {
        method: cond.method,
        transform: Transform { z_mat, z_off },
        reduced: ReducedPcls::new(a, b, g_mat, r.g.clone())?,
        flops: cond.flops,
        gains: cond.gains.clone(),
        factors: cond.factors.clone(),
    })
}

/// Orthogonal factor of the slack-extended `[C'; 0]`.
pub fn extended_q<T: Real>(q: &Matrix<T>, n_slack: usize) -> Matrix<T> {
    Matrix::block_diag(&[q, &Matrix::identity(n_slack)])
}
