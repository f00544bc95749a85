use serde::{Deserialize, Serialize};

use crate::error::{dim_check, Error, Result};
use crate::linalg::{vec_ops, Matrix, Real};
use crate::pcls::PClsInstance;

/// `x_{k+1} = A_k x_k + B_k u_k + d_k` over `T` steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LtvModel<T: Real = f64> {
    pub a: Vec<Matrix<T>>,
    pub b: Vec<Matrix<T>>,
    /// Affine terms; `None` means all zero.
    #[serde(default)]
    pub d: Option<Vec<Vec<T>>>,
}

impl<T: Real> LtvModel<T> {
    pub fn new(a: Vec<Matrix<T>>, b: Vec<Matrix<T>>, d: Option<Vec<Vec<T>>>) -> Result<Self> {
        let m = Self { a, b, d };
        m.validate()?;
        Ok(m)
    }

    pub fn lti(a: Matrix<T>, b: Matrix<T>, horizon: usize) -> Result<Self> {
        Self::new(vec![a; horizon], vec![b; horizon], None)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.is_empty() || self.a.len() != self.b.len() {
            return Err(Error::DimensionMismatch(format!("{} state matrices and {} input matrices", self.a.len(), self.b.len())));
        }
        let nx = self.a[0].rows();
        let nu = self.b[0].cols();
        if nx == 0 || nu == 0 {
            return Err(Error::InvalidArgument("model needs at least one state and one input".into()));
        }
        for (k, (a, b)) in self.a.iter().zip(&self.b).enumerate() {
            dim_check(a.shape() == (nx, nx) && b.shape() == (nx, nu), || {
                format!("step {k}: A is {:?}, B is {:?}", a.shape(), b.shape())
            })?;
        }
        if let Some(d) = &self.d {
            dim_check(d.len() == self.a.len() && d.iter().all(|v| v.len() == nx), || "affine terms".into())?;
        }
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        self.a.len()
    }

    pub fn n_x(&self) -> usize {
        self.a[0].rows()
    }

    pub fn n_u(&self) -> usize {
        self.b[0].cols()
    }

    /// Length of `z = [u_0; x_1; …; u_{T−1}; x_T]`.
    pub fn ell(&self) -> usize {
        self.horizon() * (self.n_x() + self.n_u())
    }

    pub fn is_lti(&self) -> bool {
        self.d.is_none() && self.a.iter().all(|a| a == &self.a[0]) && self.b.iter().all(|b| b == &self.b[0])
    }

    pub fn offset(&self, k: usize) -> Option<&[T]> {
        self.d.as_ref().map(|d| d[k].as_slice())
    }

    pub fn cast<S: Real>(&self) -> LtvModel<S> {
        LtvModel {
            a: self.a.iter().map(Matrix::cast).collect(),
            b: self.b.iter().map(Matrix::cast).collect(),
            d: self.d.as_ref().map(|d| d.iter().map(|v| vec_ops::cast(v)).collect()),
        }
    }

    /// States `x_1..x_T` reached from `x0` under `inputs`.
    pub fn simulate(&self, x0: &[T], inputs: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
        dim_check(inputs.len() == self.horizon(), || "one input per step".into())?;
        let mut x = x0.to_vec();
        let mut out = Vec::with_capacity(self.horizon());
        for k in 0..self.horizon() {
            let mut next = vec_ops::add(&self.a[k].matvec(&x)?, &self.b[k].matvec(&inputs[k])?);
            if let Some(d) = self.offset(k) {
                next = vec_ops::add(&next, d);
            }
            out.push(next.clone());
            x = next;
        }
        Ok(out)
    }
}

/// Least-squares weights: the cost is `Σ ‖R_u_k u_k − t_u_k‖² + ‖R_x_{k+1} x_{k+1} − t_x_{k+1}‖²`
/// where the targets are `R ·` reference. Index `k` of `r_x`/`t_x` refers
/// to state `x_{k+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpcWeights<T: Real = f64> {
    pub r_u: Vec<Matrix<T>>,
    pub r_x: Vec<Matrix<T>>,
    pub t_u: Vec<Vec<T>>,
    pub t_x: Vec<Vec<T>>,
}

impl<T: Real> MpcWeights<T> {
    pub fn tracking(r_u: Vec<Matrix<T>>, r_x: Vec<Matrix<T>>, u_ref: &[Vec<T>], x_ref: &[Vec<T>]) -> Result<Self> {
        dim_check(r_u.len() == r_x.len() && u_ref.len() == r_u.len() && x_ref.len() == r_x.len(), || {
            "weights and references must cover the same horizon".into()
        })?;
        let t_u = r_u.iter().zip(u_ref).map(|(r, u)| r.matvec(u)).collect::<Result<_>>()?;
        let t_x = r_x.iter().zip(x_ref).map(|(r, x)| r.matvec(x)).collect::<Result<_>>()?;
        Ok(Self { r_u, r_x, t_u, t_x })
    }

    /// Constant weights with zero references.
    pub fn constant(r_u: Matrix<T>, r_x: Matrix<T>, horizon: usize) -> Self {
        Self {
            t_u: vec![vec![T::zero(); r_u.rows()]; horizon],
            t_x: vec![vec![T::zero(); r_x.rows()]; horizon],
            r_u: vec![r_u; horizon],
            r_x: vec![r_x; horizon],
        }
    }

    /// Penalizes `‖R_y (C_out x_{k+1} − y_ref)‖` through `R_x = R_y C_out` and
    /// target `R_y y_ref`.
    pub fn set_output_weight(&mut self, k: usize, r_y: &Matrix<T>, c_out: &Matrix<T>, y_ref: &[T]) -> Result<()> {
        if k >= self.r_x.len() {
            return Err(Error::InvalidArgument(format!("step {k} beyond the horizon")));
        }
        self.r_x[k] = r_y.matmul(c_out)?;
        self.t_x[k] = r_y.matvec(y_ref)?;
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        self.r_u.len()
    }

    pub fn validate(&self, n_x: usize, n_u: usize, horizon: usize) -> Result<()> {
        dim_check(self.r_u.len() == horizon && self.r_x.len() == horizon, || {
            format!("weights over {} steps for horizon {horizon}", self.r_u.len())
        })?;
        for k in 0..horizon {
            dim_check(self.r_u[k].cols() == n_u && self.r_x[k].cols() == n_x, || format!("weight columns at step {k}"))?;
            dim_check(self.t_u[k].len() == self.r_u[k].rows() && self.t_x[k].len() == self.r_x[k].rows(), || {
                format!("weight targets at step {k}")
            })?;
        }
        Ok(())
    }

    pub fn cast<S: Real>(&self) -> MpcWeights<S> {
        MpcWeights {
            r_u: self.r_u.iter().map(Matrix::cast).collect(),
            r_x: self.r_x.iter().map(Matrix::cast).collect(),
            t_u: self.t_u.iter().map(|v| vec_ops::cast(v)).collect(),
            t_x: self.t_x.iter().map(|v| vec_ops::cast(v)).collect(),
        }
    }

    /// Weight blocks in `z` order: `R_u_0, R_x_1, R_u_1, …`.
    pub fn blocks(&self) -> Vec<&Matrix<T>> {
        self.r_u.iter().zip(&self.r_x).flat_map(|(u, x)| [u, x]).collect()
    }
}

/// Starting offset of `u_k` in `z`.
pub fn u_offset(k: usize, n_x: usize, n_u: usize) -> usize {
    k * (n_x + n_u)
}

/// Starting offset of `x_{k+1}` in `z`.
pub fn x_offset(k: usize, n_x: usize, n_u: usize) -> usize {
    k * (n_x + n_u) + n_u
}

/// Banded equality `C z = e` encoding the dynamics, with rows
/// `A_k x_k + B_k u_k − x_{k+1} = −d_k` (and `−A_0 x_0 − d_0` in the first block).
pub fn build_equality<T: Real>(model: &LtvModel<T>, x0: &[T]) -> Result<(Matrix<T>, Vec<T>)> {
    model.validate()?;
    let (nx, nu, horizon) = (model.n_x(), model.n_u(), model.horizon());
    dim_check(x0.len() == nx, || format!("initial state of length {} for {nx} states", x0.len()))?;
    let mut c = Matrix::zeros(horizon * nx, model.ell());
    let mut e = vec![T::zero(); horizon * nx];
    let neg_eye = Matrix::<T>::identity(nx).scale(-T::one());
    for k in 0..horizon {
        let r = k * nx;
        if k > 0 {
            c.set_block(r, x_offset(k - 1, nx, nu), &model.a[k]);
        }
        c.set_block(r, u_offset(k, nx, nu), &model.b[k]);
        c.set_block(r, x_offset(k, nx, nu), &neg_eye);
        if k == 0 {
            let ax = model.a[0].matvec(x0)?;
            for i in 0..nx {
                e[i] = -ax[i];
            }
        }
        if let Some(d) = model.offset(k) {
            for i in 0..nx {
                e[r + i] -= d[i];
            }
        }
    }
    Ok((c, e))
}

/// Block-diagonal least-squares cost in `z` order.
pub fn build_cost<T: Real>(weights: &MpcWeights<T>) -> (Matrix<T>, Vec<T>) {
    let blocks = weights.blocks();
    let a = Matrix::block_diag(&blocks);
    let b = weights
        .t_u
        .iter()
        .zip(&weights.t_x)
        .flat_map(|(u, x)| u.iter().chain(x.iter()).copied())
        .collect();
    (a, b)
}

/// A full MPC instance: dynamics, weights, current state and inequalities on `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpcProblem<T: Real = f64> {
    pub model: LtvModel<T>,
    pub weights: MpcWeights<T>,
    pub x0: Vec<T>,
    #[serde(rename = "G")]
    pub g_mat: Matrix<T>,
    pub g: Vec<T>,
}

impl<T: Real> MpcProblem<T> {
    pub fn new(model: LtvModel<T>, weights: MpcWeights<T>, x0: Vec<T>, g_mat: Matrix<T>, g: Vec<T>) -> Result<Self> {
        model.validate()?;
        weights.validate(model.n_x(), model.n_u(), model.horizon())?;
        dim_check(x0.len() == model.n_x(), || "initial state length".into())?;
        dim_check(g_mat.rows() == g.len() && (g_mat.cols() == model.ell() || g_mat.rows() == 0), || {
            format!("G is {:?} for ℓ = {}", g_mat.shape(), model.ell())
        })?;
        let g_mat = if g_mat.rows() == 0 { Matrix::zeros(0, model.ell()) } else { g_mat };
        Ok(Self { model, weights, x0, g_mat, g })
    }

    pub fn to_pcls(&self) -> Result<PClsInstance<T>> {
        let (c, e) = build_equality(&self.model, &self.x0)?;
        let (a, b) = build_cost(&self.weights);
        PClsInstance::new(a, b, c, e, self.g_mat.clone(), self.g.clone())
    }

    pub fn cast<S: Real>(&self) -> MpcProblem<S> {
        MpcProblem {
            model: self.model.cast(),
            weights: self.weights.cast(),
            x0: vec_ops::cast(&self.x0),
            g_mat: self.g_mat.cast(),
            g: vec_ops::cast(&self.g),
        }
    }

    /// Box bounds on every `u_k` and selected bounds on every `x_{k+1}`
    /// (infinite entries are dropped).
    pub fn box_constraints(model: &LtvModel<T>, u_lo: &[T], u_hi: &[T], x_lo: &[T], x_hi: &[T]) -> (Matrix<T>, Vec<T>) {
        let (nx, nu, horizon) = (model.n_x(), model.n_u(), model.horizon());
        let mut rows: Vec<(usize, T, T)> = Vec::new();
        for k in 0..horizon {
            for j in 0..nu {
                rows.push((u_offset(k, nx, nu) + j, T::one(), u_hi[j]));
                rows.push((u_offset(k, nx, nu) + j, -T::one(), -u_lo[j]));
            }
            for j in 0..nx {
                if x_hi[j].is_finite() {
                    rows.push((x_offset(k, nx, nu) + j, T::one(), x_hi[j]));
                }
                if x_lo[j].is_finite() {
                    rows.push((x_offset(k, nx, nu) + j, -T::one(), -x_lo[j]));
                }
            }
        }
        let mut g_mat = Matrix::zeros(rows.len(), model.ell());
        let mut g = Vec::with_capacity(rows.len());
        for (i, &(col, sign, rhs)) in rows.iter().enumerate() {
            g_mat[(i, col)] = sign;
            g.push(rhs);
        }
        (g_mat, g)
    }
}
