use serde::{Deserialize, Serialize};

use super::instance::{ReducedPcls, Transform};
use crate::error::{dim_check, Result};
use crate::linalg::{vec_ops, HouseholderQr, Matrix, Real};

/// Affine parameterization `s = φ0 + Φ v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Basis<T: Real = f64> {
    pub phi0: Vec<T>,
    pub phi: Matrix<T>,
    /// False for parameterizations with non-orthonormal columns such as the
    /// feasibility-augmented basis.
    #[serde(default = "yes")]
    pub orthonormal: bool,
}

fn yes() -> bool {
    true
}

impl<T: Real> Basis<T> {
    pub fn new(phi0: Vec<T>, phi: Matrix<T>) -> Result<Self> {
        dim_check(phi.rows() == phi0.len(), || {
            format!("basis of {} rows with offset of length {}", phi.rows(), phi0.len())
        })?;
        let tol = T::lit(1e-8) * T::lit(phi.cols().max(1) as f64);
        let orthonormal = phi.cols() == 0 || phi.orthonormality_defect() <= tol;
        Ok(Self { phi0, phi, orthonormal })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            phi0: vec![T::zero(); n],
            phi: Matrix::identity(n),
            orthonormal: true,
        }
    }

    /// Dimension of the reduced variable `v`.
    pub fn m(&self) -> usize {
        self.phi.cols()
    }

    /// Dimension of `s`.
    pub fn n(&self) -> usize {
        self.phi0.len()
    }

    pub fn expand(&self, v: &[T]) -> Result<Vec<T>> {
        Ok(vec_ops::add(&self.phi0, &self.phi.matvec(v)?))
    }

    pub fn cast<S: Real>(&self) -> Basis<S> {
        Basis {
            phi0: vec_ops::cast(&self.phi0),
            phi: self.phi.cast(),
            orthonormal: self.orthonormal,
        }
    }
}

/// Problem in the basis coordinates together with the map back to `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedV<T: Real = f64> {
    pub problem: ReducedPcls<T>,
    /// `z0 = z̄ + Z φ0`
    pub z0: Vec<T>,
    /// `Z Φ`
    pub map: Matrix<T>,
}

impl<T: Real> ReducedV<T> {
    /// `z = ZΦ v + z0`
    pub fn recover_z(&self, v: &[T]) -> Result<Vec<T>> {
        Ok(vec_ops::add(&self.map.matvec(v)?, &self.z0))
    }
}

/// Restricts `s = φ0 + Φ v` in a reduced problem obtained through `transform`.
pub fn apply_basis<T: Real>(r: &ReducedPcls<T>, basis: &Basis<T>, transform: &Transform<T>) -> Result<ReducedV<T>> {
    dim_check(basis.n() == r.n() && transform.z_mat.cols() == r.n(), || {
        format!(
            "basis over {} variables, reduced problem with {}, transform with {}",
            basis.n(),
            r.n(),
            transform.z_mat.cols()
        )
    })?;
    let a = r.a.matmul(&basis.phi)?;
    let b = vec_ops::sub(&r.b, &r.a.matvec(&basis.phi0)?);
    let g_mat = r.g_mat.matmul(&basis.phi)?;
    let g = vec_ops::sub(&r.g, &r.g_mat.matvec(&basis.phi0)?);
    let z0 = transform.apply(&basis.phi0)?;
    let map = transform.z_mat.matmul(&basis.phi)?;
    Ok(ReducedV {
        problem: ReducedPcls::new(a, b, g_mat, g)?,
        z0,
        map,
    })
}

/// `s = s_f + v0 (s_mean − s_f) + Φ v`, so that `v = 0` reproduces `s_f`.
/// A vanishing extra direction is dropped.
pub fn feasible_basis<T: Real>(basis: &Basis<T>, s_f: &[T], s_mean: &[T]) -> Result<Basis<T>> {
    let n = basis.n();
    dim_check(s_f.len() == n && s_mean.len() == n, || {
        format!("basis over {n} variables, s_f {}, s_mean {}", s_f.len(), s_mean.len())
    })?;
    let d = vec_ops::sub(s_mean, s_f);
    let scale = T::one().max(vec_ops::norm2(s_mean)).max(vec_ops::norm2(s_f));
    let mut cols = Vec::with_capacity(basis.m() + 1);
    if vec_ops::norm2(&d) <= T::epsilon() * T::lit(n.max(1) as f64) * scale {
        log::warn!("feasible point coincides with the sample mean; extra basis direction dropped");
    } else {
        cols.push(d);
    }
    cols.extend((0..basis.m()).map(|j| basis.phi.col(j).to_vec()));
    let phi = Matrix::from_columns(n, &cols)?;
    let orthonormal = phi.cols() == 0 || phi.orthonormality_defect() <= T::lit(1e-8);
    Ok(Basis {
        phi0: s_f.to_vec(),
        phi,
        orthonormal,
    })
}

/// Undoes a `diag(τ I_k, I)` sample scaling on a fitted basis: the offset's
/// first `k` entries are divided by `τ` and the columns are mapped the same
/// way, then re-orthonormalized so that the span matches the scaled fit.
pub fn tau_unscale_basis(basis: &Basis<f64>, k: usize, tau: f64) -> Result<Basis<f64>> {
    let phi0 = super::elim::tau_unscale_offset(&basis.phi0, k, tau)?;
    if basis.m() == 0 {
        return Ok(Basis {
            phi0,
            phi: basis.phi.clone(),
            orthonormal: true,
        });
    }
    let mut phi = basis.phi.clone();
    for j in 0..phi.cols() {
        for x in &mut phi.col_mut(j)[..k] {
            *x /= tau;
        }
    }
    let q = HouseholderQr::new(&phi).thin_q();
    Basis::new(phi0, q)
}
