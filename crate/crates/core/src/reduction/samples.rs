use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{complete_orthonormal_columns, svd_econ, vec_ops, Matrix};
use crate::pcls::Basis;

/// Parameter vectors with their reduced optimizers and largest inequality
/// multipliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub thetas: Vec<Vec<f64>>,
    pub s_stars: Vec<Vec<f64>>,
    pub lambdas_max: Vec<f64>,
}

impl SampleSet {
    pub fn new(thetas: Vec<Vec<f64>>, s_stars: Vec<Vec<f64>>, lambdas_max: Vec<f64>) -> Result<Self> {
        if s_stars.is_empty() {
            return Err(Error::InvalidArgument("sample set is empty".into()));
        }
        if thetas.len() != s_stars.len() || lambdas_max.len() != s_stars.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} parameters, {} optimizers, {} multipliers",
                thetas.len(),
                s_stars.len(),
                lambdas_max.len()
            )));
        }
        let n = s_stars[0].len();
        if s_stars.iter().any(|s| s.len() != n) {
            return Err(Error::DimensionMismatch("optimizers of different lengths".into()));
        }
        let p = thetas[0].len();
        if thetas.iter().any(|t| t.len() != p) {
            return Err(Error::DimensionMismatch("parameters of different lengths".into()));
        }
        Ok(Self { thetas, s_stars, lambdas_max })
    }

    /// Optimizer samples only; parameters are left empty and multipliers at zero.
    pub fn from_points(s_stars: Vec<Vec<f64>>) -> Result<Self> {
        let m = s_stars.len();
        Self::new(vec![Vec::new(); m], s_stars, vec![0.0; m])
    }

    pub fn len(&self) -> usize {
        self.s_stars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s_stars.is_empty()
    }

    pub fn n(&self) -> usize {
        self.s_stars[0].len()
    }

    pub fn p(&self) -> usize {
        self.thetas[0].len()
    }

    /// Keeps the samples with at least one multiplier ≥ `eps_lambda`.
    pub fn filter_active(&self, eps_lambda: f64) -> Result<Self> {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| self.lambdas_max[i] >= eps_lambda).collect();
        Self::new(
            keep.iter().map(|&i| self.thetas[i].clone()).collect(),
            keep.iter().map(|&i| self.s_stars[i].clone()).collect(),
            keep.iter().map(|&i| self.lambdas_max[i]).collect(),
        )
    }
}

/// Mean of `points` and the `m` leading right singular vectors of the centered
/// sample matrix, together with the sum of the discarded squared singular values.
pub(crate) fn affine_fit(points: &[&[f64]], m: usize) -> Result<(Basis, f64)> {
    let Some(first) = points.first() else {
        return Err(Error::InvalidArgument("basis of an empty sample set".into()));
    };
    let n = first.len();
    if m > n {
        return Err(Error::InvalidArgument(format!("{m} basis vectors in dimension {n}")));
    }
    let mut mean = vec![0.0; n];
    for s in points {
        vec_ops::axpy(1.0, s, &mut mean);
    }
    let mean = vec_ops::scale(1.0 / points.len() as f64, &mean);
    let centered = Matrix::from_fn(points.len(), n, |i, j| points[i][j] - mean[j]);

    if centered.max_abs() == 0.0 {
        let phi = complete_orthonormal_columns(&Matrix::zeros(n, 0), m)?;
        return Ok((Basis { phi0: mean, phi, orthonormal: true }, 0.0));
    }
    let f = svd_econ(&centered);
    let take = m.min(f.v.cols());
    let phi = complete_orthonormal_columns(&f.v.columns(0, take), m)?;
    let trailing = f.sigma.iter().skip(m).map(|x| x * x).sum();
    Ok((Basis { phi0: mean, phi, orthonormal: true }, trailing))
}

/// Single affine basis: sample mean plus `m` principal directions.
pub fn svd_basis(samples: &SampleSet, m: usize) -> Result<Basis> {
    let pts: Vec<&[f64]> = samples.s_stars.iter().map(Vec::as_slice).collect();
    affine_fit(&pts, m).map(|(b, _)| b)
}

/// `min_v ‖s − Φ v − φ0‖²` for orthonormal `Φ`.
pub fn reassign_distance(s: &[f64], basis: &Basis) -> Result<f64> {
    if s.len() != basis.n() {
        return Err(Error::DimensionMismatch(format!("sample of length {} against basis of dimension {}", s.len(), basis.n())));
    }
    let d = vec_ops::sub(s, &basis.phi0);
    if !basis.orthonormal {
        let v = crate::linalg::lstsq(&basis.phi, &d)?;
        return Ok(vec_ops::norm2_sq(&vec_ops::sub(&d, &basis.phi.matvec(&v)?)));
    }
    let coef = basis.phi.tr_matvec(&d)?;
    let proj = basis.phi.matvec(&coef)?;
    Ok(vec_ops::norm2_sq(&vec_ops::sub(&d, &proj)))
}
