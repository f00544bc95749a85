use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{HouseholderQr, Matrix, Real};
use crate::pcls::ReducedPcls;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdmmSettings {
    pub rho: f64,
    pub alpha: f64,
    /// Coefficient on the previous `h`; `None` means `1 − alpha`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha1: Option<f64>,
    pub iterations: usize,
}

impl Default for AdmmSettings {
    fn default() -> Self {
        Self {
            rho: 1.0,
            alpha: 1.6,
            alpha1: None,
            iterations: 200,
        }
    }
}

impl AdmmSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidArgument(format!("rho = {} must be positive", self.rho)));
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::InvalidArgument(format!("alpha = {} must lie in (0, 2)", self.alpha)));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("ADMM needs at least one iteration".into()));
        }
        Ok(())
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1.unwrap_or(1.0 - self.alpha)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmResult<T: Real = f64> {
    pub s: Vec<T>,
    pub h: Vec<T>,
    pub w: Vec<T>,
    pub iterations_run: usize,
}

/// Over-relaxed ADMM on `min ½‖A s − b‖²  s.t.  G s + h = g, h ≥ 0`, run for
/// a fixed number of iterations from zero. `A'A + ρG'G` is factored once
/// through a QR of `[A; √ρ G]`. All arithmetic happens in `T`.
pub fn admm_solve<T: Real>(r: &ReducedPcls<T>, settings: &AdmmSettings) -> Result<AdmmResult<T>> {
    settings.validate()?;
    let n = r.n();
    let n_i = r.g_mat.rows();
    let rho = T::lit(settings.rho);
    let alpha = T::lit(settings.alpha);
    let alpha1 = T::lit(settings.alpha1());

    let stacked = Matrix::vstack(&[&r.a, &r.g_mat.scale(rho.sqrt())])?;
    let factor = HouseholderQr::new(&stacked);
    if n > 0 && factor.is_rank_deficient(T::epsilon() * T::lit(stacked.rows().max(n) as f64)) {
        return Err(Error::Singular("A'A + rho G'G is singular".into()));
    }
    let atb = r.a.tr_matvec(&r.b)?;

    let mut s = vec![T::zero(); n];
    let mut h = vec![T::zero(); n_i];
    let mut w = vec![T::zero(); n_i];
    let mut tmp = vec![T::zero(); n_i];
    for _ in 0..settings.iterations {
        for i in 0..n_i {
            tmp[i] = h[i] + w[i] - r.g[i];
        }
        let gt = r.g_mat.tr_matvec(&tmp)?;
        let rhs: Vec<T> = atb.iter().zip(&gt).map(|(&x, &y)| x - rho * y).collect();
        s = if n > 0 { factor.solve_normal(&rhs)? } else { Vec::new() };
        let gs = r.g_mat.matvec(&s)?;
        for i in 0..n_i {
            let resid = gs[i] - r.g[i];
            let h_new = (alpha1 * h[i] - alpha * resid - w[i]).max(T::zero());
            w[i] += alpha * (resid + h_new) + alpha1 * (h_new - h[i]);
            h[i] = h_new;
        }
    }
    Ok(AdmmResult {
        s,
        h,
        w,
        iterations_run: settings.iterations,
    })
}
