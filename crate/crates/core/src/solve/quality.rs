use serde::Serialize;

use crate::error::{dim_check, Error, Result};
use crate::linalg::{vec_ops, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QualityMetrics {
    pub mu_o: f64,
    pub mu_f: f64,
}

/// Largest violation after scaling each row of `[C e]` and `[G g]` to unit norm.
/// Rows with zero norm are skipped.
pub fn mu_f(z: &[f64], c: &Matrix, e: &[f64], g_mat: &Matrix, g: &[f64]) -> Result<f64> {
    dim_check(c.rows() == e.len() && g_mat.rows() == g.len(), || "constraint dimensions".into())?;
    let cz = c.matvec(z)?;
    let gz = g_mat.matvec(z)?;
    let mut worst = 0.0f64;
    for i in 0..c.rows() {
        let mut row = c.row(i);
        row.push(e[i]);
        let d = vec_ops::norm2(&row);
        if d > 0.0 {
            worst = worst.max((cz[i] - e[i]).abs() / d);
        }
    }
    for i in 0..g_mat.rows() {
        let mut row = g_mat.row(i);
        row.push(g[i]);
        let d = vec_ops::norm2(&row);
        if d > 0.0 {
            worst = worst.max((gz[i] - g[i]).max(0.0) / d);
        }
    }
    Ok(worst)
}

/// Relative optimizer error and scaled violation of `z_p`.
pub fn quality(z_p: &[f64], z_star: &[f64], c: &Matrix, e: &[f64], g_mat: &Matrix, g: &[f64]) -> Result<QualityMetrics> {
    dim_check(z_p.len() == z_star.len(), || {
        format!("candidate of length {} against reference of length {}", z_p.len(), z_star.len())
    })?;
    let nref = vec_ops::norm2(z_star);
    if nref == 0.0 {
        return Err(Error::Domain("relative error against a zero reference".into()));
    }
    let mu_o = vec_ops::norm2(&vec_ops::sub(z_star, z_p)) / nref;
    Ok(QualityMetrics {
        mu_o,
        mu_f: mu_f(z_p, c, e, g_mat, g)?,
    })
}

/// `(∏ (t_i + h_t))^{1/n}` computed through logarithms.
pub fn shifted_geomean(times: &[f64], h_t: f64) -> Result<f64> {
    if times.is_empty() {
        return Err(Error::InvalidArgument("shifted geometric mean of no samples".into()));
    }
    if h_t < 0.0 || times.iter().any(|&t| t < 0.0) {
        return Err(Error::InvalidArgument("times and shift must be nonnegative".into()));
    }
    let mean_log = times.iter().map(|&t| (t + h_t).ln()).sum::<f64>() / times.len() as f64;
    Ok(mean_log.exp())
}
