use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::pcls::Basis;

/// Piecewise-constant input parameterization: `u_k` is held on each interval
/// `[k_i, k_{i+1})`. Columns are normalized block indicators, which span the
/// same space as the unit-step basis.
pub fn move_blocking_basis(horizon: usize, n_u: usize, breakpoints: &[usize]) -> Result<Basis> {
    if breakpoints.len() < 2 || breakpoints[0] != 0 || *breakpoints.last().unwrap() != horizon {
        return Err(Error::InvalidArgument(format!("breakpoints {breakpoints:?} must run from 0 to {horizon}")));
    }
    if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!("breakpoints {breakpoints:?} must increase strictly")));
    }
    let m_u = breakpoints.len() - 1;
    let mut phi = Matrix::zeros(horizon * n_u, m_u * n_u);
    for (b, w) in breakpoints.windows(2).enumerate() {
        let scale = 1.0 / ((w[1] - w[0]) as f64).sqrt();
        for k in w[0]..w[1] {
            for j in 0..n_u {
                phi[(k * n_u + j, b * n_u + j)] = scale;
            }
        }
    }
    Basis::new(vec![0.0; horizon * n_u], phi)
}

/// Breakpoints of a control horizon of `n` free moves.
pub fn control_horizon_breakpoints(horizon: usize, n: usize) -> Vec<usize> {
    let n = n.clamp(1, horizon);
    let mut b: Vec<usize> = (0..n).collect();
    b.push(horizon);
    b
}
