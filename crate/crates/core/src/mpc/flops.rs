use serde::{Deserialize, Serialize};

/// Cost models with closed-form flop predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlopModel {
    /// Structured QR factorization alone.
    QrMpc,
    /// Generic full Givens QR of `C'`.
    QrFull,
    /// Savings of the structured factorization over the generic one.
    QrSavings,
    /// Standard condensing of an LTI model.
    Standard,
    /// Factorization plus forming the reduced problem.
    QrCondense,
}

/// Leading terms of the cost polynomials; lower-order remainders are dropped.
pub fn flops_closed_form(model: FlopModel, horizon: usize, n_x: usize, n_u: usize) -> f64 {
    let (t, x, u) = (horizon as f64, n_x as f64, n_u as f64);
    match model {
        FlopModel::QrMpc => t.powi(3) * (x * x * u + x * u * u) + 3.0 * t * t * u * x * (2.0 * x + u + 1.0),
        FlopModel::QrFull => t.powi(3) * (5.0 * x.powi(3) + 6.0 * x * u * u + 12.0 * x * x * u) - 6.0 * t * t * (x * x + u * x),
        FlopModel::QrSavings => t.powi(3) * (5.0 * x.powi(3) + 11.0 * x * x * u + 5.0 * x * u * u),
        FlopModel::Standard => t * t * (x * x * u - x * u / 2.0),
        FlopModel::QrCondense => {
            t.powi(3) * (x * x * u + x * u * u)
                + t * t * (x * x * (6.0 * u + 2.0) + u * u * (3.0 * x + 1.0) + 2.0 * u * x - 2.0 * (x + u))
        }
    }
}

/// Exact rotation cost on `R` summed over the structured loop.
pub fn exact_r_flops(horizon: usize, n_x: usize, n_u: usize) -> u64 {
    let mut total = 0u64;
    for j in 1..=horizon * n_x {
        let k = (j - 1) / n_x;
        let r1 = j + n_u * (k + 1);
        let width = n_x * (k + 2).min(horizon) - j + 1;
        total += 6 * (r1 - j) as u64 * width as u64;
    }
    total
}

/// Exact rotation cost on `Q` summed over the structured loop.
pub fn exact_q_flops(horizon: usize, n_x: usize, n_u: usize) -> u64 {
    let w = n_x + n_u;
    let mut total = 0u64;
    for j in 1..=horizon * n_x {
        let k = (j - 1) / n_x;
        let r1 = j + n_u * (k + 1);
        for i in j + 1..=r1 {
            total += 6 * (j + n_u * (1 + k) - w * ((i - j - 1) / n_u)) as u64;
        }
    }
    total
}

/// Exact cost of the generic Givens QR of an `m × n` matrix with explicit `Q`.
pub fn exact_qr_full_flops(m: usize, n: usize) -> u64 {
    (1..=n.min(m)).map(|j| 6 * (m - j) as u64 * (m + n - j + 1) as u64).sum()
}

/// Forward substitution cost on the block-bidiagonal `R1'`.
pub fn exact_substitution_flops(horizon: usize, n_x: usize) -> u64 {
    (1..=horizon * n_x).map(|i| 2 * (i - substitution_start(i, n_x)) as u64 + 2).sum()
}

/// First column (1-based) of row `i` of `R1'` inside the band.
pub fn substitution_start(i: usize, n_x: usize) -> usize {
    1 + (n_x * ((i - 1) / n_x)).saturating_sub(n_x)
}
