use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::pcls_gen::normal_matrix;
use crate::error::{Error, Result};
use crate::linalg::{HouseholderQr, Matrix};
use crate::mpc::{condense_qr, u_offset, x_offset, LtvModel, MpcProblem, MpcWeights};
use crate::solve::solve_lsi;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
}

impl Stability {
    pub fn eigen_range(&self) -> (f64, f64) {
        match self {
            Self::Stable => (0.499, 0.999),
            Self::Unstable => (1.0, 1.25),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Stable => "stable",
            Self::Unstable => "unstable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomMpcSpec {
    pub n_x: usize,
    pub n_u: usize,
    pub horizon: usize,
    pub stability: Stability,
    /// Input boxes and randomly selected state bounds.
    pub constrained: bool,
    pub delta: f64,
    pub seed: u64,
}

impl Default for RandomMpcSpec {
    fn default() -> Self {
        Self {
            n_x: 5,
            n_u: 3,
            horizon: 10,
            stability: Stability::Stable,
            constrained: false,
            delta: 1.0,
            seed: 1,
        }
    }
}

/// Random orthogonal matrix from the QR of a Gaussian matrix, with the signs
/// fixed by the diagonal of `R`.
pub fn random_orthogonal(rng: &mut impl Rng, n: usize) -> Matrix {
    let m = normal_matrix(rng, n, n);
    let h = HouseholderQr::new(&m);
    let mut q = h.thin_q();
    let r = h.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.col_mut(j).iter_mut().for_each(|x| *x = -*x);
        }
    }
    q
}

/// `V diag(λ) V'` with `λ_i ~ U(lo, hi)` and a random orthogonal `V`.
/// Returns the matrix and its eigenvalues.
pub fn random_dynamics(rng: &mut impl Rng, n: usize, stability: Stability) -> Result<(Matrix, Vec<f64>)> {
    let (lo, hi) = stability.eigen_range();
    let lambda: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    let v = random_orthogonal(rng, n);
    let a = v.matmul(&Matrix::from_diag(&lambda))?.matmul(&v.transpose())?;
    Ok((a, lambda))
}

/// Number of state-weight rows realizing a drawn cost rank with full-rank
/// input weights.
fn state_weight_rows(rng: &mut impl Rng, n_x: usize, n_u: usize, horizon: usize) -> usize {
    let ell = horizon * (n_x + n_u);
    let lo = horizon * n_x / 3 + horizon * n_u;
    let rank = rng.random_range(lo..=ell);
    (rank - horizon * n_u).div_ceil(horizon).clamp(1, n_x)
}

/// A random instance. Constrained instances that turn out infeasible are
/// redrawn from the same stream.
pub fn gen_mpc(spec: &RandomMpcSpec) -> Result<MpcProblem> {
    if spec.n_x == 0 || spec.n_u == 0 || spec.horizon == 0 {
        return Err(Error::InvalidArgument("random MPC sizes must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for _ in 0..1000 {
        let p = draw_mpc(&mut rng, spec)?;
        if !spec.constrained || solve_lsi(&condense_qr(&p)?.reduced).is_ok() {
            return Ok(p);
        }
    }
    Err(Error::Infeasible(format!("no feasible instance drawn for seed {}", spec.seed)))
}

fn draw_mpc(rng: &mut ChaCha8Rng, spec: &RandomMpcSpec) -> Result<MpcProblem> {
    let (nx, nu, horizon) = (spec.n_x, spec.n_u, spec.horizon);
    let (a, _) = random_dynamics(rng, nx, spec.stability)?;
    let b = normal_matrix(rng, nx, nu);
    let model = LtvModel::lti(a, b, horizon)?;

    let r_u = Matrix::from_diag(&(0..nu).map(|_| rng.random_range(1.0..10.0)).collect::<Vec<_>>());
    let rows = state_weight_rows(rng, nx, nu, horizon);
    let picked = index::sample(rng, nx, rows).into_vec();
    let mut r_x = Matrix::zeros(rows, nx);
    for (i, &j) in picked.iter().enumerate() {
        r_x[(i, j)] = rng.random_range(1.0..10.0);
    }
    let weights = MpcWeights::constant(r_u, r_x, horizon);

    let d = spec.delta;
    if !spec.constrained {
        let x0 = (0..nx).map(|_| rng.sample(StandardNormal)).collect();
        return MpcProblem::new(model, weights, x0, Matrix::zeros(0, horizon * (nx + nu)), Vec::new());
    }
    let u_lo: Vec<f64> = (0..nu).map(|_| rng.random_range(-d..d)).collect();
    let u_hi: Vec<f64> = u_lo.iter().map(|&l| rng.random_range(l..l + d)).collect();
    // choose m_x of the 2 n_x candidate state bounds
    let m_x = rng.random_range(nx / 2..=(4 * nx / 3).min(2 * nx));
    let mut slots: Vec<usize> = (0..2 * nx).collect();
    slots.shuffle(rng);
    let chosen = &slots[..m_x];
    let mut x_lo = vec![f64::NEG_INFINITY; nx];
    let mut x_hi = vec![f64::INFINITY; nx];
    for j in 0..nx {
        if chosen.contains(&j) {
            x_lo[j] = rng.random_range(-d..d);
        }
    }
    for j in 0..nx {
        if chosen.contains(&(nx + j)) {
            x_hi[j] = if x_lo[j].is_finite() { rng.random_range(x_lo[j]..x_lo[j] + d) } else { rng.random_range(-d..d) };
        }
    }
    let x0 = (0..nx)
        .map(|j| match (x_lo[j].is_finite(), x_hi[j].is_finite()) {
            (true, true) => rng.random_range(x_lo[j]..=x_hi[j]),
            (true, false) => x_lo[j] + rng.random_range(0.0..d),
            (false, true) => x_hi[j] - rng.random_range(0.0..d),
            (false, false) => rng.random_range(-d..d),
        })
        .collect();
    let (g_mat, g) = MpcProblem::box_constraints(&model, &u_lo, &u_hi, &x_lo, &x_hi);
    MpcProblem::new(model, weights, x0, g_mat, g)
}

/// Constraint rows acting on one step of a box-constrained instance.
pub fn constraints_per_step(p: &MpcProblem) -> usize {
    let (nx, nu) = (p.model.n_x(), p.model.n_u());
    let lo = u_offset(0, nx, nu);
    let hi = x_offset(0, nx, nu) + nx;
    (0..p.g_mat.rows())
        .filter(|&i| (lo..hi).any(|c| p.g_mat[(i, c)] != 0.0))
        .count()
}
