use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::plant::ReactorParams;
use crate::classifier::{train_bank, ClassifierBank, TrainSettings};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mpc::{condense_standard, LtvModel, MpcProblem, MpcWeights};
use crate::pcls::{
    apply_basis, is_feasible, soften, tau_scale_samples, tau_unscale_basis,
    unconstrained_solution, Basis, PClsInstance, ReducedPcls, Transform,
};
use crate::reduction::{ksvd_from_kmeans, svd_basis, ClusterModel, SampleSet};
use crate::solve::solve_lsi;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerConfig {
    pub horizon: usize,
    /// Free input moves; later increments are held at zero.
    pub control_horizon: usize,
    pub r_du: f64,
    pub r_ca: f64,
    pub du_max: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub slack_weight: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            horizon: 20,
            control_horizon: 3,
            r_du: 2.0,
            r_ca: 1.0,
            du_max: 3.0,
            u_min: 285.15,
            u_max: 312.15,
            slack_weight: 1e5,
        }
    }
}

/// Piecewise-constant reference that switches to a fresh `U(lo, hi)` value
/// with probability `switch_prob` at every step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepReference {
    pub lo: f64,
    pub hi: f64,
    pub switch_prob: f64,
    pub seed: u64,
}

impl Default for StepReference {
    fn default() -> Self {
        Self { lo: 2.0, hi: 9.0, switch_prob: 0.1, seed: 1 }
    }
}

impl StepReference {
    pub fn generate(&self, len: usize, initial: f64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut r = initial;
        (0..len)
            .map(|_| {
                if rng.random::<f64>() < self.switch_prob {
                    r = rng.random_range(self.lo..self.hi);
                }
                r
            })
            .collect()
    }
}

/// How the control move is obtained from the reduced problem in `s`.
#[derive(Debug, Clone, PartialEq)]
pub enum Reduction {
    Exact,
    Basis(Basis),
    Clustered { bases: Vec<Basis>, bank: ClassifierBank },
}

impl Reduction {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::Basis(_) => "svd",
            Self::Clustered { .. } => "ksvd",
        }
    }
}

/// `θ = [T_r, C_A, u_prev, r_k, r_{k+1}]`.
pub fn theta(x: &[f64; 2], u_prev: f64, r_now: f64, r_next: f64) -> Vec<f64> {
    vec![x[0], x[1], u_prev, r_now, r_next]
}

/// The linearized MPC problem over the full prediction horizon at one
/// sampling instant.
pub fn build_step_problem(plant: &ReactorParams, cfg: &ControllerConfig, x: &[f64; 2], u_prev: f64, r_next: f64) -> Result<MpcProblem> {
    let (t, n) = (cfg.horizon, cfg.control_horizon);
    if n == 0 || n > t {
        return Err(Error::InvalidArgument(format!("control horizon {n} for prediction horizon {t}")));
    }
    let (a, b, d) = plant.extended_model(x, u_prev);
    let model = LtvModel::new(vec![a; t], vec![b; t], Some(vec![d; t]))?;
    let r_x = Matrix::from_rows(&[&[0.0, cfg.r_ca, 0.0]]);
    let mut weights = MpcWeights::constant(Matrix::from_diag(&[cfg.r_du]), r_x, t);
    for tx in &mut weights.t_x {
        tx[0] = cfg.r_ca * r_next;
    }
    let (g_mat, g) = MpcProblem::box_constraints(
        &model,
        &[-cfg.du_max],
        &[cfg.du_max],
        &[f64::NEG_INFINITY, f64::NEG_INFINITY, cfg.u_min],
        &[f64::INFINITY, f64::INFINITY, cfg.u_max],
    );
    MpcProblem::new(model, weights, vec![x[0], x[1], u_prev], g_mat, g)
}

/// Condensed problem in `s = [Δu_0 … Δu_{n−1}]`, later increments fixed at
/// zero, and the map back to `z`.
pub fn reduce_step(p: &MpcProblem, control_horizon: usize) -> Result<(Transform, ReducedPcls)> {
    let cond = condense_standard(p)?;
    let n = control_horizon * p.model.n_u();
    if n == 0 || n > cond.reduced.n() {
        return Err(Error::InvalidArgument(format!("{n} free inputs out of {}", cond.reduced.n())));
    }
    let keep: Vec<usize> = (0..n).collect();
    let r = &cond.reduced;
    let g_cols = r.g_mat.select_columns(&keep);
    let rows: Vec<usize> = (0..g_cols.rows()).filter(|&i| (0..n).any(|j| g_cols[(i, j)] != 0.0)).collect();
    let reduced = ReducedPcls::new(
        r.a.select_columns(&keep),
        r.b.clone(),
        g_cols.select_rows(&rows),
        rows.iter().map(|&i| r.g[i]).collect(),
    )?;
    let transform = Transform { z_mat: cond.transform.z_mat.select_columns(&keep), z_off: cond.transform.z_off.clone() };
    Ok((transform, reduced))
}

/// Appends one slack shared by every inequality row.
pub fn with_slack(r: &ReducedPcls, weight: f64) -> Result<ReducedPcls> {
    if r.g_mat.rows() == 0 {
        return Ok(r.clone());
    }
    let p = PClsInstance::without_equalities(r.a.clone(), r.b.clone(), r.g_mat.clone(), r.g.clone())?;
    let rows: Vec<usize> = (0..p.n_i()).collect();
    let x = soften(&p, &rows, &[weight], 1)?.extended();
    ReducedPcls::new(x.a, x.b, x.g_mat, x.g)
}

/// Minimizer over `s = φ0 + Φ v`, using the unconstrained solution when it
/// is feasible and the slack-softened exact solve otherwise.
fn solve_in_basis(r: &ReducedPcls, basis: &Basis, cfg: &ControllerConfig) -> Result<Vec<f64>> {
    let ident = Transform { z_mat: Matrix::identity(r.n()), z_off: vec![0.0; r.n()] };
    let rv = apply_basis(r, basis, &ident)?;
    if rv.problem.n() > 0 {
        if let Ok((v, true)) = unconstrained_solution(&rv.problem) {
            return basis.expand(&v);
        }
    } else if is_feasible(&rv.problem.g_mat, &rv.problem.g, &[])? {
        return Ok(basis.phi0.clone());
    }
    let sol = solve_lsi(&with_slack(&rv.problem, cfg.slack_weight)?)?;
    basis.expand(&sol.s[..basis.m()])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepLog {
    pub step: usize,
    pub t_r: f64,
    pub c_a: f64,
    pub t_c: f64,
    pub reference: f64,
    pub cluster: Option<usize>,
    pub solve_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopRun {
    pub log: Vec<StepLog>,
    pub cost: f64,
    /// `(θ, s*)` at each step, `s*` being the optimizer of the problem solved.
    pub samples: Vec<(Vec<f64>, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub plant: ReactorParams,
    pub controller: ControllerConfig,
    pub x0: [f64; 2],
    pub u_prev: f64,
    /// `r_0 … r_{N+1}`; `N + 1` steps are simulated.
    pub reference: Vec<f64>,
}

impl Scenario {
    /// Starts at the equilibrium with concentration `c0`.
    pub fn from_equilibrium(plant: ReactorParams, controller: ControllerConfig, c0: f64, reference: Vec<f64>) -> Result<Self> {
        let (x0, u_prev) = plant.steady_state(c0)?;
        Ok(Self { plant, controller, x0, u_prev, reference })
    }

    pub fn steps(&self) -> usize {
        self.reference.len().saturating_sub(1)
    }
}

/// Receding-horizon simulation accumulating
/// `J = Σ_k (C_A(k) − r_k)² + r_du² (T_c,k − T_c,k−1)²`.
pub fn closed_loop(s: &Scenario, reduction: &Reduction) -> Result<ClosedLoopRun> {
    if s.reference.len() < 2 {
        return Err(Error::InvalidArgument("reference needs at least two samples".into()));
    }
    let cfg = &s.controller;
    let mut x = s.x0;
    let mut u_prev = s.u_prev;
    let mut log = Vec::with_capacity(s.steps());
    let mut samples = Vec::with_capacity(s.steps());
    let mut cost = 0.0;
    for k in 0..s.steps() {
        let (r_now, r_next) = (s.reference[k], s.reference[k + 1]);
        let th = theta(&x, u_prev, r_now, r_next);
        let clock = Instant::now();
        let step = build_step_problem(&s.plant, cfg, &x, u_prev, r_next)
            .and_then(|p| reduce_step(&p, cfg.control_horizon))
            .and_then(|(_, r)| {
                Ok(match reduction {
                    Reduction::Exact => {
                        let sol = solve_lsi(&with_slack(&r, cfg.slack_weight)?)?;
                        (sol.s[..r.n()].to_vec(), None)
                    }
                    Reduction::Basis(b) => (solve_in_basis(&r, b, cfg)?, None),
                    Reduction::Clustered { bases, bank } => {
                        let j = bank.predict(&th)?;
                        (solve_in_basis(&r, &bases[j], cfg)?, Some(j))
                    }
                })
            });
        let (s_star, cluster) = step.map_err(|e| Error::Domain(format!("closed-loop step {k}: {e}")))?;
        let solve_seconds = clock.elapsed().as_secs_f64();
        let du = s_star[0];
        let u = u_prev + du;
        cost += (x[1] - r_now).powi(2) + (cfg.r_du * du).powi(2);
        log.push(StepLog { step: k, t_r: x[0], c_a: x[1], t_c: u, reference: r_now, cluster, solve_seconds });
        samples.push((th, s_star));
        x = s.plant.step(&x, u);
        u_prev = u;
        if !(x[0].is_finite() && x[1].is_finite()) {
            return Err(Error::Domain(format!("closed-loop step {k}: plant state diverged")));
        }
    }
    Ok(ClosedLoopRun { log, cost, samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReductionTraining {
    pub samples: usize,
    pub k: usize,
    pub m: usize,
    pub tau: f64,
    pub seed: u64,
}

impl Default for ReductionTraining {
    fn default() -> Self {
        Self { samples: 2000, k: 10, m: 2, tau: 20.0, seed: 7 }
    }
}

/// Offline artifacts of the reduction: the single-basis fit, the clusters and
/// their classifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedReduction {
    pub samples: SampleSet,
    pub svd: Basis,
    pub clusters: ClusterModel,
    pub bases: Vec<Basis>,
    pub bank: ClassifierBank,
}

/// Collects `(θ, s*)` by running the exact controller against a random step
/// reference and fits the bases on `[τ Δu_0*; s_2*]`.
pub fn train_reduction(
    plant: &ReactorParams,
    cfg: &ControllerConfig,
    c0: f64,
    reference: &StepReference,
    train: &ReductionTraining,
    hidden: &[usize],
    settings: &TrainSettings,
) -> Result<TrainedReduction> {
    let refs = reference.generate(train.samples + 1, c0);
    let scenario = Scenario::from_equilibrium(*plant, *cfg, c0, refs)?;
    let run = closed_loop(&scenario, &Reduction::Exact)?;
    let (thetas, stars): (Vec<_>, Vec<_>) = run.samples.into_iter().unzip();
    let scaled = tau_scale_samples(&stars, 1, train.tau)?;
    let samples = SampleSet::new(thetas.clone(), stars, vec![0.0; thetas.len()])?;
    let scaled_set = SampleSet::new(thetas.clone(), scaled, vec![0.0; thetas.len()])?;

    let svd = tau_unscale_basis(&svd_basis(&scaled_set, train.m)?, 1, train.tau)?;
    let clusters = ksvd_from_kmeans(&scaled_set, train.k, train.m, train.seed)?;
    let bases = clusters
        .bases
        .iter()
        .map(|b| tau_unscale_basis(b, 1, train.tau))
        .collect::<Result<Vec<_>>>()?;
    let (bank, _) = train_bank(&thetas, &clusters.assignments, train.k, hidden, settings, train.seed)?;
    Ok(TrainedReduction { samples, svd, clusters, bases, bank })
}
