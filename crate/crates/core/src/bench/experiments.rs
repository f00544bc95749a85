use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mpc_gen::{gen_mpc, RandomMpcSpec};
use super::pcls_gen::{gen_pcls, PclsFamily, RandomPclsSpec};
use crate::classifier::{train_bank, ClassifierBank, TrainSettings};
use crate::error::{Error, Result};
use crate::linalg::{qr_full, vec_ops, Real};
use crate::mpc::{condense, condense_qr, qr_mpc, build_equality, CondenseMethod, MpcProblem};
use crate::pcls::{apply_basis, Basis, Transform};
use crate::reduction::{ksvd_from_kmeans, svd_basis, SampleSet};
use crate::solve::{admm_solve, quality, solve_lsi, AdmmSettings, QualityMetrics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    pub fn name(&self) -> &'static str {
        match self {
            Self::F32 => "f32",
            Self::F64 => "f64",
        }
    }
}

impl std::str::FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(Self::F32),
            "f64" => Ok(Self::F64),
            other => Err(Error::Parse(format!("unknown precision {other:?}"))),
        }
    }
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Linear-interpolation quantile; NaN for an empty slice.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionRow {
    pub index: usize,
    pub seed: u64,
    pub standard: f64,
    pub riccati: f64,
    pub qr: f64,
}

/// `κ(A_r'A_r)` of the three condensing methods on `count` random systems
/// seeded `spec.seed + i`.
pub fn condition_ensemble(spec: &RandomMpcSpec, count: usize) -> Result<Vec<ConditionRow>> {
    if count == 0 {
        return Err(Error::InvalidArgument("empty ensemble".into()));
    }
    (0..count)
        .into_par_iter()
        .map(|i| {
            let seed = spec.seed.wrapping_add(i as u64);
            let p = gen_mpc(&RandomMpcSpec { seed, ..*spec })?;
            let kappa = |m| -> Result<f64> {
                match condense(&p, m).and_then(|c| c.hessian_condition()) {
                    Ok(k) => Ok(k),
                    Err(Error::Singular(_)) | Err(Error::Domain(_)) => Ok(f64::INFINITY),
                    Err(e) => Err(e),
                }
            };
            Ok(ConditionRow {
                index: i,
                seed,
                standard: kappa(CondenseMethod::Standard)?,
                riccati: kappa(CondenseMethod::Riccati)?,
                qr: kappa(CondenseMethod::QrMpc)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmmRow {
    pub index: usize,
    pub seed: u64,
    pub mu_o_std: f64,
    pub mu_f_std: f64,
    pub mu_o_qr: f64,
    pub mu_f_qr: f64,
    pub seconds_std: f64,
    pub seconds_qr: f64,
}

fn admm_path<T: Real>(p: &MpcProblem<T>, method: CondenseMethod, settings: &AdmmSettings) -> Result<(Vec<f64>, f64)> {
    let clock = Instant::now();
    let cond = condense(p, method)?;
    let out = admm_solve(&cond.reduced, settings)?;
    let z = cond.recover_z(&out.s)?;
    let secs = clock.elapsed().as_secs_f64();
    Ok((vec_ops::cast(&z), secs))
}

/// Condenses and solves box-constrained instances with both elimination
/// paths in the requested precision, scoring against the exact optimizer.
pub fn admm_ensemble(spec: &RandomMpcSpec, count: usize, settings: &AdmmSettings, precision: Precision) -> Result<Vec<AdmmRow>> {
    settings.validate()?;
    if count == 0 {
        return Err(Error::InvalidArgument("empty ensemble".into()));
    }
    (0..count)
        .into_par_iter()
        .map(|i| {
            let seed = spec.seed.wrapping_add(i as u64);
            let p = gen_mpc(&RandomMpcSpec { seed, constrained: true, ..*spec })?;
            let exact = condense_qr(&p)?;
            let z_star = exact.recover_z(&solve_lsi(&exact.reduced)?.s)?;
            let (c, e) = build_equality(&p.model, &p.x0)?;
            let run = |m| match precision {
                Precision::F32 => admm_path(&p.cast::<f32>(), m, settings),
                Precision::F64 => admm_path(&p, m, settings),
            };
            let (z_std, t_std) = run(CondenseMethod::Standard)?;
            let (z_qr, t_qr) = run(CondenseMethod::QrMpc)?;
            let q_std = quality(&z_std, &z_star, &c, &e, &p.g_mat, &p.g)?;
            let q_qr = quality(&z_qr, &z_star, &c, &e, &p.g_mat, &p.g)?;
            Ok(AdmmRow {
                index: i,
                seed,
                mu_o_std: q_std.mu_o,
                mu_f_std: q_std.mu_f,
                mu_o_qr: q_qr.mu_o,
                mu_f_qr: q_qr.mu_f,
                seconds_std: t_std,
                seconds_qr: t_qr,
            })
        })
        .collect()
}

pub fn metrics_union(rows: &[AdmmRow]) -> (Vec<QualityMetrics>, Vec<QualityMetrics>) {
    rows.iter()
        .map(|r| {
            (
                QualityMetrics { mu_o: r.mu_o_std, mu_f: r.mu_f_std },
                QualityMetrics { mu_o: r.mu_o_qr, mu_f: r.mu_f_qr },
            )
        })
        .unzip()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BasisStudyConfig {
    pub problem: RandomPclsSpec,
    pub train: usize,
    pub validation: usize,
    pub eps_lambda: f64,
    pub slack_weight: f64,
    pub seed: u64,
}

impl Default for BasisStudyConfig {
    fn default() -> Self {
        Self {
            problem: RandomPclsSpec::default(),
            train: 1000,
            validation: 100,
            eps_lambda: 1e-3,
            slack_weight: 1e5,
            seed: 11,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasisRow {
    pub k: usize,
    pub m: usize,
    pub index: usize,
    pub rel_optimality: f64,
    pub rel_error: f64,
    pub max_violation: f64,
}

/// Training and validation sets of the random box-constrained family.
pub fn basis_study_data(cfg: &BasisStudyConfig) -> Result<(PclsFamily, SampleSet, SampleSet)> {
    let family = gen_pcls(&cfg.problem)?;
    let train = family.sample(cfg.train, cfg.eps_lambda, cfg.seed)?;
    let val = family.sample(cfg.validation, cfg.eps_lambda, cfg.seed.wrapping_add(1_000_003))?;
    Ok((family, train, val))
}

/// Solves the basis-restricted problem with one slack on all rows.
pub fn solve_restricted(family: &PclsFamily, theta: &[f64], basis: &Basis, slack_weight: f64) -> Result<Vec<f64>> {
    let r = family.reduced(theta)?;
    let ident = Transform { z_mat: crate::Matrix::identity(r.n()), z_off: vec![0.0; r.n()] };
    let rv = apply_basis(&r, basis, &ident)?;
    let sol = solve_lsi(&super::closed_loop::with_slack(&rv.problem, slack_weight)?)?;
    rv.recover_z(&sol.s[..basis.m()])
}

/// Fitted bases and the classifier choosing among them (`None` for one cluster).
pub fn fit_reduction(
    train: &SampleSet,
    k: usize,
    m: usize,
    hidden: &[usize],
    settings: &TrainSettings,
    seed: u64,
) -> Result<(Vec<Basis>, Option<ClassifierBank>)> {
    if k == 1 {
        return Ok((vec![svd_basis(train, m)?], None));
    }
    let model = ksvd_from_kmeans(train, k, m, seed)?;
    let (bank, _) = train_bank(&train.thetas, &model.assignments, k, hidden, settings, seed)?;
    Ok((model.bases, Some(bank)))
}

pub fn evaluate_reduction(
    family: &PclsFamily,
    val: &SampleSet,
    bases: &[Basis],
    bank: Option<&ClassifierBank>,
    slack_weight: f64,
) -> Result<Vec<BasisRow>> {
    let k = bases.len();
    let m = bases[0].m();
    (0..val.len())
        .into_par_iter()
        .map(|i| {
            let theta = &val.thetas[i];
            let j = match bank {
                Some(b) => b.predict(theta)?,
                None => 0,
            };
            let z_r = solve_restricted(family, theta, &bases[j], slack_weight)?;
            let z_star = &val.s_stars[i];
            let rhs = family.rhs(theta)?;
            let res = |z: &[f64]| -> Result<f64> { Ok(vec_ops::norm2(&vec_ops::sub(&family.a.matvec(z)?, &rhs))) };
            let (r_star, r_red) = (res(z_star)?, res(&z_r)?);
            let gz = family.g_mat.matvec(&z_r)?;
            let max_violation = gz.iter().zip(&family.g).map(|(x, g)| (x - g) / g.abs()).fold(f64::NEG_INFINITY, f64::max);
            Ok(BasisRow {
                k,
                m,
                index: i,
                rel_optimality: (r_star - r_red).abs() / r_star,
                rel_error: vec_ops::norm2(&vec_ops::sub(z_star, &z_r)) / vec_ops::norm2(z_star),
                max_violation,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QrBenchRow {
    pub horizon: usize,
    pub flops_mpc: u64,
    pub flops_full: u64,
    pub seconds_mpc: f64,
    pub seconds_full: f64,
}

/// Structured against generic factorization of `C'` on one random model per
/// horizon; times are geometric means over `reps` runs.
pub fn qr_bench(spec: &RandomMpcSpec, horizons: &[usize], reps: usize) -> Result<Vec<QrBenchRow>> {
    let reps = reps.max(1);
    horizons
        .iter()
        .map(|&t| {
            let p = gen_mpc(&RandomMpcSpec { horizon: t, constrained: false, ..*spec })?;
            let (c, _) = build_equality(&p.model, &p.x0)?;
            let ct = c.transpose();
            let mut tm = Vec::with_capacity(reps);
            let mut tf = Vec::with_capacity(reps);
            let (mut fm, mut ff) = (0, 0);
            for _ in 0..reps {
                let clock = Instant::now();
                let f = qr_mpc(&ct, spec.n_x, spec.n_u, t, None)?;
                tm.push(clock.elapsed().as_secs_f64());
                fm = f.flops.total();
                let clock = Instant::now();
                let g = qr_full(&ct);
                tf.push(clock.elapsed().as_secs_f64());
                ff = g.flops;
            }
            Ok(QrBenchRow {
                horizon: t,
                flops_mpc: fm,
                flops_full: ff,
                seconds_mpc: crate::solve::shifted_geomean(&tm, 0.0).unwrap_or(0.0),
                seconds_full: crate::solve::shifted_geomean(&tf, 0.0).unwrap_or(0.0),
            })
        })
        .collect()
}
