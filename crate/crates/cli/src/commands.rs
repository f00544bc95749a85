use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use pcls::bench::*;
use pcls::classifier::{partition_section, ClassifierBank, SectionGrid, TrainSettings};
use pcls::reduction::ClusterModel;
use pcls::solve::{shifted_geomean, AdmmSettings};
use serde::{Deserialize, Serialize};

use crate::output::{OutDir, RunHeader};
use crate::row;

pub const CLUSTERS_FILE: &str = "clusters.json";
pub const SVD_FILE: &str = "svd_basis.json";
pub const CLASSIFIER_FILE: &str = "classifier.json";
pub const SAMPLES_FILE: &str = "samples.json";

fn three_quantiles(xs: &[f64]) -> (f64, f64, f64) {
    (quantile(xs, 0.25), median(xs), quantile(xs, 0.75))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub horizon: usize,
    pub stability: Stability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CondenseConfig {
    pub n_x: usize,
    pub n_u: usize,
    pub count: usize,
    pub seed: u64,
    pub ensembles: Vec<Ensemble>,
}

impl Default for CondenseConfig {
    fn default() -> Self {
        Self {
            n_x: 5,
            n_u: 3,
            count: 50,
            seed: 100,
            ensembles: vec![
                Ensemble { horizon: 10, stability: Stability::Stable },
                Ensemble { horizon: 40, stability: Stability::Unstable },
            ],
        }
    }
}

pub fn bench_condense(cfg: &CondenseConfig, header: &RunHeader, out: &OutDir) -> Result<()> {
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for ens in &cfg.ensembles {
        let spec = RandomMpcSpec { n_x: cfg.n_x, n_u: cfg.n_u, horizon: ens.horizon, stability: ens.stability, seed: cfg.seed, ..Default::default() };
        let result = condition_ensemble(&spec, cfg.count)?;
        let methods: [(&str, fn(&ConditionRow) -> f64); 3] =
            [("standard", |r| r.standard), ("riccati", |r| r.riccati), ("qr", |r| r.qr)];
        for r in &result {
            for (name, get) in methods {
                rows.push(row![ens.horizon, ens.stability.name(), r.index, r.seed, name, get(r)]);
            }
        }
        for (name, get) in methods {
            let kappas: Vec<f64> = result.iter().map(get).collect();
            let (q1, q2, q3) = three_quantiles(&kappas);
            println!("T={} {} {name}: median kappa {q2:.3e}", ens.horizon, ens.stability.name());
            summary.push(row![ens.horizon, ens.stability.name(), name, q1, q2, q3]);
        }
    }
    out.write_csv("condense.csv", header, &["horizon", "stability", "index", "seed", "method", "kappa"], &rows)?;
    out.write_csv("condense_summary.csv", header, &["horizon", "stability", "method", "q25", "median", "q75"], &summary)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasisConfig {
    pub study: BasisStudyConfig,
    pub clusters: Vec<usize>,
    pub basis_sizes: Vec<usize>,
    pub hidden: Vec<usize>,
    pub classifier: TrainSettings,
    pub fit_seed: u64,
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self {
            study: BasisStudyConfig::default(),
            clusters: vec![1, 3, 5],
            basis_sizes: vec![1, 5, 10, 15, 19, 20],
            hidden: vec![10, 10, 6],
            classifier: TrainSettings::default(),
            fit_seed: 5,
        }
    }
}

pub fn bench_basis(cfg: &BasisConfig, header: &RunHeader, out: &OutDir) -> Result<()> {
    let (family, train, val) = basis_study_data(&cfg.study)?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &k in &cfg.clusters {
        for &m in &cfg.basis_sizes {
            if m > family.n() {
                bail!("basis size {m} exceeds the problem dimension {}", family.n());
            }
            let (bases, bank) = fit_reduction(&train, k, m, &cfg.hidden, &cfg.classifier, cfg.fit_seed)?;
            let result = evaluate_reduction(&family, &val, &bases, bank.as_ref(), cfg.study.slack_weight)?;
            for r in &result {
                rows.push(row![k, m, r.index, r.rel_optimality, r.rel_error, r.max_violation]);
            }
            let col = |f: fn(&BasisRow) -> f64| result.iter().map(f).collect::<Vec<_>>();
            let opt = median(&col(|r| r.rel_optimality));
            println!("K={k} m={m}: median relative optimality {opt:.3e}");
            summary.push(row![k, m, opt, median(&col(|r| r.rel_error)), median(&col(|r| r.max_violation))]);
        }
    }
    out.write_csv("basis.csv", header, &["k", "m", "index", "rel_optimality", "rel_error", "max_violation"], &rows)?;
    out.write_csv(
        "basis_summary.csv",
        header,
        &["k", "m", "median_rel_optimality", "median_rel_error", "median_max_violation"],
        &summary,
    )?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdmmConfig {
    pub n_x: usize,
    pub n_u: usize,
    pub horizons: Vec<usize>,
    pub count: usize,
    pub seed: u64,
    pub precision: Precision,
    pub admm: AdmmSettings,
    /// Shift of the geometric mean of solve times, in microseconds.
    pub time_shift: f64,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            n_x: 5,
            n_u: 3,
            horizons: vec![10, 20],
            count: 100,
            seed: 500,
            precision: Precision::F32,
            admm: AdmmSettings { rho: 100.0, ..Default::default() },
            time_shift: 10.0,
        }
    }
}

pub fn bench_admm(cfg: &AdmmConfig, header: &RunHeader, out: &OutDir) -> Result<()> {
    let mut rows = Vec::new();
    let mut timing = Vec::new();
    let mut summary = Vec::new();
    for &t in &cfg.horizons {
        let spec = RandomMpcSpec { n_x: cfg.n_x, n_u: cfg.n_u, horizon: t, seed: cfg.seed, ..Default::default() };
        let result = admm_ensemble(&spec, cfg.count, &cfg.admm, cfg.precision)?;
        let methods: [(&str, fn(&AdmmRow) -> (f64, f64, f64)); 2] = [
            ("standard", |r| (r.mu_o_std, r.mu_f_std, r.seconds_std)),
            ("qr", |r| (r.mu_o_qr, r.mu_f_qr, r.seconds_qr)),
        ];
        for r in &result {
            for (name, get) in methods {
                let (mu_o, mu_f, secs) = get(r);
                rows.push(row![t, r.index, r.seed, name, mu_o, mu_f]);
                timing.push(row![t, r.index, name, secs]);
            }
        }
        for (name, get) in methods {
            let vals: Vec<(f64, f64, f64)> = result.iter().map(get).collect();
            let mu_o = median(&vals.iter().map(|v| v.0).collect::<Vec<_>>());
            let mu_f = median(&vals.iter().map(|v| v.1).collect::<Vec<_>>());
            let micros: Vec<f64> = vals.iter().map(|v| v.2 * 1e6).collect();
            let mean_time = shifted_geomean(&micros, cfg.time_shift)?;
            println!("T={t} {name}: median mu_o {mu_o:.3e} mu_f {mu_f:.3e}; time geomean {mean_time:.1} us");
            summary.push(row![t, name, mu_o, mu_f]);
            timing.push(row![t, "geomean", name, mean_time * 1e-6]);
        }
    }
    out.write_csv("admm.csv", header, &["horizon", "index", "seed", "method", "mu_o", "mu_f"], &rows)?;
    out.write_csv("admm_summary.csv", header, &["horizon", "method", "median_mu_o", "median_mu_f"], &summary)?;
    out.write_csv("admm_timing.csv", header, &["horizon", "index", "method", "seconds"], &timing)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QrBenchConfig {
    pub n_x: usize,
    pub n_u: usize,
    pub horizons: Vec<usize>,
    pub repetitions: usize,
    pub seed: u64,
}

impl Default for QrBenchConfig {
    fn default() -> Self {
        Self { n_x: 5, n_u: 3, horizons: vec![1, 2, 5, 10, 20, 40, 80], repetitions: 5, seed: 1 }
    }
}

pub fn qr_bench_cmd(cfg: &QrBenchConfig, header: &RunHeader, out: &OutDir) -> Result<()> {
    let spec = RandomMpcSpec { n_x: cfg.n_x, n_u: cfg.n_u, seed: cfg.seed, ..Default::default() };
    let result = qr_bench(&spec, &cfg.horizons, cfg.repetitions)?;
    let mut rows = Vec::new();
    let mut timing = Vec::new();
    for r in &result {
        let ratio = r.flops_full as f64 / r.flops_mpc as f64;
        println!("T={}: flops structured {} generic {} (ratio {ratio:.2})", r.horizon, r.flops_mpc, r.flops_full);
        rows.push(row![r.horizon, r.flops_mpc, r.flops_full, ratio]);
        timing.push(row![r.horizon, r.seconds_mpc, r.seconds_full]);
    }
    out.write_csv("qr_bench.csv", header, &["horizon", "flops_mpc", "flops_full", "flop_ratio"], &rows)?;
    out.write_csv("qr_bench_timing.csv", header, &["horizon", "seconds_mpc", "seconds_full"], &timing)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReductionKind {
    Exact,
    Svd,
    Ksvd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SectionConfig {
    pub axis_i: usize,
    pub axis_j: usize,
    pub range_i: (f64, f64),
    pub range_j: (f64, f64),
    pub resolution: (usize, usize),
}

impl Default for SectionConfig {
    fn default() -> Self {
        // concentration against the next reference value
        Self { axis_i: 1, axis_j: 4, range_i: (2.0, 9.0), range_j: (2.0, 9.0), resolution: (36, 36) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClosedLoopConfig {
    pub plant: ReactorParams,
    pub controller: ControllerConfig,
    pub initial_concentration: f64,
    pub steps: usize,
    pub reference: StepReference,
    pub reduction: ReductionKind,
    /// Directory written by `train-reduction`; required unless exact.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_dir: Option<PathBuf>,
    pub section: SectionConfig,
}

impl Default for ClosedLoopConfig {
    fn default() -> Self {
        Self {
            plant: ReactorParams::default(),
            controller: ControllerConfig::default(),
            initial_concentration: 8.5695,
            steps: 100,
            reference: StepReference { seed: 3, ..Default::default() },
            reduction: ReductionKind::Exact,
            model_dir: None,
            section: SectionConfig::default(),
        }
    }
}

fn read_model(dir: &std::path::Path, name: &str) -> Result<String> {
    let path = dir.join(name);
    fs::read_to_string(&path).with_context(|| format!("reading model file {}", path.display()))
}

pub fn closedloop(cfg: &ClosedLoopConfig, header: &RunHeader, out: &OutDir) -> Result<()> {
    let model_dir = || cfg.model_dir.as_deref().context("model_dir is required for a reduced controller");
    let reduction = match cfg.reduction {
        ReductionKind::Exact => Reduction::Exact,
        ReductionKind::Svd => {
            let svd = ClusterModel::from_json(&read_model(model_dir()?, SVD_FILE)?)?;
            Reduction::Basis(svd.bases[0].clone())
        }
        ReductionKind::Ksvd => {
            let dir = model_dir()?;
            let clusters = ClusterModel::from_json(&read_model(dir, CLUSTERS_FILE)?)?;
            let bank = ClassifierBank::from_json(&read_model(dir, CLASSIFIER_FILE)?)?;
            Reduction::Clustered { bases: clusters.bases, bank }
        }
    };
    let c0 = cfg.initial_concentration;
    let refs = cfg.reference.generate(cfg.steps + 1, c0);
    let scenario = Scenario::from_equilibrium(cfg.plant, cfg.controller, c0, refs)?;
    let run = closed_loop(&scenario, &reduction)?;

    let traj: Vec<_> = run.log.iter().map(|l| row![l.step, l.t_r, l.c_a, l.t_c, l.reference, l.cluster]).collect();
    out.write_csv("trajectory.csv", header, &["step", "t_r", "c_a", "t_c", "reference", "cluster"], &traj)?;
    let timing: Vec<_> = run.log.iter().map(|l| row![l.step, l.solve_seconds]).collect();
    out.write_csv("trajectory_timing.csv", header, &["step", "solve_seconds"], &timing)?;
    out.write_csv(
        "closedloop_summary.csv",
        header,
        &["reduction", "control_horizon", "steps", "cost"],
        &[row![reduction.name(), cfg.controller.control_horizon, run.log.len(), run.cost]],
    )?;
    if let Reduction::Clustered { bank, .. } = &reduction {
        let s = &cfg.section;
        let grid = SectionGrid { axis_i: s.axis_i, axis_j: s.axis_j, range_i: s.range_i, range_j: s.range_j, resolution: s.resolution };
        let (x0, u0) = (scenario.x0, scenario.u_prev);
        let fixed = theta(&x0, u0, c0, c0);
        let labels = partition_section(bank, &fixed, &grid)?;
        let (xi, xj) = grid.coords();
        let mut rows = Vec::new();
        for (a, line) in xi.iter().zip(&labels) {
            for (b, &label) in xj.iter().zip(line) {
                rows.push(row![*a, *b, label]);
            }
        }
        let cols = [format!("theta_{}", s.axis_i), format!("theta_{}", s.axis_j), "cluster".to_string()];
        out.write_csv("partition_section.csv", header, &cols.iter().map(String::as_str).collect::<Vec<_>>(), &rows)?;
    }
    println!("{}: J = {:.6}", reduction.name(), run.cost);
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub plant: ReactorParams,
    pub controller: ControllerConfig,
    pub initial_concentration: f64,
    pub reference: StepReference,
    pub training: ReductionTraining,
    pub hidden: Vec<usize>,
    pub classifier: TrainSettings,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            plant: ReactorParams::default(),
            controller: ControllerConfig::default(),
            initial_concentration: 8.5695,
            reference: StepReference { seed: 99, ..Default::default() },
            training: ReductionTraining::default(),
            hidden: vec![10, 10, 6],
            classifier: TrainSettings::default(),
        }
    }
}

pub fn train_reduction_cmd(cfg: &TrainConfig, header: &RunHeader, out: &OutDir) -> Result<()> {
    let trained = train_reduction(
        &cfg.plant,
        &cfg.controller,
        cfg.initial_concentration,
        &cfg.reference,
        &cfg.training,
        &cfg.hidden,
        &cfg.classifier,
    )?;
    let clusters = ClusterModel { bases: trained.bases.clone(), ..trained.clusters.clone() };
    let count = trained.samples.len();
    let svd = ClusterModel {
        k: 1,
        m_per_cluster: vec![trained.svd.m()],
        assignments: vec![0; count],
        bases: vec![trained.svd.clone()],
        costs_trace: vec![],
        iterations: 0,
    };
    out.write_text(CLUSTERS_FILE, &clusters.to_json())?;
    out.write_text(SVD_FILE, &svd.to_json())?;
    out.write_text(CLASSIFIER_FILE, &trained.bank.to_json())?;
    out.write_text(SAMPLES_FILE, &serde_json::to_string(&trained.samples)?)?;

    let mut correct = 0;
    let mut rows = Vec::with_capacity(count);
    for (i, th) in trained.samples.thetas.iter().enumerate() {
        let label = trained.clusters.assignments[i];
        let predicted = trained.bank.predict(th)?;
        correct += usize::from(predicted == label);
        rows.push(row![i, label, predicted]);
    }
    out.write_csv("train_assignments.csv", header, &["sample", "cluster", "predicted"], &rows)?;
    println!(
        "{count} samples; cluster sizes {:?}; classifier training accuracy {:.1}%",
        clusters.cluster_sizes(),
        100.0 * correct as f64 / count as f64
    );
    Ok(())
}
