//! Random problem families, a reactor benchmark plant with its receding-horizon
//! loop, and the ensemble experiments built on them.

mod closed_loop;
mod experiments;
mod mpc_gen;
mod pcls_gen;
mod plant;

pub use closed_loop::{
    build_step_problem, closed_loop, reduce_step, theta, train_reduction, with_slack, ClosedLoopRun, ControllerConfig,
    Reduction, ReductionTraining, Scenario, StepLog, StepReference, TrainedReduction,
};
pub use experiments::{
    admm_ensemble, basis_study_data, condition_ensemble, evaluate_reduction, fit_reduction, median, metrics_union,
    qr_bench, quantile, solve_restricted, AdmmRow, BasisRow, BasisStudyConfig, ConditionRow, Precision, QrBenchRow,
};
pub use mpc_gen::{constraints_per_step, gen_mpc, random_dynamics, random_orthogonal, RandomMpcSpec, Stability};
pub use pcls_gen::{gen_pcls, PclsFamily, RandomPclsSpec};
pub use plant::ReactorParams;
