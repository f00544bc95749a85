//! MPC problems as constrained least squares: banded dynamics equalities,
//! standard and prestabilized condensing, the structured QR elimination with
//! flop accounting, slack extension and move blocking.

mod blocking;
mod condense;
mod flops;
mod model;
mod qr_mpc;

pub use blocking::{control_horizon_breakpoints, move_blocking_basis};
pub use condense::{
    condense, condense_qr, condense_qr_with, condense_riccati, condense_standard, extend_slack, extended_q,
    riccati_prestabilize, CondenseMethod, CondensedForm,
};
pub use flops::{
    exact_q_flops, exact_qr_full_flops, exact_r_flops, exact_substitution_flops, flops_closed_form, substitution_start,
    FlopModel,
};
pub use model::{build_cost, build_equality, u_offset, x_offset, LtvModel, MpcProblem, MpcWeights};
pub use qr_mpc::{default_eps0, pattern_violation, q_pattern, qr_mpc, r_pattern, FlopCounter, QrMpcFactors};
