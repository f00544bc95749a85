//! Problem representation, equality elimination and basis restriction.

mod basis;
mod elim;
mod instance;
mod soft;

pub use basis::{apply_basis, feasible_basis, tau_unscale_basis, Basis, ReducedV};
pub use elim::{
    default_rank_eps, eliminate_equalities, eliminate_equalities_rank_deficient, eliminate_preserving,
    feasibility_tol, is_feasible, tau_scale_samples, tau_unscale_offset, unconstrained_solution,
    EqElimination, PreservingElimination,
};
pub use instance::{PClsInstance, ReducedPcls, Transform};
pub use soft::{soften, SoftenedPcls};
