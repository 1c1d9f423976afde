//! Single queue-processor production line whose machine fails at a rate
//! driven by the workload processed since its last repair.
//!
//! The line is a piecewise deterministic Markov process with state
//! `(w, r, q, ρ)`: workload since repair, machine status, queue length and
//! the density of goods on the processor. Between jumps the density follows
//! `∂t ρ + ∂x min(vρ, r c) = 0`, fed by the queue; jumps toggle `r` and a
//! repair resets `w`. Trajectories are sampled by thinning and aggregated by
//! Monte Carlo.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the double-precision instantiation used by the CLI.

// `!(x >= 0)` comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ensemble;
pub mod error;
pub mod flow;
mod gamma;
pub mod model;
pub mod pdmp;
pub mod scalar;

pub use ensemble::{
    estimate_moments, repair_count_histogram, run_ensemble, EnsembleConfig, EnsembleStats,
    MomentEstimates, SeriesMoments,
};
pub use error::{Result, SimError};
pub use flow::{flow_advance, queue_step, upwind_step, workload_step, FlowStepReport};
pub use gamma::gamma;
pub use model::{
    characteristic_failure_time, failure_rate, mean_time_to_failure, repair_rate, transition_rate,
    InflowProfile, InitialWorkload, ModelParams, Scenario, Status, SystemState,
};
pub use pdmp::{
    accept_candidate, apply_jump, first_failure_survival_oracle, propose_next_candidate,
    rate_bound, simulate_trajectory, JumpEvent, JumpKind, TrajectoryRecord,
};
pub use scalar::Scalar;

pub type ModelParams64 = ModelParams<f64>;
pub type Scenario64 = Scenario<f64>;
pub type SystemState64 = SystemState<f64>;
pub type TrajectoryRecord64 = TrajectoryRecord<f64>;
pub type EnsembleStats64 = EnsembleStats<f64>;

pub type ModelParams32 = ModelParams<f32>;
pub type Scenario32 = Scenario<f32>;
pub type SystemState32 = SystemState<f32>;
