//! Simulation and sensitivity analysis of finite-buffer loss queues.
//!
//! The crate provides four cooperating pieces:
//!
//! * a discrete-event G/D/1/k simulator over seeded arrival traces
//!   ([`queue`], [`trace`]), reporting loss volumes, busy-period statistics,
//!   and the surrogate loss-volume derivative `-s * N`;
//! * an event tracker that predicts the occupancy difference between the
//!   queue at capacity `k` and at `k + 1` from the nominal path alone
//!   ([`perturbation`]);
//! * an exact coupled finite-difference oracle driving both capacities with
//!   common random numbers and checking the difference identities and error
//!   bounds ([`coupled`]);
//! * a fluid-flow companion model with a closed-form trajectory integrator
//!   ([`fluid`]) and a stochastic-approximation optimizer that descends the
//!   surrogate cost derivative ([`optimizer`]).

pub mod coupled;
pub mod fluid;
pub mod optimizer;
pub mod perturbation;
pub mod queue;
pub mod rng;
pub mod trace;

mod error;

pub use coupled::{
    check_bounds, coupled_run, verify_lemma1, BoundsReport, CoupledResult, DeltaDiscrepancy,
    Lemma1Report, Verdict,
};
pub use error::{Error, Result};
pub use fluid::{
    finite_diff_check, fluid_ipa, simulate_fluid, FdCheck, FluidModel, FluidResult, RateSegment,
    TrajectorySegment,
};
pub use optimizer::{run, step, step_size, truncate_displacement, IterateRecord, OptimizerConfig};
pub use perturbation::{predict_delta_x, track, PerturbationLog, Segment};
pub use queue::{
    cost_derivative, ipa_derivative, simulate, BusyPeriodRecord, EventKind, EventLogEntry,
    PrecedingIdle, QueueParams, SimResult,
};
pub use trace::{generate_poisson_trace, load_trace, ArrivalTrace, Provenance};
