//! Solver toolkit for bell-time and bus-route start scheduling.
//!
//! The pipeline: generate or load an [`instance::Instance`], build its
//! time-indexed relaxation with [`lp::build_lp3s`], solve it with the
//! bundled vertex simplex in [`simplex`], round the fractional solution to a
//! feasible [`schedule::StartSchedule`] via [`rounding`], and compare
//! against the greedy bisection in [`greedy`] and the exhaustive oracle in
//! [`exact`].

pub mod exact;
pub mod greedy;
pub mod instance;
pub mod lp;
pub mod rounding;
pub mod schedule;
pub mod simplex;

pub use instance::{Family, GeneratorSpec, Instance, InstanceStats, School, SizeClass};
pub use schedule::{HorizonMode, StartSchedule};
