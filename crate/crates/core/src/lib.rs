//! Design evaluation and flight simulation for indoor miniature blimps.
//!
//! The crate is organised around the workflow of building a blimp:
//!
//! - [`design`]: the design description (thrusters, envelope, masses, drag)
//!   and its on-disk file format.
//! - [`feasibility`]: motion-primitive checking over bounded thrusts and the
//!   envelope volume / buoyancy / payload budget.
//! - [`performance`]: steady-state drag and terminal velocity.
//! - [`sim`]: time-stepped flight dynamics, trajectories and interactive
//!   simulation sessions.
//! - [`mapping`]: the control-channel command strings, the joystick mixer and
//!   the remap procedure that aligns software channels with real wiring.

// `!(x > 0.0)` is the intended spelling: NaN must fail positivity checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod feasibility;
pub mod mapping;
pub mod performance;
pub mod sim;

pub use design::{parse_design, DesignError, DesignSpec, ThrusterModel, ThrusterSpec};
pub use feasibility::{check_design, FeasibilityReport, Primitive, PrimitiveCertificate, Wrench};
pub use mapping::{parse_command, ChannelMapping, MappingCommand, Plant, RemapSession};
pub use performance::{max_performance, terminal_velocity, Attitude, PerformanceReport};
pub use sim::{SimConfig, SimState};

/// Three-vector used throughout for positions, forces and velocities.
pub type Vec3 = nalgebra::Vector3<f64>;
