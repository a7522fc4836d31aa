//! Planar bearing-only guidance for a relay vehicle with a limited
//! field-of-view sensor.
//!
//! A single relay must keep every agent of a moving group inside a rigid
//! sensing cone, measuring nothing but unit bearings. This crate provides:
//!
//! - [`geometry`]: planar vectors, rotations, bearing projectors, and the
//!   sensing-cone representation with membership and margin queries.
//! - [`controller`]: the switching guidance law. A side indicator over the
//!   cone's chord picks between a one-sided law that chases the bearing
//!   closest to a border and a split law that balances the two borders, plus
//!   the critical gains that make either law hold the cone against agents
//!   moving at a known speed limit.
//! - [`qgamma`]: the capacity profile of the split law — the worst-case
//!   bearing-speed reserve as a function of the second bearing's offset from
//!   its border — with closed-form minimizers, derivatives, and a bruteforce
//!   cross-check.
//! - [`avoidance`]: a reactive safety layer that ramps in a retreat velocity
//!   when agents get close, bounded so the cone is never sacrificed.
//! - [`simulator`]: deterministic fixed-step closed-loop runs with scripted
//!   agent behaviors, trace records, and event extraction, plus ready-made
//!   worst-case and patrol scenarios in [`simulator::scenarios`].
//!
//! All angles are radians; rotations are counterclockwise-positive; every
//! speed is capped at the configured maximum with direction preserved.

pub mod avoidance;
pub mod controller;
pub mod geometry;
pub mod qgamma;
pub mod simulator;

pub use avoidance::{AvoidanceError, AvoidanceTerm, ProximityState, SafetyConfig};
pub use controller::{
    chi_n, control_general, control_single, critical_gain, BearingSet, Branch, ControlDecision,
    GainSpec,
};
pub use geometry::{
    angular_margin, bearing, in_fov, make_fov, projector, FovConfig, GeometryError, Mat2, UnitVec2,
    Vec2,
};
pub use qgamma::{phi_star, q_gamma, q_star, GammaBranch, QGammaError, QGammaResult};
pub use simulator::{
    run, step, AgentModel, Scenario, SimError, SimEvents, SimTrace, StepRecord, WorldState,
};
