//! Deterministic quadcopter flight simulator with a retrospective-cost
//! adaptive autopilot.
//!
//! * [`dynamics`]: rigid-body plant, RK4 integration, motor thrust model.
//! * [`rcac`]: adaptive digital P/PI/PID/PID+FF controller updated by
//!   recursive least squares.
//! * [`autopilot`]: multi-rate cascade (position, velocity, attitude, rate,
//!   mixer) in fixed-gain or adaptive mode.
//! * [`mission`]: takeoff / waypoint / landing setpoint sequencing.
//! * [`harness`]: scenario runner, telemetry CSV, metrics, sweeps.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the harness uses.

pub mod autopilot;
pub mod dynamics;
pub mod harness;
pub mod mission;
pub mod rcac;
pub mod scalar;

pub use scalar::Scalar;

pub type State = dynamics::RigidBodyState<f64>;
pub type Params = dynamics::QuadParams<f64>;
pub type Wrench = dynamics::Wrench<f64>;
pub type Controller = rcac::RcacController<f64>;
pub type Autopilot = autopilot::Autopilot<f64>;
pub type Mode = autopilot::AutopilotMode<f64>;

pub type StateF32 = dynamics::RigidBodyState<f32>;
pub type ParamsF32 = dynamics::QuadParams<f32>;
pub type ControllerF32 = rcac::RcacController<f32>;
pub type AutopilotF32 = autopilot::Autopilot<f32>;
