//! Cascaded multicopter autopilot.
//!
//! Position P (25 Hz) -> velocity PI/PID (50 Hz) -> force/yaw static map ->
//! attitude P -> Euler-rate map -> rate PID+FF -> mixer (all 250 Hz). Every
//! controller is an [`RcacController`]; the fixed-gain baseline uses the same
//! regressor structure with adaptation switched off, so the two modes differ
//! only in where the gains come from.

pub mod gains;
pub mod maps;

use thiserror::Error;

use crate::dynamics::{motor_speeds_to_wrench, DynamicsError, QuadParams, RigidBodyState};
use crate::rcac::{ControllerKind, RcacController, RcacError};
use crate::scalar::{lit, wrap_angle, Scalar};

pub use gains::{AdaptiveHyperparams, Pid, StockGains};
pub use maps::{euler_rates_to_body_rates, force_yaw_to_attitude, mix, realizable_force, AttitudeCommand, MotorCommand};

/// Outer position loop period, s.
pub const POSITION_PERIOD: f64 = 0.04;
/// Velocity loop period, s.
pub const VELOCITY_PERIOD: f64 = 0.02;
/// Attitude, rate and mixer period, s.
pub const INNER_PERIOD: f64 = 0.004;

/// Number of adaptive gains reported per tick.
pub const GAIN_COUNT: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Position,
    Velocity,
    Attitude,
    Rate,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AutopilotError {
    #[error("{stage:?} loop: {source}")]
    Controller {
        stage: Stage,
        #[source]
        source: RcacError,
    },
    #[error("{stage:?} loop: {source}")]
    Kinematics {
        stage: Stage,
        #[source]
        source: DynamicsError,
    },
    #[error("simulation step {0} s does not divide the loop periods")]
    Schedule(f64),
}

/// Setpoints at every level of the cascade.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CascadeSetpoints<T> {
    pub pos_sp: [T; 3],
    /// Earth-frame velocity setpoint.
    pub vel_sp: [T; 3],
    /// Earth-frame force setpoint.
    pub force_sp: [T; 3],
    pub att_sp: [T; 3],
    pub euler_rate_sp: [T; 3],
    pub rate_sp: [T; 3],
    pub angacc_sp: [T; 3],
    pub thrust_sp: T,
}

/// Saturation events, counted per tick of the stage that saturated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SaturationCounters {
    pub velocity_clamp: u64,
    pub tilt_clamp: u64,
    pub motor: u64,
}

/// Saturations active after the latest tick of each stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SaturationFlags {
    pub velocity_clamp: bool,
    pub tilt_clamp: bool,
    pub motor: bool,
}

/// Where the controller gains come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AutopilotMode<T> {
    FixedGain(StockGains<T>),
    Adaptive(AdaptiveHyperparams<T>),
}

impl<T: Scalar> AutopilotMode<T> {
    pub fn is_adaptive(&self) -> bool {
        matches!(self, AutopilotMode::Adaptive(_))
    }
}

/// Limits and options shared by both modes.
///
/// The velocity and rate controllers work in normalized units (acceleration
/// and normalized torque). Their outputs are multiplied by
/// `velocity_output_scale` (N per m/s^2) and `rate_output_scale`
/// (rad/s^2 per unit torque) before reaching the static map and the mixer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutopilotConfig<T> {
    /// Vehicle parameters the controller believes in.
    pub nominal: QuadParams<T>,
    pub velocity_output_scale: T,
    pub rate_output_scale: [T; 3],
    pub vel_max_xy: T,
    pub vel_max_z: T,
    pub tilt_max: T,
    /// Per-axis limit on the Euler-rate setpoints, rad/s.
    pub euler_rate_max: [T; 3],
    /// Adds `-m g` along Earth z to the force setpoint.
    pub gravity_ff: bool,
    pub dt_sim: T,
}

impl<T: Scalar> AutopilotConfig<T> {
    pub fn new(nominal: QuadParams<T>) -> Self {
        Self {
            nominal,
            velocity_output_scale: nominal.mass,
            rate_output_scale: gains::rate_authority(&nominal),
            vel_max_xy: lit(12.0),
            vel_max_z: lit(3.0),
            tilt_max: lit(45f64.to_radians()),
            euler_rate_max: [
                lit(220f64.to_radians()),
                lit(220f64.to_radians()),
                lit(200f64.to_radians()),
            ],
            gravity_ff: false,
            dt_sim: lit(0.001),
        }
    }
}

/// Position and yaw setpoint handed over by the mission planner.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MissionSetpoint<T> {
    pub position: [T; 3],
    pub yaw: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Schedule {
    position: u64,
    velocity: u64,
    inner: u64,
}

impl Schedule {
    fn new(dt_sim: f64) -> Result<Self, AutopilotError> {
        let ticks = |period: f64| -> Result<u64, AutopilotError> {
            if !(dt_sim > 0.0) {
                return Err(AutopilotError::Schedule(dt_sim));
            }
            let n = (period / dt_sim).round();
            if n < 1.0 || ((n * dt_sim) - period).abs() > 1e-9 * period {
                return Err(AutopilotError::Schedule(dt_sim));
            }
            Ok(n as u64)
        };
        Ok(Self {
            position: ticks(POSITION_PERIOD)?,
            velocity: ticks(VELOCITY_PERIOD)?,
            inner: ticks(INNER_PERIOD)?,
        })
    }
}

/// Which stages ran on a given tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TickReport {
    pub position: bool,
    pub velocity: bool,
    pub inner: bool,
}

fn controllers<T: Scalar>(
    mode: &AutopilotMode<T>,
) -> Result<[[RcacController<T>; 3]; 4], RcacError> {
    let make = |kind, cfg| RcacController::new(kind, cfg);
    let triple = |f: &dyn Fn(usize) -> Result<RcacController<T>, RcacError>| -> Result<[RcacController<T>; 3], RcacError> {
        Ok([f(0)?, f(1)?, f(2)?])
    };
    match mode {
        AutopilotMode::Adaptive(h) => Ok([
            triple(&|_| make(ControllerKind::P, h.position))?,
            triple(&|_| make(ControllerKind::PI, h.velocity))?,
            triple(&|_| make(ControllerKind::P, h.attitude))?,
            triple(&|_| make(ControllerKind::PidFf, h.rate))?,
        ]),
        AutopilotMode::FixedGain(stock) => {
            let vel_dt = lit::<T>(VELOCITY_PERIOD);
            let inner_dt = lit::<T>(INNER_PERIOD);
            Ok([
                triple(&|i| RcacController::fixed(ControllerKind::P, &[stock.position_p[i]]))?,
                triple(&|i| {
                    RcacController::fixed(
                        ControllerKind::PID,
                        &stock.velocity_discrete(i, vel_dt),
                    )
                })?,
                triple(&|i| RcacController::fixed(ControllerKind::P, &[stock.attitude_p[i]]))?,
                triple(&|i| {
                    RcacController::fixed(ControllerKind::PidFf, &stock.rate_discrete(i, inner_dt))
                })?,
            ])
        }
    }
}

/// The full cascade with its multi-rate schedule and held stage outputs.
#[derive(Debug, Clone)]
pub struct Autopilot<T> {
    config: AutopilotConfig<T>,
    mode: AutopilotMode<T>,
    schedule: Schedule,
    position: [RcacController<T>; 3],
    velocity: [RcacController<T>; 3],
    attitude: [RcacController<T>; 3],
    rate: [RcacController<T>; 3],
    setpoints: CascadeSetpoints<T>,
    motors: [T; 4],
    counters: SaturationCounters,
    flags: SaturationFlags,
}

impl<T: Scalar> Autopilot<T> {
    pub fn new(mode: AutopilotMode<T>, config: AutopilotConfig<T>) -> Result<Self, AutopilotError> {
        let dt = config.dt_sim.to_f64().unwrap_or(f64::NAN);
        let schedule = Schedule::new(dt)?;
        let [position, velocity, attitude, rate] =
            controllers(&mode).map_err(|source| AutopilotError::Controller {
                stage: Stage::Position,
                source,
            })?;
        Ok(Self {
            config,
            mode,
            schedule,
            position,
            velocity,
            attitude,
            rate,
            setpoints: CascadeSetpoints::default(),
            motors: [T::zero(); 4],
            counters: SaturationCounters::default(),
            flags: SaturationFlags::default(),
        })
    }

    pub fn config(&self) -> &AutopilotConfig<T> {
        &self.config
    }

    pub fn mode(&self) -> &AutopilotMode<T> {
        &self.mode
    }

    pub fn setpoints(&self) -> &CascadeSetpoints<T> {
        &self.setpoints
    }

    pub fn motors(&self) -> [T; 4] {
        self.motors
    }

    pub fn saturation_counters(&self) -> SaturationCounters {
        self.counters
    }

    pub fn saturation_flags(&self) -> SaturationFlags {
        self.flags
    }

    pub fn position_controllers(&self) -> &[RcacController<T>; 3] {
        &self.position
    }

    pub fn velocity_controllers(&self) -> &[RcacController<T>; 3] {
        &self.velocity
    }

    pub fn attitude_controllers(&self) -> &[RcacController<T>; 3] {
        &self.attitude
    }

    pub fn rate_controllers(&self) -> &[RcacController<T>; 3] {
        &self.rate
    }

    /// Mutable access to all twelve channels, position first.
    pub fn controllers_mut(&mut self) -> impl Iterator<Item = &mut RcacController<T>> {
        self.position
            .iter_mut()
            .chain(self.velocity.iter_mut())
            .chain(self.attitude.iter_mut())
            .chain(self.rate.iter_mut())
    }

    /// Gains in telemetry order: position P (3), attitude P (3), velocity
    /// `[kp, ki]` per axis (6), rate `[kp, ki, kd, kff]` per axis (12).
    pub fn gains(&self) -> [T; GAIN_COUNT] {
        let mut out = [T::zero(); GAIN_COUNT];
        let mut i = 0;
        for c in self.position.iter().chain(self.attitude.iter()) {
            out[i] = c.theta()[0];
            i += 1;
        }
        for c in &self.velocity {
            out[i..i + 2].copy_from_slice(&c.theta()[..2]);
            i += 2;
        }
        for c in &self.rate {
            out[i..i + 4].copy_from_slice(c.theta());
            i += 4;
        }
        out
    }

    /// Position loop: returns the clamped Earth-frame velocity setpoint.
    pub fn position_loop(&mut self, pos_sp: [T; 3], pos_meas: [T; 3]) -> Result<[T; 3], AutopilotError> {
        let limits = [self.config.vel_max_xy, self.config.vel_max_xy, self.config.vel_max_z];
        let mut out = [T::zero(); 3];
        let mut clamped = false;
        for axis in 0..3 {
            let ctrl = &mut self.position[axis];
            let raw = ctrl
                .step(pos_sp[axis] - pos_meas[axis], None)
                .map_err(|source| AutopilotError::Controller {
                    stage: Stage::Position,
                    source,
                })?;
            let applied = raw.max(-limits[axis]).min(limits[axis]);
            if applied != raw {
                clamped = true;
                ctrl.record_applied(applied);
            }
            out[axis] = applied;
        }
        self.flags.velocity_clamp = clamped;
        if clamped {
            self.counters.velocity_clamp += 1;
        }
        self.setpoints.pos_sp = pos_sp;
        self.setpoints.vel_sp = out;
        Ok(out)
    }

    /// Velocity loop on Earth-frame velocities; returns the force setpoint.
    pub fn velocity_loop(&mut self, vel_sp: [T; 3], vel_meas: [T; 3]) -> Result<[T; 3], AutopilotError> {
        let scale = self.config.velocity_output_scale;
        let hover = if self.config.gravity_ff {
            self.config.nominal.hover_thrust()
        } else {
            T::zero()
        };
        let mut out = [T::zero(); 3];
        for axis in 0..3 {
            out[axis] = scale
                * self.velocity[axis]
                    .step(vel_sp[axis] - vel_meas[axis], None)
                    .map_err(|source| AutopilotError::Controller {
                        stage: Stage::Velocity,
                        source,
                    })?;
        }
        out[2] = out[2] - hover;
        let applied = realizable_force(
            out,
            self.config.tilt_max,
            self.config.nominal.max_total_thrust(),
        );
        for axis in 0..3 {
            if applied[axis] != out[axis] {
                let f = if axis == 2 { applied[2] + hover } else { applied[axis] };
                self.velocity[axis].record_applied(f / scale);
            }
        }
        self.setpoints.force_sp = out;
        Ok(out)
    }

    /// Static map from force and yaw setpoints to attitude and thrust setpoints.
    pub fn attitude_target(&mut self, force_sp: [T; 3], psi_sp: T) -> AttitudeCommand<T> {
        let cmd = force_yaw_to_attitude(
            force_sp,
            psi_sp,
            self.config.tilt_max,
            self.setpoints.att_sp,
            lit(1e-6),
        );
        let max_thrust = self.config.nominal.max_total_thrust();
        self.setpoints.att_sp = cmd.attitude;
        self.setpoints.thrust_sp = cmd.thrust.min(max_thrust);
        self.flags.tilt_clamp = cmd.tilt_limited;
        if cmd.tilt_limited {
            self.counters.tilt_clamp += 1;
        }
        cmd
    }

    /// Attitude loop; yaw error is wrapped. Returns Euler-rate setpoints.
    pub fn attitude_loop(&mut self, att_sp: [T; 3], att_meas: [T; 3]) -> Result<[T; 3], AutopilotError> {
        let errors = [
            att_sp[0] - att_meas[0],
            att_sp[1] - att_meas[1],
            wrap_angle(att_sp[2] - att_meas[2]),
        ];
        let mut out = [T::zero(); 3];
        for axis in 0..3 {
            let ctrl = &mut self.attitude[axis];
            let raw = ctrl
                .step(errors[axis], None)
                .map_err(|source| AutopilotError::Controller {
                    stage: Stage::Attitude,
                    source,
                })?;
            let limit = self.config.euler_rate_max[axis];
            let applied = raw.max(-limit).min(limit);
            if applied != raw {
                ctrl.record_applied(applied);
            }
            out[axis] = applied;
        }
        self.setpoints.euler_rate_sp = out;
        Ok(out)
    }

    /// Rate loop with setpoint feedforward; returns angular acceleration setpoints.
    pub fn rate_loop(&mut self, rate_sp: [T; 3], rate_meas: [T; 3]) -> Result<[T; 3], AutopilotError> {
        let mut out = [T::zero(); 3];
        for axis in 0..3 {
            out[axis] = self.config.rate_output_scale[axis]
                * self.rate[axis]
                    .step(rate_sp[axis] - rate_meas[axis], Some(rate_sp[axis]))
                    .map_err(|source| AutopilotError::Controller {
                        stage: Stage::Rate,
                        source,
                    })?;
        }
        self.setpoints.rate_sp = rate_sp;
        self.setpoints.angacc_sp = out;
        Ok(out)
    }

    /// Runs every stage due at simulation tick `tick` and returns the latest
    /// motor command. Stage outputs are held between their own ticks.
    pub fn step(
        &mut self,
        tick: u64,
        state: &RigidBodyState<T>,
        mission: &MissionSetpoint<T>,
    ) -> Result<([T; 4], TickReport), AutopilotError> {
        let mut report = TickReport::default();
        if tick % self.schedule.position == 0 {
            self.position_loop(mission.position, state.position())?;
            report.position = true;
        }
        if tick % self.schedule.velocity == 0 {
            let vel_sp = self.setpoints.vel_sp;
            self.velocity_loop(vel_sp, state.inertial_velocity())?;
            report.velocity = true;
        }
        if tick % self.schedule.inner == 0 {
            let force_sp = self.setpoints.force_sp;
            let cmd = self.attitude_target(force_sp, mission.yaw);
            let euler = state.euler();
            let euler_rate_sp = self.attitude_loop(cmd.attitude, euler)?;
            let rate_sp = euler_rates_to_body_rates(euler, euler_rate_sp)
                .map_err(|source| AutopilotError::Kinematics {
                    stage: Stage::Attitude,
                    source,
                })?;
            let angacc = self.rate_loop(rate_sp, state.body_rates())?;
            let nominal = self.config.nominal;
            let motors = mix(angacc, self.setpoints.thrust_sp, &nominal);
            self.flags.motor = motors.saturated;
            if motors.saturated {
                self.counters.motor += 1;
                // tell the rate controllers what the motors can deliver
                if let Ok(w) = motor_speeds_to_wrench(&motors.omegas, &nominal) {
                    let realized = [w.mx / nominal.jxx, w.my / nominal.jyy, w.mz / nominal.jzz];
                    for axis in 0..3 {
                        if realized[axis] != angacc[axis] {
                            let scale = self.config.rate_output_scale[axis];
                            self.rate[axis].record_applied(realized[axis] / scale);
                        }
                    }
                }
            }
            self.motors = motors.omegas;
            report.inner = true;
        }
        Ok((self.motors, report))
    }
}
