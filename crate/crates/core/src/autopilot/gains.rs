//! Gain tables: the fixed stock baseline and the adaptive hyperparameters.

use crate::dynamics::QuadParams;
use crate::rcac::RcacConfig;
use crate::scalar::{lit, Scalar};

/// Continuous-time PID gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pid<T> {
    pub kp: T,
    pub ki: T,
    pub kd: T,
}

impl<T: Scalar> Pid<T> {
    pub fn new(kp: f64, ki: f64, kd: f64) -> Self {
        Self {
            kp: lit(kp),
            ki: lit(ki),
            kd: lit(kd),
        }
    }

    /// Per-tick gains for the regressor `[z, sum z, delta z]` sampled every `dt`.
    pub fn discrete(&self, dt: T) -> [T; 3] {
        [self.kp, self.ki * dt, self.kd / dt]
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            kp: self.kp * s,
            ki: self.ki * s,
            kd: self.kd * s,
        }
    }
}

/// Fixed-gain baseline modelled on the stock multicopter defaults.
///
/// Gains are in the normalized units the cascade controllers work in:
/// velocity gains produce acceleration, rate gains produce normalized torque.
/// See [`super::AutopilotConfig`] for the conversion to physical units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StockGains<T> {
    pub position_p: [T; 3],
    pub velocity_xy: Pid<T>,
    pub velocity_z: Pid<T>,
    pub attitude_p: [T; 3],
    pub rate_roll_pitch: Pid<T>,
    pub rate_yaw: Pid<T>,
    pub rate_ff: [T; 3],
}

impl<T: Scalar> StockGains<T> {
    pub fn iris() -> Self {
        Self {
            position_p: [lit(0.95), lit(0.95), lit(1.0)],
            velocity_xy: Pid::new(1.8, 0.4, 0.2),
            velocity_z: Pid::new(4.0, 2.0, 0.0),
            attitude_p: [lit(6.5), lit(6.5), lit(2.8)],
            rate_roll_pitch: Pid::new(0.15, 0.2, 0.003),
            rate_yaw: Pid::new(0.2, 0.1, 0.0),
            rate_ff: [T::zero(); 3],
        }
    }

    /// Discrete velocity PID gains for one axis.
    pub fn velocity_discrete(&self, axis: usize, dt: T) -> [T; 3] {
        let pid = if axis == 2 {
            self.velocity_z
        } else {
            self.velocity_xy
        };
        pid.discrete(dt)
    }

    /// Discrete rate PID+FF gains for one axis.
    pub fn rate_discrete(&self, axis: usize, dt: T) -> [T; 4] {
        let pid = if axis == 2 {
            self.rate_yaw
        } else {
            self.rate_roll_pitch
        };
        let [kp, ki, kd] = pid.discrete(dt);
        [kp, ki, kd, self.rate_ff[axis]]
    }
}

/// Angular acceleration per unit normalized torque: the acceleration reached
/// when one motor pair goes to full thrust and the opposing pair to zero.
pub fn rate_authority<T: Scalar>(nominal: &QuadParams<T>) -> [T; 3] {
    let pair = lit::<T>(2.0) * nominal.max_motor_thrust();
    [
        pair * nominal.moment_arm() / nominal.jxx,
        pair * nominal.moment_arm() / nominal.jyy,
        pair * nominal.torque_ratio() / nominal.jzz,
    ]
}

/// Adaptive hyperparameters for each of the four loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveHyperparams<T> {
    pub position: RcacConfig<T>,
    pub velocity: RcacConfig<T>,
    pub attitude: RcacConfig<T>,
    pub rate: RcacConfig<T>,
}

impl<T: Scalar> AdaptiveHyperparams<T> {
    /// Zero initial gains, unit sigma, `P0 = 0.01` except the attitude loop (`P0 = 1`).
    pub fn nominal() -> Self {
        let small = RcacConfig::new(lit(0.01), T::one());
        Self {
            position: small,
            velocity: small,
            attitude: RcacConfig::new(T::one(), T::one()),
            rate: small,
        }
    }

    /// Multiplies every `P0` by `alpha_p` and every `sigma` by `alpha_n`.
    pub fn scaled(mut self, alpha_p: T, alpha_n: T) -> Self {
        for cfg in [
            &mut self.position,
            &mut self.velocity,
            &mut self.attitude,
            &mut self.rate,
        ] {
            cfg.p0 = cfg.p0 * alpha_p;
            cfg.sigma = cfg.sigma * alpha_n;
        }
        self
    }

    pub fn with_integrator_limit(mut self, limit: T) -> Self {
        for cfg in [
            &mut self.position,
            &mut self.velocity,
            &mut self.attitude,
            &mut self.rate,
        ] {
            cfg.integrator_limit = limit;
        }
        self
    }
}

impl<T: Scalar> Default for AdaptiveHyperparams<T> {
    fn default() -> Self {
        Self::nominal()
    }
}
