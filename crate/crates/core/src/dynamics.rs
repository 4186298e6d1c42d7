//! Quadcopter rigid-body model: translational and rotational equations of
//! motion with 3-2-1 Euler kinematics, an RK4 integrator with zero-order-hold
//! inputs, and the quad-X thrust/torque model mapping motor speeds to a
//! body-frame wrench.
//!
//! Frames: the Earth frame is NED (Z down), the body frame has x forward,
//! y right, z down. Translational velocity `(u, v, w)` is resolved in the
//! body frame.

use thiserror::Error;

use crate::scalar::{lit, wrap_angle, Scalar};

/// Pitch values within this distance of +-pi/2 are treated as singular.
pub const PITCH_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("pitch {theta} rad too close to +-pi/2 (Euler singularity)")]
    PitchSingularity { theta: f64 },
    #[error("state became non-finite")]
    NonFinite,
    #[error("motor {index} speed {omega} rad/s outside [0, {omega_max}]")]
    MotorSpeedOutOfRange {
        index: usize,
        omega: f64,
        omega_max: f64,
    },
    #[error("invalid vehicle parameter `{0}`: must be finite and strictly positive")]
    InvalidParameter(&'static str),
    #[error("time step must be positive and finite")]
    InvalidStep,
}

/// Twelve-state quadcopter state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RigidBodyState<T> {
    pub x: T,
    pub y: T,
    pub z: T,
    pub u: T,
    pub v: T,
    pub w: T,
    pub phi: T,
    pub theta: T,
    pub psi: T,
    pub p: T,
    pub q: T,
    pub r: T,
}

impl<T: Scalar> RigidBodyState<T> {
    pub fn at_rest(x: T, y: T, z: T) -> Self {
        Self {
            x,
            y,
            z,
            ..Self::zero()
        }
    }

    pub fn zero() -> Self {
        Self::from_array([T::zero(); 12])
    }

    pub fn to_array(&self) -> [T; 12] {
        [
            self.x, self.y, self.z, self.u, self.v, self.w, self.phi, self.theta, self.psi,
            self.p, self.q, self.r,
        ]
    }

    pub fn from_array(a: [T; 12]) -> Self {
        Self {
            x: a[0],
            y: a[1],
            z: a[2],
            u: a[3],
            v: a[4],
            w: a[5],
            phi: a[6],
            theta: a[7],
            psi: a[8],
            p: a[9],
            q: a[10],
            r: a[11],
        }
    }

    pub fn position(&self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    pub fn body_velocity(&self) -> [T; 3] {
        [self.u, self.v, self.w]
    }

    pub fn euler(&self) -> [T; 3] {
        [self.phi, self.theta, self.psi]
    }

    pub fn body_rates(&self) -> [T; 3] {
        [self.p, self.q, self.r]
    }

    /// Velocity of the center of mass resolved in the Earth frame.
    pub fn inertial_velocity(&self) -> [T; 3] {
        mat_vec(
            &body_to_earth(self.phi, self.theta, self.psi),
            &self.body_velocity(),
        )
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Tilt of the body z axis away from Earth vertical.
    pub fn tilt(&self) -> T {
        let c = (self.phi.cos() * self.theta.cos()).max(-T::one()).min(T::one());
        c.acos()
    }
}

/// Mass, inertia and actuation geometry of the vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadParams<T> {
    pub mass: T,
    pub jxx: T,
    pub jyy: T,
    pub jzz: T,
    /// Gravitational acceleration, positive down.
    pub gravity: T,
    pub arm_length: T,
    /// Thrust per squared motor speed, N s^2/rad^2.
    pub kf: T,
    /// Reaction torque per squared motor speed, N m s^2/rad^2.
    pub km: T,
    pub omega_max: T,
}

impl<T: Scalar> QuadParams<T> {
    /// Iris-class defaults.
    pub fn iris() -> Self {
        Self {
            mass: lit(1.5),
            jxx: lit(0.029),
            jyy: lit(0.029),
            jzz: lit(0.055),
            gravity: lit(9.81),
            arm_length: lit(0.25),
            kf: lit(5.84e-6),
            km: lit(8.76e-8),
            omega_max: lit(1100.0),
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let fields = [
            (self.mass, "mass"),
            (self.jxx, "jxx"),
            (self.jyy, "jyy"),
            (self.jzz, "jzz"),
            (self.gravity, "gravity"),
            (self.arm_length, "arm_length"),
            (self.kf, "kf"),
            (self.km, "km"),
            (self.omega_max, "omega_max"),
        ];
        for (value, name) in fields {
            if !(value.is_finite() && value > T::zero()) {
                return Err(DynamicsError::InvalidParameter(name));
            }
        }
        Ok(())
    }

    /// Same vehicle with every principal moment of inertia multiplied by `scale`.
    pub fn with_inertia_scale(mut self, scale: T) -> Self {
        self.jxx = self.jxx * scale;
        self.jyy = self.jyy * scale;
        self.jzz = self.jzz * scale;
        self
    }

    /// Largest thrust a single motor can produce.
    pub fn max_motor_thrust(&self) -> T {
        self.kf * self.omega_max * self.omega_max
    }

    pub fn max_total_thrust(&self) -> T {
        lit::<T>(4.0) * self.max_motor_thrust()
    }

    pub fn hover_thrust(&self) -> T {
        self.mass * self.gravity
    }

    /// Moment arm of each motor about the body x and y axes.
    pub(crate) fn moment_arm(&self) -> T {
        self.arm_length / lit::<T>(2.0).sqrt()
    }

    /// Reaction torque per unit thrust.
    pub(crate) fn torque_ratio(&self) -> T {
        self.km / self.kf
    }
}

impl Default for QuadParams<f64> {
    fn default() -> Self {
        Self::iris()
    }
}

/// Body-frame thrust and moments.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench<T> {
    /// Force along the body z axis; negative means upward thrust.
    pub fz: T,
    pub mx: T,
    pub my: T,
    pub mz: T,
}

impl<T: Scalar> Wrench<T> {
    pub fn hover(params: &QuadParams<T>) -> Self {
        Self {
            fz: -params.hover_thrust(),
            mx: T::zero(),
            my: T::zero(),
            mz: T::zero(),
        }
    }
}

/// Rotation taking body-frame components to Earth-frame components for 3-2-1
/// Euler angles.
pub fn body_to_earth<T: Scalar>(phi: T, theta: T, psi: T) -> [[T; 3]; 3] {
    let (sf, cf) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = psi.sin_cos();
    [
        [ct * cp, sf * st * cp - cf * sp, cf * st * cp + sf * sp],
        [ct * sp, sf * st * sp + cf * cp, cf * st * sp - sf * cp],
        [-st, sf * ct, cf * ct],
    ]
}

pub(crate) fn mat_vec<T: Scalar>(m: &[[T; 3]; 3], v: &[T; 3]) -> [T; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

pub fn check_pitch<T: Scalar>(theta: T) -> Result<(), DynamicsError> {
    if !theta.is_finite() {
        return Err(DynamicsError::NonFinite);
    }
    if theta.abs() >= T::FRAC_PI_2() - lit(PITCH_MARGIN) {
        return Err(DynamicsError::PitchSingularity {
            theta: theta.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

/// Time derivative of the twelve states under a constant body wrench.
pub fn derivatives<T: Scalar>(
    state: &RigidBodyState<T>,
    wrench: &Wrench<T>,
    params: &QuadParams<T>,
) -> Result<[T; 12], DynamicsError> {
    check_pitch(state.theta)?;
    let RigidBodyState {
        u,
        v,
        w,
        phi,
        theta,
        psi,
        p,
        q,
        r,
        ..
    } = *state;
    let g = params.gravity;
    let (sf, cf) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    let tt = st / ct;

    let [x_dot, y_dot, z_dot] = mat_vec(&body_to_earth(phi, theta, psi), &[u, v, w]);

    let u_dot = v * r - w * q - st * g;
    let v_dot = -u * r + w * p + sf * ct * g;
    let w_dot = u * q - v * p + cf * ct * g + wrench.fz / params.mass;

    let phi_dot = p + sf * tt * q + cf * tt * r;
    let theta_dot = cf * q - sf * r;
    let psi_dot = (sf * q + cf * r) / ct;

    let p_dot = ((params.jyy - params.jzz) * q * r + wrench.mx) / params.jxx;
    let q_dot = ((params.jzz - params.jxx) * p * r + wrench.my) / params.jyy;
    let r_dot = ((params.jxx - params.jyy) * p * q + wrench.mz) / params.jzz;

    Ok([
        x_dot, y_dot, z_dot, u_dot, v_dot, w_dot, phi_dot, theta_dot, psi_dot, p_dot, q_dot,
        r_dot,
    ])
}

fn offset<T: Scalar>(base: &[T; 12], slope: &[T; 12], h: T) -> RigidBodyState<T> {
    let mut out = *base;
    for (o, s) in out.iter_mut().zip(slope) {
        *o = *o + h * *s;
    }
    RigidBodyState::from_array(out)
}

/// Advances the state by `dt` with classical RK4, holding the wrench constant.
/// Roll and yaw are wrapped into `(-pi, pi]` afterwards.
pub fn step<T: Scalar>(
    state: &RigidBodyState<T>,
    wrench: &Wrench<T>,
    dt: T,
    params: &QuadParams<T>,
) -> Result<RigidBodyState<T>, DynamicsError> {
    if !(dt.is_finite() && dt > T::zero()) {
        return Err(DynamicsError::InvalidStep);
    }
    let half = dt / lit(2.0);
    let y0 = state.to_array();
    let k1 = derivatives(state, wrench, params)?;
    let k2 = derivatives(&offset(&y0, &k1, half), wrench, params)?;
    let k3 = derivatives(&offset(&y0, &k2, half), wrench, params)?;
    let k4 = derivatives(&offset(&y0, &k3, dt), wrench, params)?;

    let sixth = dt / lit(6.0);
    let two = lit::<T>(2.0);
    let mut y1 = y0;
    for i in 0..12 {
        y1[i] = y0[i] + sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
    }
    let mut next = RigidBodyState::from_array(y1);
    if !next.is_finite() {
        return Err(DynamicsError::NonFinite);
    }
    next.phi = wrap_angle(next.phi);
    next.psi = wrap_angle(next.psi);
    check_pitch(next.theta)?;
    Ok(next)
}

/// Quad-X thrust and torque model.
///
/// Motor layout (body x forward, y right): 1 front-right CCW, 2 back-left CCW,
/// 3 front-left CW, 4 back-right CW. Each motor produces thrust `kf w^2`
/// along -z and a reaction torque `km w^2` about z.
pub fn motor_speeds_to_wrench<T: Scalar>(
    omegas: &[T; 4],
    params: &QuadParams<T>,
) -> Result<Wrench<T>, DynamicsError> {
    for (index, &omega) in omegas.iter().enumerate() {
        if !(omega >= T::zero() && omega <= params.omega_max) {
            return Err(DynamicsError::MotorSpeedOutOfRange {
                index,
                omega: omega.to_f64().unwrap_or(f64::NAN),
                omega_max: params.omega_max.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    let t = omegas.map(|w| params.kf * w * w);
    let arm = params.moment_arm();
    Ok(Wrench {
        fz: -(t[0] + t[1] + t[2] + t[3]),
        mx: arm * (-t[0] + t[1] + t[2] - t[3]),
        my: arm * (t[0] - t[1] + t[2] - t[3]),
        mz: params.torque_ratio() * (t[0] + t[1] - t[2] - t[3]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn hover_state() -> RigidBodyState<f64> {
        RigidBodyState::at_rest(1.0, -2.0, -10.0)
    }

    #[test]
    fn hover_is_equilibrium() {
        let params = QuadParams::iris();
        let d = derivatives(&hover_state(), &Wrench::hover(&params), &params).unwrap();
        assert!(d.iter().all(|&v| v == 0.0), "{d:?}");
    }

    #[test]
    fn symmetric_yaw_acceleration() {
        let params = QuadParams {
            jxx: 0.03,
            jyy: 0.03,
            jzz: 0.1,
            ..QuadParams::iris()
        };
        let state = RigidBodyState {
            r: 0.7,
            ..RigidBodyState::zero()
        };
        let wrench = Wrench {
            fz: 0.0,
            mx: 0.0,
            my: 0.0,
            mz: 0.5,
        };
        let d = derivatives(&state, &wrench, &params).unwrap();
        assert_relative_eq!(d[11], 5.0, epsilon = 1e-12);
        assert_eq!(d[9], 0.0);
        assert_eq!(d[10], 0.0);
    }

    #[test]
    fn pitch_singularity_rejected() {
        let params = QuadParams::iris();
        let state = RigidBodyState {
            theta: std::f64::consts::FRAC_PI_2 - 5e-4,
            ..RigidBodyState::zero()
        };
        assert!(matches!(
            derivatives(&state, &Wrench::default(), &params),
            Err(DynamicsError::PitchSingularity { .. })
        ));
    }

    #[test]
    fn free_fall_step_is_exact() {
        let params = QuadParams::iris();
        let next = step(
            &RigidBodyState::zero(),
            &Wrench::default(),
            0.1,
            &params,
        )
        .unwrap();
        assert_relative_eq!(next.w, 0.981, epsilon = 1e-12);
        assert_relative_eq!(next.z, 0.04905, epsilon = 1e-12);
        assert_eq!(next.x, 0.0);
    }

    #[test]
    fn hover_step_is_stationary() {
        let params = QuadParams::iris();
        for dt in [1e-4, 1e-3, 0.05, 1.0] {
            let next = step(&hover_state(), &Wrench::hover(&params), dt, &params).unwrap();
            for (a, b) in next.to_array().iter().zip(hover_state().to_array()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn step_rejects_bad_dt() {
        let params = QuadParams::iris();
        assert_eq!(
            step(&hover_state(), &Wrench::default(), 0.0, &params),
            Err(DynamicsError::InvalidStep)
        );
    }

    #[test]
    fn angles_wrapped_after_step() {
        let params = QuadParams::iris();
        let state = RigidBodyState {
            psi: 3.14,
            r: 1.0,
            ..RigidBodyState::zero()
        };
        let next = step(&state, &Wrench::hover(&params), 0.01, &params).unwrap();
        assert!(next.psi < 0.0 && next.psi > -std::f64::consts::PI);
    }

    #[test]
    fn motor_map_zero_and_equal() {
        let params = QuadParams::iris();
        let zero = motor_speeds_to_wrench(&[0.0; 4], &params).unwrap();
        assert_eq!(zero, Wrench::default());

        let params = QuadParams {
            kf: 1e-5,
            ..QuadParams::iris()
        };
        let equal = motor_speeds_to_wrench(&[500.0; 4], &params).unwrap();
        assert_relative_eq!(equal.fz, -10.0, epsilon = 1e-12);
        assert_relative_eq!(equal.mx, 0.0, epsilon = 1e-12);
        assert_relative_eq!(equal.my, 0.0, epsilon = 1e-12);
        assert_relative_eq!(equal.mz, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn motor_map_geometry_signs() {
        let params = QuadParams::iris();
        // front-right motor alone rolls left and pitches up
        let w = motor_speeds_to_wrench(&[800.0, 0.0, 0.0, 0.0], &params).unwrap();
        assert!(w.mx < 0.0 && w.my > 0.0 && w.mz > 0.0);
    }

    #[test]
    fn motor_map_rejects_out_of_range() {
        let params = QuadParams::iris();
        let err = motor_speeds_to_wrench(&[0.0, 1200.0, 0.0, 0.0], &params).unwrap_err();
        assert!(matches!(err, DynamicsError::MotorSpeedOutOfRange { index: 1, .. }));
        assert!(motor_speeds_to_wrench(&[-1.0, 0.0, 0.0, 0.0], &params).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(QuadParams::<f64>::iris().validate().is_ok());
        let bad = QuadParams {
            jzz: 0.0,
            ..QuadParams::iris()
        };
        assert_eq!(bad.validate(), Err(DynamicsError::InvalidParameter("jzz")));
    }

    #[test]
    fn f32_hover_equilibrium() {
        let params = QuadParams::<f32>::iris();
        let state = RigidBodyState::<f32>::zero();
        let d = derivatives(&state, &Wrench::hover(&params), &params).unwrap();
        assert!(d.iter().all(|v| v.abs() < 1e-5));
    }
}
