//! Static maps of the cascade: force/yaw to attitude, Euler rates to body
//! rates, and the quad-X mixer.

use crate::dynamics::{check_pitch, DynamicsError, QuadParams};
use crate::scalar::{lit, Scalar};

/// Output of the force-to-attitude map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeCommand<T> {
    /// Roll, pitch, yaw setpoint.
    pub attitude: [T; 3],
    /// Collective thrust magnitude, N.
    pub thrust: T,
    /// The requested tilt exceeded the limit and was shrunk.
    pub tilt_limited: bool,
    /// The force was degenerate and the previous attitude was held.
    pub held: bool,
}

/// Converts an inertial force setpoint and a yaw setpoint into Euler angle
/// setpoints plus collective thrust.
///
/// Thrust can only act upward, so the vertical component is floored at zero
/// and the horizontal part is shrunk until the tilt is at most `tilt_max`.
/// Forces at or below `eps` hold the previous roll/pitch with zero thrust.
pub fn force_yaw_to_attitude<T: Scalar>(
    force: [T; 3],
    psi_sp: T,
    tilt_max: T,
    previous: [T; 3],
    eps: T,
) -> AttitudeCommand<T> {
    let up = (-force[2]).max(T::zero());
    let mut fx = force[0];
    let mut fy = force[1];
    let horizontal = (fx * fx + fy * fy).sqrt();
    let max_horizontal = up * tilt_max.tan();
    let mut tilt_limited = false;
    if horizontal > max_horizontal {
        tilt_limited = true;
        if horizontal > T::zero() {
            let shrink = max_horizontal / horizontal;
            fx = fx * shrink;
            fy = fy * shrink;
        }
    }
    let thrust = (fx * fx + fy * fy + up * up).sqrt();
    if !(thrust > eps) {
        return AttitudeCommand {
            attitude: [previous[0], previous[1], psi_sp],
            thrust: T::zero(),
            tilt_limited,
            held: true,
        };
    }
    // desired body-down axis, then rotated into the heading frame
    let dx = -fx / thrust;
    let dy = -fy / thrust;
    let dz = up / thrust;
    let (sp, cp) = psi_sp.sin_cos();
    let hx = cp * dx + sp * dy;
    let hy = -sp * dx + cp * dy;
    let theta = hx.atan2(dz);
    let phi = (-hy).max(-T::one()).min(T::one()).asin();
    AttitudeCommand {
        attitude: [phi, theta, psi_sp],
        thrust,
        tilt_limited,
        held: false,
    }
}

/// The part of an inertial force request the airframe can produce: upward
/// thrust only, tilt at most `tilt_max`, collective thrust at most `max_thrust`.
pub fn realizable_force<T: Scalar>(force: [T; 3], tilt_max: T, max_thrust: T) -> [T; 3] {
    let up = (-force[2]).max(T::zero());
    let horizontal = (force[0] * force[0] + force[1] * force[1]).sqrt();
    let max_horizontal = up * tilt_max.tan();
    let shrink = if horizontal > max_horizontal {
        max_horizontal / horizontal
    } else {
        T::one()
    };
    let f = [force[0] * shrink, force[1] * shrink, -up];
    let norm = (f[0] * f[0] + f[1] * f[1] + f[2] * f[2]).sqrt();
    if norm > max_thrust {
        let s = max_thrust / norm;
        f.map(|c| c * s)
    } else {
        f
    }
}

/// Maps Euler angle rates to body angular rates at the measured attitude.
pub fn euler_rates_to_body_rates<T: Scalar>(
    attitude: [T; 3],
    euler_rates: [T; 3],
) -> Result<[T; 3], DynamicsError> {
    check_pitch(attitude[1])?;
    let (sf, cf) = attitude[0].sin_cos();
    let (st, ct) = attitude[1].sin_cos();
    let [phi_dot, theta_dot, psi_dot] = euler_rates;
    Ok([
        phi_dot - st * psi_dot,
        cf * theta_dot + sf * ct * psi_dot,
        -sf * theta_dot + cf * ct * psi_dot,
    ])
}

/// Mixer result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorCommand<T> {
    pub omegas: [T; 4],
    /// At least one motor hit zero or `omega_max`.
    pub saturated: bool,
}

/// Allocates collective thrust and the moments implied by an angular
/// acceleration command (through the nominal inertia) to motor speeds.
///
/// Feasible requests are inverted exactly. Otherwise the yaw share is scaled
/// down first, then any motor still out of range is clipped.
pub fn mix<T: Scalar>(angacc: [T; 3], thrust: T, nominal: &QuadParams<T>) -> MotorCommand<T> {
    let mx = nominal.jxx * angacc[0];
    let my = nominal.jyy * angacc[1];
    let mz = nominal.jzz * angacc[2];
    let four = lit::<T>(4.0);
    let f = thrust.max(T::zero()) / four;
    let a = mx / (four * nominal.moment_arm());
    let b = my / (four * nominal.moment_arm());
    let c = mz / (four * nominal.torque_ratio());
    // inverse of the quad-X allocation matrix (its columns are orthogonal)
    let base = [f - a + b, f + a - b, f + a + b, f - a - b];
    let yaw = [c, c, -c, -c];
    // Yaw has the weakest authority and the lowest priority: when the request
    // is infeasible, shrink the yaw share before clipping individual motors.
    let t_max = nominal.max_motor_thrust();
    let mut yaw_scale = T::one();
    for (b0, dy) in base.iter().zip(yaw) {
        let t = *b0 + dy;
        if t > t_max && dy > T::zero() {
            yaw_scale = yaw_scale.min(((t_max - *b0) / dy).max(T::zero()));
        } else if t < T::zero() && dy < T::zero() {
            yaw_scale = yaw_scale.min((-*b0 / dy).max(T::zero()));
        }
    }
    let thrusts: [T; 4] = std::array::from_fn(|i| base[i] + yaw_scale * yaw[i]);
    let mut saturated = yaw_scale < T::one();
    let omegas = thrusts.map(|t| {
        let sq = t / nominal.kf;
        if sq < T::zero() {
            saturated = true;
            return T::zero();
        }
        let omega = sq.sqrt();
        if omega > nominal.omega_max {
            saturated = true;
            nominal.omega_max
        } else {
            omega
        }
    });
    MotorCommand { omegas, saturated }
}
