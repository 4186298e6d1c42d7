//! Retrospective cost adaptive digital PID controller.
//!
//! A controller of width `n` computes `u_k = phi_k . theta_k` from a regressor
//! built out of past errors, an accumulated error (integrator) and, for the
//! feedforward variant, the current setpoint. After every new error sample the
//! gain vector is moved to the minimizer of the retrospective cost
//!
//! ```text
//! J_k(theta) = sum_i (z_i - sigma (phi_{i-1} theta - u_{i-1}))^2
//!            + (theta - theta_0)' P_0^{-1} (theta - theta_0)
//! ```
//!
//! by a recursive least-squares step on the scaled regressor `sigma phi`, so
//! no matrix inverse is formed online.

use thiserror::Error;

use crate::scalar::{dot, lit, Scalar};

/// Largest regressor width (PID with feedforward).
pub const MAX_WIDTH: usize = 4;

pub type Vector<T> = [T; MAX_WIDTH];
pub type Matrix<T> = [[T; MAX_WIDTH]; MAX_WIDTH];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RcacError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("feedforward value supplied to a {0:?} controller (or missing for PID+FF)")]
    FeedforwardMismatch(ControllerKind),
    #[error("controller diverged at update step {step}")]
    Divergence { step: u64 },
    #[error("prior covariance is not positive definite")]
    SingularPrior,
    #[error("invalid controller configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Controller structure; fixes the regressor layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControllerKind {
    P,
    PI,
    PID,
    PidFf,
}

impl ControllerKind {
    pub const fn width(self) -> usize {
        match self {
            ControllerKind::P => 1,
            ControllerKind::PI => 2,
            ControllerKind::PID => 3,
            ControllerKind::PidFf => 4,
        }
    }

    pub const fn has_feedforward(self) -> bool {
        matches!(self, ControllerKind::PidFf)
    }
}

/// Hyperparameters of one adaptive channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RcacConfig<T> {
    /// Initial gains, also the regularization center.
    pub theta0: Vector<T>,
    /// `P_0 = p0 * I`.
    pub p0: T,
    /// Retrospective sign/scale of the input-to-error path.
    pub sigma: T,
    /// Bound on the magnitude of the accumulated error.
    pub integrator_limit: T,
}

impl<T: Scalar> RcacConfig<T> {
    pub fn new(p0: T, sigma: T) -> Self {
        Self {
            theta0: [T::zero(); MAX_WIDTH],
            p0,
            sigma,
            integrator_limit: lit(1e4),
        }
    }
}

/// Regressor row `phi_k` (only the first `width` entries are meaningful).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regressor<T> {
    values: Vector<T>,
    width: usize,
}

impl<T: Scalar> Regressor<T> {
    pub fn new(values: &[T]) -> Result<Self, RcacError> {
        if values.is_empty() || values.len() > MAX_WIDTH {
            return Err(RcacError::DimensionMismatch {
                expected: MAX_WIDTH,
                got: values.len(),
            });
        }
        let mut buf = [T::zero(); MAX_WIDTH];
        buf[..values.len()].copy_from_slice(values);
        Ok(Self {
            values: buf,
            width: values.len(),
        })
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values[..self.width]
    }

    pub fn width(&self) -> usize {
        self.width
    }
}

/// One adaptive (or frozen) digital controller channel.
#[derive(Debug, Clone, PartialEq)]
pub struct RcacController<T> {
    kind: ControllerKind,
    config: RcacConfig<T>,
    theta: Vector<T>,
    pmat: Matrix<T>,
    /// Accumulated error up to the last pushed sample.
    gamma: T,
    z_prev: T,
    z_prev2: T,
    phi_prev: Vector<T>,
    u_prev: T,
    steps: u64,
    adapting: bool,
}

impl<T: Scalar> RcacController<T> {
    pub fn new(kind: ControllerKind, config: RcacConfig<T>) -> Result<Self, RcacError> {
        if !(config.p0.is_finite() && config.p0 > T::zero()) {
            return Err(RcacError::InvalidConfig("p0 must be positive"));
        }
        if !(config.sigma.is_finite() && config.sigma != T::zero()) {
            return Err(RcacError::InvalidConfig("sigma must be finite and non-zero"));
        }
        if !(config.integrator_limit > T::zero()) {
            return Err(RcacError::InvalidConfig("integrator limit must be positive"));
        }
        if config.theta0.iter().any(|t| !t.is_finite()) {
            return Err(RcacError::InvalidConfig("theta0 must be finite"));
        }
        let n = kind.width();
        let mut pmat = [[T::zero(); MAX_WIDTH]; MAX_WIDTH];
        for (i, row) in pmat.iter_mut().enumerate().take(n) {
            row[i] = config.p0;
        }
        let mut theta = [T::zero(); MAX_WIDTH];
        theta[..n].copy_from_slice(&config.theta0[..n]);
        Ok(Self {
            kind,
            config,
            theta,
            pmat,
            gamma: T::zero(),
            z_prev: T::zero(),
            z_prev2: T::zero(),
            phi_prev: [T::zero(); MAX_WIDTH],
            u_prev: T::zero(),
            steps: 0,
            adapting: true,
        })
    }

    /// Fixed-gain controller with the same regressor structure; never adapts.
    pub fn fixed(kind: ControllerKind, gains: &[T]) -> Result<Self, RcacError> {
        let n = kind.width();
        if gains.len() != n {
            return Err(RcacError::DimensionMismatch {
                expected: n,
                got: gains.len(),
            });
        }
        let mut config = RcacConfig::new(T::one(), T::one());
        config.theta0[..n].copy_from_slice(gains);
        let mut ctrl = Self::new(kind, config)?;
        ctrl.adapting = false;
        Ok(ctrl)
    }

    pub fn kind(&self) -> ControllerKind {
        self.kind
    }

    pub fn config(&self) -> &RcacConfig<T> {
        &self.config
    }

    pub fn theta(&self) -> &[T] {
        &self.theta[..self.kind.width()]
    }

    /// Covariance restricted to the active width.
    pub fn covariance(&self) -> Vec<Vec<T>> {
        let n = self.kind.width();
        self.pmat[..n].iter().map(|row| row[..n].to_vec()).collect()
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn last_output(&self) -> T {
        self.u_prev
    }

    pub fn last_regressor(&self) -> &[T] {
        &self.phi_prev[..self.kind.width()]
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn is_adapting(&self) -> bool {
        self.adapting
    }

    /// Stops (or resumes) gain updates; the regressor history keeps running.
    pub fn set_adapting(&mut self, adapting: bool) {
        self.adapting = adapting;
    }

    /// Overwrites the gain vector, e.g. to freeze a channel at known gains.
    pub fn set_theta(&mut self, gains: &[T]) -> Result<(), RcacError> {
        let n = self.kind.width();
        if gains.len() != n {
            return Err(RcacError::DimensionMismatch {
                expected: n,
                got: gains.len(),
            });
        }
        self.theta[..n].copy_from_slice(gains);
        Ok(())
    }

    /// Sets the error history directly: `z_{k-1}`, `z_{k-2}` and `gamma_{k-1}`.
    pub fn set_history(&mut self, z_prev: T, z_prev2: T, gamma: T) {
        self.z_prev = z_prev;
        self.z_prev2 = z_prev2;
        self.gamma = gamma;
    }

    /// Builds `phi_k`.
    ///
    /// The proportional-only layout uses the current error `z_k`; PI and PID
    /// layouts use the previous error `z_{k-1}`, the accumulated error
    /// `gamma_{k-1}` and the difference `z_{k-1} - z_{k-2}`; the feedforward
    /// layout appends the current setpoint `r_k`.
    pub fn build_regressor(
        &self,
        z_now: T,
        feedforward: Option<T>,
    ) -> Result<Regressor<T>, RcacError> {
        if feedforward.is_some() != self.kind.has_feedforward() {
            return Err(RcacError::FeedforwardMismatch(self.kind));
        }
        let diff = self.z_prev - self.z_prev2;
        match self.kind {
            ControllerKind::P => Regressor::new(&[z_now]),
            ControllerKind::PI => Regressor::new(&[self.z_prev, self.gamma]),
            ControllerKind::PID => Regressor::new(&[self.z_prev, self.gamma, diff]),
            ControllerKind::PidFf => Regressor::new(&[
                self.z_prev,
                self.gamma,
                diff,
                feedforward.unwrap_or_else(T::zero),
            ]),
        }
    }

    /// `u_k = phi_k . theta_k`; remembers `phi_k` and `u_k` for the next update.
    pub fn control_output(&mut self, phi: &Regressor<T>) -> Result<T, RcacError> {
        let n = self.kind.width();
        if phi.width() != n {
            return Err(RcacError::DimensionMismatch {
                expected: n,
                got: phi.width(),
            });
        }
        let u = dot(phi.as_slice(), &self.theta[..n]);
        self.phi_prev = phi.values;
        self.u_prev = u;
        Ok(u)
    }

    /// Replaces the remembered output with the value actually applied
    /// downstream (after saturation).
    pub fn record_applied(&mut self, applied: T) {
        self.u_prev = applied;
    }

    /// Consumes `z_k` together with the stored `phi_{k-1}`, `u_{k-1}` and
    /// moves `(theta, P)` to the minimizer of the retrospective cost.
    pub fn rls_update(&mut self, z: T) -> Result<(), RcacError> {
        self.steps += 1;
        if !self.adapting {
            return Ok(());
        }
        if !z.is_finite() {
            return Err(RcacError::Divergence { step: self.steps });
        }
        let n = self.kind.width();
        let sigma = self.config.sigma;
        let phi = &self.phi_prev[..n];
        if phi.iter().all(|v| *v == T::zero()) {
            return Ok(());
        }
        let mut psi = [T::zero(); MAX_WIDTH];
        for (s, &f) in psi.iter_mut().zip(phi) {
            *s = sigma * f;
        }

        // P psi'
        let mut p_psi = [T::zero(); MAX_WIDTH];
        for (i, out) in p_psi.iter_mut().enumerate().take(n) {
            *out = dot(&self.pmat[i][..n], &psi[..n]);
        }
        let denom = T::one() + dot(&psi[..n], &p_psi[..n]);
        let mut next_p = self.pmat;
        for i in 0..n {
            for j in 0..n {
                next_p[i][j] = self.pmat[i][j] - p_psi[i] * p_psi[j] / denom;
            }
        }
        let two = lit::<T>(2.0);
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = (next_p[i][j] + next_p[j][i]) / two;
                next_p[i][j] = avg;
                next_p[j][i] = avg;
            }
        }

        let residual = z - sigma * (dot(phi, &self.theta[..n]) - self.u_prev);
        let mut next_theta = self.theta;
        for i in 0..n {
            next_theta[i] = self.theta[i] + dot(&next_p[i][..n], &psi[..n]) * residual;
        }

        let finite = next_theta[..n].iter().all(|v| v.is_finite())
            && next_p[..n].iter().all(|row| row[..n].iter().all(|v| v.is_finite()));
        if !finite {
            return Err(RcacError::Divergence { step: self.steps });
        }
        self.theta = next_theta;
        self.pmat = next_p;
        Ok(())
    }

    /// Appends `z_k` to the error history used by the next regressor.
    pub fn push_error(&mut self, z: T) {
        let limit = self.config.integrator_limit;
        self.gamma = (self.gamma + z).max(-limit).min(limit);
        self.z_prev2 = self.z_prev;
        self.z_prev = z;
    }

    /// One control tick: update on `z_k`, build `phi_k`, output `u_k`, push `z_k`.
    pub fn step(&mut self, z: T, feedforward: Option<T>) -> Result<T, RcacError> {
        self.rls_update(z)?;
        let phi = self.build_regressor(z, feedforward)?;
        let u = self.control_output(&phi)?;
        self.push_error(z);
        Ok(u)
    }
}

/// One retrospective data point `(z_k, phi_{k-1}, u_{k-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct RetroSample<T> {
    pub z: T,
    pub phi: Vec<T>,
    pub u: T,
}

/// Cholesky factor of a small SPD matrix; `None` if not positive definite.
fn cholesky<T: Scalar>(a: &[Vec<T>]) -> Option<Vec<Vec<T>>> {
    let n = a.len();
    let mut l = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum = sum - l[i][k] * l[j][k];
            }
            if i == j {
                if !(sum > T::zero()) {
                    return None;
                }
                l[i][i] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Some(l)
}

/// Evaluates the retrospective cost at `theta`.
pub fn retrospective_cost<T: Scalar>(
    theta: &[T],
    history: &[RetroSample<T>],
    theta0: &[T],
    p0: &[Vec<T>],
    sigma: T,
) -> Result<T, RcacError> {
    let n = theta.len();
    if theta0.len() != n {
        return Err(RcacError::DimensionMismatch {
            expected: n,
            got: theta0.len(),
        });
    }
    if p0.len() != n || p0.iter().any(|row| row.len() != n) {
        return Err(RcacError::DimensionMismatch {
            expected: n,
            got: p0.len(),
        });
    }
    let mut cost = T::zero();
    for sample in history {
        if sample.phi.len() != n {
            return Err(RcacError::DimensionMismatch {
                expected: n,
                got: sample.phi.len(),
            });
        }
        let zhat = sample.z - sigma * (dot(&sample.phi, theta) - sample.u);
        cost = cost + zhat * zhat;
    }
    // (theta - theta0)' P0^{-1} (theta - theta0) = |L^{-1} d|^2
    let l = cholesky(p0).ok_or(RcacError::SingularPrior)?;
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut s = theta[i] - theta0[i];
        for k in 0..i {
            s = s - l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    Ok(cost + dot(&y, &y))
}
