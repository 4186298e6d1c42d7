//! Oracles shared by the integration test targets.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Matrix3, Rotation3, Vector3};
use rand::Rng;
use rcac_autopilot::dynamics::{QuadParams, RigidBodyState, Wrench};
use rcac_autopilot::rcac::{ControllerKind, RcacConfig, RcacController, Regressor, MAX_WIDTH};

/// Independent model: rotation from nalgebra, vector cross products for the
/// Coriolis and gyroscopic terms, explicit Euler-rate matrix.
pub fn dynamics_oracle(s: &RigidBodyState<f64>, w: &Wrench<f64>, p: &QuadParams<f64>) -> [f64; 12] {
    let rot = Rotation3::from_euler_angles(s.phi, s.theta, s.psi);
    let vel = Vector3::new(s.u, s.v, s.w);
    let omega = Vector3::new(s.p, s.q, s.r);
    let pos_dot = rot * vel;
    let gravity_body = rot.inverse() * Vector3::new(0.0, 0.0, p.gravity);
    let vel_dot = -omega.cross(&vel) + gravity_body + Vector3::new(0.0, 0.0, w.fz / p.mass);
    let (sf, cf) = s.phi.sin_cos();
    let (tt, ct) = (s.theta.tan(), s.theta.cos());
    let kin = Matrix3::new(
        1.0, sf * tt, cf * tt, //
        0.0, cf, -sf, //
        0.0, sf / ct, cf / ct,
    );
    let euler_dot = kin * omega;
    let j = Matrix3::from_diagonal(&Vector3::new(p.jxx, p.jyy, p.jzz));
    let moments = Vector3::new(w.mx, w.my, w.mz);
    let omega_dot = j.try_inverse().unwrap() * (moments - omega.cross(&(j * omega)));
    let mut out = [0.0; 12];
    out[0..3].copy_from_slice(pos_dot.as_slice());
    out[3..6].copy_from_slice(vel_dot.as_slice());
    out[6..9].copy_from_slice(euler_dot.as_slice());
    out[9..12].copy_from_slice(omega_dot.as_slice());
    out
}

pub fn random_params(rng: &mut impl Rng) -> QuadParams<f64> {
    QuadParams {
        mass: rng.gen_range(0.5..3.0),
        jxx: rng.gen_range(0.01..0.1),
        jyy: rng.gen_range(0.01..0.1),
        jzz: rng.gen_range(0.02..0.2),
        ..QuadParams::iris()
    }
}

pub fn random_state(rng: &mut impl Rng) -> RigidBodyState<f64> {
    let pi = std::f64::consts::PI;
    let mut a = [0.0; 12];
    for v in a.iter_mut().take(3) {
        *v = rng.gen_range(-100.0..100.0);
    }
    for v in a.iter_mut().skip(3).take(3) {
        *v = rng.gen_range(-10.0..10.0);
    }
    a[6] = rng.gen_range(-pi..pi);
    a[7] = rng.gen_range(-1.4..1.4);
    a[8] = rng.gen_range(-pi..pi);
    for v in a.iter_mut().skip(9) {
        *v = rng.gen_range(-5.0..5.0);
    }
    RigidBodyState::from_array(a)
}

/// One retrospective data point: error `z_k` with the regressor and applied
/// output of the previous step.
#[derive(Debug, Clone)]
pub struct Sample {
    pub z: f64,
    pub phi: Vec<f64>,
    pub u: f64,
}

pub fn kind_of_width(n: usize) -> ControllerKind {
    match n {
        1 => ControllerKind::P,
        2 => ControllerKind::PI,
        3 => ControllerKind::PID,
        4 => ControllerKind::PidFf,
        _ => panic!("no controller of width {n}"),
    }
}

pub fn random_samples(rng: &mut impl Rng, n: usize, len: usize) -> Vec<Sample> {
    (0..len)
        .map(|_| Sample {
            z: rng.gen_range(-2.0..2.0),
            phi: (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect(),
            u: rng.gen_range(-2.0..2.0),
        })
        .collect()
}

/// Closed-form minimizer of the regularized retrospective cost
/// `sum (z - sigma (phi theta - u))^2 + (theta - theta0)' P0^-1 (theta - theta0)`
/// with `P0 = p0 I`, from its normal equations. Also returns the inverse
/// of the normal matrix, which is what the recursive covariance tracks.
pub fn batch_minimizer(
    samples: &[Sample],
    theta0: &[f64],
    p0: f64,
    sigma: f64,
) -> (DVector<f64>, DMatrix<f64>) {
    let n = theta0.len();
    let mut a = DMatrix::<f64>::identity(n, n) / p0;
    let mut b = DVector::from_column_slice(theta0) / p0;
    for s in samples {
        let phi = DVector::from_column_slice(&s.phi);
        a += sigma * sigma * &phi * phi.transpose();
        b += sigma * (s.z + sigma * s.u) * &phi;
    }
    let chol = a.clone().cholesky().expect("normal matrix is SPD");
    (chol.solve(&b), chol.inverse())
}

pub fn controller(n: usize, theta0: &[f64], p0: f64, sigma: f64) -> RcacController<f64> {
    let mut config = RcacConfig::new(p0, sigma);
    config.theta0[..n].copy_from_slice(theta0);
    RcacController::new(kind_of_width(n), config).unwrap()
}

/// Feeds the samples through the recursive update; returns the gains and
/// covariance after each sample.
pub fn run_recursive(
    ctrl: &mut RcacController<f64>,
    samples: &[Sample],
) -> Vec<(Vec<f64>, Vec<Vec<f64>>)> {
    samples
        .iter()
        .map(|s| {
            ctrl.control_output(&Regressor::new(&s.phi).unwrap()).unwrap();
            ctrl.record_applied(s.u);
            ctrl.rls_update(s.z).unwrap();
            (ctrl.theta().to_vec(), ctrl.covariance())
        })
        .collect()
}

pub fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

/// Straight transcription of the two recursive update equations, used to
/// hand-iterate the cascade loops.
#[derive(Debug, Clone)]
pub struct ReferenceRls {
    pub theta: DVector<f64>,
    pub p: DMatrix<f64>,
    pub sigma: f64,
}

impl ReferenceRls {
    pub fn new(n: usize, p0: f64, sigma: f64) -> Self {
        assert!(n <= MAX_WIDTH);
        Self {
            theta: DVector::zeros(n),
            p: DMatrix::identity(n, n) * p0,
            sigma,
        }
    }

    pub fn update(&mut self, z: f64, phi: &[f64], u: f64) {
        let phi = DVector::from_column_slice(phi);
        if phi.iter().all(|v| *v == 0.0) {
            return;
        }
        let psi = self.sigma * &phi;
        let p_psi = &self.p * &psi;
        let denom = 1.0 + psi.dot(&p_psi);
        self.p = &self.p - &p_psi * p_psi.transpose() / denom;
        let residual = z - self.sigma * (phi.dot(&self.theta) - u);
        self.theta = &self.theta + &self.p * psi * residual;
    }

    pub fn output(&self, phi: &[f64]) -> f64 {
        DVector::from_column_slice(phi).dot(&self.theta)
    }
}
