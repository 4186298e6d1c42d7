//! Telemetry rows and their CSV encoding.

use std::io::Write;

use crate::autopilot::{CascadeSetpoints, SaturationFlags, GAIN_COUNT};
use crate::dynamics::RigidBodyState;
use crate::mission::Phase;

/// Gain column names in [`crate::autopilot::Autopilot::gains`] order.
pub const GAIN_NAMES: [&str; GAIN_COUNT] = [
    "pos_x_kp", "pos_y_kp", "pos_z_kp",
    "att_roll_kp", "att_pitch_kp", "att_yaw_kp",
    "vel_x_kp", "vel_x_ki", "vel_y_kp", "vel_y_ki", "vel_z_kp", "vel_z_ki",
    "rate_roll_kp", "rate_roll_ki", "rate_roll_kd", "rate_roll_kff",
    "rate_pitch_kp", "rate_pitch_ki", "rate_pitch_kd", "rate_pitch_kff",
    "rate_yaw_kp", "rate_yaw_ki", "rate_yaw_kd", "rate_yaw_kff",
];

const STATE_NAMES: [&str; 12] = [
    "x", "y", "z", "u", "v", "w", "phi", "theta", "psi", "p", "q", "r",
];

const SETPOINT_NAMES: [&str; 19] = [
    "x_sp", "y_sp", "z_sp",
    "vx_sp", "vy_sp", "vz_sp",
    "fx_sp", "fy_sp", "fz_sp",
    "phi_sp", "theta_sp", "psi_sp",
    "p_sp", "q_sp", "r_sp",
    "pdot_sp", "qdot_sp", "rdot_sp",
    "thrust_sp",
];

/// Snapshot of the closed loop at one logged step.
#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryRecord {
    pub t: f64,
    pub state: RigidBodyState<f64>,
    pub setpoints: CascadeSetpoints<f64>,
    pub motors: [f64; 4],
    pub gains: [f64; GAIN_COUNT],
    pub phase: Phase,
    pub saturation: SaturationFlags,
}

impl TelemetryRecord {
    pub fn header() -> Vec<String> {
        let mut cols = vec!["t".to_string()];
        cols.extend(STATE_NAMES.iter().map(|s| s.to_string()));
        cols.extend(SETPOINT_NAMES.iter().map(|s| s.to_string()));
        cols.extend((1..=4).map(|i| format!("omega{i}")));
        cols.extend(GAIN_NAMES.iter().map(|s| s.to_string()));
        cols.push("phase".into());
        cols.extend(["sat_vel", "sat_tilt", "sat_motor"].map(String::from));
        cols
    }

    pub fn numeric_fields(&self) -> Vec<f64> {
        let sp = &self.setpoints;
        let mut v = Vec::with_capacity(70);
        v.push(self.t);
        v.extend(self.state.to_array());
        for triple in [
            sp.pos_sp,
            sp.vel_sp,
            sp.force_sp,
            sp.att_sp,
            sp.rate_sp,
            sp.angacc_sp,
        ] {
            v.extend(triple);
        }
        v.push(sp.thrust_sp);
        v.extend(self.motors);
        v.extend(self.gains);
        v
    }

    pub fn is_finite(&self) -> bool {
        self.numeric_fields().iter().all(|x| x.is_finite())
    }

    fn row(&self) -> Vec<String> {
        let mut row: Vec<String> = self.numeric_fields().iter().map(|x| x.to_string()).collect();
        row.push(self.phase.label());
        for flag in [
            self.saturation.velocity_clamp,
            self.saturation.tilt_clamp,
            self.saturation.motor,
        ] {
            row.push(u8::from(flag).to_string());
        }
        row
    }

    /// Yaw tracking error wrapped into `(-pi, pi]`.
    pub fn yaw_error(&self) -> f64 {
        crate::scalar::wrap_angle(self.setpoints.att_sp[2] - self.state.psi)
    }

    pub fn position_error(&self) -> [f64; 3] {
        let p = self.state.position();
        let sp = self.setpoints.pos_sp;
        [sp[0] - p[0], sp[1] - p[1], sp[2] - p[2]]
    }
}

/// Writes the header and all records as CSV.
pub fn write_csv<W: Write>(writer: W, records: &[TelemetryRecord]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TelemetryRecord::header())?;
    for rec in records {
        w.write_record(rec.row())?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_bytes(records: &[TelemetryRecord]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(&mut buf, records).expect("writing to memory cannot fail");
    buf
}
