//! Scalar summaries of a flight.

use serde::Serialize;

use super::telemetry::TelemetryRecord;
use super::HarnessError;
use crate::autopilot::GAIN_COUNT;
use crate::mission::Phase;

/// Yaw error must leave this band on the opposite side to count as a crossing.
pub const YAW_CROSSING_BAND: f64 = 0.01;

/// Fraction of the flight, counted from the end, used for gain settling.
pub const SETTLING_WINDOW: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunMetrics {
    pub mission_completed: bool,
    pub completion_time: Option<f64>,
    /// Time of the last valid telemetry row.
    pub t_end: f64,
    /// Per-axis RMS position error over en-route samples.
    pub rms_pos_err: [f64; 3],
    pub rms_yaw_err: f64,
    pub yaw_zero_crossings: usize,
    pub max_tilt: f64,
    /// Largest deviation of any gain from its final value over the settling window.
    pub gain_settling: f64,
    pub diverged: bool,
}

impl RunMetrics {
    /// Metrics of a run that produced no telemetry.
    pub fn empty() -> Self {
        Self {
            mission_completed: false,
            completion_time: None,
            t_end: 0.0,
            rms_pos_err: [0.0; 3],
            rms_yaw_err: 0.0,
            yaw_zero_crossings: 0,
            max_tilt: 0.0,
            gain_settling: 0.0,
            diverged: false,
        }
    }

    /// Root of the summed per-axis mean squares.
    pub fn rms_pos_err_total(&self) -> f64 {
        self.rms_pos_err.iter().map(|e| e * e).sum::<f64>().sqrt()
    }

    pub fn csv_header() -> &'static str {
        "label,mission_completed,completion_time,t_end,rms_pos_err_x,rms_pos_err_y,rms_pos_err_z,rms_yaw_err,yaw_zero_crossings,max_tilt,gain_settling,diverged"
    }

    pub fn csv_row(&self, label: &str) -> String {
        format!(
            "{label},{},{},{},{},{},{},{},{},{},{},{}",
            self.mission_completed,
            self.completion_time.map(|t| t.to_string()).unwrap_or_default(),
            self.t_end,
            self.rms_pos_err[0],
            self.rms_pos_err[1],
            self.rms_pos_err[2],
            self.rms_yaw_err,
            self.yaw_zero_crossings,
            self.max_tilt,
            self.gain_settling,
            self.diverged
        )
    }

    pub fn summary(&self, label: &str) -> String {
        let completion = self
            .completion_time
            .map(|t| format!("{t:.2} s"))
            .unwrap_or_else(|| "not completed".into());
        format!(
            "{label:<24} completion {completion:<14} rms pos [{:.3} {:.3} {:.3}] m  rms yaw {:.4} rad  yaw crossings {}  max tilt {:.1} deg{}",
            self.rms_pos_err[0],
            self.rms_pos_err[1],
            self.rms_pos_err[2],
            self.rms_yaw_err,
            self.yaw_zero_crossings,
            self.max_tilt.to_degrees(),
            if self.diverged { "  DIVERGED" } else { "" }
        )
    }
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

fn is_enroute(rec: &TelemetryRecord) -> bool {
    matches!(rec.phase, Phase::Enroute(_))
}

/// Sign changes of a signal with hysteresis: the value has to cross from
/// below `-band` to above `band` (or back).
pub fn zero_crossings(values: impl Iterator<Item = f64>, band: f64) -> usize {
    let mut last_side = 0i8;
    let mut count = 0;
    for v in values {
        let side = if v > band {
            1
        } else if v < -band {
            -1
        } else {
            0
        };
        if side != 0 {
            if last_side != 0 && side != last_side {
                count += 1;
            }
            last_side = side;
        }
    }
    count
}

/// Per-gain largest deviation from the final value over the last
/// [`SETTLING_WINDOW`] of the flight, paired with the final value.
pub fn gain_variation(records: &[TelemetryRecord]) -> [(f64, f64); GAIN_COUNT] {
    let mut out = [(0.0, 0.0); GAIN_COUNT];
    let Some(last) = records.last() else {
        return out;
    };
    let t0 = records[0].t;
    let start = last.t - SETTLING_WINDOW * (last.t - t0);
    for (j, slot) in out.iter_mut().enumerate() {
        let fin = last.gains[j];
        let var = records
            .iter()
            .filter(|r| r.t >= start)
            .map(|r| (r.gains[j] - fin).abs())
            .fold(0.0, f64::max);
        *slot = (var, fin);
    }
    out
}

/// RMS of the per-axis position error over the records of one phase.
pub fn rms_pos_err_in_phase(records: &[TelemetryRecord], phase: Phase) -> [f64; 3] {
    std::array::from_fn(|axis| {
        rms(records
            .iter()
            .filter(|r| r.phase == phase)
            .map(|r| r.position_error()[axis]))
    })
}

/// Summarizes a telemetry log. Rows from the first non-finite one onwards are
/// treated as a divergence and excluded.
pub fn compute_metrics(records: &[TelemetryRecord]) -> Result<RunMetrics, HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::EmptyTelemetry);
    }
    let valid_len = records
        .iter()
        .position(|r| !r.is_finite())
        .unwrap_or(records.len());
    let diverged = valid_len < records.len();
    let valid = &records[..valid_len];
    if valid.is_empty() {
        return Ok(RunMetrics {
            diverged: true,
            t_end: records[0].t,
            ..RunMetrics::empty()
        });
    }

    let completion_time = valid.iter().find(|r| r.phase == Phase::Done).map(|r| r.t);
    let rms_pos_err = std::array::from_fn(|axis| {
        rms(valid
            .iter()
            .filter(|r| is_enroute(r))
            .map(|r| r.position_error()[axis]))
    });
    let rms_yaw_err = rms(valid.iter().filter(|r| is_enroute(r)).map(|r| r.yaw_error()));
    let yaw_zero_crossings = zero_crossings(
        valid.iter().filter(|r| is_enroute(r)).map(|r| r.yaw_error()),
        YAW_CROSSING_BAND,
    );
    let max_tilt = valid.iter().map(|r| r.state.tilt()).fold(0.0, f64::max);
    let gain_settling = gain_variation(valid)
        .iter()
        .map(|(v, _)| *v)
        .fold(0.0, f64::max);

    Ok(RunMetrics {
        mission_completed: completion_time.is_some() && !diverged,
        completion_time,
        t_end: valid[valid.len() - 1].t,
        rms_pos_err,
        rms_yaw_err,
        yaw_zero_crossings,
        max_tilt,
        gain_settling,
        diverged,
    })
}
