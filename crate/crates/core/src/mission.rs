//! Waypoint mission: takeoff above home, visit waypoints in order, land at
//! home. Setpoints are step commands.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::RigidBodyState;

/// Landing is complete once the vehicle is this close to the ground plane.
pub const LANDED_TOLERANCE: f64 = 0.05;

/// Square circuit shipped with the crate.
pub const MISSION_SQUARE: &str = include_str!("../missions/mission_square.toml");

#[derive(Debug, Error)]
pub enum MissionError {
    #[error("mission has no waypoints")]
    Empty,
    #[error("waypoint {index}: {reason}")]
    InvalidWaypoint { index: usize, reason: &'static str },
    #[error("invalid mission field `{0}`")]
    InvalidField(&'static str),
    #[error("cannot read mission file: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse mission: {0}")]
    Parse(#[from] toml::de::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
    /// NED, negative above ground.
    pub z: f64,
    /// Yaw setpoint, rad.
    pub psi: f64,
    pub acceptance_radius: f64,
    /// Dwell inside the acceptance sphere before advancing, s.
    pub hold_time: f64,
}

impl Waypoint {
    pub fn position(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mission {
    /// Home `(x, y)`, on the ground plane `z = 0`.
    pub home: [f64; 2],
    /// Takeoff altitude above home, positive up.
    pub takeoff_alt: f64,
    /// Landing descent rate, m/s.
    pub descent_rate: f64,
    pub waypoints: Vec<Waypoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Phase {
    Takeoff,
    Enroute(usize),
    Land,
    Done,
}

impl Phase {
    /// Monotone ordering index: takeoff 0, waypoint i -> i + 1, land, done.
    pub fn ordinal(&self, waypoints: usize) -> usize {
        match *self {
            Phase::Takeoff => 0,
            Phase::Enroute(i) => i + 1,
            Phase::Land => waypoints + 1,
            Phase::Done => waypoints + 2,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Phase::Takeoff => "takeoff".into(),
            Phase::Enroute(i) => format!("wp{i}"),
            Phase::Land => "land".into(),
            Phase::Done => "done".into(),
        }
    }
}

/// Sequencing state carried between calls to [`Mission::setpoint_at`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MissionProgress {
    pub phase: Phase,
    /// Time the vehicle entered the current acceptance sphere.
    pub dwell_start: Option<f64>,
    /// `(t, z)` when landing began.
    pub land_start: Option<(f64, f64)>,
}

impl Default for MissionProgress {
    fn default() -> Self {
        Self {
            phase: Phase::Takeoff,
            dwell_start: None,
            land_start: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MissionCommand {
    pub position: [f64; 3],
    pub psi: f64,
    pub phase: Phase,
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

impl Mission {
    pub fn from_toml(text: &str) -> Result<Self, MissionError> {
        let mission: Mission = toml::from_str(text)?;
        mission.validate()?;
        Ok(mission)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, MissionError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn square() -> Self {
        Self::from_toml(MISSION_SQUARE).expect("shipped mission is valid")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("mission serializes")
    }

    pub fn validate(&self) -> Result<(), MissionError> {
        if self.waypoints.is_empty() {
            return Err(MissionError::Empty);
        }
        if !(self.takeoff_alt.is_finite() && self.takeoff_alt > 0.0) {
            return Err(MissionError::InvalidField("takeoff_alt"));
        }
        if !(self.descent_rate.is_finite() && self.descent_rate > 0.0) {
            return Err(MissionError::InvalidField("descent_rate"));
        }
        if !self.home.iter().all(|v| v.is_finite()) {
            return Err(MissionError::InvalidField("home"));
        }
        for (index, wp) in self.waypoints.iter().enumerate() {
            let all_finite = [wp.x, wp.y, wp.z, wp.psi, wp.hold_time]
                .iter()
                .all(|v| v.is_finite());
            if !all_finite {
                return Err(MissionError::InvalidWaypoint {
                    index,
                    reason: "non-finite field",
                });
            }
            if !(wp.acceptance_radius > 0.0 && wp.acceptance_radius.is_finite()) {
                return Err(MissionError::InvalidWaypoint {
                    index,
                    reason: "acceptance_radius must be positive",
                });
            }
            if wp.hold_time < 0.0 {
                return Err(MissionError::InvalidWaypoint {
                    index,
                    reason: "hold_time must be non-negative",
                });
            }
        }
        Ok(())
    }

    fn takeoff_point(&self) -> [f64; 3] {
        [self.home[0], self.home[1], -self.takeoff_alt]
    }

    /// Horizontal path length through takeoff point, waypoints and back home.
    pub fn path_length(&self) -> f64 {
        let mut points = vec![self.takeoff_point()];
        points.extend(self.waypoints.iter().map(Waypoint::position));
        let last = *points.last().unwrap();
        points.push([self.home[0], self.home[1], last[2]]);
        points.windows(2).map(|w| distance(w[0], w[1])).sum()
    }

    /// Position/yaw setpoint at time `t`, plus the updated progress.
    pub fn setpoint_at(
        &self,
        progress: &MissionProgress,
        state: &RigidBodyState<f64>,
        t: f64,
    ) -> (MissionCommand, MissionProgress) {
        let pos = state.position();
        let mut next = *progress;
        loop {
            match next.phase {
                Phase::Takeoff => {
                    let target = self.takeoff_point();
                    let radius = self.waypoints[0].acceptance_radius;
                    if distance(pos, target) <= radius {
                        next = MissionProgress {
                            phase: Phase::Enroute(0),
                            ..MissionProgress::default()
                        };
                        continue;
                    }
                    let cmd = MissionCommand {
                        position: target,
                        psi: 0.0,
                        phase: Phase::Takeoff,
                    };
                    return (cmd, next);
                }
                Phase::Enroute(i) => {
                    let wp = self.waypoints[i];
                    let inside = distance(pos, wp.position()) <= wp.acceptance_radius;
                    next.dwell_start = match (inside, next.dwell_start) {
                        (true, None) => Some(t),
                        (true, start) => start,
                        (false, _) => None,
                    };
                    if let Some(start) = next.dwell_start {
                        if t - start >= wp.hold_time {
                            next = MissionProgress {
                                phase: if i + 1 < self.waypoints.len() {
                                    Phase::Enroute(i + 1)
                                } else {
                                    Phase::Land
                                },
                                ..MissionProgress::default()
                            };
                            continue;
                        }
                    }
                    let cmd = MissionCommand {
                        position: wp.position(),
                        psi: wp.psi,
                        phase: Phase::Enroute(i),
                    };
                    return (cmd, next);
                }
                Phase::Land | Phase::Done => {
                    let last = self.waypoints[self.waypoints.len() - 1];
                    let (t0, z0) = *next.land_start.get_or_insert((t, last.z));
                    let z_sp = (z0 + self.descent_rate * (t - t0)).min(0.0);
                    if next.phase == Phase::Land && pos[2].abs() < LANDED_TOLERANCE && z_sp >= 0.0 {
                        next.phase = Phase::Done;
                    }
                    let cmd = MissionCommand {
                        position: [self.home[0], self.home[1], z_sp],
                        psi: last.psi,
                        phase: next.phase,
                    };
                    return (cmd, next);
                }
            }
        }
    }
}
