//! Closed-loop experiment runner: mission -> autopilot -> plant at a fixed
//! simulation step, with decimated telemetry, metrics, sweeps and the
//! inertia comparison.
//!
//! The whole system is deterministic; there is no random seed anywhere.

pub mod config;
pub mod metrics;
pub mod telemetry;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::autopilot::{
    AdaptiveHyperparams, Autopilot, AutopilotConfig, AutopilotError, AutopilotMode,
    MissionSetpoint, StockGains,
};
use crate::dynamics::{self, DynamicsError, QuadParams, RigidBodyState};
use crate::mission::{Mission, MissionError, MissionProgress, Phase};

pub use config::{ModeName, ScenarioConfig};
pub use metrics::{compute_metrics, RunMetrics};
pub use telemetry::TelemetryRecord;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Mission(#[from] MissionError),
    #[error(transparent)]
    Autopilot(#[from] AutopilotError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("telemetry is empty")]
    EmptyTelemetry,
}

/// Why the simulation loop stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    MissionDone,
    TimeLimit,
    Diverged(String),
}

/// In-memory result of one simulated flight.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: ScenarioConfig,
    pub records: Vec<TelemetryRecord>,
    pub metrics: RunMetrics,
    pub stop: StopReason,
}

impl RunOutput {
    pub fn telemetry_csv(&self) -> Vec<u8> {
        telemetry::to_csv_bytes(&self.records)
    }
}

/// Plant and controller parameters for a scenario.
pub fn vehicle(config: &ScenarioConfig) -> (QuadParams<f64>, AutopilotConfig<f64>) {
    let nominal = QuadParams::iris();
    let plant = nominal.with_inertia_scale(config.inertia_scale);
    let mut ap = AutopilotConfig::new(nominal);
    ap.dt_sim = config.dt_sim;
    ap.gravity_ff = config.gravity_ff_enabled();
    (plant, ap)
}

pub fn autopilot_mode(config: &ScenarioConfig) -> AutopilotMode<f64> {
    match config.mode {
        ModeName::Fixed => AutopilotMode::FixedGain(StockGains::iris()),
        ModeName::Adaptive => AutopilotMode::Adaptive(
            AdaptiveHyperparams::nominal().scaled(config.alpha_p, config.alpha_n),
        ),
    }
}

pub fn load_mission(config: &ScenarioConfig) -> Result<Mission, HarnessError> {
    Ok(match &config.mission {
        Some(path) => Mission::from_file(path)?,
        None => Mission::square(),
    })
}

/// Simulates one flight from rest at home until the mission is done, the
/// time limit is hit or the loop diverges.
pub fn simulate(config: &ScenarioConfig, mission: &Mission) -> Result<RunOutput, HarnessError> {
    config.validate()?;
    mission.validate()?;
    let (plant, ap_config) = vehicle(config);
    plant.validate()?;
    let mode = autopilot_mode(config);
    let mut autopilot = Autopilot::new(mode, ap_config)?;

    let dt = config.dt_sim;
    let n_max = (config.t_max / dt).round() as u64;
    let decimation = config.decimation;
    let mut state = RigidBodyState::at_rest(mission.home[0], mission.home[1], 0.0);
    let mut progress = MissionProgress::default();
    let mut records = Vec::with_capacity((n_max / decimation + 1) as usize);
    let mut stop = StopReason::TimeLimit;

    if config.t_max > 0.0 {
        for n in 0..=n_max {
            let t = n as f64 * dt;
            let (cmd, next) = mission.setpoint_at(&progress, &state, t);
            progress = next;
            let sp = MissionSetpoint {
                position: cmd.position,
                yaw: cmd.psi,
            };
            let motors = match autopilot.step(n, &state, &sp) {
                Ok((motors, _)) => motors,
                Err(e) => {
                    stop = StopReason::Diverged(e.to_string());
                    break;
                }
            };
            if n % decimation == 0 {
                records.push(TelemetryRecord {
                    t,
                    state,
                    setpoints: *autopilot.setpoints(),
                    motors,
                    gains: autopilot.gains(),
                    phase: progress.phase,
                    saturation: autopilot.saturation_flags(),
                });
                if progress.phase == Phase::Done {
                    stop = StopReason::MissionDone;
                    break;
                }
            }
            if n == n_max {
                break;
            }
            let advanced = dynamics::motor_speeds_to_wrench(&motors, &plant)
                .and_then(|wrench| dynamics::step(&state, &wrench, dt, &plant));
            match advanced {
                Ok(next) => state = next,
                Err(e) => {
                    stop = StopReason::Diverged(e.to_string());
                    break;
                }
            }
        }
    }

    let mut metrics = if records.is_empty() {
        RunMetrics::empty()
    } else {
        compute_metrics(&records)?
    };
    if matches!(stop, StopReason::Diverged(_)) {
        metrics.diverged = true;
        metrics.mission_completed = false;
    }
    Ok(RunOutput {
        config: config.clone(),
        records,
        metrics,
        stop,
    })
}

/// Paths written for one run.
#[derive(Debug, Clone)]
pub struct RunFiles {
    pub telemetry: PathBuf,
    pub metadata: PathBuf,
}

/// Writes `<label>.csv` and the `<label>.meta.toml` sidecar with the resolved config.
pub fn write_run(dir: &Path, label: &str, output: &RunOutput) -> Result<RunFiles, HarnessError> {
    std::fs::create_dir_all(dir)?;
    let telemetry = dir.join(format!("{label}.csv"));
    let file = std::io::BufWriter::new(std::fs::File::create(&telemetry)?);
    telemetry::write_csv(file, &output.records)?;

    let metadata = dir.join(format!("{label}.meta.toml"));
    let mut meta = String::new();
    meta.push_str("# resolved scenario configuration\n");
    meta.push_str(&output.config.to_toml());
    meta.push_str(&format!(
        "\n[resolved]\ngravity_ff = {}\nstop = \"{:?}\"\nrows = {}\n",
        output.config.gravity_ff_enabled(),
        output.stop,
        output.records.len()
    ));
    std::fs::write(&metadata, meta)?;
    Ok(RunFiles {
        telemetry,
        metadata,
    })
}

/// Writes a one-line-per-run metrics CSV.
pub fn write_metrics_csv(path: &Path, rows: &[(String, RunMetrics)]) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut text = String::from(RunMetrics::csv_header());
    text.push('\n');
    for (label, m) in rows {
        text.push_str(&m.csv_row(label));
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Runs a scenario and persists its telemetry under `config.out`.
pub fn run_scenario(config: &ScenarioConfig) -> Result<(RunOutput, RunFiles), HarnessError> {
    let mission = load_mission(config)?;
    let output = simulate(config, &mission)?;
    let label = config.mode.as_str();
    let files = write_run(&config.out, label, &output)?;
    write_metrics_csv(
        &config.out.join("metrics.csv"),
        &[(label.to_string(), output.metrics)],
    )?;
    Ok((output, files))
}

/// Hyperparameter swept by [`sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    AlphaP,
    AlphaN,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::AlphaP => "alpha_p",
            SweepParam::AlphaN => "alpha_n",
        }
    }

    pub fn apply(&self, config: &ScenarioConfig, value: f64) -> ScenarioConfig {
        let mut c = config.clone();
        match self {
            SweepParam::AlphaP => c.alpha_p = value,
            SweepParam::AlphaN => c.alpha_n = value,
        }
        c
    }
}

impl std::str::FromStr for SweepParam {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "alpha_p" | "alpha-p" => Ok(SweepParam::AlphaP),
            "alpha_n" | "alpha-n" => Ok(SweepParam::AlphaN),
            other => Err(HarnessError::Config(format!("unknown sweep parameter `{other}`"))),
        }
    }
}

/// Runs one simulation per value (in parallel) and returns results in input order.
/// A run that diverges is recorded as such; the sweep continues.
pub fn sweep_runs(
    config: &ScenarioConfig,
    mission: &Mission,
    param: SweepParam,
    values: &[f64],
) -> Result<Vec<RunOutput>, HarnessError> {
    if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(HarnessError::Config(format!(
            "sweep value {bad} must be positive"
        )));
    }
    let configs: Vec<_> = values.iter().map(|&v| param.apply(config, v)).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| scope.spawn(move || simulate(c, mission)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    })
}

pub fn sweep_label(param: SweepParam, value: f64) -> String {
    format!("{}_{}", param.name(), value)
}

/// Sweep with persisted telemetry and a summary table (`sweep_<param>.csv`).
pub fn sweep(
    config: &ScenarioConfig,
    param: SweepParam,
    values: &[f64],
) -> Result<Vec<RunOutput>, HarnessError> {
    let mission = load_mission(config)?;
    let runs = sweep_runs(config, &mission, param, values)?;
    let mut rows = Vec::new();
    for (value, run) in values.iter().zip(&runs) {
        let label = sweep_label(param, *value);
        write_run(&config.out, &label, run)?;
        rows.push((label, run.metrics));
    }
    write_metrics_csv(
        &config.out.join(format!("sweep_{}.csv", param.name())),
        &rows,
    )?;
    Ok(runs)
}

/// Fixed-gain and adaptive runs on the same plant with scaled inertia.
#[derive(Debug, Clone)]
pub struct InertiaComparison {
    pub scale: f64,
    pub fixed: RunOutput,
    pub adaptive: RunOutput,
}

pub fn compare_inertia_runs(
    config: &ScenarioConfig,
    mission: &Mission,
    scale: f64,
) -> Result<InertiaComparison, HarnessError> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(HarnessError::Config("inertia scale must be positive".into()));
    }
    let base = ScenarioConfig {
        inertia_scale: scale,
        ..config.clone()
    };
    let fixed_cfg = ScenarioConfig {
        mode: ModeName::Fixed,
        ..base.clone()
    };
    let adaptive_cfg = ScenarioConfig {
        mode: ModeName::Adaptive,
        ..base
    };
    let (fixed, adaptive) = std::thread::scope(|scope| {
        let f = scope.spawn(|| simulate(&fixed_cfg, mission));
        let a = scope.spawn(|| simulate(&adaptive_cfg, mission));
        (
            f.join().expect("simulation thread panicked"),
            a.join().expect("simulation thread panicked"),
        )
    });
    Ok(InertiaComparison {
        scale,
        fixed: fixed?,
        adaptive: adaptive?,
    })
}

/// Inertia comparison with persisted telemetry and `inertia_<scale>.csv` summary.
pub fn compare_inertia(config: &ScenarioConfig, scale: f64) -> Result<InertiaComparison, HarnessError> {
    let mission = load_mission(config)?;
    let cmp = compare_inertia_runs(config, &mission, scale)?;
    let fixed_label = format!("inertia_{scale}_fixed");
    let adaptive_label = format!("inertia_{scale}_adaptive");
    write_run(&config.out, &fixed_label, &cmp.fixed)?;
    write_run(&config.out, &adaptive_label, &cmp.adaptive)?;
    write_metrics_csv(
        &config.out.join(format!("inertia_{scale}.csv")),
        &[
            (fixed_label, cmp.fixed.metrics),
            (adaptive_label, cmp.adaptive.metrics),
        ],
    )?;
    Ok(cmp)
}
