use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rcac_autopilot::harness::{self, ModeName, RunMetrics, ScenarioConfig, SweepParam};

#[derive(Parser)]
#[command(name = "rcac-sim", version, about = "Quadcopter autopilot flight experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fly one scenario.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Fly one scenario per value of an adaptive hyperparameter scale.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// alpha_p or alpha_n
        #[arg(long)]
        param: SweepParam,
        /// Comma-separated positive values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Fly fixed-gain and adaptive autopilots on a plant with scaled inertia.
    CompareInertia {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 5.0)]
        scale: f64,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// TOML scenario file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    mode: Option<ModeName>,
    #[arg(long)]
    alpha_p: Option<f64>,
    #[arg(long)]
    alpha_n: Option<f64>,
    #[arg(long)]
    inertia_scale: Option<f64>,
    #[arg(long)]
    mission: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    decimation: Option<u64>,
}

impl ScenarioArgs {
    fn resolve(self) -> Result<ScenarioConfig> {
        let mut c = match &self.config {
            Some(path) => ScenarioConfig::from_file(path)
                .with_context(|| format!("loading {}", path.display()))?,
            None => ScenarioConfig::default(),
        };
        if let Some(v) = self.mode {
            c.mode = v;
        }
        if let Some(v) = self.alpha_p {
            c.alpha_p = v;
        }
        if let Some(v) = self.alpha_n {
            c.alpha_n = v;
        }
        if let Some(v) = self.inertia_scale {
            c.inertia_scale = v;
        }
        if self.mission.is_some() {
            c.mission = self.mission;
        }
        if let Some(v) = self.out {
            c.out = v;
        }
        if let Some(v) = self.t_max {
            c.t_max = v;
        }
        if let Some(v) = self.decimation {
            c.decimation = v;
        }
        c.validate()?;
        Ok(c)
    }
}

fn report(label: &str, metrics: &RunMetrics) -> bool {
    println!("{}", metrics.summary(label));
    metrics.diverged
}

fn execute(cli: Cli) -> Result<bool> {
    let diverged = match cli.command {
        Command::Run { scenario } => {
            let config = scenario.resolve()?;
            let (output, files) = harness::run_scenario(&config)?;
            println!("telemetry: {}", files.telemetry.display());
            report(config.mode.as_str(), &output.metrics)
        }
        Command::Sweep {
            scenario,
            param,
            values,
        } => {
            let config = scenario.resolve()?;
            let runs = harness::sweep(&config, param, &values)?;
            let mut any = false;
            for (value, run) in values.iter().zip(&runs) {
                any |= report(&harness::sweep_label(param, *value), &run.metrics);
            }
            any
        }
        Command::CompareInertia { scenario, scale } => {
            let config = scenario.resolve()?;
            let cmp = harness::compare_inertia(&config, scale)?;
            let f = report(&format!("fixed x{scale}"), &cmp.fixed.metrics);
            let a = report(&format!("adaptive x{scale}"), &cmp.adaptive.metrics);
            f || a
        }
    };
    Ok(diverged)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("divergence detected");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
