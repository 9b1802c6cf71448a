use std::path::PathBuf;
use std::str::FromStr;

use aoi_core::sim::{Horizon, DEFAULT_WARMUP};
use aoi_core::tandem::{swap_sources, ModelError};
use aoi_core::{Policy, SinkHandoff, SystemParams};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "aoi",
    version,
    about = "Age of information of a two-source tandem: closed forms, SHS engine and simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cross-check closed forms, the SHS engine and (optionally) simulation.
    Validate(ValidateArgs),
    /// MGF of the AoI at the given s values, as CSV.
    Mgf(MgfArgs),
    /// Raw moments and standard deviation of the AoI, as CSV.
    Moments(MomentsArgs),
    /// Mean and standard deviation over a grid of source-1 loads, as CSV.
    Sweep(SweepArgs),
    /// Run the discrete-event simulator and print its estimate as JSON.
    Simulate(SimulateArgs),
    /// Export built-in models or solve user models in the JSON format.
    #[command(subcommand)]
    Model(ModelCommand),
}

#[derive(Debug, Subcommand)]
pub enum ModelCommand {
    /// Print a built-in model as a JSON model document.
    Export(ExportArgs),
    /// Solve a JSON model document and print the engine report.
    Solve(SolveArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyKind {
    Preemptive,
    Blocking,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HandoffArg {
    Replace,
    Drop,
}

impl From<HandoffArg> for SinkHandoff {
    fn from(h: HandoffArg) -> Self {
        match h {
            HandoffArg::Replace => SinkHandoff::Replace,
            HandoffArg::Drop => SinkHandoff::Drop,
        }
    }
}

pub fn policy_of(kind: PolicyKind, handoff: HandoffArg) -> Policy {
    match kind {
        PolicyKind::Preemptive => Policy::Preemptive,
        PolicyKind::Blocking => Policy::Blocking(handoff.into()),
    }
}

#[derive(Debug, Clone, Args)]
pub struct SystemArgs {
    /// Source-1 arrival rate.
    #[arg(long)]
    pub lambda1: f64,
    /// Source-2 arrival rate.
    #[arg(long, default_value_t = 0.0)]
    pub lambda2: f64,
    /// Transmitter service rate.
    #[arg(long)]
    pub mu: f64,
    /// Sink server rate.
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = PolicyKind::Preemptive)]
    pub policy: PolicyKind,
    /// What a finished transmitter packet does when the sink is busy
    /// (blocking policy only).
    #[arg(long, value_enum, default_value_t = HandoffArg::Drop)]
    pub sink_handoff: HandoffArg,
    /// Source whose age is analyzed.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub source: u8,
}

impl SystemArgs {
    pub fn policy(&self) -> Policy {
        policy_of(self.policy, self.sink_handoff)
    }

    pub fn params(&self) -> Result<SystemParams, ModelError> {
        SystemParams::new(self.lambda1, self.lambda2, self.mu, self.alpha)
    }

    /// Parameters with the analyzed source in the source-1 slot.
    pub fn tracked_params(&self) -> Result<SystemParams, ModelError> {
        let p = self.params()?;
        if self.source == 2 {
            swap_sources(&p)
        } else {
            Ok(p)
        }
    }
}

/// `N` delivered packets of the tracked source, or `time:T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonArg(pub Horizon);

impl FromStr for HorizonArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(t) = s.strip_prefix("time:") {
            let t: f64 = t
                .parse()
                .map_err(|e| format!("bad time horizon '{t}': {e}"))?;
            return Ok(Self(Horizon::Time(t)));
        }
        let n = s
            .replace('_', "")
            .parse::<f64>()
            .map_err(|e| format!("bad horizon '{s}': {e}"))?;
        if n.fract() != 0.0 || n < 0.0 || n > u64::MAX as f64 {
            return Err(format!("horizon '{s}' is not a whole number of deliveries"));
        }
        Ok(Self(Horizon::Deliveries(n as u64)))
    }
}

impl std::fmt::Display for HorizonArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 {
            Horizon::Deliveries(n) => write!(f, "{n}"),
            Horizon::Time(t) => write!(f, "time:{t}"),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub replications: u32,
    /// Delivered packets of the tracked source (e.g. 1e6), or `time:T`.
    #[arg(long, default_value = "100000")]
    pub horizon: HorizonArg,
    /// Leading fraction of the horizon that is discarded.
    #[arg(long, default_value_t = DEFAULT_WARMUP)]
    pub warmup: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// MGF evaluation points.
    #[arg(long = "s", value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-2.0, -1.0, -0.5, 0.0])]
    pub s: Vec<f64>,
    /// Also run the simulator and compare it with the engine.
    #[arg(long)]
    pub sim: bool,
    #[command(flatten)]
    pub sim_args: SimArgs,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MgfArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(
        long = "s",
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    pub s: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Highest moment order (at most 8).
    #[arg(long, short = 'm', default_value_t = 2)]
    pub order: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Total arrival rate; lambda2 = lambda - lambda1 at each point.
    #[arg(long, default_value_t = 5.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Number of rho1 points, evenly spaced strictly inside (0, lambda/mu).
    #[arg(long, default_value_t = 20)]
    pub points: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [PolicyKind::Preemptive, PolicyKind::Blocking])]
    pub policies: Vec<PolicyKind>,
    #[arg(long, value_enum, default_value_t = HandoffArg::Drop)]
    pub sink_handoff: HandoffArg,
    /// Add simulation rows.
    #[arg(long)]
    pub sim: bool,
    #[command(flatten)]
    pub sim_args: SimArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub sim_args: SimArgs,
    #[arg(long = "mgf-points", value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-1.0])]
    pub mgf_points: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Path to a JSON model document.
    pub path: PathBuf,
    #[arg(long, short = 'm', default_value_t = 2)]
    pub order: usize,
    #[arg(long = "s", value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-1.0, 0.0])]
    pub s: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
