//! Command-line and config-file schema. Every subcommand's arguments
//! round-trip through JSON so a run can be replayed from `run_config.json`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use gconv::gaussian::DetMode;
use gconv::optim::{DeConfig, OptimizerConfig, SwarmConfig};

#[derive(Parser, Debug)]
#[command(
    name = "gconv",
    version,
    about = "Gaussian conversion of trisqueezed states into cubic phase states"
)]
pub struct Cli {
    /// Replay a run from a JSON config (flags given here override it).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for population evaluation; 1 gives a sequential run.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

/// Complete description of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: PathBuf,
    #[serde(flatten)]
    pub command: Command,
}

#[derive(Subcommand, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Build a named state and write its Wigner function and mana.
    State(StateArgs),
    /// Optimise a deterministic Gaussian channel.
    DetOpt(DetOptArgs),
    /// Optimise the probabilistic circuit.
    ProbOpt(ProbOptArgs),
    /// Scan the probabilistic circuit over one parameter.
    Sweep(SweepArgs),
    /// Teleportation gate error against the triplicity-to-Kerr ratio.
    GateError(GateErrorArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateKind {
    Trisqueezed,
    Cubic,
    Squeezed,
    KerrTrisqueezed,
    Gkp,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateArgs {
    #[arg(long, value_enum, default_value = "trisqueezed")]
    pub kind: StateKind,
    /// Triplicity.
    #[arg(long, default_value_t = 0.1)]
    pub t: f64,
    /// Cubicity.
    #[arg(long, default_value_t = 0.0)]
    pub r: f64,
    /// Squeezing of the cubic phase state in dB.
    #[arg(long, default_value_t = 5.0)]
    pub sq_db: f64,
    /// Squeezing parameter of the displaced squeezed state.
    #[arg(long, default_value_t = 0.0)]
    pub xi: f64,
    #[arg(long, default_value_t = 0.0)]
    pub q_beta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub p_beta: f64,
    /// Triplicity over Kerr strength.
    #[arg(long, default_value_t = 2.0)]
    pub kerr_ratio: f64,
    /// GKP peak width.
    #[arg(long, default_value_t = 0.2)]
    pub delta: f64,
    #[arg(long, default_value_t = 60)]
    pub cutoff: usize,
    /// Wigner grid spacing.
    #[arg(long, default_value_t = 0.02)]
    pub spacing: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    FullCptp,
    Symplectic,
    SqueezeDisplace,
}

impl From<Mode> for DetMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::FullCptp => DetMode::FullCptp,
            Mode::Symplectic => DetMode::Symplectic,
            Mode::SqueezeDisplace => DetMode::SqueezeDisplace,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Pso,
    De,
}

/// Optimiser flags. Swarm coefficients default to inertia 0.7 and pulls of 1.5.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptArgs {
    #[arg(long, value_enum, default_value = "pso")]
    pub method: Method,
    /// Swarm size or DE population.
    #[arg(long, default_value_t = 40)]
    pub particles: usize,
    /// Swarm iterations or DE generations.
    #[arg(long, default_value_t = 250)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0.7)]
    pub inertia: f64,
    /// Pull towards the swarm best.
    #[arg(long, default_value_t = 1.5)]
    pub alpha: f64,
    /// Pull towards each particle's own best.
    #[arg(long, default_value_t = 1.5)]
    pub beta: f64,
    /// DE differential weight.
    #[arg(long, default_value_t = 0.7)]
    pub de_f: f64,
    /// DE crossover probability.
    #[arg(long, default_value_t = 0.9)]
    pub de_cr: f64,
}

impl OptArgs {
    pub fn config(&self, seed: u64) -> OptimizerConfig {
        match self.method {
            Method::Pso => OptimizerConfig::Pso(SwarmConfig {
                particles: self.particles,
                iterations: self.iterations,
                inertia: self.inertia,
                alpha: self.alpha,
                beta: self.beta,
                seed,
                ..SwarmConfig::default()
            }),
            Method::De => OptimizerConfig::De(DeConfig {
                population: self.particles,
                generations: self.iterations,
                f: self.de_f,
                cr: self.de_cr,
                seed,
            }),
        }
    }
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetOptArgs {
    #[arg(long, default_value_t = 0.1)]
    pub t: f64,
    /// Target cubicity; defaults to the one matching the input mana.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long, default_value_t = 5.0)]
    pub sq_db: f64,
    #[arg(long, value_enum, default_value = "full-cptp")]
    pub mode: Mode,
    #[arg(long, default_value_t = 60)]
    pub cutoff: usize,
    /// Gauss-Legendre nodes per axis of the phase-space integral.
    #[arg(long, default_value_t = 200)]
    pub quad_nodes: usize,
    #[arg(long, default_value_t = 10.0)]
    pub quad_half_width: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub opt: OptArgs,
}

/// Circuit settings shared by the probabilistic commands.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitArgs {
    #[arg(long, default_value_t = 0.1)]
    pub t: f64,
    /// Target cubicity; defaults to the one matching the input mana.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long, default_value_t = 5.0)]
    pub sq_db: f64,
    #[arg(long, default_value_t = 60)]
    pub cutoff: usize,
    /// Bin half-width.
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Homodyne efficiency.
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    /// Grow the input with a residual Kerr term of strength t / ratio.
    #[arg(long)]
    pub kerr_ratio: Option<f64>,
    /// Reject circuit settings whose success probability falls below this.
    #[arg(long, default_value_t = 1e-12)]
    #[serde(default = "default_min_probability")]
    pub min_probability: f64,
}

fn default_min_probability() -> f64 {
    1e-12
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbOptArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub circuit: CircuitArgs,
    /// Also optimise the phase rotation.
    #[arg(long)]
    pub free_gamma: bool,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub theta_bounds: Option<Vec<f64>>,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub q_beta_bounds: Option<Vec<f64>>,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub xi_bounds: Option<Vec<f64>>,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub d_bounds: Option<Vec<f64>>,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub gamma_bounds: Option<Vec<f64>>,
    /// Compute the mana of the optimised output.
    #[arg(long)]
    pub mana: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub opt: OptArgs,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    /// Bin half-width at fixed circuit.
    Delta,
    /// Homodyne efficiency at fixed circuit.
    Eta,
    /// Triplicity at fixed target, re-optimised per point.
    Mana,
    /// Triplicity-to-Kerr ratio, re-optimised per point with free rotation.
    Kerr,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub kind: SweepKind,
    /// Swept values.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub circuit: CircuitArgs,
    #[arg(long, default_value_t = 1.0133)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.8304)]
    pub q_beta: f64,
    #[arg(long, default_value_t = 0.3257)]
    pub xi: f64,
    #[arg(long, default_value_t = -0.9525, allow_negative_numbers = true)]
    pub d: f64,
    #[arg(long, default_value_t = -std::f64::consts::FRAC_PI_2, allow_negative_numbers = true)]
    pub gamma: f64,
    /// Record the output mana of every point.
    #[arg(long)]
    pub with_mana: bool,
    /// Grid spacing for output mana.
    #[arg(long, default_value_t = 0.05)]
    pub spacing: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub opt: OptArgs,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateErrorArgs {
    /// Triplicity over Kerr strength.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,4,8")]
    pub ratios: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub t: f64,
    #[arg(long, default_value_t = 0.1558)]
    pub r: f64,
    #[arg(long, default_value_t = 5.0)]
    pub sq_db: f64,
    #[arg(long, default_value_t = 60)]
    pub cutoff: usize,
    /// GKP peak width.
    #[arg(long, default_value_t = 0.2)]
    pub delta_gkp: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub opt: OptArgs,
}
