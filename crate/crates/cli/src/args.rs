use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "satwave", version, about = "Travelling-wave speeds and profiles for flux-saturated reaction-diffusion")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Model config: a JSON file or a preset name (fisher, bounded, example1..example4).
    #[arg(long, global = true, value_name = "PATH|PRESET")]
    pub model: Option<String>,
    /// Bisection tolerance on speeds.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol: f64,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for parallel probes (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed recorded in the manifest for randomized runs.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Bump weight for the example families.
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Config override `key=value`; bare keys address the flux, dotted keys any field.
    #[arg(long = "param", global = true, value_name = "KEY=VALUE")]
    pub params: Vec<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Singular and classic minimal speeds.
    Speeds,
    /// Wave profile with jump checks.
    Profile(ProfileArgs),
    /// Minimal speeds of viscous regularisations.
    Sweep(SweepArgs),
    /// Front speed from the finite-difference solver against the computed singular speed.
    Validate(ValidateArgs),
    /// Characteristic values and plot data for a degenerate example family.
    Example(ExampleArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Speeds => "speeds",
            Command::Profile(_) => "profile",
            Command::Sweep(_) => "sweep",
            Command::Validate(_) => "validate",
            Command::Example(_) => "example",
        }
    }
}

#[derive(Args, Debug)]
pub struct ProfileArgs {
    /// Wave speed; defaults to the singular speed.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Level pinned at xi = 0; moved off plateaus automatically.
    #[arg(long, default_value_t = 0.5)]
    pub anchor: f64,
    /// Sampling window in xi.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_hyphen_values = true, default_values_t = [-20.0, 20.0])]
    pub window: Vec<f64>,
    /// Number of samples in the window.
    #[arg(long, default_value_t = 2001)]
    pub points: usize,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Viscosities, comma separated.
    #[arg(long, required = true, value_delimiter = ',', num_args = 1..)]
    pub eps: Vec<f64>,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    /// Spatial step.
    #[arg(long, default_value_t = 0.05)]
    pub h: f64,
    /// Domain half-width.
    #[arg(long, default_value_t = 200.0)]
    pub half_width: f64,
    /// End time.
    #[arg(long, default_value_t = 60.0)]
    pub t_end: f64,
    /// Fit window; defaults to the last three quarters of the run.
    #[arg(long, num_args = 2, value_names = ["T0", "T1"])]
    pub fit: Option<Vec<f64>>,
    /// Allowed relative speed error.
    #[arg(long, default_value_t = 0.05)]
    pub speed_tol: f64,
    /// Allowed relative spread across tracked levels.
    #[arg(long, default_value_t = 0.02)]
    pub spread_tol: f64,
}

#[derive(Args, Debug)]
pub struct ExampleArgs {
    /// Family number.
    #[arg(value_parser = clap::value_parser!(u8).range(1..=4))]
    pub n: u8,
}
