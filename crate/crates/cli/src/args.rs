use std::path::PathBuf;

use castwin::sequences::Family;
use clap::{Args, Parser, Subcommand, ValueEnum};

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Parser)]
#[command(
    name = "castwin",
    version,
    about = "Channel sounding, emulation, tap approximation and RF planning",
    after_help = "Every option can also be set in a TOML file passed with --config: keys are the long \
                  option names (without dashes) under a [<subcommand>] table, or at top level to apply \
                  to every subcommand that has the option. Command-line flags win over the file."
)]
pub struct Cli {
    /// TOML file with option defaults (see below).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a code sequence and its autocorrelation profile.
    Sequence(SequenceArgs),
    /// Modulate, emulate and sound scenario links; write sounding reports.
    Sound(SoundArgs),
    /// Reduce multipath profiles to emulator taps and write a scenario.
    Approximate(ApproximateArgs),
    /// Compare a sounding report with the modeled taps of a scenario link.
    Validate(ValidateArgs),
    /// Write the path-loss matrix of a scenario frame.
    Heatmap(HeatmapArgs),
    /// Exhaustive RU-pair placement search over a path-loss matrix.
    Plan(PlanArgs),
    /// Run bundled reproduction recipes that emit plot-ready CSV.
    Repro(ReproArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Output directory (created if missing).
    #[arg(long, env = "CASTWIN_OUT_DIR", default_value = "castwin-out", value_name = "DIR")]
    pub out: PathBuf,
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse::<Family>()
        .map_err(|_| format!("unknown family '{s}' (expected glfsr, gold, golay_a, golay_b or ls)"))
}

#[derive(Debug, Clone, Args)]
pub struct CodeArgs {
    /// Code family: glfsr, gold, golay_a, golay_b or ls.
    #[arg(long, value_parser = parse_family, default_value = "glfsr")]
    pub family: Family,
    /// Register degree for glfsr and gold (length 2^degree - 1).
    #[arg(long, default_value_t = 8)]
    pub degree: u32,
    /// Golay length (2, 32, 64, 128) or LS base pair length.
    #[arg(long, default_value_t = 128)]
    pub length: usize,
    /// GLFSR output mask (0 = plain m-sequence).
    #[arg(long, default_value_t = 0)]
    pub mask: u32,
    /// GLFSR initial register state.
    #[arg(long = "lfsr-seed", default_value_t = 1)]
    pub lfsr_seed: u32,
    /// Gold relative shift of the second m-sequence.
    #[arg(long, default_value_t = 0)]
    pub shift: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SequenceArgs {
    #[command(flatten)]
    pub code: CodeArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Args)]
pub struct SoundArgs {
    /// Scenario JSON file.
    #[arg(long, value_name = "FILE")]
    pub scenario: PathBuf,
    /// Transmitting node; with --rx sounds one link, otherwise every link of the frame.
    #[arg(long, requires = "rx")]
    pub tx: Option<u32>,
    #[arg(long, requires = "tx")]
    pub rx: Option<u32>,
    /// Scenario frame whose taps are emulated.
    #[arg(long, default_value_t = 0)]
    pub frame_index: usize,
    #[command(flatten)]
    pub code: CodeArgs,
    /// Sample rate, samples per second.
    #[arg(long, default_value_t = 50e6)]
    pub rate: f64,
    #[arg(long, default_value_t = 1)]
    pub samples_per_chip: usize,
    /// Number of sounding frames (code periods) to report.
    #[arg(long, default_value_t = 1500)]
    pub frames: usize,
    /// Receiver AWGN.
    #[arg(long, value_enum, default_value = "on")]
    pub noise: Switch,
    /// Noise power per sample, dB relative to unit transmit power.
    #[arg(long, default_value_t = castwin::channel::DEFAULT_NOISE_FLOOR_DB, allow_negative_numbers = true)]
    pub noise_floor_db: f64,
    /// Emulator base loss; defaults to the scenario's value.
    #[arg(long)]
    pub base_loss_db: Option<f64>,
    /// Detection threshold below the per-frame strongest peak, dB.
    #[arg(long, default_value_t = castwin::sounder::DEFAULT_THRESHOLD_DB)]
    pub threshold_db: f64,
    /// Minimum lag separation between detected peaks, samples.
    #[arg(long, default_value_t = castwin::sounder::DEFAULT_MIN_SEPARATION)]
    pub min_separation: usize,
    /// Transmit power removed from path gains, dB.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub pt_db: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub gt_dbi: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub gr_dbi: f64,
    /// Noise seed.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Also write the transmitted and received IQ streams (.iq, f32 interleaved).
    #[arg(long)]
    pub save_iq: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ApproximateArgs {
    /// Multipath profile (CSV or .json); repeat for consecutive 1 ms frames.
    #[arg(long = "profile", value_name = "FILE", required = true)]
    pub profiles: Vec<PathBuf>,
    #[arg(long, default_value_t = castwin::channel::MAX_TAPS)]
    pub max_taps: usize,
    /// Node ids of the generated link.
    #[arg(long, default_value_t = 1)]
    pub tx: u32,
    #[arg(long, default_value_t = 2)]
    pub rx: u32,
    /// Base loss recorded in the scenario metadata.
    #[arg(long, default_value_t = castwin::channel::DEFAULT_BASE_LOSS_DB)]
    pub base_loss_db: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long, value_name = "FILE")]
    pub scenario: PathBuf,
    /// Sounding report JSON written by `sound`.
    #[arg(long, value_name = "FILE")]
    pub report: PathBuf,
    #[arg(long)]
    pub tx: u32,
    #[arg(long)]
    pub rx: u32,
    #[arg(long, default_value_t = 0)]
    pub frame_index: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct HeatmapArgs {
    #[arg(long, value_name = "FILE")]
    pub scenario: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub frame_index: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    /// Headerless CSV of path losses in dB (rows = RUs, columns = UEs).
    #[arg(long, value_name = "FILE")]
    pub path_loss: PathBuf,
    /// JSON sidecar with RU/UE parameters and noise settings.
    #[arg(long, value_name = "FILE")]
    pub params: Option<PathBuf>,
    /// Override every RU's TX attenuation, dB.
    #[arg(long)]
    pub attenuation_db: Option<f64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Recipe {
    All,
    PeakSpacing,
    Autocorrelation,
    Complementarity,
    FourTap,
    NoiseAsymmetry,
    Superposition,
    Approximation,
    PlannerSweep,
    Similarity,
}

#[derive(Debug, Clone, Args)]
pub struct ReproArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub recipe: Recipe,
    /// Sounding frames for the four-tap and noise recipes.
    #[arg(long, default_value_t = 1500)]
    pub frames: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}
