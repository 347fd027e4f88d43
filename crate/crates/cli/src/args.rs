use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(
    name = "dpsoliton",
    version,
    about = "Stability lab for smooth Degasperis-Procesi solitary waves"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Io {
    /// Directory for the output files.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// JSON object whose keys override the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Also write a gnuplot script next to the CSV.
    #[arg(long)]
    pub plot_script: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solitary-wave profile on [-L, L].
    Profile(Cmd<ProfileArgs>),
    /// Weighted essential-spectrum curve.
    Spectrum(Cmd<SpectrumArgs>),
    /// Spectral gap of the weighted essential spectrum.
    Gap(Cmd<GapArgs>),
    /// Evans function at given spectral parameters.
    Evans(Cmd<EvansArgs>),
    /// Winding number of the Evans function on a contour.
    Winding(Cmd<WindingArgs>),
    /// Lax-pair root algebra at a spectral parameter.
    Lax(Cmd<LaxArgs>),
    /// Generalized-kernel basis and dual basis.
    Kernel(Cmd<KernelArgs>),
    /// Free (constant-coefficient) weighted semigroup.
    FreeEvolve(Cmd<FreeArgs>),
    /// Linearized weighted flow of projected data.
    LinearEvolve(Cmd<LinearArgs>),
    /// DP flow of a perturbed soliton with modulation fitting.
    NonlinearEvolve(Cmd<NonlinearArgs>),
    /// Sign-convention and identity self-tests.
    Selftest(Cmd<SelftestArgs>),
}

#[derive(Args, Debug)]
pub struct Cmd<T: Args> {
    #[command(flatten)]
    pub args: T,
    #[command(flatten)]
    pub io: Io,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileArgs {
    #[arg(long, default_value_t = 0.1)]
    pub k: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Half-width of the domain.
    #[arg(long = "L", default_value_t = 40.0)]
    #[serde(rename = "L")]
    pub l: f64,
    #[arg(long, default_value_t = 0.02)]
    pub h: f64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumArgs {
    #[arg(long, default_value_t = 0.1)]
    pub k: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2001)]
    pub n: usize,
    #[arg(long, default_value_t = 50.0)]
    pub sigma_max: f64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapArgs {
    #[arg(long, default_value_t = 0.1)]
    pub k: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvansArgs {
    #[arg(long, default_value_t = 0.1)]
    pub k: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Weight that fixes the admissible region and the root splitting.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long = "L", default_value_t = 40.0)]
    #[serde(rename = "L")]
    pub l: f64,
    #[arg(long, default_value_t = 0.02)]
    pub h: f64,
    /// Spectral parameter `re,im`; repeatable.
    #[arg(long = "lambda", required = true, allow_hyphen_values = true)]
    pub lambda: Vec<String>,
    /// Integrate the weighted system instead of the unweighted one.
    #[arg(long)]
    pub weighted: bool,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum ContourKind {
    Circle,
    Rectangle,
    Keyhole,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindingArgs {
    #[arg(long, default_value_t = 0.1)]
    pub k: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long = "L", default_value_t = 40.0)]
    #[serde(rename = "L")]
    pub l: f64,
    #[arg(long, default_value_t = 0.02)]
    pub h: f64,
    #[arg(long, value_enum, default_value_t = ContourKind::Circle)]
    pub contour: ContourKind,
    /// Circle centre `re,im`.
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    pub center: String,
    /// Circle radius, or the excised disc radius of the keyhole.
    #[arg(long, default_value_t = 0.05)]
    pub radius: f64,
    /// Initial circle nodes.
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    /// Left edge; the keyhole default is -gap/2.
    #[arg(long, allow_hyphen_values = true)]
    pub re_min: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub re_max: f64,
    /// Half-height of the rectangle or keyhole.
    #[arg(long, default_value_t = 2.0)]
    pub im_max: f64,
    /// Initial node spacing on straight edges.
    #[arg(long, default_value_t = 0.02)]
    pub step: f64,
    /// Also search for a certified point-spectrum gap.
    #[arg(long)]
    pub certify: bool,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaxArgs {
    #[arg(long, default_value_t = 0.1)]
    pub k: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Spectral parameter `re,im`.
    #[arg(long, default_value = "0,1", allow_hyphen_values = true)]
    pub lambda: String,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelArgs {
    #[arg(long, default_value_t = 0.1)]
    pub k: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long = "L", default_value_t = 100.0)]
    #[serde(rename = "L")]
    pub l: f64,
    #[arg(long, default_value_t = 0.04)]
    pub h: f64,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum InitialData {
    Gauss,
    Random,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeArgs {
    #[arg(long, default_value_t = 0.1)]
    pub k: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 8192)]
    pub n: usize,
    #[arg(long, default_value_t = 0.05)]
    pub h: f64,
    #[arg(long = "T", default_value_t = 40.0)]
    #[serde(rename = "T")]
    pub t: f64,
    #[arg(long, default_value_t = 80)]
    pub samples: usize,
    #[arg(long, value_enum, default_value_t = InitialData::Gauss)]
    pub data: InitialData,
    /// Gaussian width.
    #[arg(long, default_value_t = 1.0)]
    pub width: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearArgs {
    #[arg(long, default_value_t = 0.1)]
    pub k: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long = "L", default_value_t = 100.0)]
    #[serde(rename = "L")]
    pub l: f64,
    #[arg(long, default_value_t = 0.04)]
    pub h: f64,
    #[arg(long = "T", default_value_t = 50.0)]
    #[serde(rename = "T")]
    pub t: f64,
    /// Time step; chosen from the spectral radius when absent.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value_t = 20)]
    pub record_every: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 12)]
    pub bumps: usize,
    /// Skip the kernel projection of the initial data.
    #[arg(long)]
    pub no_project: bool,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearArgs {
    #[arg(long, default_value_t = 0.1)]
    pub k: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Weight of the modulation distance.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long = "L", default_value_t = 100.0)]
    #[serde(rename = "L")]
    pub l: f64,
    #[arg(long, default_value_t = 0.04)]
    pub h: f64,
    #[arg(long = "T", default_value_t = 50.0)]
    #[serde(rename = "T")]
    pub t: f64,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    /// Relative momentum perturbation `m0 = μ(1 + δ b)`, max|b| = 1.
    #[arg(long, default_value_t = 1e-3)]
    pub delta: f64,
    #[arg(long)]
    pub filter: bool,
    #[arg(long, default_value_t = 1.0)]
    pub filter_strength: f64,
    #[arg(long, default_value_t = 100)]
    pub record_every: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Skip the modulation fit at each record.
    #[arg(long)]
    pub no_fit: bool,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 0.1)]
    pub k: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
}
