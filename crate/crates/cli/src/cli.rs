//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const DEFAULT_POTENTIAL: &str = "family=quartic c=0.25";

#[derive(Debug, Parser)]
#[command(name = "fracscrew", version, about = "Screw-invariant fractional Allen-Cahn solutions and nonlocal mean curvature", arg_required_else_help = true)]
pub struct Cli {
    /// File of `key=value` lines supplying flags not given on the command line.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Where to write the run manifest (default `<out>.manifest.json`, or stderr).
    #[arg(long, global = true, value_name = "PATH")]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the double-well hypotheses of a potential.
    Validate(Validate),
    /// Tabulate the extension profiles and their ODE residual.
    Specfun(Specfun),
    /// Extend a sine expansion into the half-strip.
    Extend1d(Extend1d),
    /// Minimize the strip energy.
    Minimize1d(Minimize1d),
    /// Scan the pitch for the trivial/nontrivial transition.
    Threshold(Threshold),
    /// Minimize the reduced cylinder energy.
    Minimize3d(Minimize3d),
    /// Sample the barrier operator and its boundary comparisons.
    Barrier(Barrier),
    /// Energy of the radial competitor for a list of radii.
    Competitor(Competitor),
    /// Nonlocal mean curvature at a boundary point.
    Nmc(Nmc),
    /// Fractional perimeter inside a box window.
    Perimeter(Perimeter),
}

#[derive(Debug, Args)]
pub struct Validate {
    #[arg(long, default_value = DEFAULT_POTENTIAL)]
    pub potential: String,
    /// Sample on `[-tmax, tmax]`.
    #[arg(long, default_value_t = 2.0)]
    pub tmax: f64,
    /// Sample spacing; `1/step` must be an integer so that `±1` are nodes.
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    /// Order used to report the critical pitch.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Specfun {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 10.0)]
    pub ymax: f64,
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Extend1d {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub lambda: f64,
    /// CSV with header `k,coeff`: coefficients of `sqrt(2/lambda) sin(k pi s/lambda)`, `k` from 1.
    #[arg(long)]
    pub modes: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub heights: Vec<f64>,
    /// Uniform samples on `[0, lambda]`.
    #[arg(long, default_value_t = 129)]
    pub samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Minimize1d {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, default_value_t = 128)]
    pub ns: usize,
    #[arg(long, default_value_t = 128)]
    pub ny: usize,
    /// Strip height (default `12 lambda / pi`).
    #[arg(long)]
    pub height: Option<f64>,
    #[arg(long, default_value = DEFAULT_POTENTIAL)]
    pub potential: String,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Threshold {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long = "lambda-min")]
    pub lambda_min: f64,
    #[arg(long = "lambda-max")]
    pub lambda_max: f64,
    #[arg(long, default_value_t = 7)]
    pub steps: usize,
    #[arg(long, default_value_t = 64)]
    pub ns: usize,
    #[arg(long, default_value_t = 64)]
    pub ny: usize,
    /// Strip height in units of `lambda / pi`.
    #[arg(long = "height-factor", default_value_t = 12.0)]
    pub height_factor: f64,
    /// Relative width at which the bisection of the crossing stops.
    #[arg(long = "bisect-tol", default_value_t = 1e-2)]
    pub bisect_tol: f64,
    #[arg(long, default_value = DEFAULT_POTENTIAL)]
    pub potential: String,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Minimize3d {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub lambda: f64,
    /// Cylinder radius.
    #[arg(long = "R", default_value_t = 8.0)]
    pub r_max: f64,
    /// Cylinder height (default `12 lambda / pi`).
    #[arg(long)]
    pub height: Option<f64>,
    #[arg(long, default_value_t = 32)]
    pub nr: usize,
    #[arg(long, default_value_t = 32)]
    pub ns: usize,
    #[arg(long, default_value_t = 32)]
    pub ny: usize,
    /// Rays sampled for the zero-set check.
    #[arg(long, default_value_t = 100)]
    pub rays: usize,
    #[arg(long, default_value = DEFAULT_POTENTIAL)]
    pub potential: String,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Barrier {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long = "K", default_value_t = 10.0)]
    pub amplitude: f64,
    #[arg(long = "C", default_value_t = 8.0)]
    pub axis_constant: f64,
    #[arg(long, default_value_t = 0.01)]
    pub eps: f64,
    /// Samples per axis.
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[arg(long = "r-min", default_value_t = 1e-3)]
    pub r_min: f64,
    #[arg(long = "r-max", default_value_t = 20.0)]
    pub r_max: f64,
    #[arg(long = "y-min", default_value_t = 1e-3)]
    pub y_min: f64,
    #[arg(long = "y-max", default_value_t = 20.0)]
    pub y_max: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Competitor {
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub b: f64,
    #[arg(long = "R-list", value_delimiter = ',', required = true)]
    pub radii: Vec<f64>,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, default_value_t = 128)]
    pub ns: usize,
    #[arg(long, default_value_t = 128)]
    pub ny: usize,
    #[arg(long, default_value = DEFAULT_POTENTIAL)]
    pub potential: String,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NmcShape {
    /// Helicoid with pitch `lambda`, evaluated at `(t0, 0, 0)`.
    Helicoid,
    /// Ball of radius `radius` about the origin, evaluated at its north pole.
    Ball,
    /// `{x3 < 0}`, evaluated at `(t0, 0, 0)`.
    Halfspace,
}

#[derive(Debug, Args)]
pub struct Nmc {
    #[arg(long, value_enum)]
    pub shape: NmcShape,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = std::f64::consts::PI)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// Inner radii for the extrapolation (default 0.1,0.05,0.025,0.0125).
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    /// Outer truncation radius (default `12 max(1, |x0|)`).
    #[arg(long)]
    pub rmax: Option<f64>,
    #[arg(long = "ring-samples")]
    pub ring_samples: Option<usize>,
    #[arg(long = "shell-tol")]
    pub shell_tol: Option<f64>,
    #[arg(long = "radial-tol")]
    pub radial_tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PerimeterShape {
    /// `{x3 < 0}`.
    Halfspace,
    /// Ball of radius `radius` about the origin.
    Ball,
}

#[derive(Debug, Args)]
pub struct Perimeter {
    #[arg(long, value_enum)]
    pub shape: PerimeterShape,
    #[arg(long)]
    pub alpha: f64,
    /// Cube side centred at the origin, or `x0,y0,z0,x1,y1,z1`.
    #[arg(long, value_delimiter = ',', default_value = "1", allow_hyphen_values = true)]
    pub window: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// Step of the tanh-sinh rule for outer points.
    #[arg(long = "outer-h")]
    pub outer_h: Option<f64>,
    #[arg(long = "outer-levels")]
    pub outer_levels: Option<usize>,
    #[arg(long)]
    pub azimuth: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long = "max-iter", default_value_t = 4000)]
    pub max_iter: usize,
    #[arg(long = "residual-tol", default_value_t = 1e-8)]
    pub residual_tol: f64,
    /// Amplitude of the first-mode initial guess.
    #[arg(long = "init-amplitude", default_value_t = 0.1)]
    pub init_amplitude: f64,
}
