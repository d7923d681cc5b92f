mod commands;
mod config;
mod error;
mod manifest;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use ldlab::{NonlocalMethod, PerimeterMethod};

use config::{keys_help, Config};
use error::CliError;

/// Numerical lab for the perimeter plus Riesz energy at fixed mass.
#[derive(Parser, Debug)]
#[command(name = "ldlab", version, max_term_width = 110)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    verb: Verb,
}

/// Flags shared by every verb. Each one overrides the matching config key.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// TOML config file; merged as defaults <- file <- flags
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR", default_value = "ldlab-out")]
    pub out: PathBuf,
    /// Stem of the output file names (default: the verb, plus study or check)
    #[arg(long, global = true)]
    pub name: Option<String>,
    /// Replace an existing manifest with the same stem
    #[arg(long, global = true)]
    pub force: bool,
    /// kernel.n
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// kernel.alpha
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// grid.h
    #[arg(long, global = true)]
    pub h: Option<f64>,
    /// grid.perimeter
    #[arg(long, global = true, value_enum)]
    pub perimeter: Option<PerimeterArg>,
    /// grid.nonlocal
    #[arg(long, global = true, value_enum)]
    pub nonlocal: Option<NonlocalArg>,
    /// anneal.seed and sweep.seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// sweep.samples
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// sweep.masses, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    pub masses: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PerimeterArg {
    Facet,
    SurfaceMesh,
    Stencil,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum NonlocalArg {
    Direct,
    Convolution,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Verb {
    /// Perimeter, nonlocal term and total energy of a raster
    Energy {
        #[arg(long)]
        input: PathBuf,
    },
    /// Riesz potential of a raster, or the radial profile of the unit ball
    Potential {
        #[arg(long, required_unless_present = "ball", conflicts_with = "ball")]
        input: Option<PathBuf>,
        /// Profile of the unit ball instead of a raster
        #[arg(long)]
        ball: bool,
        /// Outer radius of the ball profile
        #[arg(long, default_value_t = 3.0)]
        r_out: f64,
        /// Points of the ball profile
        #[arg(long, default_value_t = 301)]
        points: usize,
        /// Extra evaluation point x,y[,z] for a raster
        #[arg(long, value_delimiter = ',')]
        at: Option<Vec<f64>>,
    },
    /// Build a comparison set, write its raster and energy
    Competitor {
        #[arg(long, value_enum)]
        variant: VariantArg,
        #[arg(long)]
        mass: f64,
        /// ball-chain: number of balls (default: ceil(mass))
        #[arg(long)]
        count: Option<usize>,
        /// ball-chain: center spacing
        #[arg(long)]
        spacing: Option<f64>,
        /// rescaled: length factor
        #[arg(long)]
        scale: Option<f64>,
        /// split-translate, truncated-ball: cut position relative to the radius
        #[arg(long, allow_negative_numbers = true)]
        t: Option<f64>,
        /// split-translate: translation of the upper piece
        #[arg(long)]
        separation: Option<f64>,
        /// split-translate, truncated-ball: cut axis
        #[arg(long)]
        axis: Option<usize>,
    },
    /// Anneal a set at fixed mass
    Minimize {
        /// Initial raster (default: a random blob of anneal.mass)
        #[arg(long)]
        input: Option<PathBuf>,
        /// anneal.mass
        #[arg(long)]
        mass: Option<f64>,
        /// anneal.moves
        #[arg(long)]
        moves: Option<u64>,
        /// anneal.decay
        #[arg(long)]
        decay: Option<f64>,
        /// anneal.t0
        #[arg(long)]
        t0: Option<f64>,
        /// anneal.far_weight
        #[arg(long)]
        far_weight: Option<f64>,
        /// anneal.snapshot_period
        #[arg(long)]
        snapshot_period: Option<u64>,
        /// grid.box_half
        #[arg(long)]
        box_half: Option<f64>,
        /// Write a raster at every trace point
        #[arg(long)]
        snapshots: bool,
    },
    /// Star-shaped sets r = (1 + rho) on the sphere, rho in spherical harmonics
    Star {
        #[arg(long, value_enum, default_value = "descent")]
        mode: StarMode,
        /// Highest harmonic degree
        #[arg(long, default_value_t = 3)]
        degree: usize,
        /// Weight of the nonlocal term after rescaling to the unit ball
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Descent steps
        #[arg(long, default_value_t = 20)]
        steps: usize,
        /// Initial step length
        #[arg(long, default_value_t = 0.05)]
        step_size: f64,
        /// W^{1,inf} size of the random shape (default: 0.05 descent, 0.15 gradient, 0.1 fuglede)
        #[arg(long)]
        amplitude: Option<f64>,
    },
    /// Scripted studies over masses
    Sweep {
        #[arg(long, value_enum)]
        study: Study,
        /// density, cut: raster to probe (default: the ball of --mass)
        #[arg(long)]
        input: Option<PathBuf>,
        /// density, cut: mass of the probed ball
        #[arg(long)]
        mass: Option<f64>,
        /// sweep.beta
        #[arg(long)]
        beta: Option<f64>,
        /// sweep.spacing_factor
        #[arg(long)]
        spacing_factor: Option<f64>,
    },
    /// Inequality and oracle checks; exit 1 when a contract fails
    Verify {
        #[arg(long, value_enum)]
        check: Check,
        /// qiso: raster to check
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Monte-Carlo self-energy table for the diagonal correction
    Calibrate {
        /// n:alpha pairs, comma separated
        #[arg(long, value_delimiter = ',', default_value = "2:1,3:1,3:2,3:2.5")]
        pairs: Vec<String>,
        /// Monte-Carlo draws per pair
        #[arg(long, default_value_t = 1 << 20)]
        draws: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum VariantArg {
    Ball,
    BallChain,
    Rescaled,
    SplitTranslate,
    TruncatedBall,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
pub enum StarMode {
    Descent,
    Gradient,
    Fuglede,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
pub enum Study {
    Fission,
    Crossover,
    Scaling,
    Equipartition,
    Diameter,
    Density,
    Cut,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
pub enum Check {
    Interpolation,
    BallEnergy,
    Asymptotics,
    Posdef,
    Qiso,
}

impl Verb {
    fn stem(&self) -> String {
        let name = |v: &dyn ValueEnumName| v.name();
        match self {
            Verb::Energy { .. } => "energy".into(),
            Verb::Potential { .. } => "potential".into(),
            Verb::Competitor { variant, .. } => format!("competitor-{}", name(variant)),
            Verb::Minimize { .. } => "minimize".into(),
            Verb::Star { mode, .. } => format!("star-{}", name(mode)),
            Verb::Sweep { study, .. } => format!("sweep-{}", name(study)),
            Verb::Verify { check, .. } => format!("verify-{}", name(check)),
            Verb::Calibrate { .. } => "calibrate".into(),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Verb::Energy { .. } => "energy",
            Verb::Potential { .. } => "potential",
            Verb::Competitor { .. } => "competitor",
            Verb::Minimize { .. } => "minimize",
            Verb::Star { .. } => "star",
            Verb::Sweep { .. } => "sweep",
            Verb::Verify { .. } => "verify",
            Verb::Calibrate { .. } => "calibrate",
        }
    }
}

trait ValueEnumName {
    fn name(&self) -> String;
}

impl<T: ValueEnum> ValueEnumName for T {
    fn name(&self) -> String {
        self.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
    }
}

/// Defaults <- config file <- flags.
fn resolve(common: &Common, verb: &Verb) -> Result<Config, CliError> {
    let mut cfg = match &common.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(n) = common.n {
        cfg.kernel.n = n;
    }
    if let Some(a) = common.alpha {
        cfg.kernel.alpha = a;
    }
    if let Some(h) = common.h {
        cfg.grid.h = h;
    }
    if let Some(p) = common.perimeter {
        cfg.grid.perimeter = match p {
            PerimeterArg::Facet => PerimeterMethod::Facet,
            PerimeterArg::SurfaceMesh => PerimeterMethod::SurfaceMesh,
            PerimeterArg::Stencil => PerimeterMethod::Stencil,
        };
    }
    if let Some(m) = common.nonlocal {
        cfg.grid.nonlocal = match m {
            NonlocalArg::Direct => NonlocalMethod::Direct,
            NonlocalArg::Convolution => NonlocalMethod::Convolution,
        };
    }
    if let Some(s) = common.seed {
        cfg.anneal.seed = s;
        cfg.sweep.seed = s;
    }
    if let Some(s) = common.samples {
        cfg.sweep.samples = s;
    }
    if let Some(m) = &common.masses {
        cfg.sweep.masses = m.clone();
    }
    match verb {
        Verb::Minimize {
            mass,
            moves,
            decay,
            t0,
            far_weight,
            snapshot_period,
            box_half,
            ..
        } => {
            if let Some(v) = mass {
                cfg.anneal.mass = *v;
            }
            if let Some(v) = moves {
                cfg.anneal.moves = *v;
            }
            if let Some(v) = decay {
                cfg.anneal.decay = *v;
            }
            if t0.is_some() {
                cfg.anneal.t0 = *t0;
            }
            if let Some(v) = far_weight {
                cfg.anneal.far_weight = *v;
            }
            if let Some(v) = snapshot_period {
                cfg.anneal.snapshot_period = *v;
            }
            if box_half.is_some() {
                cfg.grid.box_half = *box_half;
            }
        }
        Verb::Sweep {
            beta, spacing_factor, ..
        } => {
            if beta.is_some() {
                cfg.sweep.beta = *beta;
            }
            if let Some(v) = spacing_factor {
                cfg.sweep.spacing_factor = *v;
            }
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn command() -> clap::Command {
    let keys = keys_help();
    let mut cmd = Cli::command().after_help(keys.clone());
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    for name in names {
        let keys = keys.clone();
        cmd = cmd.mut_subcommand(name, move |s| s.after_help(keys));
    }
    cmd
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let matches = match command().try_get_matches_from(&argv) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    match run::execute(&cli.common, &cli.verb, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ldlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
