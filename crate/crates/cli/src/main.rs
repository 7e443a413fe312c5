mod commands;
mod output;
mod parse;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pointint_core::Error;

#[derive(Parser, Debug)]
#[command(name = "pointint", version, about = "Resolvents, correlators and tau functions of 1D point interactions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Spectral parameter m as `re`, `re+imi` or `imi`
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<String>,
    /// Inline configuration `a:V,a:V,...`
    #[arg(long, allow_hyphen_values = true)]
    pub points: Option<String>,
    /// JSON file holding `[{"a": .., "V": ..}, ...]`
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub output: OutputFormat,
    /// Accepted by every command; only the randomized ones use it
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorrRoute {
    Det,
    Fusion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TauRoute {
    Collapsed,
    M,
    CrossRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormFactorRoute {
    Closed,
    Recursive,
    Fock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FieldArg {
    Real,
    Complex,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Perturbed Green function at one point or on a grid
    Green {
        #[command(flatten)]
        common: Common,
        /// Single evaluation point `x,y`
        #[arg(long, allow_hyphen_values = true, conflicts_with = "grid")]
        at: Option<String>,
        /// `xmin:xmax:steps`; give twice for separate x and y axes
        #[arg(long, allow_hyphen_values = true, num_args = 1, action = clap::ArgAction::Append)]
        grid: Vec<String>,
    },
    /// Correlator of the point fields
    Corr {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "det")]
        route: CorrRoute,
    },
    /// Form factor F_{k,l} and the matrix element <k|O|l>
    Formfactor {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        l: usize,
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        mu: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        nu: Option<String>,
        /// Use the parameters of a delta field of this strength (needs --m)
        #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["lambda", "mu", "nu"])]
        strength: Option<f64>,
        #[arg(long, value_enum, default_value = "closed")]
        route: FormFactorRoute,
    },
    /// Tau function of the configuration
    Tau {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "collapsed")]
        route: TauRoute,
    },
    /// Evaluate every quantity along all independent routes and report the spread
    Crosscheck {
        #[command(flatten)]
        common: Common,
        /// Number of random points when no configuration is given
        #[arg(long, default_value_t = 3)]
        n: usize,
    },
    /// Gaussian determinant identities and a Monte Carlo moment check
    GaussianCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "real")]
        field: FieldArg,
        /// Dimension of the A block
        #[arg(long, default_value_t = 2)]
        dim_a: usize,
        /// Dimension of the B block
        #[arg(long, default_value_t = 1)]
        dim_b: usize,
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
    },
}

#[derive(Debug)]
pub enum Failure {
    Core(Error),
    /// a check ran to completion and did not hold
    CheckFailed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn report(kind: &str, message: &str) {
    let line = serde_json::json!({ "error": kind, "message": message.replace('\n', " ") });
    eprintln!("{line}");
}

fn thread_pool() -> Result<rayon::ThreadPool, Error> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("POINTINT_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| Error::InvalidInput(format!("POINTINT_THREADS='{v}' is not a positive integer")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))
}

fn dispatch(command: Command) -> Result<String, Failure> {
    let pool = thread_pool()?;
    match command {
        Command::Green { common, at, grid } => commands::green(&common, at.as_deref(), &grid, &pool),
        Command::Corr { common, route } => commands::corr(&common, route),
        Command::Formfactor { common, k, l, lambda, mu, nu, strength, route } => {
            commands::formfactor(&common, k, l, [lambda, mu, nu], strength, route)
        }
        Command::Tau { common, route } => commands::tau(&common, route),
        Command::Crosscheck { common, n } => commands::crosscheck(&common, n, &pool),
        Command::GaussianCheck { common, field, dim_a, dim_b, samples } => {
            commands::gaussian_check(&common, field, dim_a, dim_b, samples, &pool)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            report("InvalidInput", text.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(2);
        }
    };
    match dispatch(cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Core(e)) => {
            report(e.kind(), &e.to_string());
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
        Err(Failure::CheckFailed(out)) => {
            print!("{out}");
            report("CheckFailed", "one or more cross-checks exceeded tolerance");
            ExitCode::from(3)
        }
    }
}
