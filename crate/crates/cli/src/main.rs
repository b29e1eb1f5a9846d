mod run;
mod svg;
mod verify;

use apmoments::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::process::ExitCode;

/// Exponential sums modulo prime powers, Voronoi checks and moment reports
/// for modular-form coefficients in arithmetic progressions.
#[derive(Clone, Debug, Parser, Serialize, Deserialize)]
#[command(name = "apmoments", version)]
pub struct Cli {
    /// Worker threads for the parallel sweeps.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output format; each command has a natural default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for sampled checks.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Re-run the configuration echoed in an earlier JSON or CSV output;
    /// only --threads and --out may accompany it.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Clone, Debug, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Kloosterman, Salie and Gauss sums.
    #[command(subcommand)]
    Expsum(ExpsumCmd),
    /// Class moments of Sa_q products and exact zero detection.
    #[command(subcommand)]
    Moments(MomentsCmd),
    /// The B transform and Voronoi identity checks.
    #[command(subcommand)]
    Voronoi(VoronoiCmd),
    /// Coefficient series.
    #[command(subcommand)]
    Coeffs(CoeffsCmd),
    /// Direct and dual sums over residue classes and their moments.
    #[command(subcommand)]
    Harness(HarnessCmd),
    /// Primes with small quadratic residues and character sums.
    #[command(subcommand, name = "qr-primes")]
    QrPrimes(QrPrimesCmd),
    /// Run the quick property battery.
    #[command(name = "verify-all")]
    VerifyAll(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumKind {
    Kloosterman,
    Salie,
    Sa,
    Gauss,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    Closed,
    Direct,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassArg {
    Plus,
    Minus,
}

impl ClassArg {
    pub fn sign(self) -> i8 {
        match self {
            ClassArg::Plus => 1,
            ClassArg::Minus => -1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Integral,
    Half,
}

#[derive(Clone, Debug, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpsumCmd {
    /// Evaluate one sum. For `sa` the argument is m; for `gauss` it is the
    /// frequency m with character exponent --nu.
    Eval {
        #[arg(long)]
        q: u64,
        #[arg(long, allow_hyphen_values = true)]
        m: i64,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        n: i64,
        #[arg(long, value_enum)]
        kind: SumKind,
        #[arg(long, value_enum, default_value = "closed")]
        method: MethodArg,
        #[arg(long, default_value_t = 1)]
        nu: i64,
    },
}

#[derive(Clone, Debug, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentsCmd {
    /// Exact class moment of prod Sa_q(m_i a) against brute force.
    Salie {
        #[arg(long)]
        q: u64,
        /// Number of shifts; defaults to the length of --m.
        #[arg(long)]
        nu: Option<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        m: Vec<u64>,
        #[arg(long, value_enum, default_value = "plus")]
        class: ClassArg,
    },
    /// Whether sum e_i sqrt(m_i) vanishes.
    Zero {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        signs: Vec<i8>,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<u64>,
    },
    /// The integer Q_r(m_1, ..., m_r).
    Qpoly {
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<u64>,
    },
    /// Modular against integer vanishing counts of signed root sums.
    DeltaBound {
        #[arg(long)]
        q: u64,
        #[arg(long = "Y")]
        y: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        m: Vec<u64>,
    },
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct SeriesArgs {
    /// delta, theta-eta, or file:<csv with JSON sidecar>.
    #[arg(long, default_value = "delta")]
    pub coeffs: String,
    /// Cusp-0 series for half-integral weight: theta-eta or file:<csv>.
    #[arg(long)]
    pub dual: Option<String>,
}

#[derive(Clone, Debug, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VoronoiCmd {
    /// Both sides of the Voronoi formula for one twist b/q.
    Check {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        b: u64,
        #[arg(long = "X")]
        x: f64,
        #[arg(long, value_enum, default_value = "integral")]
        mode: ModeArg,
        #[command(flatten)]
        series: SeriesArgs,
        #[arg(long, default_value_t = apmoments::voronoi::DEFAULT_TAIL_TOL)]
        tail_tol: f64,
        /// Window table CSV (x,w); the default bump otherwise.
        #[arg(long)]
        window: Option<PathBuf>,
    },
    /// L2 norms of the window and of B.
    Plancherel {
        /// integral:<kappa> or half:<ell>.
        #[arg(long, default_value = "integral:12")]
        weight: String,
        #[arg(long)]
        window: Option<PathBuf>,
    },
    /// B at the given arguments.
    Transform {
        #[arg(long, default_value = "integral:12")]
        weight: String,
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<f64>,
        #[arg(long)]
        window: Option<PathBuf>,
    },
}

#[derive(Clone, Debug, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoeffsCmd {
    /// Write a(n) = tau(n)/n^(11/2) for n <= X to --out (CSV plus sidecar).
    GenDelta {
        #[arg(long = "X")]
        x: usize,
    },
    /// Validate a coefficient file and summarize it.
    Check {
        #[arg(long)]
        file: PathBuf,
    },
    /// Exact tau(n).
    Tau {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
    },
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct DualArgs {
    #[arg(long)]
    pub p: u64,
    #[arg(long = "N", default_value_t = 2)]
    pub n: u32,
    #[arg(long = "Y")]
    pub y: f64,
    #[arg(long, default_value_t = apmoments::harness::DEFAULT_ETA)]
    pub eta: f64,
    /// Dual cutoff M_max; overrides --eta.
    #[arg(long)]
    pub cutoff: Option<usize>,
}

#[derive(Clone, Debug, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HarnessCmd {
    /// Empirical moment of E against the main term.
    Moments {
        #[command(flatten)]
        dual: DualArgs,
        #[arg(long)]
        nu: u32,
        #[arg(long, value_enum, default_value = "plus")]
        class: ClassArg,
        #[arg(long, value_enum, default_value = "integral")]
        mode: ModeArg,
        #[command(flatten)]
        series: SeriesArgs,
        #[arg(long, default_value_t = apmoments::harness::DEFAULT_DELTA)]
        delta: f64,
        /// Error-budget multiplier; read from --expected when absent.
        #[arg(long)]
        calibration: Option<f64>,
        /// Expected-results file with calibration constants.
        #[arg(long)]
        expected: Option<PathBuf>,
    },
    /// Dual values over the units compared with the mixture
    /// (delta_0 + N(0, 2V_+)) / 2.
    Distribution {
        #[command(flatten)]
        dual: DualArgs,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long, default_value_t = 40)]
        bins: usize,
        /// Omit the density curve from the histogram.
        #[arg(long)]
        no_overlay: bool,
    },
    /// max_a |E(a) - M(a)| along a list of primes at fixed Y.
    DualVsDirect {
        #[arg(long, value_delimiter = ',', required = true)]
        p_list: Vec<u64>,
        #[arg(long = "N", default_value_t = 2)]
        n: u32,
        #[arg(long = "Y")]
        y: f64,
        /// Dual cutoff; defaults to 1e5 Y.
        #[arg(long)]
        cutoff: Option<usize>,
    },
    /// Reference run at p = 11 producing the expected-results constants.
    Calibrate {
        #[arg(long, default_value_t = 11)]
        p: u64,
    },
}

#[derive(Clone, Debug, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QrPrimesCmd {
    /// Primes p <= x with (m/p) = 1 for all m <= Z(p).
    Search {
        #[arg(long)]
        x: u64,
        /// const:<z> or loglog.
        #[arg(long = "Z", default_value = "const:3")]
        z: String,
    },
    /// Sums of chi(p) = (q_I/p) over primes and prime powers up to x.
    Charsum {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        x: u64,
    },
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct VerifyArgs {
    /// Random tuples per sampled check.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Numerical(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Validation(m) => Failure::Validation(m),
            Error::Numerical(m) => Failure::Numerical(m),
            Error::Io(m) => Failure::Io(m),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Numerical(m) | Failure::Io(m) => m,
        }
    }
}

/// Global flags accepted next to `--config`.
#[derive(Parser)]
#[command(name = "apmoments")]
struct Rerun {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Configuration echoed in an earlier JSON output, with command-line overrides.
fn load_config(rerun: Rerun) -> Result<Cli, Failure> {
    let path = &rerun.config;
    let text = std::fs::read_to_string(path)?;
    let json = match text.strip_prefix("# config: ") {
        Some(rest) => rest.lines().next().unwrap_or_default(),
        None => text.as_str(),
    };
    let value: serde_json::Value =
        serde_json::from_str(json).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    let config = value.get("config").cloned().unwrap_or(value);
    let mut cli: Cli = serde_json::from_value(config)
        .map_err(|e| Failure::Validation(format!("{}: bad config: {e}", path.display())))?;
    cli.threads = rerun.threads.or(cli.threads);
    cli.out = rerun.out.or(cli.out);
    Ok(cli)
}

fn parse() -> Result<Cli, ExitCode> {
    let rerun = std::env::args().any(|a| a == "--config" || a.starts_with("--config="));
    let parsed = if rerun { Rerun::try_parse().map(load_config) } else { Cli::try_parse().map(Ok) };
    match parsed {
        Ok(Ok(cli)) => Ok(cli),
        Ok(Err(f)) => {
            eprintln!("error: {}", f.message());
            Err(ExitCode::from(f.code()))
        }
        Err(e) => {
            let _ = e.print();
            Err(if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS })
        }
    }
}

fn main() -> ExitCode {
    let cli = match parse() {
        Ok(c) => c,
        Err(code) => return code,
    };
    let outcome = (|| {
        if let Some(n) = cli.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Failure::Validation(format!("thread pool: {e}")))?;
        }
        run::dispatch(&cli)
    })();
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
