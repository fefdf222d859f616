//! `metricgraph` command-line front end.
//!
//! Exit codes: 0 success, 2 input or usage error, 3 certification or
//! invariant failure, 4 solver non-convergence.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const THREADS_ENV: &str = "METRICGRAPH_THREADS";

#[derive(Parser, Debug)]
#[command(name = "metricgraph", version, about = "Analysis, extension and AMLE runs on metric measure graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Output {
    /// JSON report path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV output path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Graph,
    Essential,
}

impl From<MetricArg> for metricgraph::MetricChoice {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Graph => metricgraph::MetricChoice::Graph,
            MetricArg::Essential => metricgraph::MetricChoice::Essential,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Grid,
    Cusp,
    Collapsed,
    Simplicial,
    Carpet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BallMetricArg {
    Graph,
    Essential,
    Euclidean,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RadiiArg {
    Dyadic,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Mcshane,
    Min,
    Max,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate an example space from a MeshSpec JSON config.
    Gen {
        kind: GenKind,
        #[arg(long)]
        config: PathBuf,
        /// Graph JSON path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Shortest-path distances from a vertex, or one path when --to is given.
    Dist {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        from: u64,
        #[arg(long)]
        to: Option<u64>,
        #[arg(long, value_enum, default_value = "graph")]
        metric: MetricArg,
        #[command(flatten)]
        output: Output,
    },
    /// Essential distances: shortest paths over positive-measure edges.
    Essdist {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        from: u64,
        #[arg(long)]
        to: Option<u64>,
        #[command(flatten)]
        output: Output,
    },
    /// Quasiconvexity constant against the Euclidean embedding.
    Qc {
        #[arg(long)]
        graph: PathBuf,
        /// Scale; accepts `inf`.
        #[arg(long = "R", default_value = "inf")]
        r: f64,
        #[arg(long, value_enum, default_value = "graph")]
        metric: MetricArg,
        #[arg(long, default_value_t = metricgraph::analysis::DEFAULT_PAIR_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = metricgraph::analysis::DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Doubling ratios mu(B(x, 2r)) / mu(B(x, r)).
    Doubling {
        #[arg(long)]
        graph: PathBuf,
        /// Center ids; every vertex when omitted.
        #[arg(long, value_delimiter = ',')]
        centers: Vec<u64>,
        #[arg(long, value_delimiter = ',', required = true)]
        scales: Vec<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Weak (1, inf)-Poincaré constant up to scale r.
    PiCheck {
        #[arg(long)]
        graph: PathBuf,
        /// Total scalar field CSV (id,value).
        #[arg(long)]
        u: PathBuf,
        /// Upper-gradient density CSV (id,value).
        #[arg(long)]
        rho: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long)]
        r: f64,
        #[arg(long, value_enum, default_value = "graph")]
        ball_metric: BallMetricArg,
        #[arg(long, value_enum, default_value = "dyadic")]
        radii: RadiiArg,
        #[command(flatten)]
        output: Output,
    },
    /// McShane extension of data on Omega (CSV id,value).
    Extend {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "graph")]
        metric: MetricArg,
        /// Clamp to the data's sup norm.
        #[arg(long)]
        truncate: bool,
        /// Fail with exit code 3 unless the Lipschitz (and sup) bounds hold.
        #[arg(long)]
        certify: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Whitney-type extension of vector data on Omega (CSV id,c1,...).
    Whitney {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.5)]
        beta: f64,
        #[arg(long)]
        certify: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Discrete infinity-harmonic extension of boundary data.
    Amle {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        boundary: PathBuf,
        #[arg(long, value_enum, default_value = "graph")]
        metric: MetricArg,
        #[arg(long, default_value_t = metricgraph::amle::DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = metricgraph::amle::DEFAULT_MAX_ITER)]
        max_iter: usize,
        #[arg(long, value_enum, default_value = "mcshane")]
        init: InitArg,
        #[command(flatten)]
        output: Output,
    },
    /// Run every invariant check applicable to a graph.
    Audit {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = metricgraph::analysis::DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Certification(String),
    NonConvergence(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Certification(_) => 3,
            Failure::NonConvergence(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Certification(m) | Failure::NonConvergence(m) => m,
        }
    }
}

impl From<metricgraph::Error> for Failure {
    fn from(e: metricgraph::Error) -> Self {
        match e {
            metricgraph::Error::Invariant(_) => Failure::Certification(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Input(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Input(format!("cannot configure {n} threads: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|()| commands::run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("metricgraph: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
