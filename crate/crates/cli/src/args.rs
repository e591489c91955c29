use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "recgame",
    version,
    about = "Solver and verification harness for zero-sum recursive stochastic games"
)]
pub struct Cli {
    /// Worker threads for parallel sections (defaults to all cores).
    #[arg(long, global = true, env = "RECGAME_JOBS")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a game file and print a summary.
    Validate { file: PathBuf },
    /// Discounted value v_λ.
    Solve {
        file: PathBuf,
        #[arg(long)]
        lambda: f64,
        /// Stop once successive iterates differ by at most tol·λ.
        #[arg(long, default_value = "1e-10")]
        tol: f64,
    },
    /// n-stage value v_n.
    Nstage {
        file: PathBuf,
        #[arg(long)]
        n: usize,
        /// Print v_1 through v_n instead of v_n only.
        #[arg(long)]
        all: bool,
    },
    /// Vanishing-discount limit of v_λ; prints the estimate per state.
    Limit {
        file: PathBuf,
        #[command(flatten)]
        limit: LimitArgs,
        /// Write the discount curve CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search (or check with --u) an Everett certificate; exit 1 when none qualifies.
    Certify {
        file: PathBuf,
        #[arg(long)]
        side: SideArg,
        /// Largest accepted distance between the certificate and the limit estimate.
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        /// Check this vector (comma separated, one entry per active state) instead of searching.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        u: Option<Vec<f64>>,
        #[command(flatten)]
        limit: LimitArgs,
        #[command(flatten)]
        tolerances: ToleranceArgs,
        /// Write the certificate JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stationary strategy extracted from a certificate.
    Strategy {
        file: PathBuf,
        #[arg(long)]
        cert: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        player: u8,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Discounted best response against a stationary strategy.
    Bestresponse {
        file: PathBuf,
        #[arg(long)]
        strategy: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value = "1e-9")]
        tol: f64,
        /// Write the full result JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the best-response policy as a strategy file here.
        #[arg(long)]
        policy_out: Option<PathBuf>,
    },
    /// Monte Carlo play of two stationary strategies.
    Simulate {
        file: PathBuf,
        #[arg(long)]
        sigma: PathBuf,
        #[arg(long)]
        tau: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Long-run guarantee check of a certificate's strategy; exit 1 on failure.
    Report {
        file: PathBuf,
        #[arg(long)]
        cert: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        #[command(flatten)]
        sim: SimArgs,
        /// Extra opponent strategy files, checked besides the default battery.
        #[arg(long)]
        adversary: Vec<PathBuf>,
        /// Write per-checkpoint CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the verdict JSON here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Emit an example or random game file.
    Zoo {
        #[arg(long)]
        name: ZooName,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Active states of random games.
        #[arg(long, default_value_t = 3)]
        active: usize,
        /// Absorbing states of random games.
        #[arg(long, default_value_t = 2)]
        absorbing: usize,
        /// Maximum actions per player of random games.
        #[arg(long, default_value_t = 2)]
        actions: usize,
        /// Absorption probability of every action profile of random games.
        #[arg(long, default_value_t = 0.3)]
        absorb_prob: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Grid points per action axis of parametric games.
        #[arg(long, default_value_t = 5)]
        points: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SideArg {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ZooName {
    Quit,
    Duel,
    Bigmatch,
    RandomRecursive,
    RandomStochastic,
    ParametricQuit,
    ParametricDuel,
}

#[derive(Debug, Args)]
pub struct LimitArgs {
    /// Decreasing discount grid, `geometric:A..B:P`.
    #[arg(long, default_value = "geometric:1e-1..1e-5:9")]
    pub grid: String,
    /// Cauchy tolerance of the limit test.
    #[arg(long = "tol", default_value = "1e-3")]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct ToleranceArgs {
    /// Slack of the weak inequalities.
    #[arg(long, default_value = "1e-9")]
    pub weak_tol: f64,
    /// Margin required by the strict inequalities.
    #[arg(long, default_value = "1e-6")]
    pub strict_tol: f64,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long, default_value_t = 10_000)]
    pub horizon: usize,
    #[arg(long, default_value_t = 1_000)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
