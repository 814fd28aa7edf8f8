//! `iterreg`: train kernel predictors by early-stopped subgradient descent,
//! compute stopping-rule exponents, run sample-size sweeps, and export
//! synthetic datasets.
//!
//! Exit codes: 0 success; 1 configuration/data problem; 2 inadmissible step
//! schedule without `schedule.force`; 3 divergence during training.

/// Prints a line to stdout, ignoring write failures such as a closed pipe
/// (`iterreg ... | head` must not panic).
#[macro_export]
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let mut out = std::io::stdout();
        let _ = out.write_fmt(format_args!($($arg)*));
        let _ = out.write_all(b"\n");
    }};
}

mod commands;
mod config;
mod csvio;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use commands::{cmd_indices, cmd_rates, cmd_sample, cmd_train, IndicesRequest};

#[derive(Parser)]
#[command(
    name = "iterreg",
    about = "Early-stopped kernel subgradient learning",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override a config field before parsing: --set path.to.field=value
    /// (repeatable; value parsed as JSON when possible).
    #[arg(long = "set", value_name = "PATH=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Train per the config; writes the path CSV, model JSON, and (for
    /// synthetic data) a risk report JSON.
    Train(ConfigArgs),
    /// Print stopping-time and rate exponents for a parameter regime.
    Indices {
        #[command(subcommand)]
        which: IndicesCommand,
    },
    /// Sweep sample sizes; writes a rates CSV and prints fitted slopes.
    Rates(ConfigArgs),
    /// Draw a synthetic dataset and export it to CSV.
    Sample {
        #[command(flatten)]
        config: ConfigArgs,
        /// Number of points (default: the config's data.synthetic.m).
        #[arg(long)]
        m: Option<usize>,
        /// Output CSV path (default: output.sample_csv or sample.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum IndicesCommand {
    /// General convex regime.
    General {
        /// Loss growth exponent (q >= 0).
        #[arg(long)]
        q: f64,
        /// Variance-bound exponent in [0, 1].
        #[arg(long, default_value_t = 0.0)]
        tau: f64,
        /// Approximation exponent in (0, 1].
        #[arg(long)]
        beta: f64,
        /// Capacity exponent in (0, 2); defaults to the capacity-independent limit.
        #[arg(long)]
        zeta: Option<f64>,
        /// Step decay exponent.
        #[arg(long)]
        theta: f64,
        /// Use the smooth-loss rules.
        #[arg(long)]
        smooth: bool,
        /// Also print the stopping index for this sample size.
        #[arg(long)]
        m: Option<usize>,
    },
    /// Hinge-loss classification shortcut.
    Hinge {
        #[arg(long)]
        beta: f64,
        /// Step decay exponent in (1/2, 1).
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        m: Option<usize>,
    },
    /// Hinge schedule tuned so a fixed iteration budget is rate-optimal.
    HingeFixed {
        #[arg(long)]
        beta: f64,
        /// Budget margin in (0, 1/3): the budget exponent is 2/3 + margin.
        #[arg(long)]
        margin: f64,
        #[arg(long)]
        m: Option<usize>,
    },
}

fn init_threads() {
    if let Ok(v) = std::env::var("IterREG_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n >= 1 {
                // Errors only if a global pool already exists; fine to ignore.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn main() {
    let cli = Cli::parse();
    init_threads();
    let result = match &cli.command {
        Command::Train(args) => cmd_train(&args.config, &args.set),
        Command::Indices { which } => {
            let (request, m) = match which {
                IndicesCommand::General { q, tau, beta, zeta, theta, smooth, m } => (
                    IndicesRequest::General {
                        q: *q,
                        tau: *tau,
                        beta: *beta,
                        zeta: *zeta,
                        theta: *theta,
                        smooth: *smooth,
                    },
                    *m,
                ),
                IndicesCommand::Hinge { beta, theta, m } => {
                    (IndicesRequest::Hinge { beta: *beta, theta: *theta }, *m)
                }
                IndicesCommand::HingeFixed { beta, margin, m } => {
                    (IndicesRequest::HingeFixed { beta: *beta, margin: *margin }, *m)
                }
            };
            // Indices parameters are plain inputs, not a schedule being
            // enforced: every failure is a configuration error.
            cmd_indices(&request, m).map_err(|mut f| {
                f.code = 1;
                f
            })
        }
        Command::Rates(args) => cmd_rates(&args.config, &args.set),
        Command::Sample { config, m, out } => {
            cmd_sample(&config.config, &config.set, *m, out.as_deref())
        }
    };
    if let Err(failure) = result {
        eprintln!("error: {}", failure.message);
        std::process::exit(failure.code);
    }
}
