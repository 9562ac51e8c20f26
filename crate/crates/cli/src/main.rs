use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

mod exact;
mod verify;

#[derive(Debug, Parser)]
#[command(name = "acluster", version, about = "Active clustering with pairwise same-class queries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a seeded Monte Carlo experiment described by a JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Per-trial CSV output; overrides the config.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Full JSON report output; overrides the config.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Check a theorem or lemma and print one verdict per line.
    Verify(verify::VerifyArgs),
    /// Exact query-count distribution and moments for n items.
    Exact {
        #[arg(long)]
        n: usize,
        /// Also evaluate the normalized generating function at q.
        #[arg(long)]
        q: Option<f64>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Mean query count of every strategy on a categorical model, smallest first.
    Compare {
        /// Comma-separated block probabilities.
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.3,0.2")]
        probs: Vec<f64>,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = verify::DEFAULT_SEED)]
        seed: u64,
    },
    /// Serve annotation sessions over HTTP.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Directory holding one subdirectory per session.
        #[arg(long)]
        data: PathBuf,
        /// Static assets (for example a built UI) served under `/`.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
        /// Allow cross-origin requests.
        #[arg(long)]
        cors: bool,
    },
}

fn simulate(config: PathBuf, csv: Option<PathBuf>, json: Option<PathBuf>) -> Result<()> {
    let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
    let mut cfg: acluster_core::harness::ExperimentConfig =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", config.display()))?;
    if csv.is_some() {
        cfg.output.csv = csv;
    }
    if json.is_some() {
        cfg.output.json = json;
    }
    let report = acluster_core::harness::run_experiment(&cfg)?;
    report.write_outputs().context("writing outputs")?;
    for v in &report.verdicts {
        eprintln!("{}", v.line());
    }
    let summary = serde_json::json!({
        "strategy": cfg.strategy,
        "n": cfg.n,
        "trials": report.trials.len(),
        "seed": report.seed,
        "mean": report.mean,
        "variance": report.variance,
        "class_means": report.class_means,
        "recovery_rate": report.recovery_rate,
        "verdicts": report.verdicts,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn compare(probs: Vec<f64>, n: usize, trials: usize, seed: u64) -> Result<()> {
    let model = acluster_core::CategoricalModel::new(probs)?;
    println!("strategy,mean");
    for (kind, mean) in acluster_core::harness::compare_strategies(&model, n, trials, seed)? {
        println!("{kind},{mean}");
    }
    Ok(())
}

fn serve(port: u16, host: IpAddr, data: PathBuf, static_dir: Option<PathBuf>, cors: bool) -> Result<()> {
    let state = acluster_service::AppState::open(&data).with_context(|| format!("opening {}", data.display()))?;
    let opts = acluster_service::AppOptions { static_dir, cors };
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(acluster_service::serve(SocketAddr::new(host, port), state, opts))?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let out = match cli.command {
        Command::Simulate { config, csv, json } => simulate(config, csv, json).map(|_| true),
        Command::Verify(args) => verify::run(args),
        Command::Exact { n, q, format } => exact::run(n, q, format).map(|_| true),
        Command::Compare { probs, n, trials, seed } => compare(probs, n, trials, seed).map(|_| true),
        Command::Serve {
            port,
            host,
            data,
            static_dir,
            cors,
        } => serve(port, host, data, static_dir, cors).map(|_| true),
    };
    match out {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
