//! `bbprice`: barrier option prices from a JSON run configuration.

mod config;
mod output;
mod run;

use clap::{Args, Parser, Subcommand};
use config::{load_config, ConfigError, Format, RunConfig};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_COMPUTE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "bbprice", version, about = "Price CEV and CIR barrier options by BP, GIT and FD")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Price every (method, K, T) cell.
    Price(Common),
    /// Price every cell and report percentage differences against a reference method.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Reference method (default: fd if requested, else the last method).
        #[arg(long, value_parser = parse_method)]
        reference: Option<config::Method>,
    },
    /// Repeat each cell over a sequence of grid sizes.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Comma-separated grid sizes.
        #[arg(long, value_delimiter = ',', default_values_t = run::CONVERGE_SIZES)]
        sizes: Vec<usize>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output file; overrides `output.path`.  Stdout when neither is given.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format; overrides `output.format`.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Omit the timestamp line.
    #[arg(long)]
    no_timestamp: bool,
}

fn parse_method(s: &str) -> Result<config::Method, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown method `{s}`"))
}

fn sink(path: Option<&PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

enum Failure {
    Config(String),
    Compute(String),
}

fn setup(common: &Common) -> Result<(RunConfig, config::Model, rayon::ThreadPool), Failure> {
    let cfg = load_config(&common.config).map_err(|e: ConfigError| Failure::Config(e.to_string()))?;
    let model = cfg.build_model().map_err(Failure::Config)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Failure::Config("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Failure::Config(format!("thread pool: {e}")))?;
    Ok((cfg, model, pool))
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let common = match &cli.command {
        Command::Price(c) => c,
        Command::Compare { common, .. } | Command::Converge { common, .. } => common,
    };
    let (cfg, model, pool) = setup(common)?;
    if let Command::Compare { reference: Some(r), .. } = &cli.command {
        if !cfg.methods.contains(r) {
            return Err(Failure::Config(format!("--reference {r} is not among the configured methods")));
        }
    }
    if let Command::Converge { sizes, .. } = &cli.command {
        if sizes.is_empty() || sizes.iter().any(|&n| n < 20) {
            return Err(Failure::Config("--sizes needs at least one size, each >= 20".into()));
        }
    }
    let format = common.format.unwrap_or(cfg.output.format);
    let path = common.out.as_ref().or(cfg.output.path.as_ref());
    let stamp = (!common.no_timestamp).then(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
    let stamp = stamp.as_deref();
    let set = run::Settings::from_config(&cfg);
    let write_err = |e: io::Error| Failure::Compute(format!("cannot write output: {e}"));
    let failures: Vec<String> = match &cli.command {
        Command::Price(_) => {
            let cells = pool.install(|| run::price_all(&cfg, &model, &set));
            output::write_prices(sink(path).map_err(write_err)?, format, stamp, &cells).map_err(write_err)?;
            cells.iter().filter(|c| c.failed()).map(|c| format!("{} K={} T={}: {}", c.method, c.strike, c.maturity, c.notes)).collect()
        }
        Command::Compare { reference, .. } => {
            let cells = pool.install(|| run::price_all(&cfg, &model, &set));
            let reference = reference.unwrap_or_else(|| run::reference_method(&cfg.methods));
            let rows = run::compare(&cells, reference);
            output::write_compare(sink(path).map_err(write_err)?, format, stamp, reference, &rows).map_err(write_err)?;
            cells.iter().filter(|c| c.failed()).map(|c| format!("{} K={} T={}: {}", c.method, c.strike, c.maturity, c.notes)).collect()
        }
        Command::Converge { sizes, .. } => {
            let rows = pool.install(|| run::converge(&cfg, &model, &set, sizes));
            output::write_converge(sink(path).map_err(write_err)?, format, stamp, &rows).map_err(write_err)?;
            rows.iter()
                .filter(|r| r.price.is_nan())
                .map(|r| format!("{} K={} T={} M={}: {}", r.method, r.strike, r.maturity, r.size, r.notes))
                .collect()
        }
    };
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Compute(format!("{} cell(s) failed:\n  {}", failures.len(), failures.join("\n  "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("bbprice: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("bbprice: {msg}");
            ExitCode::from(EXIT_COMPUTE)
        }
    }
}
