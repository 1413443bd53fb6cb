//! `ratchet`: experiment runner. Each subcommand prints one JSON report on
//! stdout and exits 0 when every test passes, 3 when one fails and 2 on a
//! configuration error.

mod commands;
mod config;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use commands::CliError;
use config::{Config, Resolver};
use report::Report;

#[derive(Parser)]
#[command(name = "ratchet", version, about = "Experiments on the γ-Brownian ratchet")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Flat JSON file of parameters; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    flags: Config,
}

#[derive(Subcommand)]
enum Command {
    /// Speed from paths, renewal cycles and the exact jump chain.
    Speed(Common),
    /// Stationary gap law 3·Ai.
    Invariant(Common),
    /// Gaussian fluctuations and γ-independence of sigma.
    Clt(Common),
    /// Brownian scaling across rates.
    Scaling(Common),
    /// Model variants: pore binding, dissociation, drift.
    Variant(Common),
    /// Coupling of two reflection points.
    Coupling(Common),
    /// Exact jump chain.
    Chain(Common),
    /// Analytic identities.
    Selftest(Common),
}

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_FAILED: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    let (name, common, run): (&str, Common, fn(&mut Resolver, Option<&std::path::Path>) -> commands::Run) =
        match cli.command {
            Command::Speed(c) => ("speed", c, commands::speed),
            Command::Invariant(c) => ("invariant", c, commands::invariant),
            Command::Clt(c) => ("clt", c, commands::clt),
            Command::Scaling(c) => ("scaling", c, commands::scaling),
            Command::Variant(c) => ("variant", c, commands::variant),
            Command::Coupling(c) => ("coupling", c, commands::coupling),
            Command::Chain(c) => ("chain", c, commands::chain),
            Command::Selftest(c) => ("selftest", c, commands::selftest),
        };
    match execute(name, common, run) {
        Ok(report) => {
            let mut stdout = std::io::stdout().lock();
            match serde_json::to_writer_pretty(&mut stdout, &report) {
                Ok(()) => {
                    let _ = writeln!(stdout);
                }
                Err(e) if e.is_io() => {}
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_RUNTIME);
                }
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                let failed: Vec<&str> = report.tests.iter().filter(|(_, c)| !c.pass).map(|(k, _)| k.as_str()).collect();
                eprintln!("failed: {}", failed.join(", "));
                ExitCode::from(EXIT_FAILED)
            }
        }
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn execute(
    name: &str,
    common: Common,
    run: fn(&mut Resolver, Option<&std::path::Path>) -> commands::Run,
) -> Result<Report, CliError> {
    let mut cfg = match &common.config {
        Some(path) => Config::load(path).map_err(CliError::Config)?,
        None => Config::default(),
    }
    .overridden_by(&common.flags);

    if let Some(n) = cfg.threads {
        if n == 0 {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }

    let start = Instant::now();
    let out = cfg.out.clone();
    let outcome = run(&mut Resolver { cfg: &mut cfg }, out.as_deref())?;
    Ok(Report::new(name, cfg, outcome, start.elapsed().as_secs_f64()))
}
