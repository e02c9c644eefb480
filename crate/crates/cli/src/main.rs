use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pluri_cli::commands::{self, Context};
use pluri_cli::{Failure, RunConfig};

#[derive(Parser)]
#[command(name = "pluri", version, about = "Pluripotential experiments on polynomial automorphisms")]
struct Cli {
    /// TOML configuration; defaults apply to every missing key.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Green functions and the K+ classification on a complex line.
    Green,
    /// Disk envelopes, relative extremal functions and hull probes.
    Disk,
    /// Relative extremal function of a disk in a disk on a grid.
    Envelope,
    /// Cesaro pullbacks of two starting boxes, optionally Birkhoff averages.
    Equidist,
    /// Runs the acceptance criteria.
    Verify,
    /// Prints the effective configuration.
    Config,
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut loaded = RunConfig::load(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        loaded.config.seed = s;
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Config(anyhow::anyhow!("--threads must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Io(anyhow::anyhow!("thread pool: {e}")))?;
    }
    let ctx = Context { loaded, out: cli.out, threads: rayon::current_num_threads() };
    let print = |v: serde_json::Value| {
        let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&v).expect("json"));
    };
    match cli.command {
        Command::Green => print(commands::green(&ctx)?),
        Command::Disk => print(commands::disk(&ctx)?),
        Command::Envelope => print(commands::envelope(&ctx)?),
        Command::Equidist => print(commands::equidist(&ctx)?),
        Command::Config => {
            let _ = write!(std::io::stdout(), "{}", ctx.loaded.config.canonical());
        }
        Command::Verify => {
            let outcome = commands::verify(&ctx)?;
            for r in &outcome.results {
                println!("{}", r.line());
            }
            if let Some(d) = &outcome.determinism {
                println!(
                    "[{}] 12 {:<34} {} files identical at {} and {} threads",
                    if d.passed { "PASS" } else { "FAIL" },
                    pluri_cli::criteria::name(12),
                    d.files_compared - d.mismatched.len(),
                    d.threads[0],
                    d.threads[1]
                );
            }
            let failed = outcome.failed();
            if !failed.is_empty() {
                return Err(Failure::Acceptance(failed));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pluri: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
