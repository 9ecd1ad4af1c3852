use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sewing_cli::{find, registry, run_config, with_workers, HarnessError};

#[derive(Parser)]
#[command(name = "sewing", about = "Run stochastic sewing experiments from TOML configs")]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "SEWING_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output root; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List experiment names.
    List,
    /// Print what an experiment checks.
    Describe { name: String },
}

fn run(cli: Cli) -> Result<bool, HarnessError> {
    match cli.command {
        Command::List => {
            for e in registry() {
                println!("{:<24} {}", e.name, e.description);
            }
            Ok(true)
        }
        Command::Describe { name } => {
            let e = find(&name).ok_or_else(|| HarnessError::Config(format!("unknown experiment {name:?}")))?;
            println!("{}\n\n{}\n\nstatement: {}", e.name, e.description, e.statement);
            Ok(true)
        }
        Command::Run { config, seed, out } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| HarnessError::Config(format!("{}: {e}", config.display())))?;
            let go = || run_config(&text, seed, out);
            let r = match cli.workers {
                Some(w) => with_workers(w, go)?,
                None => go()?,
            };
            for c in &r.outcome.checks {
                println!("{} {}: observed {} (target {})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.observed, c.target);
            }
            println!("output: {}", r.dir.display());
            Ok(r.outcome.pass())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
