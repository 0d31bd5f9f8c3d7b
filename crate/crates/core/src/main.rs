use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fujita_lab::cli;
use fujita_lab::config::{Command, ExperimentConfig};

/// Critical-exponent laboratory for `|x|^σ1 u_t = Δu + |x|^σ2 |u|^p + t^ϱ w(x)`.
#[derive(Debug, Parser)]
#[command(name = "fujita-lab", version)]
struct Args {
    /// Experiment to run; overrides `command` in the config file.
    #[arg(value_enum)]
    command: Command,
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config file.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let result = ExperimentConfig::load(&args.config).and_then(|cfg| {
        let command = cfg.command(Some(args.command))?;
        cli::run(&cfg, command, args.out.as_deref())
    });
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.class().exit_code() as u8)
        }
    }
}
