use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use idslab::{exit_code, output_dir, registry, run, ExperimentConfig};

#[derive(Parser)]
#[command(name = "idslab", version, about = "Integrated density of states lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its result directory.
    Run {
        config: PathBuf,
        /// Output directory; overrides the config's `output`.
        #[arg(long, env = "IDSLAB_OUT")]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
    /// Print the experiment catalogue.
    ListExperiments,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, out, workers } => {
            let cfg = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            let dir = output_dir(&cfg, out.as_deref());
            let result = run(&cfg, &dir, workers);
            match &result {
                Ok(r) => {
                    for n in &r.notes {
                        eprintln!("note: {n}");
                    }
                    println!("{}: {:?} -> {}", cfg.experiment, r.status, r.out_dir.display());
                }
                Err(e) => eprintln!("error: {e}"),
            }
            exit_code(&result)
        }
        Command::Validate { config } => {
            match ExperimentConfig::load(&config).and_then(|c| c.validate().map(|w| (c, w))) {
                Ok((cfg, warnings)) => {
                    for w in &warnings {
                        eprintln!("warning: {w}");
                    }
                    println!("OK");
                    print!("{}", cfg.to_toml());
                    0
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    1
                }
            }
        }
        Command::ListExperiments => {
            print!("{}", registry::render());
            0
        }
    };
    ExitCode::from(code as u8)
}
