use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use transjump::config::{Mode, RunConfig};
use transjump::experiment::{priors_plot, replicate, run_experiment};
use transjump::validate::{run_suite, Suite};

#[derive(Parser)]
#[command(
    name = "transjump",
    version,
    about = "Birth-or-Death RJ-MCMC for sinusoid detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one chain on a signal file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Corrected and legacy chains on synthetic replications.
    Replicate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a named validation suite.
    Validate {
        #[arg(long)]
        suite: String,
    },
    /// Write the Poisson and accelerated Poisson pmfs as CSV and SVG.
    PriorsPlot {
        #[arg(long, default_value_t = 5.0)]
        lambda: f64,
        #[arg(long, default_value_t = 32)]
        kmax: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn load(path: &PathBuf, mode: Mode) -> transjump::Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| transjump::Error::Io {
        path: path.clone(),
        source,
    })?;
    let mut cfg = RunConfig::parse_as(&text, path, mode)?;
    cfg.apply_seed_override(|k| std::env::var(k).ok())?;
    Ok(cfg)
}

fn execute(cli: Cli) -> transjump::Result<bool> {
    match cli.command {
        Command::Run { config } => {
            let cfg = load(&config, Mode::Run)?;
            let report = run_experiment(&cfg)?;
            println!(
                "{} iterations, posterior mean k = {:.4}",
                report.output.records.len(),
                report.output.mean_order()
            );
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            Ok(true)
        }
        Command::Replicate { config } => {
            let cfg = load(&config, Mode::Replicate)?;
            let report = replicate(&cfg)?;
            println!("replication  E[k] corrected  E[k] legacy  mode corrected  mode legacy");
            for r in &report.replications {
                println!(
                    "{:>11}  {:>14.4}  {:>11.4}  {:>14}  {:>11}",
                    r.index,
                    r.mean_corrected,
                    r.mean_legacy,
                    r.mode_corrected(),
                    r.mode_legacy()
                );
            }
            println!("wrote {}", cfg.output.join("aggregate.csv").display());
            Ok(true)
        }
        Command::Validate { suite } => {
            let suite: Suite = suite.parse()?;
            let report = run_suite(suite)?;
            print!("{report}");
            Ok(report.pass())
        }
        Command::PriorsPlot { lambda, kmax, out } => {
            let (poisson, accelerated) = priors_plot(lambda, kmax, &out)?;
            let mode = |p: &[f64]| transjump::experiment::argmax(p);
            println!(
                "poisson mode {}, accelerated mode {}; wrote {}",
                mode(&poisson),
                mode(&accelerated),
                out.join("priors.csv").display()
            );
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, transjump::Error::Config(ref m) if m.starts_with("unknown suite")) {
                eprintln!("usage: transjump validate --suite <name>");
            }
            ExitCode::from(2)
        }
    }
}
