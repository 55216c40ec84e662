use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cotangent_lift::coefficients::FAMILY_PRESETS;
use cotangent_lift::config::{load_config, Overrides, SHIPPED_CONFIGS};
use cotangent_lift::report::emit_report;
use cotangent_lift::run::run;

#[derive(Parser)]
#[command(
    name = "cotlift",
    version,
    about = "Numeric checks for lifted structures on cotangent bundles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks listed in a JSON config.
    Verify {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
        /// Per-check tolerance, e.g. `closure=1e-6`; repeatable.
        #[arg(long = "tol-override", value_name = "NAME=VALUE", value_parser = parse_tolerance)]
        tol_override: Vec<(String, f64)>,
        /// Report path; overrides the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List coefficient family presets and the shipped example configs.
    Presets {
        /// Print the contents of one shipped config.
        #[arg(long, value_name = "FILE")]
        show: Option<String>,
    },
}

fn parse_tolerance(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let value: f64 = value
        .parse()
        .map_err(|e| format!("bad tolerance `{value}`: {e}"))?;
    Ok((name.to_string(), value))
}

fn verify(config: PathBuf, overrides: Overrides) -> ExitCode {
    let cfg = match load_config(&config).and_then(|c| c.with_overrides(&overrides)) {
        Ok(cfg) => cfg,
        Err(errors) => {
            eprintln!("invalid config {}:\n{errors}", config.display());
            return ExitCode::from(2);
        }
    };
    let report = run(&cfg);
    print!("{}", report.summary());
    if let Some(path) = &cfg.output {
        if let Err(e) = emit_report(&report, path) {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    }
    ExitCode::from(report.exit_code() as u8)
}

fn presets(show: Option<String>) -> ExitCode {
    if let Some(name) = show {
        return match SHIPPED_CONFIGS.iter().find(|(file, _, _)| *file == name) {
            Some((_, _, text)) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            None => {
                eprintln!("no shipped config named `{name}`");
                ExitCode::from(2)
            }
        };
    }
    println!("coefficient families (a bare number is a constant):");
    for (name, formula) in FAMILY_PRESETS {
        println!("  {name:<12} {formula}");
    }
    println!("\nexample configs (cotlift presets --show FILE):");
    for (file, description, _) in SHIPPED_CONFIGS {
        println!("  {file:<32} {description}");
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Verify {
            config,
            seed,
            samples,
            tol_override,
            out,
        } => verify(
            config,
            Overrides {
                seed,
                samples,
                tolerances: tol_override,
                output: out,
            },
        ),
        Command::Presets { show } => presets(show),
    }
}
