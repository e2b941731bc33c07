//! Thin command-line front end: `spde-lab run <config-path>` with
//! `--seed`, `--out`, `--replicas` overrides. Exit codes: 0 success,
//! 2 invalid config, 3 numerical failure (diagnostics on stderr).

use spde_lab::experiment::{run, ExperimentConfig};
use spde_lab::Error;
use std::process::ExitCode;

const USAGE: &str = "\
spde-lab — periodic-lattice laboratory for parabolic SPDEs with homogeneous noise

USAGE:
    spde-lab run <config-path> [--seed N] [--out DIR] [--replicas N]

The config is a flat `key = value` document; see the repository examples/
directory and README for the recognized keys per experiment kind
(admissibility_table, noise_validation, solve, equivalence, regularity).
";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() || args[0] == "--help" || args[0] == "-h" {
        print!("{USAGE}");
        return ExitCode::SUCCESS;
    }
    if args[0] != "run" {
        eprintln!("error: unknown subcommand `{}`\n\n{USAGE}", args[0]);
        return ExitCode::from(2);
    }
    let Some(config_path) = args.get(1) else {
        eprintln!("error: missing <config-path>\n\n{USAGE}");
        return ExitCode::from(2);
    };
    let mut overrides: Vec<(String, String)> = Vec::new();
    let mut i = 2;
    while i < args.len() {
        let key = match args[i].as_str() {
            "--seed" => "seed",
            "--out" => "out",
            "--replicas" => "replicas",
            other => {
                eprintln!("error: unknown flag `{other}`\n\n{USAGE}");
                return ExitCode::from(2);
            }
        };
        let Some(value) = args.get(i + 1) else {
            eprintln!("error: flag `{}` needs a value", args[i]);
            return ExitCode::from(2);
        };
        overrides.push((key.to_string(), value.clone()));
        i += 2;
    }
    let mut config = match ExperimentConfig::from_file(std::path::Path::new(config_path)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("invalid config: {e}");
            return ExitCode::from(2);
        }
    };
    for (k, v) in overrides {
        config.set(&k, v);
    }
    match run(&config) {
        Ok(manifest) => {
            println!(
                "{} finished: {} artifacts in {} (config {})",
                manifest.experiment,
                manifest.files.len(),
                config.out_dir().display(),
                &manifest.config_hash[..12]
            );
            ExitCode::SUCCESS
        }
        Err(e @ Error::Config(_)) => {
            eprintln!("invalid config: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("numerical failure: {e}");
            ExitCode::from(3)
        }
    }
}
