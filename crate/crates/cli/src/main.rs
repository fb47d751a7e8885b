//! Command-line driver: `elastodg <converge|energy|dtscan|run> --config <path>
//! [--out <dir>] [--seed <u64>]`.
//!
//! Results are written as CSV files into the output directory (current
//! directory by default) plus a human-readable summary on stdout. The exit
//! code is 0 iff no run cell aborted.

use elastodg::config::{parse_config, RunConfig};
use elastodg::runner;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const USAGE: &str = "\
usage: elastodg <command> --config <path> [--out <dir>] [--seed <u64>]

commands:
  run        integrate the configured problem once; writes trajectory.csv
  converge   mesh-refinement sweep; writes rates.csv and prints rate tables
  energy     zero-forcing energy trace; writes energy.csv
  dtscan     critical-time-step scan over dtscan.c_f; writes dtscan.csv

options:
  --config <path>   run configuration file (required)
  --out <dir>       output directory (default: .)
  --seed <u64>      seed for probe vectors and scan perturbations (default: 0)
";

struct Args {
    command: String,
    config: String,
    out_dir: PathBuf,
    seed: u64,
}

fn parse_args() -> Result<Args, String> {
    let mut argv = std::env::args().skip(1);
    let command = argv.next().ok_or_else(|| "missing command".to_string())?;
    if command == "--help" || command == "-h" || command == "help" {
        return Err(String::new());
    }
    if !["run", "converge", "energy", "dtscan"].contains(&command.as_str()) {
        return Err(format!("unknown command '{command}'"));
    }
    let mut config = None;
    let mut out_dir = PathBuf::from(".");
    let mut seed = 0u64;
    while let Some(flag) = argv.next() {
        match flag.as_str() {
            "--config" => {
                config = Some(argv.next().ok_or("--config needs a path")?);
            }
            "--out" => {
                out_dir = PathBuf::from(argv.next().ok_or("--out needs a directory")?);
            }
            "--seed" => {
                let v = argv.next().ok_or("--seed needs a value")?;
                seed = v.parse().map_err(|_| format!("bad seed '{v}'"))?;
            }
            other => return Err(format!("unknown flag '{other}'")),
        }
    }
    let config = config.ok_or("missing --config <path>")?;
    Ok(Args {
        command,
        config,
        out_dir,
        seed,
    })
}

fn write_file(dir: &Path, name: &str, contents: &str) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

fn report_warnings(cfg: &RunConfig) {
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
}

fn main() -> ExitCode {
    let args = match parse_args() {
        Ok(a) => a,
        Err(msg) => {
            if !msg.is_empty() {
                eprintln!("error: {msg}\n");
            }
            eprint!("{USAGE}");
            return ExitCode::from(2);
        }
    };
    let cfg = match parse_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    report_warnings(&cfg);

    let result = match args.command.as_str() {
        "run" => cmd_run(&cfg, &args),
        "converge" => cmd_converge(&cfg, &args),
        "energy" => cmd_energy(&cfg, &args),
        "dtscan" => cmd_dtscan(&cfg, &args),
        _ => unreachable!("validated command"),
    };
    match result {
        Ok(aborted) => {
            if aborted {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_run(cfg: &RunConfig, args: &Args) -> Result<bool, Box<dyn std::error::Error>> {
    let out = runner::cmd_run(cfg)?;
    let path = write_file(&args.out_dir, "trajectory.csv", &out.csv)?;
    println!("{}", out.summary);
    println!("wrote {}", path.display());
    Ok(out.trajectory.blown_up.is_some())
}

fn cmd_converge(cfg: &RunConfig, args: &Args) -> Result<bool, Box<dyn std::error::Error>> {
    let out = runner::cmd_converge(cfg)?;
    let path = write_file(&args.out_dir, "rates.csv", &out.csv)?;
    print!("{}", out.text);
    println!("wrote {}", path.display());
    Ok(!out.aborted.is_empty())
}

fn cmd_energy(cfg: &RunConfig, args: &Args) -> Result<bool, Box<dyn std::error::Error>> {
    let out = runner::cmd_energy(cfg)?;
    let path = write_file(&args.out_dir, "energy.csv", &out.csv)?;
    println!("max energy ratio: {:.12e}", out.max_ratio);
    println!("wrote {}", path.display());
    Ok(false)
}

fn cmd_dtscan(cfg: &RunConfig, args: &Args) -> Result<bool, Box<dyn std::error::Error>> {
    let out = runner::cmd_dtscan(cfg, args.seed)?;
    let path = write_file(&args.out_dir, "dtscan.csv", &out.csv)?;
    for (c_f, dt) in &out.rows {
        println!("c_f = {c_f:<10.4e} critical dt = {dt:.9e}");
    }
    if !out.monotone {
        eprintln!("warning: critical dt is not monotone in c_f");
    }
    println!("wrote {}", path.display());
    Ok(false)
}
