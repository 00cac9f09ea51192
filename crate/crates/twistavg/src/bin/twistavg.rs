//! Thin CLI over the verification harness: single runs, grid sweeps, and
//! sub-formula probes.  Worker count via TWISTAVG_WORKERS.

use clap::{Parser, Subcommand};
use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use twistavg::chars::DirichletCharacter;
use twistavg::harness::{self, RunConfig};

#[derive(Parser)]
#[command(name = "twistavg", about = "Verify first-moment identities for twisted modular L-functions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute both sides of the average identity and compare
    Verify {
        #[arg(long)]
        k: u32,
        #[arg(long = "N", default_value_t = 1)]
        n_level: u64,
        /// twist modulus; must match the label's modulus when --chi is given
        #[arg(long = "D", default_value_t = 1)]
        d_mod: u64,
        /// character label "D:e1,e2,..."; defaults to the principal label
        #[arg(long)]
        chi: Option<String>,
        #[arg(long, default_value_t = 1)]
        r: u64,
        #[arg(long, default_value_t = 1)]
        n: u64,
        /// evaluation point, "RE" or "RE+IMi"
        #[arg(long)]
        s: String,
        #[arg(long, default_value_t = 1000)]
        cutoff_a: u64,
        #[arg(long, default_value_t = 200)]
        cutoff_d: u64,
        #[arg(long, default_value_t = 128)]
        prec: u32,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// write the JSON report here as well as to stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a grid of configurations (JSON array of run configs) to CSV
    Sweep {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print one named sub-formula value
    Probe {
        name: String,
        args: Vec<String>,
    },
}

fn run() -> Result<bool, Box<dyn std::error::Error>> {
    harness::init_workers();
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Verify {
            k,
            n_level,
            d_mod,
            chi,
            r,
            n,
            s,
            cutoff_a,
            cutoff_d,
            prec,
            tol,
            out,
        } => {
            let chi_label = chi.unwrap_or_else(|| {
                DirichletCharacter::principal(d_mod).label_string()
            });
            let parsed = DirichletCharacter::parse_label(&chi_label)?;
            if parsed.modulus != d_mod && !(d_mod == 1 && parsed.modulus == 1) {
                return Err(format!(
                    "--D {} disagrees with character modulus {}",
                    d_mod, parsed.modulus
                )
                .into());
            }
            let cfg = RunConfig {
                k,
                level: n_level,
                chi: chi_label,
                psi: None,
                r,
                n,
                s,
                cutoff_a,
                cutoff_d,
                prec,
                tol,
            };
            let report = harness::verify_identity(&cfg)?;
            let json = serde_json::to_string_pretty(&report)?;
            println!("{json}");
            if let Some(path) = out {
                File::create(path)?.write_all(json.as_bytes())?;
            }
            Ok(report.pass)
        }
        Cmd::Sweep { grid, out } => {
            let text = std::fs::read_to_string(grid)?;
            let configs: Vec<RunConfig> = serde_json::from_str(&text)?;
            let mut buf = Vec::new();
            harness::sweep_csv(&configs, &mut buf)?;
            match out {
                Some(path) => File::create(path)?.write_all(&buf)?,
                None => std::io::stdout().write_all(&buf)?,
            }
            // a sweep passes when no row recorded an error
            let rows = String::from_utf8(buf)?;
            Ok(rows.lines().skip(1).all(|l| l.ends_with(',')))
        }
        Cmd::Probe { name, args } => {
            let mut out = std::io::stdout();
            harness::probe(&name, &args, &mut out)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("FAIL");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
