use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use ofdmqkd::misalign::MisalignmentModel;
use ofdmqkd::schemes::{optimize_gate, SchemeError};
use ofdmqkd::{SchemeKind, SystemParams};
use ofdmqkd_cli::config::{parse_config, parse_config_str, Config};
use ofdmqkd_cli::figures::{write_figures, DEFAULT_GRID};
use ofdmqkd_cli::sweep::{csv_string, evaluate, run_sweep, write_atomic, GateChoice, Series, SweepError, SweepGrid};
use ofdmqkd_cli::verify::{run_verify, VerifyError, A_OVER_TC, TABLE_HEADER};
use ofdmqkd_cli::{format_report, thread_pool};

#[derive(Parser)]
#[command(name = "ofdmqkd", version, about = "Key rates of OFDM-multiplexed decoy-state BB84 links under timing misalignment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Flat `key = value` config; omitted keys take nominal values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one operating point and print every budget and rate field.
    Rate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scheme: SchemeKind,
        /// Override the subcarrier count.
        #[arg(long)]
        n: Option<usize>,
        /// E|tau| / T; overrides the config's timing model.
        #[arg(long, allow_negative_numbers = true)]
        misalign_norm: Option<f64>,
        /// Gate narrowing per side in ps, or `opt`.
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        b: String,
    },
    /// Sweep E|tau| / T and write one CSV row per scheme, N and grid point.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, required = true)]
        scheme: Vec<SchemeKind>,
        /// Subcarrier counts; defaults to the config's.
        #[arg(long)]
        n: Vec<usize>,
        /// `log:LO:HI:POINTS` or `lin:LO:HI:POINTS`.
        #[arg(long)]
        grid: String,
        /// Gate narrowing per side in ps, or `opt`.
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        b: String,
        /// Also emit optimal-gate rows, labelled `<scheme>-opt`.
        #[arg(long)]
        optimize: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Find the rate-maximising gate narrowing.
    OptimizeGate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scheme: SchemeKind,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, allow_negative_numbers = true)]
        misalign_norm: Option<f64>,
    },
    /// Compare closed-form link budgets with the Monte-Carlo oracle.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Replace the a / T_c values of the grid.
        #[arg(long)]
        a_over_tc: Vec<f64>,
    },
    /// Write fig7.csv to fig10.csv.
    Figures {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = DEFAULT_GRID)]
        grid: String,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

/// Bad input: exit status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct Usage(String);

fn usage(e: impl std::fmt::Display) -> anyhow::Error {
    Usage(e.to_string()).into()
}

fn sweep_error(e: SweepError) -> anyhow::Error {
    match e {
        SweepError::Io { .. } | SweepError::Scheme(SchemeError::KeyRate(_)) => e.into(),
        other => usage(other),
    }
}

fn load(common: &Common) -> Result<Config> {
    match &common.config {
        Some(path) => parse_config(path).map_err(|e| usage(format!("config {}: {e}", path.display()))),
        None => Ok(parse_config_str("").expect("empty config is valid")),
    }
}

fn operating_point(config: &Config, n: Option<usize>, norm: Option<f64>) -> Result<(SystemParams, MisalignmentModel)> {
    let params = match n {
        Some(n) => config.params.with_subcarriers(n).map_err(usage)?,
        None => config.params.clone(),
    };
    let model = match norm {
        Some(x) => MisalignmentModel::from_normalized_mean(x, params.symbol_duration()),
        None => config.model(),
    }
    .map_err(|e| usage(format!("misalign_norm: {e}")))?;
    Ok((params, model))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Rate {
            common,
            scheme,
            n,
            misalign_norm,
            b,
        } => {
            let config = load(&common)?;
            let (params, model) = operating_point(&config, n, misalign_norm)?;
            let gate: GateChoice = b.parse().map_err(usage)?;
            let report = evaluate(scheme, gate, &params, &model).map_err(sweep_error)?;
            println!("{:<20} = {:.9e} ps", "misalign_half_width", model.half_width());
            print!("{}", format_report(&report));
        }
        Command::OptimizeGate {
            common,
            scheme,
            n,
            misalign_norm,
        } => {
            let config = load(&common)?;
            let (params, model) = operating_point(&config, n, misalign_norm)?;
            let (b_star, report) = optimize_gate(scheme, &params, &model).map_err(|e| sweep_error(e.into()))?;
            println!("{:<20} = {:.9e} ps", "misalign_half_width", model.half_width());
            println!("{:<20} = {b_star:.9e} ps", "b_star");
            print!("{}", format_report(&report));
        }
        Command::Sweep {
            common,
            scheme,
            n,
            grid,
            b,
            optimize,
            out,
        } => {
            let config = load(&common)?;
            let grid: SweepGrid = grid.parse().map_err(usage)?;
            let gate: GateChoice = b.parse().map_err(usage)?;
            let mut series = Vec::new();
            for kind in scheme {
                series.push(Series { kind, gate });
                if optimize && gate != GateChoice::Optimal && kind.is_ofdm() {
                    series.push(Series {
                        kind,
                        gate: GateChoice::Optimal,
                    });
                }
            }
            let ns = if n.is_empty() { vec![config.params.num_subcarriers()] } else { n };
            let rows = run_sweep(&config.params, &series, &ns, &grid.values()).map_err(sweep_error)?;
            write_atomic(&out, &csv_string(&rows)).map_err(sweep_error)?;
            eprintln!("wrote {} rows to {}", rows.len(), out.display());
        }
        Command::Verify {
            common,
            trials,
            seed,
            a_over_tc,
        } => {
            let config = load(&common)?;
            let a_grid = if a_over_tc.is_empty() { A_OVER_TC.to_vec() } else { a_over_tc };
            let start = Instant::now();
            let cells = match run_verify(&config.params, trials, seed, &a_grid) {
                Err(e @ VerifyError::Scheme(SchemeError::KeyRate(_))) => return Err(e.into()),
                other => other.map_err(usage)?,
            };
            println!("{TABLE_HEADER}");
            for c in &cells {
                println!("{}", c.table_row());
            }
            let failed: Vec<_> = cells.iter().filter(|c| !c.passed()).collect();
            println!(
                "{}/{} cells passed ({trials} trials, seed {seed}, {:.1} s)",
                cells.len() - failed.len(),
                cells.len(),
                start.elapsed().as_secs_f64()
            );
            if !failed.is_empty() {
                for c in failed {
                    eprintln!("FAILED: {}", c.table_row());
                }
                return Ok(ExitCode::from(1));
            }
        }
        Command::Figures { common, grid, out } => {
            let config = load(&common)?;
            let grid: SweepGrid = grid.parse().map_err(usage)?;
            for path in write_figures(&config.params, &grid.values(), &out).map_err(sweep_error)? {
                eprintln!("wrote {}", path.display());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = thread_pool()
        .map_err(usage)
        .context("thread pool")
        .and_then(|pool| pool.install(|| run(cli)));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.is::<Usage>()) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
