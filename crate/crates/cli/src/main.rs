#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fluxmet_cli::commands::{self, QfiSweep};
use fluxmet_cli::config::{parse_task, AdaptFile, Campaign};
use fluxmet_cli::model::ModelFile;
use fluxmet_cli::plot::render_svg;
use fluxmet_cli::table::write_atomic;
use fluxmet_cli::{CliError, CurveTable, Result};

#[derive(Parser)]
#[command(
    name = "fluxmet",
    version,
    about = "Error-corrected metrology of fluctuating fields"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// QFI curves for the field direction θ.
    QfiTheta {
        #[arg(long = "B", default_value_t = 0.1)]
        b: f64,
        #[arg(long, default_value_t = 0.05)]
        gamma: f64,
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// Comma-separated offsets θ̂ − θ; empty for none.
        #[arg(long, default_value = "0,0.05,0.1")]
        dtheta: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// QFI curves for the rotation frequency Ω.
    QfiOmega {
        #[arg(long = "B", default_value_t = 0.1)]
        b: f64,
        #[arg(long, default_value_t = 0.05)]
        gamma: f64,
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// Comma-separated offsets Ω̂ − Ω; empty for none.
        #[arg(long, default_value = "0,0.05,0.1")]
        domega: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mean-squared error of the adaptive estimator over repeated runs.
    Adapt {
        /// theta or omega
        task: String,
        /// TOML configuration; defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output path; the strategy name is appended to the file stem.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        reps: Option<usize>,
        /// qec_corrected, unitary_controlled or both
        #[arg(long)]
        strategy: Option<String>,
    },
    /// Error-correction conditions, corrected generators and asymptotic QFI
    /// of a model file.
    GeneralQec {
        #[arg(long)]
        model: PathBuf,
        /// plus, minus, zero or one (logical state of the code)
        #[arg(long, default_value = "plus")]
        probe: String,
        #[arg(long, default_value_t = 5.0)]
        t: f64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// JSON report path; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Line chart of a CSV table.
    Plot {
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Writes an example model file.
    MakeModel {
        /// theta or wrong-code
        #[arg(long, default_value = "theta")]
        kind: String,
        #[arg(long = "B", default_value_t = 0.1)]
        b: f64,
        #[arg(long, default_value_t = 0.05)]
        gamma: f64,
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
        theta: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_offsets(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse()
                .map_err(|_| CliError::Input(format!("offset '{p}' is not a number")))
        })
        .collect()
}

fn strategy_path(out: &Path, strategy: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}_{strategy}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{strategy}.csv"),
    };
    out.with_file_name(name)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::QfiTheta {
            b,
            gamma,
            t_max,
            points,
            dtheta,
            out,
        } => {
            let sweep = QfiSweep {
                b,
                gamma,
                t_max,
                points,
                offsets: parse_offsets(&dtheta)?,
            };
            commands::qfi_theta(&sweep)?.write(&out)?;
        }
        Command::QfiOmega {
            b,
            gamma,
            t_max,
            points,
            domega,
            out,
        } => {
            let sweep = QfiSweep {
                b,
                gamma,
                t_max,
                points,
                offsets: parse_offsets(&domega)?,
            };
            commands::qfi_omega(&sweep)?.write(&out)?;
        }
        Command::Adapt {
            task,
            config,
            out,
            seed,
            reps,
            strategy,
        } => {
            let task = parse_task(&task)?;
            let file = match &config {
                Some(path) => AdaptFile::parse(&read(path)?)?,
                None => AdaptFile::default(),
            };
            let campaign = Campaign::resolve(task, &file, seed, reps, strategy.as_deref())?;
            for (strategy, table) in commands::adapt(task, &campaign)? {
                let path = strategy_path(&out, strategy.name());
                table.write(&path)?;
                println!("{}", path.display());
            }
        }
        Command::GeneralQec {
            model,
            probe,
            t,
            tol,
            out,
        } => {
            let file = ModelFile::parse(&read(&model)?)?;
            let report = commands::general_qec(&file, &probe, t, tol)?;
            let text = serde_json::to_string_pretty(&report).expect("plain data") + "\n";
            match out {
                Some(path) => write_atomic(&path, text.as_bytes())?,
                None => print!("{text}"),
            }
        }
        Command::Plot { csv, out } => {
            let svg = render_svg(&CurveTable::read(&csv)?)?;
            write_atomic(&out, svg.as_bytes())?;
        }
        Command::MakeModel {
            kind,
            b,
            gamma,
            theta,
            out,
        } => {
            let file = match kind.as_str() {
                "theta" => ModelFile::theta_example(b, gamma, theta)?,
                "wrong-code" => ModelFile::wrong_code_example(b, gamma, theta)?,
                other => return Err(CliError::Input(format!("kind: unknown model '{other}'"))),
            };
            write_atomic(&out, file.to_json().as_bytes())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
