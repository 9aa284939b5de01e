use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use fw_core::bench::{fit_rate, run_experiment, ExperimentConfig, Quantity, Window};
use fw_core::geometry::{pwidth_seeded, DEFAULT_DIRECTIONS};
use fw_core::oracles::read_vertex_csv;
use fw_core::trace::RunTrace;

#[derive(Parser)]
#[command(name = "fwbench", version, about = "Frank-Wolfe experiment runner and geometry tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Where traces and summary.json go (default: out/<name>).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Estimate the pyramidal width of the vertices in a CSV file.
    Pwidth {
        vertices: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DIRECTIONS)]
        directions: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fit a linear rate to a trace CSV.
    Rate {
        trace: PathBuf,
        /// Fit f - f_star instead of the FW gap.
        #[arg(long)]
        f_star: Option<f64>,
        #[arg(long, default_value_t = 0.2)]
        window_start: f64,
        #[arg(long, default_value_t = 0.8)]
        window_end: f64,
        /// Leave out the values recorded after drop steps.
        #[arg(long)]
        exclude_drops: bool,
    },
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run {
            config,
            out_dir,
            seed,
            max_iter,
            epsilon,
        } => {
            let mut cfg = ExperimentConfig::from_path(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            if let Some(s) = seed {
                cfg.set_seed(s);
            }
            if let Some(m) = max_iter {
                cfg.max_iter = m;
            }
            if let Some(e) = epsilon {
                cfg.epsilon = e;
                if cfg.correction_epsilon.is_some_and(|c| c > e) {
                    cfg.correction_epsilon = Some(e);
                }
            }
            let dir = out_dir.unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
            let out = run_experiment(&cfg, Some(&dir))?;
            for r in &out.summary.runs {
                let fit = r
                    .fit
                    .map(|f| format!("rho_hat={:.4e} r2={:.4}", f.rho_hat, f.r_squared))
                    .unwrap_or_else(|| "no fit".into());
                eprintln!(
                    "{:<28} {:<9} iters={:<6} gap={:<12.4e} {}",
                    r.key,
                    r.status,
                    r.iterations,
                    r.final_gap.unwrap_or(f64::NAN),
                    fit
                );
            }
            println!("{}", dir.join("summary.json").display());
            Ok(out.summary.all_ok)
        }
        Command::Pwidth {
            vertices,
            directions,
            seed,
        } => {
            let file = File::open(&vertices).with_context(|| format!("opening {}", vertices.display()))?;
            let atoms = read_vertex_csv(file)?;
            let report = pwidth_seeded(&atoms, directions, seed)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(true)
        }
        Command::Rate {
            trace,
            f_star,
            window_start,
            window_end,
            exclude_drops,
        } => {
            let file = File::open(&trace).with_context(|| format!("opening {}", trace.display()))?;
            let t = RunTrace::read_csv(BufReader::new(file))?;
            if t.is_empty() {
                bail!("trace {} has no records", trace.display());
            }
            let quantity = match f_star {
                Some(f_star) => Quantity::FGapToOpt { f_star },
                None => Quantity::FwGap,
            };
            let window = Window {
                start: window_start,
                end: window_end,
            };
            let fit = fit_rate(&t, quantity, window, exclude_drops)?;
            println!("{}", serde_json::to_string_pretty(&fit)?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
