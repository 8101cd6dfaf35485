use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ksgd::bernoulli::bernoulli_poly;
use ksgd::theory::{self, Setting};
use ksgd_harness::csvio::{fmt_float, write_comparison, write_simulation, write_sweep};
use ksgd_harness::data::log_grid;
use ksgd_harness::experiment::{checkpoints_for, comparison_config};
use ksgd_harness::selfcheck::run_selfcheck;
use ksgd_harness::{
    compare_algorithms, fit_rate, gamma_sweep, run_replicates, CompareOptions, ExperimentConfig,
    HarnessError, Result,
};

#[derive(Debug, Parser)]
#[command(
    name = "ksgd",
    version,
    about = "Averaged kernel least-mean-squares experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Step exponents, predicted rates and regime for (alpha, r).
    Theory {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        r: f64,
        /// `fh` or `online`.
        #[arg(long, default_value = "fh")]
        setting: Setting,
    },
    /// Excess risk of the configured algorithm at log-spaced checkpoints.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Best constant step per horizon over a log-spaced grid.
    GammaSweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid_min: f64,
        #[arg(long)]
        grid_max: f64,
        #[arg(long)]
        grid_points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rates of the four algorithms at one of the four problem points.
    Compare {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        point: u8,
        #[arg(long, default_value_t = 3162)]
        n_max: usize,
        #[arg(long, default_value_t = 15)]
        replicates: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Use the step exponent -3/7 for our algorithm at point 3 instead of
        /// the derived default -3/5.
        #[arg(long)]
        table_steps: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Runs the oracle-equivalence checks.
    Selfcheck,
    /// Prints B_k(x).
    Bernoulli {
        #[arg(long)]
        k: usize,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
    },
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Theory { alpha, r, setting } => {
            if !(alpha > 1.0 && r > 0.0 && alpha.is_finite() && r.is_finite()) {
                return Err(HarnessError::Config(format!(
                    "need alpha > 1 and r > 0, got alpha = {alpha}, r = {r}"
                )));
            }
            let exponent = match setting {
                Setting::FiniteHorizon => theory::step_exponent_finite_horizon(alpha, r),
                Setting::Online => theory::step_exponent_online(alpha, r),
            };
            println!("setting = {setting}");
            println!("regime = {}", theory::classify_regime(alpha, r, setting));
            println!("step_exponent = {}", fmt_float(exponent));
            println!(
                "predicted_rate = {}",
                fmt_float(theory::predicted_rate(alpha, r, setting))
            );
            println!(
                "competitor_rate = {}",
                fmt_float(theory::competitor_rate(r))
            );
            println!(
                "minimax_rate = {}",
                fmt_float(theory::minimax_rate(alpha, r))
            );
        }
        Command::Simulate { config, out } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let res = run_replicates(&cfg)?;
            write_simulation(output(out.as_deref())?, &res)?;
            if let Ok(fit) = fit_rate(&res.mean_curve()) {
                eprintln!(
                    "effective slope {:.4} (rms {:.2e})",
                    fit.slope, fit.residual_rms
                );
            }
        }
        Command::GammaSweep {
            config,
            grid_min,
            grid_max,
            grid_points,
            out,
        } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            if !(grid_min > 0.0 && grid_max >= grid_min && grid_points >= 1) {
                return Err(HarnessError::Config(
                    "grid needs 0 < grid-min <= grid-max and grid-points >= 1".into(),
                ));
            }
            if grid_points > 1 && grid_max == grid_min {
                return Err(HarnessError::Config("grid-min equals grid-max".into()));
            }
            let grid = log_grid(grid_min, grid_max, grid_points);
            let res = gamma_sweep(&cfg, &grid, &checkpoints_for(&cfg))?;
            write_sweep(output(out.as_deref())?, &res.points)?;
            if let Ok(fit) = res.fit() {
                eprintln!("best-step slope {:.4}", fit.slope);
            }
        }
        Command::Compare {
            point,
            n_max,
            replicates,
            out,
            table_steps,
            seed,
        } => {
            let mut opts = CompareOptions {
                n_max,
                replicates,
                master_seed: seed,
                ..CompareOptions::default()
            };
            if table_steps && point == 3 {
                opts.ours_exponent = Some(-3.0 / 7.0);
            }
            comparison_config(point as usize, &opts)?;
            let rows = compare_algorithms(point as usize, &opts)?;
            write_comparison(output(out.as_deref())?, &rows)?;
        }
        Command::Selfcheck => {
            let checks = run_selfcheck();
            for c in &checks {
                println!(
                    "{} {} (worst {:.3e}, tolerance {:.0e})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.worst,
                    c.tolerance
                );
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(HarnessError::Selfcheck(format!("{failed} check(s) failed")));
            }
        }
        Command::Bernoulli { k, x } => {
            if k > ksgd::bernoulli::MAX_DEGREE {
                return Err(HarnessError::Config(format!(
                    "k must be at most {}",
                    ksgd::bernoulli::MAX_DEGREE
                )));
            }
            println!("{}", fmt_float(bernoulli_poly(k, x)));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
