//! Replicate orchestration: simulations, step-size sweeps and comparisons.

use ksgd::estimator::{sgd_run_with_table, AlgorithmKind, StepSchedule};
use ksgd::theory::{self, Setting};
use ksgd::AlgorithmSpec;
use ksgd::{PairTable, RiskEvaluator};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::data::{log_checkpoints, replicate_seed, sample_stream};
use crate::error::{HarnessError, ReplicateFailure, Result};
use crate::rates::{fit_rate, RateFit};

/// Smallest checkpoint of the default grids.
pub const FIRST_CHECKPOINT: usize = 10;

/// How the step size of a run is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepPolicy {
    /// The algorithm's preset for the configured setting.
    Preset,
    /// Averaged recursion with this constant step, whatever the horizon.
    Constant(f64),
    /// Finite-horizon `gamma0 * n^exponent` for our algorithm in place of
    /// the preset exponent.
    Exponent(f64),
}

/// Excess risks of every replicate at every checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub checkpoints: Vec<usize>,
    /// `per_replicate[j][c]`: replicate `j` at `checkpoints[c]`.
    pub per_replicate: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
}

impl SimulationResult {
    fn from_replicates(checkpoints: Vec<usize>, per_replicate: Vec<Vec<f64>>) -> Self {
        // fixed summation order: replicate 0, 1, ...
        let count = per_replicate.len() as f64;
        let mean = (0..checkpoints.len())
            .map(|c| per_replicate.iter().map(|r| r[c]).sum::<f64>() / count)
            .collect();
        Self {
            checkpoints,
            per_replicate,
            mean,
        }
    }

    /// `(n, mean excess risk)` pairs.
    pub fn mean_curve(&self) -> Vec<(f64, f64)> {
        self.checkpoints
            .iter()
            .zip(&self.mean)
            .map(|(&n, &v)| (n as f64, v))
            .collect()
    }
}

/// Default checkpoints of a configuration: log-spaced from 10 to `n_max`.
pub fn checkpoints_for(cfg: &ExperimentConfig) -> Vec<usize> {
    log_checkpoints(FIRST_CHECKPOINT, cfg.n_max, cfg.n_checkpoints)
}

/// One replicate's stream with its kernel tables.
struct ReplicateData {
    xs: Vec<f64>,
    ys: Vec<f64>,
    table: PairTable,
    l2_table: PairTable,
}

impl ReplicateData {
    fn new(cfg: &ExperimentConfig, evaluator: &RiskEvaluator, replicate: usize, n: usize) -> Self {
        let seed = replicate_seed(cfg.master_seed, replicate, cfg.data_digest());
        let (xs, ys): (Vec<f64>, Vec<f64>) =
            sample_stream(seed, cfg.target_index_k, cfg.noise_sigma, n)
                .into_iter()
                .unzip();
        Self {
            table: PairTable::new(evaluator.kernel(), &xs),
            l2_table: PairTable::new(evaluator.l2_kernel(), &xs),
            xs,
            ys,
        }
    }

    fn risk(&self, evaluator: &RiskEvaluator, n: usize, weights: &[f64]) -> f64 {
        evaluator.excess_risk_with_table(&self.l2_table, &self.xs[..n], weights)
    }
}

fn spec_for(
    cfg: &ExperimentConfig,
    kind: AlgorithmKind,
    policy: StepPolicy,
    horizon: usize,
) -> ksgd::Result<AlgorithmSpec> {
    match policy {
        StepPolicy::Preset => {
            AlgorithmSpec::preset(kind, &cfg.problem(), cfg.setting, horizon, cfg.gamma0)
        }
        StepPolicy::Constant(gamma) => Ok(AlgorithmSpec::constant_step(gamma)),
        StepPolicy::Exponent(e) => Ok(AlgorithmSpec {
            step: StepSchedule::FiniteHorizon {
                gamma: cfg.effective_gamma0() * (horizon as f64).powf(e),
            },
            ..AlgorithmSpec::constant_step(1.0)
        }),
    }
}

/// Whether one run to the last checkpoint yields every checkpoint: true
/// when the schedule does not depend on the horizon.
fn single_pass(cfg: &ExperimentConfig, policy: StepPolicy) -> bool {
    match policy {
        StepPolicy::Constant(_) => true,
        StepPolicy::Exponent(_) => false,
        StepPolicy::Preset => cfg.setting == Setting::Online,
    }
}

fn run_one(
    cfg: &ExperimentConfig,
    evaluator: &RiskEvaluator,
    data: &ReplicateData,
    kind: AlgorithmKind,
    policy: StepPolicy,
    checkpoints: &[usize],
) -> std::result::Result<Vec<f64>, (usize, ksgd::Error)> {
    let last = *checkpoints.last().expect("non-empty checkpoints");
    if single_pass(cfg, policy) {
        let spec = spec_for(cfg, kind, policy, last).map_err(|e| (last, e))?;
        let snaps = sgd_run_with_table(&data.table, &data.xs, &data.ys, &spec, checkpoints)
            .map_err(|e| (last, e))?;
        Ok(snaps
            .iter()
            .map(|s| data.risk(evaluator, s.n, &s.output_weights(spec.averaged)))
            .collect())
    } else {
        checkpoints
            .iter()
            .map(|&n| {
                let spec = spec_for(cfg, kind, policy, n).map_err(|e| (n, e))?;
                let snaps =
                    sgd_run_with_table(&data.table, &data.xs[..n], &data.ys[..n], &spec, &[n])
                        .map_err(|e| (n, e))?;
                Ok(data.risk(evaluator, n, &snaps[0].output_weights(spec.averaged)))
            })
            .collect()
    }
}

/// Runs each `(algorithm, policy)` job on every replicate; all jobs of a
/// replicate share its stream. Fails if any replicate of any job fails.
pub fn run_jobs(
    cfg: &ExperimentConfig,
    jobs: &[(AlgorithmKind, StepPolicy)],
    checkpoints: &[usize],
) -> Result<Vec<SimulationResult>> {
    run_jobs_each(cfg, jobs, checkpoints)?.into_iter().collect()
}

/// Like [`run_jobs`], with a separate outcome per job: a job whose
/// replicates diverge does not affect the others.
pub fn run_jobs_each(
    cfg: &ExperimentConfig,
    jobs: &[(AlgorithmKind, StepPolicy)],
    checkpoints: &[usize],
) -> Result<Vec<Result<SimulationResult>>> {
    cfg.validate()?;
    if checkpoints.is_empty() || checkpoints.windows(2).any(|w| w[0] >= w[1]) || checkpoints[0] == 0
    {
        return Err(HarnessError::InvalidInput(
            "checkpoints must be positive and strictly increasing".into(),
        ));
    }
    let evaluator = RiskEvaluator::new(cfg.kernel_order_m, cfg.target_index_k)?;
    let last = *checkpoints.last().expect("checked non-empty");
    // validate every job's schedule up front so configuration mistakes are
    // not reported as per-replicate failures
    for &(kind, policy) in jobs {
        spec_for(cfg, kind, policy, last)?;
    }

    type Outcome = std::result::Result<Vec<f64>, (usize, ksgd::Error)>;
    let outcomes: Vec<Vec<Outcome>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|j| {
            let data = ReplicateData::new(cfg, &evaluator, j, last);
            jobs.iter()
                .map(|&(kind, policy)| run_one(cfg, &evaluator, &data, kind, policy, checkpoints))
                .collect()
        })
        .collect();

    let mut per_job: Vec<(Vec<Vec<f64>>, Vec<ReplicateFailure>)> =
        vec![(Vec::with_capacity(cfg.replicates), Vec::new()); jobs.len()];
    for (j, row) in outcomes.into_iter().enumerate() {
        for ((risks, failures), outcome) in per_job.iter_mut().zip(row) {
            match outcome {
                Ok(r) => risks.push(r),
                Err((horizon, e)) => failures.push(ReplicateFailure {
                    replicate: j,
                    horizon,
                    message: e.to_string(),
                }),
            }
        }
    }
    Ok(per_job
        .into_iter()
        .map(|(reps, failures)| {
            if failures.is_empty() {
                Ok(SimulationResult::from_replicates(
                    checkpoints.to_vec(),
                    reps,
                ))
            } else {
                Err(HarnessError::Divergence(failures))
            }
        })
        .collect())
}

/// Excess risk of the configured algorithm over all replicates.
pub fn run_replicates(cfg: &ExperimentConfig) -> Result<SimulationResult> {
    run_with(cfg, StepPolicy::Preset, &checkpoints_for(cfg))
}

/// [`run_replicates`] with an explicit step policy and checkpoints.
pub fn run_with(
    cfg: &ExperimentConfig,
    policy: StepPolicy,
    checkpoints: &[usize],
) -> Result<SimulationResult> {
    Ok(run_jobs(cfg, &[(cfg.algorithm, policy)], checkpoints)?
        .pop()
        .expect("one job"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub n: usize,
    pub best_gamma: f64,
    pub mean_excess_risk: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// `mean[g][c]`: grid entry `g` at checkpoint `c`.
    pub mean: Vec<Vec<f64>>,
}

impl SweepResult {
    /// Fit of `log best_gamma` against `log n` on the second half.
    pub fn fit(&self) -> Result<RateFit> {
        let pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .map(|p| (p.n as f64, p.best_gamma))
            .collect();
        fit_rate(&pts)
    }
}

/// For each checkpoint, the constant step from `grid` with the smallest mean
/// excess risk of the averaged recursion run up to that horizon.
///
/// A constant-step run does not depend on its horizon, so one run per grid
/// entry and replicate serves every checkpoint. Grid entries that diverge
/// on some replicate count as infinitely bad.
pub fn gamma_sweep(
    cfg: &ExperimentConfig,
    grid: &[f64],
    checkpoints: &[usize],
) -> Result<SweepResult> {
    if grid.is_empty() || grid.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
        return Err(HarnessError::Config(
            "step grid must be non-empty and positive".into(),
        ));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HarnessError::Config(
            "step grid must be sorted increasingly".into(),
        ));
    }
    let jobs: Vec<(AlgorithmKind, StepPolicy)> = grid
        .iter()
        .map(|&gamma| (cfg.algorithm, StepPolicy::Constant(gamma)))
        .collect();
    let mut mean = Vec::with_capacity(grid.len());
    for outcome in run_jobs_each(cfg, &jobs, checkpoints)? {
        match outcome {
            Ok(res) => mean.push(res.mean),
            Err(HarnessError::Divergence(_)) => mean.push(vec![f64::INFINITY; checkpoints.len()]),
            Err(e) => return Err(e),
        }
    }
    let points = checkpoints
        .iter()
        .enumerate()
        .map(|(c, &n)| {
            // first minimum wins ties
            let (g, best) = mean
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (g, row)| {
                    if row[c] < acc.1 {
                        (g, row[c])
                    } else {
                        acc
                    }
                });
            SweepPoint {
                n,
                best_gamma: grid[g],
                mean_excess_risk: best,
            }
        })
        .collect();
    Ok(SweepResult { points, mean })
}

/// The four problem points of the comparison: `(m, k)`.
pub const COMPARISON_POINTS: [(u32, usize); 4] = [(1, 2), (2, 2), (1, 3), (2, 1)];

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub algorithm: AlgorithmKind,
    pub predicted_slope: f64,
    pub effective_slope: f64,
    pub residual_rms: f64,
}

/// Options of [`compare_algorithms`].
#[derive(Debug, Clone, PartialEq)]
pub struct CompareOptions {
    pub n_max: usize,
    pub replicates: usize,
    pub n_checkpoints: usize,
    pub noise_sigma: f64,
    pub master_seed: u64,
    /// Step exponent for our algorithm replacing the preset one.
    pub ours_exponent: Option<f64>,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            n_max: 3162,
            replicates: 15,
            n_checkpoints: 20,
            noise_sigma: 0.1,
            master_seed: 0,
            ours_exponent: None,
        }
    }
}

/// Configuration of comparison point `point` (1-based).
pub fn comparison_config(point: usize, opts: &CompareOptions) -> Result<ExperimentConfig> {
    let &(m, k) = point
        .checked_sub(1)
        .and_then(|i| COMPARISON_POINTS.get(i))
        .ok_or_else(|| HarnessError::Config(format!("point must be 1, 2, 3 or 4, got {point}")))?;
    let cfg = ExperimentConfig {
        kernel_order_m: m,
        target_index_k: k,
        noise_sigma: opts.noise_sigma,
        algorithm: AlgorithmKind::Ours,
        setting: Setting::FiniteHorizon,
        gamma0: None,
        n_max: opts.n_max,
        n_checkpoints: opts.n_checkpoints,
        replicates: opts.replicates,
        master_seed: opts.master_seed,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Runs the four algorithms on the same streams at comparison point `point`
/// in the finite-horizon setting and fits their rates.
pub fn compare_algorithms(point: usize, opts: &CompareOptions) -> Result<Vec<ComparisonRow>> {
    let cfg = comparison_config(point, opts)?;
    let (alpha, r) = (cfg.alpha(), cfg.r());
    let jobs: Vec<(AlgorithmKind, StepPolicy)> = AlgorithmKind::ALL
        .iter()
        .map(|&kind| match (kind, opts.ours_exponent) {
            (AlgorithmKind::Ours, Some(e)) => (kind, StepPolicy::Exponent(e)),
            _ => (kind, StepPolicy::Preset),
        })
        .collect();
    let results = run_jobs(&cfg, &jobs, &checkpoints_for(&cfg))?;
    jobs.iter()
        .zip(results)
        .map(|(&(kind, _), res)| {
            let fit = fit_rate(&res.mean_curve())?;
            let predicted_slope = match kind {
                AlgorithmKind::Ours => theory::predicted_rate(alpha, r, Setting::FiniteHorizon),
                _ => theory::competitor_rate(r),
            };
            Ok(ComparisonRow {
                algorithm: kind,
                predicted_slope,
                effective_slope: fit.slope,
                residual_rms: fit.residual_rms,
            })
        })
        .collect()
}
