//! Monte Carlo comparison of the exhaustive scan and the genetic algorithm.
//!
//! Each trial draws a system from [`SystemRecipe::standard`], excites it with
//! one period of Gaussian noise, and runs both searches on the true pole/zero
//! groups of `H S`. Seeds follow the tree in [`crate::seeds`]:
//! `trial = derive(derive(master, order), index)`, with the system, the
//! excitation and the GA drawing from `derive(trial, SYSTEM | EXCITATION | GA)`.
//!
//! Timings cover only the searches. Trials whose exhaustive scan fails have
//! no reference minimum and are excluded from the success rate; they are
//! still listed in the report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocation::{group_conjugates, AllocationProblem, AllocationVector};
use crate::bla::generate_periodic_gaussian;
use crate::brute_force::{scan, DEFAULT_TOP_K};
use crate::error::{Error, Result};
use crate::ga::{search, GaConfig};
use crate::io::fmt_f64;
use crate::lti::CONJ_TOL;
use crate::model::{random_wh_system, simulate_wh, SystemRecipe};
use crate::seeds;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonteCarloConfig {
    pub orders: Vec<usize>,
    pub trials_per_order: usize,
    pub period_length: usize,
    /// Orders missing here use `ga.population_size`.
    pub population_size_per_order: BTreeMap<usize, usize>,
    pub ga: GaConfig,
    pub success_rel_tol: f64,
    pub rng_seed: u64,
    pub degrees: Vec<u32>,
    pub excitation_std: f64,
    /// Run trials in parallel. Per-method timings then share the machine.
    pub concurrent_trials: bool,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self::desk_scale()
    }
}

impl MonteCarloConfig {
    /// Orders 5 to 8, 100 trials each, N = 4096.
    pub fn paper_scale() -> Self {
        Self {
            orders: vec![5, 6, 7, 8],
            trials_per_order: 100,
            period_length: 4096,
            population_size_per_order: [(5, 200), (6, 400), (7, 600), (8, 800)].into_iter().collect(),
            ga: GaConfig::default(),
            success_rel_tol: 1e-9,
            rng_seed: 0,
            degrees: vec![1, 2, 3],
            excitation_std: 1.0,
            concurrent_trials: true,
        }
    }

    /// Orders 5 and 6, 20 trials each, N = 1024.
    pub fn desk_scale() -> Self {
        Self {
            orders: vec![5, 6],
            trials_per_order: 20,
            period_length: 1024,
            ..Self::paper_scale()
        }
    }

    pub fn population_for(&self, order: usize) -> usize {
        self.population_size_per_order
            .get(&order)
            .copied()
            .unwrap_or(self.ga.population_size)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidInput(msg.to_string()));
        if self.orders.is_empty() {
            return bad("no orders given");
        }
        if self.trials_per_order < 1 {
            return bad("trials_per_order must be at least 1");
        }
        if self.period_length < 64 {
            return bad("period_length must be at least 64");
        }
        if !(self.success_rel_tol >= 0.0) {
            return bad("success_rel_tol must be >= 0");
        }
        if !(self.excitation_std > 0.0 && self.excitation_std.is_finite()) {
            return bad("excitation_std must be positive");
        }
        crate::model::validate_degrees(&self.degrees)?;
        for &order in &self.orders {
            GaConfig {
                population_size: self.population_for(order),
                ..self.ga.clone()
            }
            .validate()?;
        }
        Ok(())
    }
}

/// Everything one trial needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSetup {
    pub recipe: SystemRecipe,
    pub period_length: usize,
    pub excitation_std: f64,
    pub excitation_seed: u64,
    pub degrees: Vec<u32>,
    pub ga: GaConfig,
    pub success_rel_tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialOutcome {
    Success,
    /// The GA ended in a worse minimum.
    Mismatch,
    /// The GA path raised an error while the scan succeeded.
    GaFailed,
    /// No reference minimum: generation or the scan failed.
    Excluded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub order: usize,
    pub trial: usize,
    pub seed: u64,
    pub groups: usize,
    pub output_variance: f64,
    pub bf_best_bits: Option<AllocationVector>,
    pub bf_best_cost: Option<f64>,
    pub bf_seconds: f64,
    pub bf_evaluations: u64,
    pub ga_best_bits: Option<AllocationVector>,
    pub ga_best_cost: Option<f64>,
    pub ga_seconds: f64,
    pub ga_evaluations: u64,
    pub ga_generations: usize,
    pub outcome: TrialOutcome,
    pub error: Option<String>,
}

/// Whether `ga` reaches the minimum `bf` within `rel_tol`.
pub fn costs_match(ga: f64, bf: f64, rel_tol: f64, output_variance: f64) -> bool {
    (ga - bf).abs() <= rel_tol * bf.max(1e-15 * output_variance)
}

/// Runs one trial. Errors never escape; they are recorded in the outcome.
pub fn run_trial(setup: &TrialSetup) -> TrialRecord {
    let mut record = TrialRecord {
        order: setup.recipe.block_order,
        trial: 0,
        seed: 0,
        groups: 0,
        output_variance: f64::NAN,
        bf_best_bits: None,
        bf_best_cost: None,
        bf_seconds: 0.0,
        bf_evaluations: 0,
        ga_best_bits: None,
        ga_best_cost: None,
        ga_seconds: 0.0,
        ga_evaluations: 0,
        ga_generations: 0,
        outcome: TrialOutcome::Excluded,
        error: None,
    };

    let prepared = (|| -> Result<AllocationProblem> {
        let system = random_wh_system(&setup.recipe)?;
        let mut rng = seeds::rng(setup.excitation_seed);
        let u = generate_periodic_gaussian(setup.period_length, setup.excitation_std, &mut rng)?;
        let y = simulate_wh(&system.model, &u)?;
        record.output_variance = y.variance();
        let groups = group_conjugates(&system.overall_zpk(), CONJ_TOL)?;
        record.groups = groups.len();
        AllocationProblem::new(groups, &u, &y, &setup.degrees)
    })();
    let problem = match prepared {
        Ok(p) => p,
        Err(e) => {
            record.error = Some(format!("setup: {e}"));
            return record;
        }
    };

    let start = Instant::now();
    let scanned = scan(&problem, DEFAULT_TOP_K);
    record.bf_seconds = start.elapsed().as_secs_f64();
    let bf_best = match scanned {
        Ok(s) => {
            record.bf_evaluations = s.evaluations;
            let best = s.best().clone();
            record.bf_best_bits = Some(best.bits);
            record.bf_best_cost = Some(best.mse);
            best.mse
        }
        Err(e) => {
            record.error = Some(format!("brute force: {e}"));
            return record;
        }
    };

    let start = Instant::now();
    let searched = search(&problem, &setup.ga);
    record.ga_seconds = start.elapsed().as_secs_f64();
    match searched {
        Ok((ga, _)) => {
            record.ga_evaluations = ga.evaluations;
            record.ga_generations = ga.generations_run;
            record.ga_best_cost = Some(ga.best_cost);
            record.ga_best_bits = Some(ga.best_bits);
            record.outcome = if costs_match(ga.best_cost, bf_best, setup.success_rel_tol, record.output_variance) {
                TrialOutcome::Success
            } else {
                TrialOutcome::Mismatch
            };
        }
        Err(e) => {
            record.error = Some(format!("genetic algorithm: {e}"));
            record.outcome = TrialOutcome::GaFailed;
        }
    }
    record
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub order: usize,
    pub population_size: usize,
    pub brute_force_seconds_mean: f64,
    pub ga_seconds_mean: f64,
    pub brute_force_evaluations: f64,
    pub ga_evaluations_mean: f64,
    pub success_rate: f64,
    /// Trials entering the success rate.
    pub trials: usize,
    pub excluded: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub success_rel_tol: f64,
    pub rows: Vec<ReportRow>,
    pub trials: Vec<TrialRecord>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 { f64::NAN } else { sum / n as f64 }
}

/// Aggregates trial records into one row per order. Records are sorted
/// first, so the result does not depend on their arrival order.
pub fn aggregate(orders: &[usize], populations: &[usize], success_rel_tol: f64, mut trials: Vec<TrialRecord>) -> BenchmarkReport {
    trials.sort_by_key(|t| (t.order, t.trial));
    let rows = orders
        .iter()
        .zip(populations)
        .map(|(&order, &population_size)| {
            let counted: Vec<&TrialRecord> = trials
                .iter()
                .filter(|t| t.order == order && t.outcome != TrialOutcome::Excluded)
                .collect();
            let excluded = trials
                .iter()
                .filter(|t| t.order == order && t.outcome == TrialOutcome::Excluded)
                .count();
            let successes = counted.iter().filter(|t| t.outcome == TrialOutcome::Success).count();
            ReportRow {
                order,
                population_size,
                brute_force_seconds_mean: mean(counted.iter().map(|t| t.bf_seconds)),
                ga_seconds_mean: mean(counted.iter().map(|t| t.ga_seconds)),
                brute_force_evaluations: mean(counted.iter().map(|t| t.bf_evaluations as f64)),
                ga_evaluations_mean: mean(counted.iter().map(|t| t.ga_evaluations as f64)),
                success_rate: if counted.is_empty() {
                    0.0
                } else {
                    successes as f64 / counted.len() as f64
                },
                trials: counted.len(),
                excluded,
            }
        })
        .collect();
    BenchmarkReport {
        success_rel_tol,
        rows,
        trials,
    }
}

/// Seeds and settings for trial `index` at `order`.
pub fn trial_setup(config: &MonteCarloConfig, order: usize, index: usize) -> (u64, TrialSetup) {
    let trial_seed = seeds::derive(seeds::derive(config.rng_seed, order as u64), index as u64);
    let setup = TrialSetup {
        recipe: SystemRecipe::standard(order, seeds::derive(trial_seed, seeds::SYSTEM)),
        period_length: config.period_length,
        excitation_std: config.excitation_std,
        excitation_seed: seeds::derive(trial_seed, seeds::EXCITATION),
        degrees: config.degrees.clone(),
        ga: GaConfig {
            population_size: config.population_for(order),
            rng_seed: seeds::derive(trial_seed, seeds::GA),
            ..config.ga.clone()
        },
        success_rel_tol: config.success_rel_tol,
    };
    (trial_seed, setup)
}

pub fn run_monte_carlo(config: &MonteCarloConfig) -> Result<BenchmarkReport> {
    config.validate()?;
    let jobs: Vec<(usize, usize)> = config
        .orders
        .iter()
        .flat_map(|&o| (0..config.trials_per_order).map(move |t| (o, t)))
        .collect();
    let run = |&(order, index): &(usize, usize)| {
        let (seed, setup) = trial_setup(config, order, index);
        TrialRecord {
            trial: index,
            seed,
            ..run_trial(&setup)
        }
    };
    let trials: Vec<TrialRecord> = if config.concurrent_trials {
        jobs.par_iter().map(run).collect()
    } else {
        jobs.iter().map(run).collect()
    };
    let populations: Vec<usize> = config.orders.iter().map(|&o| config.population_for(o)).collect();
    Ok(aggregate(&config.orders, &populations, config.success_rel_tol, trials))
}

const CSV_HEADER: [&str; 9] = [
    "order",
    "population_size",
    "brute_force_seconds_mean",
    "ga_seconds_mean",
    "brute_force_evaluations",
    "ga_evaluations_mean",
    "success_rate",
    "trials",
    "excluded",
];

impl BenchmarkReport {
    /// One row per order.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.order.to_string(),
                r.population_size.to_string(),
                fmt_f64(r.brute_force_seconds_mean),
                fmt_f64(r.ga_seconds_mean),
                fmt_f64(r.brute_force_evaluations),
                fmt_f64(r.ga_evaluations_mean),
                fmt_f64(r.success_rate),
                r.trials.to_string(),
                r.excluded.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        s.push_str("| Order | Population | Brute force time (s) | GA time (s) | Brute force evaluations | GA evaluations | Success rate |\n");
        s.push_str("|---:|---:|---:|---:|---:|---:|---:|\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "| {} | {} | {:.3} | {:.3} | {:.0} | {:.1} | {:.0}% |",
                r.order,
                r.population_size,
                r.brute_force_seconds_mean,
                r.ga_seconds_mean,
                r.brute_force_evaluations,
                r.ga_evaluations_mean,
                100.0 * r.success_rate
            );
        }
        let excluded: usize = self.rows.iter().map(|r| r.excluded).sum();
        if excluded > 0 {
            let _ = writeln!(s, "\n{excluded} trial(s) excluded: no reference minimum.");
        }
        s
    }
}
