//! Monte Carlo driver: minimal sampled SINR, average sum power and
//! feasibility rate against the SINR target.

use crate::channel::{dbm_to_watts, generate_channels, generate_layout, watts_to_dbm, ScenarioConfig};
use crate::error::{invalid, Result};
use crate::model::{error_sets, from_db, to_db, worst_sinr_over, ChannelSet, SystemConfig};
use crate::problems::{extract_beamformers, solve_design, DesignKind, DesignStatus};
use rayon::prelude::*;
use rcbf_solver::SolverOptions;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::time::Instant;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub num_cells: usize,
    pub users_per_cell: usize,
    pub num_antennas: usize,
}

impl Default for SystemSection {
    fn default() -> Self {
        SystemSection { num_cells: 3, users_per_cell: 2, num_antennas: 5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let d = SolverOptions::default();
        SolverSettings { tolerance: d.tolerance, max_iter: d.max_iter }
    }
}

impl SolverSettings {
    pub fn options(&self) -> SolverOptions {
        SolverOptions { tolerance: self.tolerance, max_iter: self.max_iter, ..SolverOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub system: SystemSection,
    pub solver: SolverSettings,
    pub gamma_grid_db: Vec<f64>,
    pub num_channel_draws: usize,
    pub num_error_draws: usize,
    pub methods: Vec<DesignKind>,
    pub base_seed: u64,
    pub output_path: String,
    /// Fill the `ms` column; off by default so that outputs are bitwise
    /// reproducible.
    pub record_timing: bool,
    pub randomization_trials: usize,
}

pub const DEFAULT_GAMMA_GRID_DB: [f64; 6] = [1.0, 3.0, 5.0, 7.0, 9.0, 11.0];
pub const DEFAULT_CHANNEL_DRAWS: usize = 200;
pub const DEFAULT_ERROR_DRAWS: usize = 100;
pub const DEFAULT_RANDOMIZATION_TRIALS: usize = 50;

impl ExperimentConfig {
    /// Default experiment with the given seed and output directory.
    pub fn new(base_seed: u64, output_path: impl Into<String>) -> Self {
        ExperimentConfig {
            scenario: ScenarioConfig::default(),
            system: SystemSection::default(),
            solver: SolverSettings::default(),
            gamma_grid_db: DEFAULT_GAMMA_GRID_DB.to_vec(),
            num_channel_draws: DEFAULT_CHANNEL_DRAWS,
            num_error_draws: DEFAULT_ERROR_DRAWS,
            methods: DesignKind::ALL.to_vec(),
            base_seed,
            output_path: output_path.into(),
            record_timing: false,
            randomization_trials: DEFAULT_RANDOMIZATION_TRIALS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.gamma_grid_db.is_empty() || self.gamma_grid_db.iter().any(|g| !g.is_finite()) {
            return Err(invalid("gamma_grid_db must be a nonempty list of finite values"));
        }
        if self.num_channel_draws == 0 || self.num_error_draws == 0 {
            return Err(invalid("num_channel_draws and num_error_draws must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(invalid("methods must not be empty"));
        }
        let mut m = self.methods.clone();
        m.sort();
        m.dedup();
        if m.len() != self.methods.len() {
            return Err(invalid("methods must not repeat"));
        }
        let s = &self.system;
        if s.num_cells == 0 || s.users_per_cell == 0 || s.num_antennas == 0 {
            return Err(invalid("system counts must be at least 1"));
        }
        if !(self.solver.tolerance.is_finite() && self.solver.tolerance > 0.0) || self.solver.max_iter == 0 {
            return Err(invalid("solver tolerance and max_iter must be positive"));
        }
        Ok(())
    }

    /// System configuration of one target: unit weights, noise from the
    /// scenario and caps equal to the noise power.
    pub fn system_config(&self, gamma_db: f64) -> Result<SystemConfig> {
        let noise = dbm_to_watts(self.scenario.noise_power_dbm);
        SystemConfig::uniform(
            self.system.num_cells,
            self.system.users_per_cell,
            self.system.num_antennas,
            from_db(gamma_db),
            noise,
            Some(noise),
        )
    }

    /// Seed of channel draw `trial_index`.
    pub fn trial_seed(&self, trial_index: usize) -> u64 {
        self.base_seed.wrapping_add(trial_index as u64)
    }

    /// Channels of draw `trial_index` (identical for every target).
    pub fn channels(&self, trial_index: usize) -> Result<ChannelSet> {
        let seed = self.trial_seed(trial_index);
        let layout = generate_layout(&self.scenario, self.system.num_cells, self.system.users_per_cell, seed)?;
        generate_channels(&layout, &self.scenario, self.system.num_antennas, seed)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodOutcome {
    pub method: DesignKind,
    pub status: DesignStatus,
    /// Relaxation objective in watts; present iff optimal.
    pub sum_power_watts: Option<f64>,
    /// Minimum over users and shared error sets; present iff extraction
    /// succeeded.
    pub min_sampled_sinr_db: Option<f64>,
    pub rank_one: Option<bool>,
    pub max_rank_one_gap: Option<f64>,
    pub randomized: bool,
    pub solve_time_ms: Option<f64>,
}

impl MethodOutcome {
    pub fn usable(&self) -> bool {
        self.status == DesignStatus::Optimal && self.min_sampled_sinr_db.is_some()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub trial_index: usize,
    pub gamma_db: f64,
    pub outcomes: Vec<MethodOutcome>,
}

impl TrialRecord {
    /// Every method solved and produced beamformers.
    pub fn all_feasible(&self) -> bool {
        self.outcomes.iter().all(MethodOutcome::usable)
    }

    pub fn outcome(&self, method: DesignKind) -> Option<&MethodOutcome> {
        self.outcomes.iter().find(|o| o.method == method)
    }
}

/// One trial: solve every method on draw `trial_index` at `gamma_db`.
pub fn run_trial(cfg: &ExperimentConfig, gamma_db: f64, trial_index: usize) -> Result<TrialRecord> {
    let channels = cfg.channels(trial_index)?;
    let sys = cfg.system_config(gamma_db)?;
    let seed = cfg.trial_seed(trial_index);
    let sets = error_sets(&channels, cfg.num_error_draws, seed);
    let opts = cfg.solver.options();
    let outcomes = cfg
        .methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let sol = solve_design(method, &channels, &sys, &opts);
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            let mut out = MethodOutcome {
                method,
                status: DesignStatus::NumericalFailure,
                sum_power_watts: None,
                min_sampled_sinr_db: None,
                rank_one: None,
                max_rank_one_gap: None,
                randomized: false,
                solve_time_ms: cfg.record_timing.then_some(elapsed),
            };
            // Solver errors are recorded as numerical failures.
            let Ok(sol) = sol else { return out };
            out.status = sol.status;
            if sol.status != DesignStatus::Optimal {
                return out;
            }
            out.sum_power_watts = Some(sol.objective);
            out.rank_one = Some(sol.is_rank_one());
            out.max_rank_one_gap = Some(sol.max_rank_one_gap());
            if let Ok(ex) = extract_beamformers(&sol, &channels, &sys, cfg.randomization_trials, seed) {
                out.randomized = ex.randomized;
                let mut worst = f64::INFINITY;
                for i in 0..sys.num_cells {
                    for k in 0..sys.users_per_cell {
                        if let Ok(v) = worst_sinr_over(&channels, &ex.beams, &sys, (i, k), &sets) {
                            worst = worst.min(v);
                        }
                    }
                }
                out.min_sampled_sinr_db = Some(to_db(worst));
            }
            out
        })
        .collect();
    Ok(TrialRecord { trial_index, gamma_db, outcomes })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub gamma_db: f64,
    pub method: DesignKind,
    pub trials: usize,
    pub feasible: usize,
    pub feasibility_pct: f64,
    /// Trials where every method was usable; the averages run over these.
    pub all_feasible: usize,
    /// Mean power in watts over all-feasible trials, converted to dBm.
    pub avg_power_dbm: Option<f64>,
    /// Mean (in dB) of the per-trial minimum sampled SINR.
    pub avg_min_sinr_db: Option<f64>,
    /// Share of solved instances whose covariances were all rank one.
    pub rank_one_pct: Option<f64>,
}

impl AggregateRow {
    pub fn insufficient_data(&self) -> bool {
        self.all_feasible == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<AggregateRow>,
}

/// Run every (target, draw) pair in parallel on the current rayon pool;
/// records come back ordered by target, then draw.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let jobs: Vec<(f64, usize)> =
        cfg.gamma_grid_db.iter().flat_map(|&g| (0..cfg.num_channel_draws).map(move |d| (g, d))).collect();
    let records = jobs.par_iter().map(|&(g, d)| run_trial(cfg, g, d)).collect::<Result<Vec<_>>>()?;
    let aggregates = aggregate(&records)?;
    Ok(ExperimentOutput { records, aggregates })
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Per-target, per-method summary. Targets appear in first-seen order.
pub fn aggregate(records: &[TrialRecord]) -> Result<Vec<AggregateRow>> {
    if records.is_empty() {
        return Err(invalid("no trial records to aggregate"));
    }
    let mut gammas: Vec<f64> = Vec::new();
    for r in records {
        if !gammas.contains(&r.gamma_db) {
            gammas.push(r.gamma_db);
        }
    }
    let mut rows = Vec::new();
    for g in gammas {
        let at: Vec<&TrialRecord> = records.iter().filter(|r| r.gamma_db == g).collect();
        let methods: Vec<DesignKind> = at[0].outcomes.iter().map(|o| o.method).collect();
        let joint: Vec<&TrialRecord> = at.iter().copied().filter(|r| r.all_feasible()).collect();
        for method in methods {
            let outcomes: Vec<&MethodOutcome> = at.iter().filter_map(|r| r.outcome(method)).collect();
            let feasible = outcomes.iter().filter(|o| o.status == DesignStatus::Optimal).count();
            let solved: Vec<bool> = outcomes.iter().filter_map(|o| o.rank_one).collect();
            let powers: Vec<f64> =
                joint.iter().filter_map(|r| r.outcome(method).and_then(|o| o.sum_power_watts)).collect();
            let sinrs: Vec<f64> =
                joint.iter().filter_map(|r| r.outcome(method).and_then(|o| o.min_sampled_sinr_db)).collect();
            rows.push(AggregateRow {
                gamma_db: g,
                method,
                trials: outcomes.len(),
                feasible,
                feasibility_pct: 100.0 * feasible as f64 / outcomes.len().max(1) as f64,
                all_feasible: joint.len(),
                avg_power_dbm: mean(&powers).map(watts_to_dbm),
                avg_min_sinr_db: mean(&sinrs),
                rank_one_pct: (!solved.is_empty())
                    .then(|| 100.0 * solved.iter().filter(|b| **b).count() as f64 / solved.len() as f64),
            });
        }
    }
    Ok(rows)
}

pub const TRIALS_HEADER: [&str; 8] =
    ["trial", "gamma_db", "method", "status", "power_dbm", "min_sinr_db", "rank_one", "ms"];
pub const AGGREGATE_HEADER: [&str; 10] = [
    "gamma_db",
    "method",
    "trials",
    "feasible",
    "feasibility_pct",
    "all_feasible",
    "avg_power_dbm",
    "avg_min_sinr_db",
    "rank_one_pct",
    "note",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_error(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

/// One row per (trial, method). Empty cells mark absent values.
pub fn write_trials_csv<W: Write>(records: &[TrialRecord], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRIALS_HEADER).map_err(csv_error)?;
    for r in records {
        for o in &r.outcomes {
            w.write_record([
                r.trial_index.to_string(),
                r.gamma_db.to_string(),
                o.method.to_string(),
                o.status.to_string(),
                opt(o.sum_power_watts.map(watts_to_dbm)),
                opt(o.min_sampled_sinr_db),
                o.rank_one.map(|b| b.to_string()).unwrap_or_default(),
                opt(o.solve_time_ms),
            ])
            .map_err(csv_error)?;
        }
    }
    w.flush()
}

pub fn write_aggregate_csv<W: Write>(rows: &[AggregateRow], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AGGREGATE_HEADER).map_err(csv_error)?;
    for r in rows {
        w.write_record([
            r.gamma_db.to_string(),
            r.method.to_string(),
            r.trials.to_string(),
            r.feasible.to_string(),
            r.feasibility_pct.to_string(),
            r.all_feasible.to_string(),
            opt(r.avg_power_dbm),
            opt(r.avg_min_sinr_db),
            opt(r.rank_one_pct),
            if r.insufficient_data() { "insufficient-data".to_string() } else { String::new() },
        ])
        .map_err(csv_error)?;
    }
    w.flush()
}
