use crate::config;
use crate::error::{CliError, Result};
use crate::files::{create_dir, read, write_atomic};
use crate::scenario::{vector_from_pairs, ScenarioFile, SolutionFile};
use rcbf_core::experiments::{
    run_experiment, write_aggregate_csv, write_trials_csv, AggregateRow, ExperimentConfig, TrialRecord,
    DEFAULT_RANDOMIZATION_TRIALS,
};
use rcbf_core::model::{sampled_worst_sinr, to_db, BeamformerSet};
use rcbf_core::problems::{build_design, extract_beamformers, solve_design, DesignStatus};
use rcbf_solver::SolverOptions;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub const TRIALS_FILE: &str = "trials.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const RESOLVED_CONFIG_FILE: &str = "config.resolved.toml";
pub const MANIFEST_FILE: &str = "manifest.json";

/// SINR shortfall tolerated by `verify`, in dB.
pub const VERIFY_TOLERANCE_DB: f64 = 1e-4;

#[derive(Clone, Debug, Default)]
pub struct RunArgs {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config_path: String,
    config: &'a ExperimentConfig,
    versions: Versions,
    threads: usize,
    started_unix_ms: u128,
    finished_unix_ms: u128,
    outputs: Vec<OutputEntry>,
}

#[derive(Serialize)]
struct Versions {
    rcbf: &'static str,
}

#[derive(Serialize)]
struct OutputEntry {
    file: String,
    bytes: usize,
}

fn unix_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis())
}

pub struct RunOutput {
    pub output_dir: PathBuf,
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<AggregateRow>,
}

/// Load the config, apply command-line overrides and run the experiment.
/// Writes the trial and aggregate tables, the resolved configuration and
/// a manifest into the output directory.
pub fn run(args: &RunArgs) -> Result<RunOutput> {
    let mut cfg = config::parse(&read(&args.config)?)?;
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_path = out.to_string_lossy().into_owned();
    }
    let threads = match args.threads {
        Some(0) => return Err(CliError::Config("--threads must be at least 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let dir = PathBuf::from(&cfg.output_path);
    create_dir(&dir)?;

    let started = unix_ms();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Numerical(format!("cannot start worker pool: {e}")))?;
    let output = pool.install(|| run_experiment(&cfg))?;

    let mut trials = Vec::new();
    write_trials_csv(&output.records, &mut trials).map_err(CliError::io(&dir))?;
    let mut aggregate = Vec::new();
    write_aggregate_csv(&output.aggregates, &mut aggregate).map_err(CliError::io(&dir))?;
    let resolved = config::resolved(&cfg);
    let files = [(TRIALS_FILE, trials), (AGGREGATE_FILE, aggregate), (RESOLVED_CONFIG_FILE, resolved.into_bytes())];
    let mut outputs = Vec::new();
    for (name, bytes) in &files {
        write_atomic(&dir.join(name), bytes)?;
        outputs.push(OutputEntry { file: name.to_string(), bytes: bytes.len() });
    }
    let manifest = Manifest {
        config_path: args.config.to_string_lossy().into_owned(),
        config: &cfg,
        versions: Versions { rcbf: env!("CARGO_PKG_VERSION") },
        threads,
        started_unix_ms: started,
        finished_unix_ms: unix_ms(),
        outputs,
    };
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    write_atomic(&dir.join(MANIFEST_FILE), &json)?;
    Ok(RunOutput { output_dir: dir, records: output.records, aggregates: output.aggregates })
}

/// Human-readable aggregate table for the terminal.
pub fn format_aggregates(rows: &[AggregateRow]) -> String {
    let opt = |v: Option<f64>, prec: usize| v.map_or("-".to_string(), |x| format!("{x:.prec$}"));
    let mut s = format!(
        "{:>8} {:<13} {:>9} {:>9} {:>12} {:>13} {:>9}\n",
        "gamma_db", "method", "feasible%", "joint", "power_dbm", "min_sinr_db", "rank1%"
    );
    for r in rows {
        s.push_str(&format!(
            "{:>8.1} {:<13} {:>9.1} {:>9} {:>12} {:>13} {:>9}\n",
            r.gamma_db,
            r.method.as_str(),
            r.feasibility_pct,
            r.all_feasible,
            opt(r.avg_power_dbm, 3),
            opt(r.avg_min_sinr_db, 3),
            opt(r.rank_one_pct, 1),
        ));
    }
    s
}

fn load_scenario(path: &Path) -> Result<crate::scenario::Scenario> {
    ScenarioFile::parse(&read(path)?)?.build()
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Solve one scenario and write its solution record.
pub fn solve(scenario: &Path, out: Option<&Path>, seed: u64) -> Result<SolutionFile> {
    let s = load_scenario(scenario)?;
    let sol = solve_design(s.method, &s.channels, &s.config, &SolverOptions::default())?;
    let extraction = if sol.status == DesignStatus::Optimal {
        extract_beamformers(&sol, &s.channels, &s.config, DEFAULT_RANDOMIZATION_TRIALS, seed).ok()
    } else {
        None
    };
    let file = SolutionFile::new(&sol, &s.config, extraction.as_ref());
    emit(&file.to_toml(), out)?;
    Ok(file)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub samples: usize,
    pub seed: u64,
    pub tolerance_db: f64,
    pub passed: bool,
    #[serde(rename = "user")]
    pub users: Vec<UserCheck>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UserCheck {
    pub cell: usize,
    pub user: usize,
    pub target_db: f64,
    pub worst_sinr_db: f64,
    pub pass: bool,
}

/// Evaluate a solution's beamformers against sampled channel errors.
pub fn verify(solution: &Path, scenario: &Path, samples: usize, seed: u64, out: Option<&Path>) -> Result<VerifyReport> {
    if samples == 0 {
        return Err(CliError::Config("--samples must be at least 1".into()));
    }
    let sol = SolutionFile::parse(&read(solution)?)?;
    let s = load_scenario(scenario)?;
    let cfg = &s.config;
    if sol.users.len() != cfg.num_users() {
        return Err(CliError::Config(format!(
            "solution has {} users, scenario has {}",
            sol.users.len(),
            cfg.num_users()
        )));
    }
    let mut vectors = vec![None; cfg.num_users()];
    for u in &sol.users {
        if u.cell >= cfg.num_cells || u.user >= cfg.users_per_cell {
            return Err(CliError::Config(format!("solution user ({}, {}) is out of range", u.cell, u.user)));
        }
        let w = u
            .beamformer
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("solution has no beamformer for user ({}, {})", u.cell, u.user)))?;
        if w.len() != cfg.num_antennas {
            return Err(CliError::Config("beamformer length does not match the scenario".into()));
        }
        vectors[cfg.user_index(u.cell, u.user)] = Some(vector_from_pairs(w));
    }
    let vectors = vectors
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| CliError::Config("solution lists a user twice".into()))?;
    let beams = BeamformerSet::new(vectors)?;
    let mut users = Vec::new();
    for cell in 0..cfg.num_cells {
        for user in 0..cfg.users_per_cell {
            let worst = sampled_worst_sinr(&s.channels, &beams, cfg, (cell, user), samples, seed)?;
            let target_db = to_db(cfg.target(cell, user));
            let worst_sinr_db = to_db(worst);
            users.push(UserCheck {
                cell,
                user,
                target_db,
                worst_sinr_db,
                pass: worst_sinr_db >= target_db - VERIFY_TOLERANCE_DB,
            });
        }
    }
    let report =
        VerifyReport { samples, seed, tolerance_db: VERIFY_TOLERANCE_DB, passed: users.iter().all(|u| u.pass), users };
    emit(&toml::to_string(&report).expect("report serializes"), out)?;
    Ok(report)
}

/// Write the standard-form conic problems of a scenario. With `out`, one
/// file `problem-<i>.txt` per sub-problem is written into that directory;
/// otherwise all are printed, separated by comment lines.
pub fn dump_conic(scenario: &Path, out: Option<&Path>) -> Result<usize> {
    let s = load_scenario(scenario)?;
    let problems = build_design(s.method, &s.channels, &s.config)?;
    match out {
        Some(dir) => {
            create_dir(dir)?;
            for (i, p) in problems.iter().enumerate() {
                write_atomic(&dir.join(format!("problem-{i}.txt")), p.conic.to_dump().as_bytes())?;
            }
        }
        None => {
            for (i, p) in problems.iter().enumerate() {
                println!("# {} problem {i}, cells {:?}", s.method, p.cells);
                print!("{}", p.conic.to_dump());
            }
        }
    }
    Ok(problems.len())
}
