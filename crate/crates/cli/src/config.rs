//! Experiment configuration files.
//!
//! TOML with four sections. `[experiment]` is mandatory and must name
//! `base_seed` and `output_path`; every other key falls back to the
//! documented default. Unknown keys are rejected.
//!
//! ```toml
//! [experiment]
//! base_seed = 1
//! output_path = "results"
//! gamma_grid_db = [1.0, 3.0, 5.0, 7.0, 9.0, 11.0]
//! num_channel_draws = 200
//! num_error_draws = 100
//! methods = ["nominal_mcbf", "nominal_sbf", "robust_mcbf", "robust_sbf"]
//! record_timing = false
//! randomization_trials = 50
//!
//! [system]
//! num_cells = 3
//! users_per_cell = 2
//! num_antennas = 5
//!
//! [scenario]
//! inter_bs_distance = 500.0
//! min_bs_ms_distance = 35.0
//! shadowing_std_db = 8.0
//! antenna_gain_dbi = 5.0
//! error_radius = 0.1
//! noise_power_dbm = -106.27
//!
//! [solver]
//! tolerance = 1e-7
//! max_iter = 200
//! ```

use crate::error::{CliError, Result};
use rcbf_core::channel::ScenarioConfig;
use rcbf_core::experiments::{
    ExperimentConfig, SolverSettings, SystemSection, DEFAULT_CHANNEL_DRAWS, DEFAULT_ERROR_DRAWS, DEFAULT_GAMMA_GRID_DB,
    DEFAULT_RANDOMIZATION_TRIALS,
};
use rcbf_core::problems::DesignKind;
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    experiment: ExperimentSection,
    #[serde(default)]
    system: SystemSection,
    #[serde(default)]
    scenario: ScenarioConfig,
    #[serde(default)]
    solver: SolverSettings,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentSection {
    base_seed: u64,
    output_path: String,
    #[serde(default = "default_grid")]
    gamma_grid_db: Vec<f64>,
    #[serde(default = "default_channel_draws")]
    num_channel_draws: usize,
    #[serde(default = "default_error_draws")]
    num_error_draws: usize,
    #[serde(default = "default_methods")]
    methods: Vec<DesignKind>,
    #[serde(default)]
    record_timing: bool,
    #[serde(default = "default_randomization_trials")]
    randomization_trials: usize,
}

fn default_grid() -> Vec<f64> {
    DEFAULT_GAMMA_GRID_DB.to_vec()
}
fn default_channel_draws() -> usize {
    DEFAULT_CHANNEL_DRAWS
}
fn default_error_draws() -> usize {
    DEFAULT_ERROR_DRAWS
}
fn default_methods() -> Vec<DesignKind> {
    DesignKind::ALL.to_vec()
}
fn default_randomization_trials() -> usize {
    DEFAULT_RANDOMIZATION_TRIALS
}

/// Parse and validate a configuration.
pub fn parse(text: &str) -> Result<ExperimentConfig> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| CliError::Config(format!("malformed config: {e}")))?;
    let e = file.experiment;
    let cfg = ExperimentConfig {
        scenario: file.scenario,
        system: file.system,
        solver: file.solver,
        gamma_grid_db: e.gamma_grid_db,
        num_channel_draws: e.num_channel_draws,
        num_error_draws: e.num_error_draws,
        methods: e.methods,
        base_seed: e.base_seed,
        output_path: e.output_path,
        record_timing: e.record_timing,
        randomization_trials: e.randomization_trials,
    };
    cfg.validate().map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
    Ok(cfg)
}

/// The effective configuration with every default spelled out, in the
/// same format [`parse`] accepts.
pub fn resolved(cfg: &ExperimentConfig) -> String {
    let file = ConfigFile {
        experiment: ExperimentSection {
            base_seed: cfg.base_seed,
            output_path: cfg.output_path.clone(),
            gamma_grid_db: cfg.gamma_grid_db.clone(),
            num_channel_draws: cfg.num_channel_draws,
            num_error_draws: cfg.num_error_draws,
            methods: cfg.methods.clone(),
            record_timing: cfg.record_timing,
            randomization_trials: cfg.randomization_trials,
        },
        system: cfg.system.clone(),
        scenario: cfg.scenario.clone(),
        solver: cfg.solver.clone(),
    };
    toml::to_string(&file).expect("config sections serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[experiment]\nbase_seed = 7\noutput_path = \"out\"\n";

    #[test]
    fn defaults_are_filled_in() {
        let cfg = parse(MINIMAL).unwrap();
        assert_eq!(cfg, ExperimentConfig::new(7, "out"));
    }

    #[test]
    fn resolved_config_round_trips() {
        let text =
            format!("{MINIMAL}num_channel_draws = 3\nmethods = [\"robust_mcbf\"]\n[scenario]\nerror_radius = 0.2\n");
        let cfg = parse(&text).unwrap();
        assert_eq!(parse(&resolved(&cfg)).unwrap(), cfg);
        let echo = resolved(&cfg);
        for key in ["shadowing_std_db", "tolerance", "num_antennas", "randomization_trials", "record_timing"] {
            assert!(echo.contains(key), "{key} missing from\n{echo}");
        }
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "",
            "[experiment]\nbase_seed = 1\n",
            "[experiment]\noutput_path = \"x\"\n",
            &format!("{MINIMAL}num_channel_draws = 0\n"),
            &format!("{MINIMAL}gamma_grid_db = []\n"),
            &format!("{MINIMAL}colour = 3\n"),
            &format!("{MINIMAL}methods = [\"robust\"]\n"),
            &format!("{MINIMAL}[system]\nnum_cels = 3\n"),
            &format!("{MINIMAL}[extra]\n"),
        ] {
            let err = parse(text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}");
        }
    }
}
