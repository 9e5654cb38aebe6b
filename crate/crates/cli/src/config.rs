//! JSON experiment configuration: optional fields merged under command-line
//! overrides, validated before any computation starts.

use serde::Deserialize;
use std::path::{Path, PathBuf};

use fbin_core::cavity::CavityParams;
use fbin_core::noise::NoiseSpec;
use fbin_core::witness::MeasurementGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Raw grid section; unset fields fall back to per-command defaults.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub window: Option<f64>,
    pub n_time: Option<usize>,
    pub n_theta: Option<usize>,
    pub omega_s: Option<Vec<f64>>,
    pub n_r: Option<Vec<i64>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Experiment id; must match the subcommand when present.
    pub experiment: Option<String>,
    /// Bin detuning, rad/s.
    pub detuning: Option<f64>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub cavity: Option<CavityParams>,
    pub output: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub seed: Option<u64>,
    pub eps_l: Option<f64>,
    pub eps_r: Option<f64>,
    pub fc_tol: Option<f64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| format!("malformed config {}: {e}", path.display()))?;
        config
            .noise
            .validate()
            .map_err(|e| format!("config {}: {e}", path.display()))?;
        if let Some(cavity) = &config.cavity {
            cavity
                .validate()
                .map_err(|e| format!("config {}: {e}", path.display()))?;
        }
        Ok(config)
    }

    pub fn check_experiment_id(&self, expected: &str) -> Result<(), String> {
        match &self.experiment {
            Some(id) if id != expected => Err(format!(
                "config names experiment '{id}' but the '{expected}' command was invoked"
            )),
            _ => Ok(()),
        }
    }

    /// Witness grid with per-command defaults filled in.
    pub fn witness_grid(
        &self,
        n_time_flag: Option<usize>,
        n_theta_flag: Option<usize>,
    ) -> Result<MeasurementGrid, String> {
        let window = self.grid.window.unwrap_or(1e-7);
        let n_time = n_time_flag.or(self.grid.n_time).unwrap_or(256);
        let n_theta = n_theta_flag.or(self.grid.n_theta).unwrap_or(64);
        let grid = match (&self.grid.omega_s, &self.grid.n_r) {
            (None, None) => MeasurementGrid::default_for_window(window, n_time, n_theta),
            (omega_s, n_r) => {
                let defaults = MeasurementGrid::default_for_window(window, n_time, n_theta)
                    .map_err(|e| e.to_string())?;
                MeasurementGrid::new(
                    window,
                    n_time,
                    n_theta,
                    omega_s.clone().unwrap_or(defaults.omega_s),
                    n_r.clone().unwrap_or(defaults.n_r),
                )
            }
        };
        grid.map_err(|e| e.to_string())
    }
}
