//! Declarative run configuration: JSON file merged with flag overrides
//! (flags win).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use fairsense_core::data::DataFormat;
use fairsense_core::monitor::GridSpec;
use fairsense_core::sensitivity::SensitivityOptions;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train_csv: Option<PathBuf>,
    pub test_csv: Option<PathBuf>,
    /// Fallback when no test file exists: split the train file.
    pub split_fraction: Option<f64>,
    /// Input layout; the census-income layout when omitted.
    pub format: Option<DataFormat>,
    pub protected: Option<String>,
    pub privileged: Option<String>,
    /// Hidden layer widths, e.g. [64, 32].
    pub hidden: Option<Vec<usize>>,
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub seed: Option<u64>,
    pub threshold: Option<f64>,
    pub grid: Option<GridConfig>,
    pub out_dir: Option<PathBuf>,
    pub sensitivity: Option<SensitivityOptions>,
}

/// Grid in config files: the string "deciles" or an explicit list
/// (the CSV flag form also accepts "inf").
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridConfig {
    Named(String),
    Explicit(Vec<f64>),
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("bad config {}: {e}", path.display())))
    }

    /// Field-wise merge; values in `overrides` win.
    pub fn merge(mut self, overrides: RunConfig) -> RunConfig {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if overrides.$field.is_some() { self.$field = overrides.$field; })*
            };
        }
        take!(
            train_csv,
            test_csv,
            split_fraction,
            format,
            protected,
            privileged,
            hidden,
            learning_rate,
            epochs,
            batch_size,
            seed,
            threshold,
            grid,
            out_dir,
            sensitivity
        );
        self
    }

    pub fn protected(&self) -> String {
        self.protected.clone().unwrap_or_else(|| "sex".into())
    }

    pub fn privileged(&self) -> String {
        self.privileged.clone().unwrap_or_else(|| "Male".into())
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(42)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn threshold(&self) -> f64 {
        self.threshold.unwrap_or(f64::INFINITY)
    }

    pub fn sensitivity(&self) -> SensitivityOptions {
        self.sensitivity.unwrap_or_default()
    }

    pub fn format(&self) -> DataFormat {
        self.format
            .clone()
            .unwrap_or_else(fairsense_core::data::adult_format)
    }

    pub fn train_params(&self) -> fairsense_core::TrainParams {
        let defaults = fairsense_core::TrainParams::default();
        fairsense_core::TrainParams {
            epochs: self.epochs.unwrap_or(defaults.epochs),
            batch_size: self.batch_size.unwrap_or(defaults.batch_size),
            learning_rate: self.learning_rate.unwrap_or(defaults.learning_rate),
            seed: self.seed(),
        }
    }

    pub fn hidden(&self) -> Vec<usize> {
        self.hidden.clone().unwrap_or_else(|| vec![64, 32])
    }

    pub fn grid_spec(&self) -> CliResult<GridSpec> {
        match &self.grid {
            None => Ok(GridSpec::Deciles),
            Some(GridConfig::Explicit(taus)) => Ok(GridSpec::Explicit(taus.clone())),
            Some(GridConfig::Named(name)) if name == "deciles" => Ok(GridSpec::Deciles),
            Some(GridConfig::Named(other)) => Err(CliError::usage(format!(
                "unknown grid {other:?}: expected \"deciles\" or a list of thresholds"
            ))),
        }
    }
}

/// Parse the --grid flag: "deciles" or a comma list like "0.05,0.1,inf".
pub fn parse_grid_flag(flag: &str) -> CliResult<GridConfig> {
    if flag == "deciles" {
        return Ok(GridConfig::Named("deciles".into()));
    }
    let taus: Result<Vec<f64>, _> = flag
        .split(',')
        .map(|part| {
            let part = part.trim();
            if part.eq_ignore_ascii_case("inf") {
                Ok(f64::INFINITY)
            } else {
                part.parse::<f64>()
            }
        })
        .collect();
    match taus {
        Ok(taus) if !taus.is_empty() => Ok(GridConfig::Explicit(taus)),
        _ => Err(CliError::usage(format!(
            "cannot parse grid {flag:?}: expected \"deciles\" or comma-separated thresholds"
        ))),
    }
}
