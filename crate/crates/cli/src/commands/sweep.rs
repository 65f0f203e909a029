//! `fairsense sweep`: monitor threshold sweep, written as sweep.csv.

use std::path::Path;

use fairsense_core::monitor::{threshold_sweep, write_sweep_csv, MonitorConfig};

use crate::commands::{ensure_out_dir, load_artifacts, load_dataset};
use crate::config::RunConfig;
use crate::error::CliResult;

pub fn run(cfg: &RunConfig, model_path: &Path, schema_path: &Path, data_path: &Path) -> CliResult<()> {
    let (artifact, schema) = load_artifacts(model_path, schema_path)?;
    let dataset = load_dataset(data_path, &schema, cfg)?;

    let mut config = MonitorConfig::off(schema.protected.clone());
    config.options = cfg.sensitivity();
    let grid = cfg.grid_spec()?;
    let report = threshold_sweep(&artifact.model, &dataset, &config, &grid)?;

    let out_dir = ensure_out_dir(cfg)?;
    let mut bytes = Vec::new();
    write_sweep_csv(&report, &mut bytes)?;
    let path = out_dir.join("sweep.csv");
    fairsense_core::fsio::write_atomic(&path, &bytes)?;

    let defined = report
        .rows
        .iter()
        .filter(|r| r.disparate_impact.is_some())
        .count();
    eprintln!(
        "swept {} thresholds over {} rows ({} with defined disparate impact)",
        report.rows.len(),
        dataset.n_rows(),
        defined
    );
    eprintln!("wrote {}", path.display());
    Ok(())
}
