//! `fairsense stats`: protected-sensitivity stream statistics over a
//! dataset, printed as one JSON document on stdout.

use std::path::Path;

use fairsense_core::sensitivity::batch_profiles;
use fairsense_core::stream::StreamStats;

use crate::commands::{load_artifacts, load_dataset};
use crate::config::RunConfig;
use crate::error::CliResult;

pub fn run(cfg: &RunConfig, model_path: &Path, schema_path: &Path, data_path: &Path) -> CliResult<()> {
    let (artifact, schema) = load_artifacts(model_path, schema_path)?;
    let dataset = load_dataset(data_path, &schema, cfg)?;

    let records = batch_profiles(&artifact.model, &dataset, cfg.sensitivity())?;
    let mut stats = StreamStats::new();
    for r in &records {
        stats.update(r.protected_sensitivity)?;
    }
    let snapshot = stats.snapshot();
    println!(
        "{}",
        serde_json::to_string_pretty(&snapshot).map_err(fairsense_core::Error::from)?
    );
    Ok(())
}
