//! `fairsense audit`: group-fairness report plus the per-feature
//! sensitivity distribution CSV.

use std::path::Path;

use serde::Serialize;

use fairsense_core::metrics::{FairnessReport, GroupedPredictions};
use fairsense_core::sensitivity::{batch_profiles, distributions_from, write_distribution_csv};

use crate::commands::{accuracy_of, ensure_out_dir, group_of, load_artifacts, load_dataset, write_json_atomic};
use crate::config::RunConfig;
use crate::error::CliResult;

#[derive(Serialize)]
struct AuditOutput {
    n_rows: usize,
    accuracy: f64,
    #[serde(flatten)]
    report: FairnessReport,
}

pub fn run(cfg: &RunConfig, model_path: &Path, schema_path: &Path, data_path: &Path) -> CliResult<()> {
    let (artifact, schema) = load_artifacts(model_path, schema_path)?;
    let dataset = load_dataset(data_path, &schema, cfg)?;

    let records = batch_profiles(&artifact.model, &dataset, cfg.sensitivity())?;
    let decisions: Vec<u8> = records.iter().map(|r| r.decision).collect();
    let groups = (0..dataset.n_rows()).map(|i| group_of(&dataset, i)).collect();
    let report = FairnessReport::compute(&GroupedPredictions::new(decisions, groups)?)?;

    let out_dir = ensure_out_dir(cfg)?;
    write_json_atomic(
        &out_dir.join("fairness_report.json"),
        &AuditOutput {
            n_rows: dataset.n_rows(),
            accuracy: accuracy_of(&records, &dataset),
            report: report.clone(),
        },
    )?;

    let distributions = distributions_from(&records, &schema);
    let mut csv_bytes = Vec::new();
    write_distribution_csv(&distributions, &mut csv_bytes)?;
    fairsense_core::fsio::write_atomic(&out_dir.join("sensitivity_distribution.csv"), &csv_bytes)?;

    eprintln!(
        "audited {} rows: statistical parity {:.4}, disparate impact {:.4}",
        dataset.n_rows(),
        report.statistical_parity,
        report.disparate_impact
    );
    eprintln!("wrote {}", out_dir.join("fairness_report.json").display());
    Ok(())
}
