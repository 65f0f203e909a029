//! Subcommand implementations and shared wiring.

pub mod audit;
pub mod monitor;
pub mod stats;
pub mod sweep;
pub mod synth;
pub mod train;

use std::path::{Path, PathBuf};

use fairsense_core::data::{
    encode, load_csv, ColumnKind, ColumnSpec, DataFormat, EncodedDataset, FeatureSchema, GroupKind,
};
use fairsense_core::metrics::Group;
use fairsense_core::sensitivity::SensitivityRecord;
use fairsense_core::ModelArtifact;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Default artifact locations under the output directory.
pub fn default_model_path(cfg: &RunConfig) -> PathBuf {
    cfg.out_dir().join("model.json")
}

pub fn default_schema_path(model_path: &Path) -> PathBuf {
    model_path.with_file_name("schema.json")
}

/// Load a model file and schema file, verifying the schema fingerprint.
pub fn load_artifacts(
    model_path: &Path,
    schema_path: &Path,
) -> CliResult<(ModelArtifact, FeatureSchema)> {
    let artifact = ModelArtifact::load(model_path)?;
    let text = std::fs::read_to_string(schema_path).map_err(|e| {
        CliError::Core(fairsense_core::Error::Io {
            path: schema_path.display().to_string(),
            source: e,
        })
    })?;
    let schema = FeatureSchema::from_json(&text)?;
    artifact.check_schema(&schema)?;
    Ok((artifact, schema))
}

/// Reconstruct the CSV layout from a fitted schema (groups are in file
/// column order), taking only the missing marker and header flag from the
/// configured format.
pub fn format_from_schema(schema: &FeatureSchema, cfg: &RunConfig) -> DataFormat {
    let base = cfg.format();
    DataFormat {
        columns: schema
            .groups
            .iter()
            .map(|g| ColumnSpec {
                name: g.name.clone(),
                kind: match g.kind {
                    GroupKind::Continuous { .. } => ColumnKind::Continuous,
                    _ => ColumnKind::Categorical,
                },
            })
            .collect(),
        label_column: base.label_column.clone(),
        label_positive: schema.label_positive.clone(),
        missing_marker: base.missing_marker.clone(),
        has_header: base.has_header,
    }
}

/// Load and encode a labeled CSV under an existing schema.
pub fn load_dataset(
    path: &Path,
    schema: &FeatureSchema,
    cfg: &RunConfig,
) -> CliResult<EncodedDataset> {
    let format = format_from_schema(schema, cfg);
    let table = load_csv(path, &format)?;
    Ok(encode(&table, schema)?)
}

pub fn group_of(dataset: &EncodedDataset, i: usize) -> Group {
    if dataset.is_privileged_row(i) {
        Group::Privileged
    } else {
        Group::Unprivileged
    }
}

/// Fraction of records whose decision matches the dataset label.
pub fn accuracy_of(records: &[SensitivityRecord], dataset: &EncodedDataset) -> f64 {
    let correct = records
        .iter()
        .zip(dataset.labels())
        .filter(|(r, y)| r.decision == **y)
        .count();
    correct as f64 / records.len() as f64
}

pub fn write_json_atomic<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(fairsense_core::Error::from)?;
    bytes.push(b'\n');
    fairsense_core::fsio::write_atomic(path, &bytes)?;
    Ok(())
}

pub fn ensure_out_dir(cfg: &RunConfig) -> CliResult<PathBuf> {
    let dir = cfg.out_dir();
    std::fs::create_dir_all(&dir).map_err(|e| {
        CliError::Core(fairsense_core::Error::Io {
            path: dir.display().to_string(),
            source: e,
        })
    })?;
    Ok(dir)
}
