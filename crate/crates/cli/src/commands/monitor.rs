//! `fairsense monitor`: stream verdicts for incoming attribute rows
//! (JSON lines on stdout) and write a final stream-stats snapshot.

use std::io::Read;
use std::path::Path;

use fairsense_core::data::encode_row;
use fairsense_core::monitor::{evaluate, MonitorConfig};
use fairsense_core::stream::StreamStats;

use crate::commands::{ensure_out_dir, format_from_schema, load_artifacts, write_json_atomic};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub fn run(
    cfg: &RunConfig,
    model_path: &Path,
    schema_path: &Path,
    input: &str,
) -> CliResult<()> {
    let (artifact, schema) = load_artifacts(model_path, schema_path)?;
    let format = format_from_schema(&schema, cfg);

    let mut config = MonitorConfig::new(cfg.threshold(), schema.protected.clone())?;
    config.options = cfg.sensitivity();

    let reader: Box<dyn Read> = if input == "-" {
        Box::new(std::io::stdin().lock())
    } else {
        Box::new(std::fs::File::open(input).map_err(|e| {
            CliError::Core(fairsense_core::Error::Io {
                path: input.to_string(),
                source: e,
            })
        })?)
    };
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(format.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut stats = StreamStats::new();
    let mut skipped_missing = 0usize;
    let mut flagged = 0usize;

    for (i, record) in csv_reader.records().enumerate() {
        let record = record.map_err(fairsense_core::Error::from)?;
        let line = i as u64 + if format.has_header { 2 } else { 1 };
        // attribute rows only; a trailing label column is tolerated and ignored
        if record.len() != format.columns.len() && record.len() != format.arity() {
            return Err(fairsense_core::Error::RowArity {
                line,
                expected: format.columns.len(),
                got: record.len(),
            }
            .into());
        }
        if record.iter().any(|cell| cell == format.missing_marker) {
            skipped_missing += 1;
            continue;
        }
        let cells: Vec<String> = record
            .iter()
            .take(format.columns.len())
            .map(str::to_string)
            .collect();
        let x = encode_row(&cells, &schema)?;
        let verdict = evaluate(&artifact.model, &schema, &x, &config)?;
        stats.update(verdict.sensitivity)?;
        flagged += usize::from(verdict.flagged);
        use std::io::Write;
        serde_json::to_writer(&mut out, &verdict).map_err(fairsense_core::Error::from)?;
        writeln!(out).map_err(|e| {
            CliError::Core(fairsense_core::Error::Io {
                path: "<stdout>".into(),
                source: e,
            })
        })?;
    }

    let out_dir = ensure_out_dir(cfg)?;
    let snapshot_path = out_dir.join("stream_snapshot.json");
    write_json_atomic(&snapshot_path, &stats.snapshot())?;

    eprintln!(
        "monitored {} rows ({} flagged, {} skipped for missing values) at threshold {}",
        stats.count(),
        flagged,
        skipped_missing,
        config.threshold
    );
    eprintln!("wrote {}", snapshot_path.display());
    Ok(())
}
