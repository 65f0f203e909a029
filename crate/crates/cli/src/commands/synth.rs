//! `fairsense synth`: generate a synthetic census-style train/test pair
//! for demos and environments without the real data files.

use fairsense_core::synth::{write_csv, SynthConfig};

use crate::commands::ensure_out_dir;
use crate::config::RunConfig;
use crate::error::CliResult;

pub fn run(cfg: &RunConfig, rows: usize, test_rows: usize, missing_rate: f64) -> CliResult<()> {
    let out_dir = ensure_out_dir(cfg)?;
    let train_path = out_dir.join("synth_train.csv");
    let test_path = out_dir.join("synth_test.csv");

    write_csv(
        &SynthConfig {
            rows,
            seed: cfg.seed(),
            missing_rate,
        },
        &train_path,
    )?;
    write_csv(
        &SynthConfig {
            rows: test_rows,
            seed: cfg.seed().wrapping_add(1),
            missing_rate,
        },
        &test_path,
    )?;

    eprintln!(
        "wrote {} ({} rows) and {} ({} rows)",
        train_path.display(),
        rows,
        test_path.display(),
        test_rows
    );
    Ok(())
}
