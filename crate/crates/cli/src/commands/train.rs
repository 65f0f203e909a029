//! `fairsense train`: fit schema, train the classifier, write
//! schema.json + model.json + train_trace.json.

use serde::Serialize;

use fairsense_core::data::{encode, fit_schema, load_csv, split};
use fairsense_core::model::{accuracy, init, EpochStats, ModelArtifact, TrainParams};

use crate::commands::{ensure_out_dir, write_json_atomic};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Serialize)]
struct TrainTrace<'a> {
    layer_dims: &'a [usize],
    params: TrainParams,
    dropped_missing_train: usize,
    train_rows: usize,
    test_rows: Option<usize>,
    epochs: &'a [EpochStats],
    final_train_accuracy: f64,
    test_accuracy: Option<f64>,
}

pub fn run(cfg: &RunConfig) -> CliResult<()> {
    let train_csv = cfg
        .train_csv
        .as_ref()
        .ok_or_else(|| CliError::usage("train requires --train-csv (or train_csv in config)"))?;

    let format = cfg.format();
    let table = load_csv(train_csv, &format)?;
    eprintln!(
        "loaded {} rows from {} ({} dropped for missing values)",
        table.n_rows(),
        train_csv.display(),
        table.dropped_missing
    );

    let schema = fit_schema(&table, &cfg.protected(), &cfg.privileged())?;
    let encoded = encode(&table, &schema)?;

    let (train_set, test_set) = match (&cfg.test_csv, cfg.split_fraction) {
        (Some(test_csv), _) => {
            let test_table = load_csv(test_csv, &format)?;
            let test = encode(&test_table, &schema)?;
            (encoded, Some(test))
        }
        (None, Some(fraction)) => {
            let (tr, te) = split(&encoded, fraction, cfg.seed())?;
            (tr, Some(te))
        }
        (None, None) => (encoded, None),
    };

    let mut dims = vec![train_set.width()];
    dims.extend(cfg.hidden());
    dims.push(1);
    let params = cfg.train_params();
    let mut model = init(&dims, params.seed)?;
    eprintln!(
        "training {:?} on {} rows: {} epochs, batch {}, lr {}",
        dims,
        train_set.n_rows(),
        params.epochs,
        params.batch_size,
        params.learning_rate
    );
    let trace = model.train(&train_set, &params)?;

    let final_train_accuracy = accuracy(&model, &train_set)?;
    let test_accuracy = match &test_set {
        Some(te) => Some(accuracy(&model, te)?),
        None => None,
    };

    let out_dir = ensure_out_dir(cfg)?;
    let schema_path = out_dir.join("schema.json");
    let mut schema_bytes = schema.to_json().into_bytes();
    schema_bytes.push(b'\n');
    fairsense_core::fsio::write_atomic(&schema_path, &schema_bytes)?;

    let artifact = ModelArtifact::new(model, schema.fingerprint());
    let model_path = out_dir.join("model.json");
    artifact.save(&model_path)?;

    write_json_atomic(
        &out_dir.join("train_trace.json"),
        &TrainTrace {
            layer_dims: &dims,
            params,
            dropped_missing_train: table.dropped_missing,
            train_rows: train_set.n_rows(),
            test_rows: test_set.as_ref().map(|t| t.n_rows()),
            epochs: &trace,
            final_train_accuracy,
            test_accuracy,
        },
    )?;

    eprintln!(
        "train accuracy {:.4}{}",
        final_train_accuracy,
        match test_accuracy {
            Some(a) => format!(", test accuracy {a:.4}"),
            None => String::new(),
        }
    );
    eprintln!("wrote {}", model_path.display());
    Ok(())
}
