//! Numeric encoding of raw tables under a fitted schema.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::schema::{FeatureSchema, GroupKind};
use crate::data::table::RawTable;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Encoded feature matrix with binary labels and the schema that produced it.
#[derive(Debug, Clone)]
pub struct EncodedDataset {
    features: Tensor,
    labels: Vec<u8>,
    schema: FeatureSchema,
}

impl EncodedDataset {
    pub fn new(features: Tensor, labels: Vec<u8>, schema: FeatureSchema) -> Result<Self> {
        if features.shape().len() != 2 {
            return Err(Error::Contract("features must be a matrix".into()));
        }
        let (n, d) = (features.shape()[0], features.shape()[1]);
        if n == 0 {
            return Err(Error::NoDataRows);
        }
        if d != schema.total_width() {
            return Err(Error::Contract(format!(
                "feature width {} does not match schema width {}",
                d,
                schema.total_width()
            )));
        }
        if labels.len() != n {
            return Err(Error::Contract(format!(
                "{} labels for {} rows",
                labels.len(),
                n
            )));
        }
        Ok(EncodedDataset {
            features,
            labels,
            schema,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.features.shape()[0]
    }

    pub fn width(&self) -> usize {
        self.features.shape()[1]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.width();
        &self.features.data()[i * d..(i + 1) * d]
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn is_privileged_row(&self, i: usize) -> bool {
        self.schema.is_privileged(self.row(i))
    }

    /// New dataset holding the given rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<EncodedDataset> {
        let d = self.width();
        let mut data = Vec::with_capacity(indices.len() * d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            data.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        EncodedDataset::new(
            Tensor::matrix(indices.len(), d, data)?,
            labels,
            self.schema.clone(),
        )
    }
}

/// Encode the cells of one row (one cell per schema group, in group order)
/// into the numeric feature space. `row_idx` only labels error messages.
pub fn encode_row_into(
    cells: &[String],
    schema: &FeatureSchema,
    row_idx: usize,
    out: &mut [f64],
) -> Result<()> {
    for (gi, g) in schema.groups.iter().enumerate() {
        let raw = cells[gi].as_str();
        match &g.kind {
            GroupKind::Continuous { mean, stddev } => {
                let v: f64 = raw.parse().map_err(|_| Error::NonNumeric {
                    column: g.name.clone(),
                    value: raw.to_string(),
                    row: row_idx,
                })?;
                out[g.span.0] = (v - mean) / stddev;
            }
            GroupKind::BinaryCategorical { categories } => {
                let v = if raw == categories[1] {
                    1.0
                } else if raw == categories[0] {
                    0.0
                } else {
                    return Err(Error::OutOfVocabulary {
                        column: g.name.clone(),
                        value: raw.to_string(),
                        row: row_idx,
                    });
                };
                out[g.span.0] = v;
            }
            GroupKind::OneHotCategorical { categories } => {
                let pos =
                    categories
                        .iter()
                        .position(|c| c == raw)
                        .ok_or_else(|| Error::OutOfVocabulary {
                            column: g.name.clone(),
                            value: raw.to_string(),
                            row: row_idx,
                        })?;
                out[g.span.0 + pos] = 1.0;
            }
        }
    }
    Ok(())
}

/// Encode a single attribute row (no label), e.g. one line of a
/// monitoring stream.
pub fn encode_row(cells: &[String], schema: &FeatureSchema) -> Result<Vec<f64>> {
    schema.validate()?;
    if cells.len() != schema.groups.len() {
        return Err(Error::RowArity {
            line: 0,
            expected: schema.groups.len(),
            got: cells.len(),
        });
    }
    let mut out = vec![0.0; schema.total_width()];
    encode_row_into(cells, schema, 0, &mut out)?;
    Ok(out)
}

/// Encode a raw table under a fitted schema.
///
/// Continuous cells are standardized with the schema's fit-time statistics,
/// so encoding a test table with a train-fitted schema applies the train
/// mean and stddev (no leakage). Labels map to 1 iff they equal the
/// schema's positive label.
pub fn encode(table: &RawTable, schema: &FeatureSchema) -> Result<EncodedDataset> {
    schema.validate()?;
    let d = schema.total_width();
    let n = table.n_rows();
    if n == 0 {
        return Err(Error::NoDataRows);
    }

    // schema groups are fitted in table column order, but re-derive the
    // mapping by name so tables with reordered columns still encode
    for g in &schema.groups {
        if table.column_index(&g.name).is_none() {
            return Err(Error::UnknownColumn(g.name.clone()));
        }
    }
    let col_of: Vec<usize> = schema
        .groups
        .iter()
        .map(|g| table.column_index(&g.name).expect("checked above"))
        .collect();

    let mut data = vec![0.0f64; n * d];
    for (row_idx, cells) in table.rows.iter().enumerate() {
        let out = &mut data[row_idx * d..(row_idx + 1) * d];
        let reordered: Vec<String> = col_of.iter().map(|&c| cells[c].clone()).collect();
        encode_row_into(&reordered, schema, row_idx, out)?;
    }

    let labels = table
        .labels
        .iter()
        .map(|l| u8::from(*l == schema.label_positive))
        .collect();
    EncodedDataset::new(Tensor::matrix(n, d, data)?, labels, schema.clone())
}

/// Deterministic seeded split into (train, test) of sizes
/// (ceil(N * fraction), remainder).
///
/// When a source provides official train/test files, loading both directly
/// is the preferred path and this is bypassed.
pub fn split(
    dataset: &EncodedDataset,
    fraction: f64,
    seed: u64,
) -> Result<(EncodedDataset, EncodedDataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::DegenerateSplit(fraction));
    }
    let n = dataset.n_rows();
    let n_train = (n as f64 * fraction).ceil() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::DegenerateSplit(fraction));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let train = dataset.subset(&indices[..n_train])?;
    let test = dataset.subset(&indices[n_train..])?;
    Ok((train, test))
}
