//! Two-hidden-layer feedforward binary classifier: init, predict, train,
//! and a versioned JSON model file tied to a schema fingerprint.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::data::EncodedDataset;
use crate::error::{Error, Result};
use crate::fsio::write_atomic;
use crate::tape::{NodeId, Tape};
use crate::tensor::Tensor;

const MODEL_FORMAT_VERSION: u32 = 1;

/// Hard classification decision at the fixed 0.5 threshold.
pub fn decision(probability: f64) -> u8 {
    u8::from(probability >= 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            epochs: 20,
            batch_size: 128,
            learning_rate: 0.05,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub accuracy: f64,
}

/// Node ids of one recorded forward pass.
pub struct ForwardRecord {
    pub input: NodeId,
    pub logit: NodeId,
    pub weights: Vec<NodeId>,
    pub biases: Vec<NodeId>,
}

/// Fully-connected ReLU network with a sigmoid output unit.
///
/// `layer_dims` is `[D, h1, ..., 1]`; weights are row-major
/// `dims[l+1] x dims[l]` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layer_dims: Vec<usize>,
    weights: Vec<Tensor>,
    biases: Vec<Tensor>,
    metadata: Option<TrainParams>,
}

/// Glorot-uniform initialization: weights in ±sqrt(6 / (fan_in + fan_out)),
/// biases zero, deterministic under the seed.
pub fn init(layer_dims: &[usize], seed: u64) -> Result<MlpModel> {
    if layer_dims.len() < 2 {
        return Err(Error::Contract(
            "layer_dims needs at least input and output".into(),
        ));
    }
    if layer_dims.iter().any(|&d| d == 0) {
        return Err(Error::Contract(format!(
            "layer dims must be positive, got {layer_dims:?}"
        )));
    }
    if *layer_dims.last().unwrap() != 1 {
        return Err(Error::Contract(format!(
            "output dim must be 1, got {layer_dims:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for pair in layer_dims.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let data = (0..fan_in * fan_out)
            .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * bound)
            .collect();
        weights.push(Tensor::matrix(fan_out, fan_in, data)?);
        biases.push(Tensor::vector(vec![0.0; fan_out]));
    }
    Ok(MlpModel {
        layer_dims: layer_dims.to_vec(),
        weights,
        biases,
        metadata: None,
    })
}

impl MlpModel {
    /// Assemble a model from explicit tensors (used for hand-built fixtures).
    pub fn from_parts(
        layer_dims: Vec<usize>,
        weights: Vec<Tensor>,
        biases: Vec<Tensor>,
    ) -> Result<Self> {
        if layer_dims.len() < 2
            || weights.len() != layer_dims.len() - 1
            || biases.len() != weights.len()
        {
            return Err(Error::Contract("layer/parameter count mismatch".into()));
        }
        for (l, pair) in layer_dims.windows(2).enumerate() {
            if weights[l].shape() != [pair[1], pair[0]] {
                return Err(Error::ShapeMismatch {
                    op: "from_parts",
                    left: weights[l].shape().to_vec(),
                    right: vec![pair[1], pair[0]],
                });
            }
            if biases[l].shape() != [pair[1]] {
                return Err(Error::ShapeMismatch {
                    op: "from_parts",
                    left: biases[l].shape().to_vec(),
                    right: vec![pair[1]],
                });
            }
        }
        Ok(MlpModel {
            layer_dims,
            weights,
            biases,
            metadata: None,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn input_width(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn weights(&self) -> &[Tensor] {
        &self.weights
    }

    pub fn biases(&self) -> &[Tensor] {
        &self.biases
    }

    pub fn metadata(&self) -> Option<&TrainParams> {
        self.metadata.as_ref()
    }

    /// Record the forward pass up to the output logit.
    ///
    /// The input and all parameters become tape leaves, so one backward
    /// pass yields both weight gradients (training) and input gradients
    /// (sensitivity).
    pub fn record_forward(&self, tape: &mut Tape, x: &[f64]) -> Result<ForwardRecord> {
        if x.len() != self.input_width() {
            return Err(Error::ShapeMismatch {
                op: "forward",
                left: vec![x.len()],
                right: vec![self.input_width()],
            });
        }
        let input = tape.input_leaf(Tensor::vector(x.to_vec()));
        let mut weights = Vec::with_capacity(self.weights.len());
        let mut biases = Vec::with_capacity(self.biases.len());
        let mut h = input;
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let wn = tape.weight_leaf(w.clone());
            let bn = tape.weight_leaf(b.clone());
            weights.push(wn);
            biases.push(bn);
            let z = tape.matvec(wn, h)?;
            let z = tape.add(z, bn)?;
            h = if l == last { z } else { tape.relu(z) };
        }
        Ok(ForwardRecord {
            input,
            logit: h,
            weights,
            biases,
        })
    }

    /// Probability that `x` is in the positive class, always in (0, 1)
    /// for logits away from saturation.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let mut tape = Tape::new();
        let fwd = self.record_forward(&mut tape, x)?;
        let p = tape.sigmoid(fwd.logit);
        Ok(tape.value(p).item())
    }

    /// Mini-batch SGD on mean BCE (fused logit-space loss).
    ///
    /// Per-epoch shuffling is deterministic under the seed. Returns the
    /// per-epoch mean loss and accuracy trace; aborts with the epoch and
    /// batch index if the loss goes non-finite.
    pub fn train(&mut self, data: &EncodedDataset, params: &TrainParams) -> Result<Vec<EpochStats>> {
        if data.n_rows() == 0 {
            return Err(Error::NoDataRows);
        }
        if params.batch_size == 0 || params.epochs == 0 {
            return Err(Error::Contract(
                "epochs and batch_size must be positive".into(),
            ));
        }
        if data.width() != self.input_width() {
            return Err(Error::ShapeMismatch {
                op: "train",
                left: vec![data.width()],
                right: vec![self.input_width()],
            });
        }

        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut indices: Vec<usize> = (0..data.n_rows()).collect();
        let mut trace = Vec::with_capacity(params.epochs);

        for epoch in 0..params.epochs {
            indices.shuffle(&mut rng);
            let mut loss_sum = 0.0;
            let mut correct = 0usize;

            for (batch_idx, batch) in indices.chunks(params.batch_size).enumerate() {
                let mut grad_w: Vec<Tensor> = self
                    .weights
                    .iter()
                    .map(|w| Tensor::zeros(w.shape().to_vec()))
                    .collect();
                let mut grad_b: Vec<Tensor> = self
                    .biases
                    .iter()
                    .map(|b| Tensor::zeros(b.shape().to_vec()))
                    .collect();

                for &i in batch {
                    let mut tape = Tape::new();
                    let fwd = self.record_forward(&mut tape, data.row(i))?;
                    let y = data.label(i);
                    let loss = tape.sigmoid_bce_loss(fwd.logit, y)?;
                    let loss_value = tape.value(loss).item();
                    if !loss_value.is_finite() {
                        return Err(Error::NonFiniteLoss {
                            epoch,
                            batch: batch_idx,
                        });
                    }
                    loss_sum += loss_value;
                    // decision threshold 0.5 on probability == logit sign
                    if (tape.value(fwd.logit).item() >= 0.0) == (y == 1) {
                        correct += 1;
                    }

                    let grads = tape.backward(loss)?;
                    for (acc, node) in grad_w.iter_mut().zip(&fwd.weights) {
                        let g = grads.get(*node).expect("weight leaf has adjoint");
                        for (dst, src) in acc.data_mut().iter_mut().zip(g.iter()) {
                            *dst += src;
                        }
                    }
                    for (acc, node) in grad_b.iter_mut().zip(&fwd.biases) {
                        let g = grads.get(*node).expect("bias leaf has adjoint");
                        for (dst, src) in acc.data_mut().iter_mut().zip(g.iter()) {
                            *dst += src;
                        }
                    }
                }

                let scale = params.learning_rate / batch.len() as f64;
                for (w, g) in self.weights.iter_mut().zip(&grad_w) {
                    for (dst, src) in w.data_mut().iter_mut().zip(g.iter()) {
                        *dst -= scale * src;
                    }
                }
                for (b, g) in self.biases.iter_mut().zip(&grad_b) {
                    for (dst, src) in b.data_mut().iter_mut().zip(g.iter()) {
                        *dst -= scale * src;
                    }
                }
            }

            trace.push(EpochStats {
                epoch,
                mean_loss: loss_sum / data.n_rows() as f64,
                accuracy: correct as f64 / data.n_rows() as f64,
            });
        }

        self.metadata = Some(*params);
        Ok(trace)
    }
}

/// Fraction of rows where the 0.5-threshold decision matches the label.
pub fn accuracy(model: &MlpModel, data: &EncodedDataset) -> Result<f64> {
    let mut correct = 0usize;
    for i in 0..data.n_rows() {
        let p = model.predict(data.row(i))?;
        if decision(p) == data.label(i) {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.n_rows() as f64)
}

/// A model bound to the fingerprint of the schema it was trained against.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelArtifact {
    pub model: MlpModel,
    pub schema_fingerprint: String,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    layer_dims: Vec<usize>,
    hidden_activation: String,
    output_activation: String,
    /// Row-major `dims[l+1] x dims[l]` weight matrices.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    schema_fingerprint: String,
    metadata: Option<TrainParams>,
}

impl ModelArtifact {
    pub fn new(model: MlpModel, schema_fingerprint: impl Into<String>) -> Self {
        ModelArtifact {
            model,
            schema_fingerprint: schema_fingerprint.into(),
        }
    }

    /// Error unless the fingerprint matches the given schema's.
    pub fn check_schema(&self, schema: &crate::data::FeatureSchema) -> Result<()> {
        let data = schema.fingerprint();
        if self.schema_fingerprint != data {
            return Err(Error::FingerprintMismatch {
                model: self.schema_fingerprint.clone(),
                data,
            });
        }
        Ok(())
    }

    /// Write the versioned JSON model file (atomic: temp file + rename).
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            layer_dims: self.model.layer_dims.clone(),
            hidden_activation: "relu".into(),
            output_activation: "sigmoid".into(),
            weights: self.model.weights.iter().map(|t| t.data().to_vec()).collect(),
            biases: self.model.biases.iter().map(|t| t.data().to_vec()).collect(),
            schema_fingerprint: self.schema_fingerprint.clone(),
            metadata: self.model.metadata,
        };
        let mut bytes = serde_json::to_vec_pretty(&file)?;
        bytes.push(b'\n');
        write_atomic(path, &bytes)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: ModelFile = serde_json::from_slice(&bytes)?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                expected: MODEL_FORMAT_VERSION,
                got: file.format_version,
            });
        }
        let mut weights = Vec::with_capacity(file.weights.len());
        let mut biases = Vec::with_capacity(file.biases.len());
        for (l, pair) in file.layer_dims.windows(2).enumerate() {
            let w = file
                .weights
                .get(l)
                .ok_or_else(|| Error::Contract("missing weight matrix".into()))?;
            let b = file
                .biases
                .get(l)
                .ok_or_else(|| Error::Contract("missing bias vector".into()))?;
            weights.push(Tensor::matrix(pair[1], pair[0], w.clone())?);
            biases.push(Tensor::new(vec![pair[1]], b.clone())?);
        }
        let mut model = MlpModel::from_parts(file.layer_dims, weights, biases)?;
        model.metadata = file.metadata;
        Ok(ModelArtifact {
            model,
            schema_fingerprint: file.schema_fingerprint,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{encode, fit_schema, ColumnSpec, RawTable};
    use approx::assert_relative_eq;

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = init(&[100, 50, 1], 9).unwrap();
        let b = init(&[100, 50, 1], 9).unwrap();
        assert_eq!(a, b);
        let bound = (6.0_f64 / 150.0).sqrt();
        assert_relative_eq!(bound, 0.2);
        assert!(a.weights()[0].iter().all(|w| w.abs() <= bound));
        assert!(a.biases().iter().all(|b| b.iter().all(|&v| v == 0.0)));

        let c = init(&[100, 50, 1], 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_rejects_bad_dims() {
        assert!(init(&[4, 0, 1], 0).is_err());
        assert!(init(&[4, 3, 2], 0).is_err());
        assert!(init(&[4], 0).is_err());
    }

    #[test]
    fn zero_model_predicts_half() {
        let model = MlpModel::from_parts(
            vec![3, 2, 1],
            vec![
                Tensor::matrix(2, 3, vec![0.0; 6]).unwrap(),
                Tensor::matrix(1, 2, vec![0.0; 2]).unwrap(),
            ],
            vec![Tensor::vector(vec![0.0; 2]), Tensor::vector(vec![0.0])],
        )
        .unwrap();
        for x in [[0.0, 0.0, 0.0], [1.0, -2.0, 3.0]] {
            assert_eq!(model.predict(&x).unwrap(), 0.5);
        }
    }

    #[test]
    fn hand_built_one_layer_prediction() {
        let model = MlpModel::from_parts(
            vec![2, 1],
            vec![Tensor::matrix(1, 2, vec![2.0, -3.0]).unwrap()],
            vec![Tensor::vector(vec![0.0])],
        )
        .unwrap();
        let p = model.predict(&[1.0, 1.0]).unwrap();
        assert_relative_eq!(p, 0.2689414213699951, max_relative = 1e-15);
    }

    #[test]
    fn predictions_stay_in_open_unit_interval() {
        let model = init(&[6, 8, 8, 1], 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..6).map(|_| rng.random::<f64>() * 6.0 - 3.0).collect();
            let p = model.predict(&x).unwrap();
            assert!(p > 0.0 && p < 1.0);
        }
    }

    #[test]
    fn predict_rejects_wrong_width() {
        let model = init(&[4, 3, 1], 0).unwrap();
        assert!(model.predict(&[1.0, 2.0]).is_err());
    }

    fn tiny_dataset() -> EncodedDataset {
        let columns = vec![
            ColumnSpec::continuous("f1"),
            ColumnSpec::continuous("f2"),
            ColumnSpec::categorical("g"),
        ];
        let rows: Vec<Vec<String>> = (0..8)
            .map(|i| {
                vec![
                    format!("{}", i as f64),
                    format!("{}", (i * i) as f64),
                    if i % 2 == 0 { "a" } else { "b" }.to_string(),
                ]
            })
            .collect();
        let labels = (0..8)
            .map(|i| if i >= 4 { "pos" } else { "neg" }.to_string())
            .collect();
        let table = RawTable {
            columns,
            rows,
            labels,
            label_positive: "pos".into(),
            dropped_missing: 0,
        };
        let schema = fit_schema(&table, "g", "a").unwrap();
        encode(&table, &schema).unwrap()
    }

    #[test]
    fn single_example_sgd_step_is_exactly_lr_times_gradient() {
        let data = tiny_dataset();
        let one = data.subset(&[5]).unwrap();
        let lr = 0.3;

        let before = init(&[3, 4, 1], 21).unwrap();
        let mut tape = Tape::new();
        let fwd = before.record_forward(&mut tape, one.row(0)).unwrap();
        let loss = tape.sigmoid_bce_loss(fwd.logit, one.label(0)).unwrap();
        let grads = tape.backward(loss).unwrap();

        let mut after = before.clone();
        after
            .train(
                &one,
                &TrainParams {
                    epochs: 1,
                    batch_size: 1,
                    learning_rate: lr,
                    seed: 0,
                },
            )
            .unwrap();

        for (l, node) in fwd.weights.iter().enumerate() {
            let g = grads.get(*node).unwrap();
            for (i, (&w0, &w1)) in before.weights()[l]
                .iter()
                .zip(after.weights()[l].iter())
                .enumerate()
            {
                let expected = w0 - lr * g.data()[i];
                assert_eq!(w1.to_bits(), expected.to_bits());
            }
        }
    }

    #[test]
    fn training_is_bit_reproducible() {
        let data = tiny_dataset();
        let params = TrainParams {
            epochs: 5,
            batch_size: 3,
            learning_rate: 0.1,
            seed: 7,
        };
        let mut m1 = init(&[3, 4, 1], 1).unwrap();
        let t1 = m1.train(&data, &params).unwrap();
        let mut m2 = init(&[3, 4, 1], 1).unwrap();
        let t2 = m2.train(&data, &params).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(t1, t2);
    }

    #[test]
    fn xor_like_task_reaches_high_accuracy() {
        // 200-point XOR: a 2-layer MLP must separate it
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200;
        let mut data = Vec::with_capacity(n * 2);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let x1 = rng.random::<f64>() * 2.0 - 1.0;
            let x2 = rng.random::<f64>() * 2.0 - 1.0;
            data.extend_from_slice(&[x1, x2]);
            labels.push(u8::from((x1 > 0.0) != (x2 > 0.0)));
        }
        let schema = xor_schema();
        let ds = EncodedDataset::new(Tensor::matrix(n, 2, data).unwrap(), labels, schema).unwrap();

        let mut model = init(&[2, 8, 8, 1], 13).unwrap();
        model
            .train(
                &ds,
                &TrainParams {
                    epochs: 500,
                    batch_size: 16,
                    learning_rate: 0.5,
                    seed: 2,
                },
            )
            .unwrap();
        let acc = accuracy(&model, &ds).unwrap();
        assert!(acc >= 0.95, "XOR accuracy {acc}");
    }

    fn xor_schema() -> crate::data::FeatureSchema {
        use crate::data::{FeatureGroup, FeatureSchema, GroupKind};
        FeatureSchema {
            groups: vec![
                FeatureGroup {
                    name: "x1".into(),
                    kind: GroupKind::Continuous { mean: 0.0, stddev: 1.0 },
                    span: (0, 1),
                },
                FeatureGroup {
                    name: "x2".into(),
                    kind: GroupKind::BinaryCategorical {
                        categories: ["n".into(), "p".into()],
                    },
                    span: (1, 2),
                },
            ],
            protected: "x2".into(),
            privileged_value: "p".into(),
            label_positive: "1".into(),
        }
    }

    #[test]
    fn save_load_round_trip_is_bit_identical() {
        let data = tiny_dataset();
        let mut model = init(&[3, 5, 1], 77).unwrap();
        model
            .train(
                &data,
                &TrainParams {
                    epochs: 3,
                    batch_size: 4,
                    learning_rate: 0.1,
                    seed: 3,
                },
            )
            .unwrap();
        let artifact = ModelArtifact::new(model, data.schema().fingerprint());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        artifact.save(&path).unwrap();
        let loaded = ModelArtifact::load(&path).unwrap();
        assert_eq!(artifact, loaded);
        for i in 0..data.n_rows() {
            let a = artifact.model.predict(data.row(i)).unwrap();
            let b = loaded.model.predict(data.row(i)).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn load_rejects_wrong_version_and_truncation() {
        let model = init(&[2, 2, 1], 0).unwrap();
        let artifact = ModelArtifact::new(model, "abc");
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        artifact.save(&path).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        let tampered = text.replace("\"format_version\": 1", "\"format_version\": 9");
        std::fs::write(&path, tampered).unwrap();
        assert!(matches!(
            ModelArtifact::load(&path),
            Err(Error::FormatVersion { expected: 1, got: 9 })
        ));

        std::fs::write(&path, &text.as_bytes()[..text.len() / 2]).unwrap();
        assert!(matches!(ModelArtifact::load(&path), Err(Error::Json(_))));
    }

    #[test]
    fn fingerprint_mismatch_is_detected() {
        let data = tiny_dataset();
        let model = init(&[3, 2, 1], 0).unwrap();
        let artifact = ModelArtifact::new(model, "not-the-right-fingerprint");
        assert!(matches!(
            artifact.check_schema(data.schema()),
            Err(Error::FingerprintMismatch { .. })
        ));
    }
}
