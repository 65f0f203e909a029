//! Prediction sensitivity: the absolute partial derivative of a model's
//! output with respect to a protected attribute at a specific input, plus
//! per-feature-group profiles, batch distributions, and a smoothness probe.
//!
//! Sensitivities are computed in standardized feature space (where the model
//! operates), so reported magnitudes are per standardized unit. Magnitudes
//! are comparable between features of one trained model but never across
//! different trained models.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{EncodedDataset, FeatureSchema, GroupKind};
use crate::error::{Error, Result};
use crate::model::{decision, MlpModel};
use crate::stats::quantile_linear;
use crate::tape::Tape;

/// How partials over a multi-column (one-hot) group collapse to one number.
/// Every choice reduces to |partial| for single-column groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupAggregation {
    /// L2 norm of the member partials: order-invariant, the default.
    #[default]
    L2Norm,
    MaxAbs,
    SumAbs,
}

/// Which output to differentiate.
///
/// The probability is the default: the prediction users see is the
/// post-sigmoid output, and the monitor thresholds that same quantity.
/// Logit space removes the sigmoid's attenuation factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensitivitySpace {
    #[default]
    Probability,
    Logit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SensitivityOptions {
    pub aggregation: GroupAggregation,
    pub space: SensitivitySpace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSensitivity {
    pub group: String,
    pub value: f64,
}

/// Per-example audit record: the prediction and one non-negative
/// sensitivity per schema group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRecord {
    pub prediction: f64,
    pub decision: u8,
    pub per_group: Vec<GroupSensitivity>,
    pub protected_sensitivity: f64,
}

impl SensitivityRecord {
    pub fn group_value(&self, name: &str) -> Option<f64> {
        self.per_group
            .iter()
            .find(|g| g.group == name)
            .map(|g| g.value)
    }
}

fn check_widths(model: &MlpModel, schema: &FeatureSchema, x: &[f64]) -> Result<()> {
    if x.len() != schema.total_width() || x.len() != model.input_width() {
        return Err(Error::ShapeMismatch {
            op: "sensitivity",
            left: vec![x.len()],
            right: vec![schema.total_width()],
        });
    }
    Ok(())
}

fn aggregate(partials: &[f64], aggregation: GroupAggregation) -> f64 {
    match aggregation {
        GroupAggregation::L2Norm => partials.iter().map(|g| g * g).sum::<f64>().sqrt(),
        GroupAggregation::MaxAbs => partials.iter().fold(0.0, |acc: f64, g| acc.max(g.abs())),
        GroupAggregation::SumAbs => partials.iter().map(|g| g.abs()).sum(),
    }
}

/// One forward + one backward pass: all input partials, grouped.
pub fn profile(
    model: &MlpModel,
    schema: &FeatureSchema,
    x: &[f64],
    opts: SensitivityOptions,
) -> Result<SensitivityRecord> {
    check_widths(model, schema, x)?;
    let mut tape = Tape::new();
    let fwd = model.record_forward(&mut tape, x)?;
    let prob_node = tape.sigmoid(fwd.logit);
    let output = match opts.space {
        SensitivitySpace::Probability => prob_node,
        SensitivitySpace::Logit => fwd.logit,
    };
    let prediction = tape.value(prob_node).item();
    let grads = tape.backward(output)?;
    let input_grad = grads.get(fwd.input).expect("input leaf has adjoint");

    let per_group: Vec<GroupSensitivity> = schema
        .groups
        .iter()
        .map(|g| GroupSensitivity {
            group: g.name.clone(),
            value: aggregate(&input_grad.data()[g.span.0..g.span.1], opts.aggregation),
        })
        .collect();
    let protected_sensitivity = per_group
        .iter()
        .find(|g| g.group == schema.protected)
        .expect("schema validated: protected group exists")
        .value;

    Ok(SensitivityRecord {
        prediction,
        decision: decision(prediction),
        per_group,
        protected_sensitivity,
    })
}

/// Sensitivity of the prediction at `x` with respect to one feature group.
pub fn prediction_sensitivity(
    model: &MlpModel,
    schema: &FeatureSchema,
    x: &[f64],
    group: &str,
    opts: SensitivityOptions,
) -> Result<f64> {
    if schema.group(group).is_none() {
        return Err(Error::UnknownGroup(group.to_string()));
    }
    let record = profile(model, schema, x, opts)?;
    Ok(record.group_value(group).expect("group checked above"))
}

/// Sensitivity profiles for every row, in row order.
pub fn batch_profiles(
    model: &MlpModel,
    dataset: &EncodedDataset,
    opts: SensitivityOptions,
) -> Result<Vec<SensitivityRecord>> {
    if dataset.n_rows() == 0 {
        return Err(Error::NoDataRows);
    }
    (0..dataset.n_rows())
        .into_par_iter()
        .map(|i| profile(model, dataset.schema(), dataset.row(i), opts))
        .collect()
}

/// Five-number summary with Tukey whiskers for one feature group's
/// sensitivity distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub group: String,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    /// Furthest datum within 1.5 IQR below q1.
    pub whisker_low: f64,
    /// Furthest datum within 1.5 IQR above q3.
    pub whisker_high: f64,
    pub n_outliers: usize,
}

/// Summarize one group's values (sorted in place). Quartiles use linear
/// interpolation between order statistics.
pub fn summarize(group: &str, values: &mut [f64]) -> DistributionSummary {
    assert!(!values.is_empty());
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite sensitivities"));
    let q1 = quantile_linear(values, 0.25);
    let median = quantile_linear(values, 0.5);
    let q3 = quantile_linear(values, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let whisker_low = values
        .iter()
        .copied()
        .find(|v| *v >= lo_fence)
        .expect("some datum above the low fence");
    let whisker_high = values
        .iter()
        .rev()
        .copied()
        .find(|v| *v <= hi_fence)
        .expect("some datum below the high fence");
    let n_outliers = values
        .iter()
        .filter(|v| **v < whisker_low || **v > whisker_high)
        .count();
    DistributionSummary {
        group: group.to_string(),
        min: values[0],
        q1,
        median,
        q3,
        max: values[values.len() - 1],
        mean: values.iter().sum::<f64>() / values.len() as f64,
        whisker_low,
        whisker_high,
        n_outliers,
    }
}

/// Distribution summaries from already-computed records, in schema order.
pub fn distributions_from(
    records: &[SensitivityRecord],
    schema: &FeatureSchema,
) -> Vec<DistributionSummary> {
    schema
        .groups
        .iter()
        .enumerate()
        .map(|(gi, g)| {
            let mut values: Vec<f64> = records.iter().map(|r| r.per_group[gi].value).collect();
            summarize(&g.name, &mut values)
        })
        .collect()
}

/// Per-group sensitivity distributions over a dataset, in schema order.
pub fn batch_distribution(
    model: &MlpModel,
    dataset: &EncodedDataset,
    opts: SensitivityOptions,
) -> Result<Vec<DistributionSummary>> {
    let records = batch_profiles(model, dataset, opts)?;
    Ok(distributions_from(&records, dataset.schema()))
}

/// CSV export of [`batch_distribution`] (the data behind per-feature
/// box-and-whisker plots).
pub fn write_distribution_csv<W: std::io::Write>(
    rows: &[DistributionSummary],
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "group",
        "min",
        "q1",
        "median",
        "q3",
        "max",
        "mean",
        "whisker_low",
        "whisker_high",
        "n_outliers",
    ])?;
    for r in rows {
        w.write_record([
            r.group.clone(),
            r.min.to_string(),
            r.q1.to_string(),
            r.median.to_string(),
            r.q3.to_string(),
            r.max.to_string(),
            r.mean.to_string(),
            r.whisker_low.to_string(),
            r.whisker_high.to_string(),
            r.n_outliers.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<writer>".into(),
        source: e,
    })?;
    Ok(())
}

/// Spread of the protected sensitivity under small input perturbations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessSummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub stddev: f64,
    pub n: usize,
}

/// Probe how much the protected sensitivity moves when continuous features
/// are perturbed by uniform noise in ±radius (standardized units).
///
/// Categorical columns are held fixed: perturbing one-hot rows off the
/// simplex would leave the data manifold. Deterministic under the seed.
pub fn smoothness_probe(
    model: &MlpModel,
    schema: &FeatureSchema,
    x: &[f64],
    radius: f64,
    n: usize,
    seed: u64,
    opts: SensitivityOptions,
) -> Result<SmoothnessSummary> {
    use rand::{Rng, SeedableRng};
    if radius < 0.0 {
        return Err(Error::Contract(format!("negative radius {radius}")));
    }
    if n == 0 {
        return Err(Error::Contract("need at least one perturbation".into()));
    }
    check_widths(model, schema, x)?;
    let continuous_cols: Vec<usize> = schema
        .groups
        .iter()
        .filter(|g| matches!(g.kind, GroupKind::Continuous { .. }))
        .map(|g| g.span.0)
        .collect();
    if continuous_cols.is_empty() {
        return Err(Error::Contract(
            "smoothness probe undefined: no continuous columns".into(),
        ));
    }

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        let mut xp = x.to_vec();
        for &c in &continuous_cols {
            xp[c] += (rng.random::<f64>() * 2.0 - 1.0) * radius;
        }
        values.push(profile(model, schema, &xp, opts)?.protected_sensitivity);
    }

    let mean = values.iter().sum::<f64>() / n as f64;
    let stddev = if n < 2 {
        0.0
    } else {
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (n - 1) as f64).sqrt()
    };
    Ok(SmoothnessSummary {
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean,
        stddev,
        n,
    })
}
