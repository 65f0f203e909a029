//! Threshold-based fairness monitor: per-prediction alarms on protected
//! sensitivity, group metrics over the kept subset, and threshold sweeps.
//!
//! The monitor only flags or discards; it never alters predictions. The
//! alarm comparison is strictly greater-than, so an example exactly at the
//! threshold is kept.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::EncodedDataset;
use crate::error::{Error, Result};
use crate::metrics::{Group, GroupedPredictions};
use crate::model::MlpModel;
use crate::sensitivity::{batch_profiles, profile, SensitivityOptions};
use crate::stats::quantile_linear;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorConfig {
    /// Alarm threshold tau; +infinity turns the monitor off.
    pub threshold: f64,
    /// Name of the protected group; must match the schema's.
    pub protected: String,
    #[serde(default)]
    pub options: SensitivityOptions,
}

impl MonitorConfig {
    pub fn new(threshold: f64, protected: impl Into<String>) -> Result<Self> {
        if threshold.is_nan() || threshold < 0.0 {
            return Err(Error::Contract(format!(
                "threshold must be non-negative (or +inf for off), got {threshold}"
            )));
        }
        Ok(MonitorConfig {
            threshold,
            protected: protected.into(),
            options: SensitivityOptions::default(),
        })
    }

    /// Monitor disabled: nothing is ever flagged.
    pub fn off(protected: impl Into<String>) -> Self {
        MonitorConfig {
            threshold: f64::INFINITY,
            protected: protected.into(),
            options: SensitivityOptions::default(),
        }
    }

    fn check_schema(&self, schema: &crate::data::FeatureSchema) -> Result<()> {
        if self.protected != schema.protected {
            return Err(Error::Contract(format!(
                "monitor watches {:?} but schema protects {:?}",
                self.protected, schema.protected
            )));
        }
        Ok(())
    }
}

/// Outcome of monitoring one prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub prediction: f64,
    pub decision: u8,
    pub sensitivity: f64,
    pub flagged: bool,
}

/// Evaluate one example: predict, measure protected sensitivity, compare
/// against the threshold (strict >).
pub fn evaluate(
    model: &MlpModel,
    schema: &crate::data::FeatureSchema,
    x: &[f64],
    config: &MonitorConfig,
) -> Result<Verdict> {
    config.check_schema(schema)?;
    let record = profile(model, schema, x, config.options)?;
    Ok(Verdict {
        prediction: record.prediction,
        decision: record.decision,
        sensitivity: record.protected_sensitivity,
        flagged: record.protected_sensitivity > config.threshold,
    })
}

/// Group metrics over the kept (un-flagged) subset.
///
/// A metric that loses its footing — an emptied group, or a zero privileged
/// positive rate for the ratio — is reported as undefined (`None`), never as
/// an error or a sentinel number: sweeps at aggressive thresholds must not
/// abort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteredMetrics {
    pub kept: usize,
    pub discarded: usize,
    pub statistical_parity: Option<f64>,
    pub disparate_impact: Option<f64>,
}

fn metrics_over(
    decisions: &[u8],
    privileged: &[bool],
    sensitivities: &[f64],
    tau: f64,
) -> FilteredMetrics {
    let kept_idx: Vec<usize> = (0..decisions.len())
        .filter(|&i| sensitivities[i] <= tau)
        .collect();
    let kept = kept_idx.len();
    let discarded = decisions.len() - kept;

    let kept_decisions: Vec<u8> = kept_idx.iter().map(|&i| decisions[i]).collect();
    let kept_groups: Vec<Group> = kept_idx
        .iter()
        .map(|&i| {
            if privileged[i] {
                Group::Privileged
            } else {
                Group::Unprivileged
            }
        })
        .collect();

    let (mut sp, mut di) = (None, None);
    if let Ok(gp) = GroupedPredictions::new(kept_decisions, kept_groups) {
        sp = gp.statistical_parity().ok();
        di = gp.disparate_impact().ok();
    }
    FilteredMetrics {
        kept,
        discarded,
        statistical_parity: sp,
        disparate_impact: di,
    }
}

/// Kept-subset metrics for a whole dataset at the configured threshold.
pub fn filtered_metrics(
    model: &MlpModel,
    dataset: &EncodedDataset,
    config: &MonitorConfig,
) -> Result<FilteredMetrics> {
    config.check_schema(dataset.schema())?;
    let records = batch_profiles(model, dataset, config.options)?;
    let decisions: Vec<u8> = records.iter().map(|r| r.decision).collect();
    let sensitivities: Vec<f64> = records.iter().map(|r| r.protected_sensitivity).collect();
    let privileged: Vec<bool> = (0..dataset.n_rows())
        .map(|i| dataset.is_privileged_row(i))
        .collect();
    Ok(metrics_over(
        &decisions,
        &privileged,
        &sensitivities,
        config.threshold,
    ))
}

/// Threshold grid for a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSpec {
    /// Deciles (10th..100th percentile) of the observed protected
    /// sensitivities, plus +infinity. The default: absolute sensitivity
    /// scales are model-specific, so the grid adapts to the model.
    Deciles,
    Explicit(Vec<f64>),
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Deciles
    }
}

fn resolve_grid(spec: &GridSpec, sensitivities: &[f64]) -> Result<Vec<f64>> {
    let mut grid = match spec {
        GridSpec::Explicit(taus) => {
            if taus.is_empty() {
                return Err(Error::Contract("sweep grid is empty".into()));
            }
            if taus.iter().any(|t| t.is_nan() || *t < 0.0) {
                return Err(Error::Contract("grid thresholds must be >= 0".into()));
            }
            taus.clone()
        }
        GridSpec::Deciles => {
            let mut sorted = sensitivities.to_vec();
            sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite sensitivities"));
            let mut taus: Vec<f64> = (1..=10)
                .map(|d| quantile_linear(&sorted, d as f64 / 10.0))
                .collect();
            taus.push(f64::INFINITY);
            taus
        }
    };
    grid.sort_by(|a, b| b.partial_cmp(a).expect("no NaN in grid"));
    Ok(grid)
}

/// One sweep row: the threshold and the kept-subset metrics at it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tau: f64,
    pub kept: usize,
    pub discarded: usize,
    pub statistical_parity: Option<f64>,
    pub disparate_impact: Option<f64>,
}

/// Sweep results, rows ordered by descending threshold. The data behind
/// the fairness-versus-threshold plots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

/// Run the monitor across a threshold grid. Sensitivities are computed
/// once per row and re-filtered per threshold.
pub fn threshold_sweep(
    model: &MlpModel,
    dataset: &EncodedDataset,
    config: &MonitorConfig,
    grid: &GridSpec,
) -> Result<SweepReport> {
    config.check_schema(dataset.schema())?;
    let records = batch_profiles(model, dataset, config.options)?;
    let decisions: Vec<u8> = records.iter().map(|r| r.decision).collect();
    let sensitivities: Vec<f64> = records.iter().map(|r| r.protected_sensitivity).collect();
    let privileged: Vec<bool> = (0..dataset.n_rows())
        .map(|i| dataset.is_privileged_row(i))
        .collect();

    let taus = resolve_grid(grid, &sensitivities)?;
    let rows = taus
        .par_iter()
        .map(|&tau| {
            let m = metrics_over(&decisions, &privileged, &sensitivities, tau);
            SweepRow {
                tau,
                kept: m.kept,
                discarded: m.discarded,
                statistical_parity: m.statistical_parity,
                disparate_impact: m.disparate_impact,
            }
        })
        .collect();
    Ok(SweepReport { rows })
}

fn csv_opt(v: Option<f64>) -> (String, &'static str) {
    match v {
        Some(x) => (x.to_string(), "true"),
        None => (String::new(), "false"),
    }
}

/// CSV export: tau, kept, discarded, stat_parity, stat_parity_defined,
/// disp_impact, disp_impact_defined. Undefined metrics serialize as an
/// empty cell with the defined flag false; +infinity serializes as "inf".
pub fn write_sweep_csv<W: std::io::Write>(report: &SweepReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "tau",
        "kept",
        "discarded",
        "stat_parity",
        "stat_parity_defined",
        "disp_impact",
        "disp_impact_defined",
    ])?;
    for r in &report.rows {
        let (sp, sp_def) = csv_opt(r.statistical_parity);
        let (di, di_def) = csv_opt(r.disparate_impact);
        w.write_record([
            r.tau.to_string(),
            r.kept.to_string(),
            r.discarded.to_string(),
            sp,
            sp_def.to_string(),
            di,
            di_def.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<writer>".into(),
        source: e,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FeatureGroup, FeatureSchema, GroupKind};
    use crate::metrics::FairnessReport;
    use crate::model::MlpModel;
    use crate::tensor::Tensor;
    use approx::assert_relative_eq;

    fn schema() -> FeatureSchema {
        FeatureSchema {
            groups: vec![
                FeatureGroup {
                    name: "score".into(),
                    kind: GroupKind::Continuous { mean: 0.0, stddev: 1.0 },
                    span: (0, 1),
                },
                FeatureGroup {
                    name: "sex".into(),
                    kind: GroupKind::BinaryCategorical {
                        categories: ["Female".into(), "Male".into()],
                    },
                    span: (1, 2),
                },
            ],
            protected: "sex".into(),
            privileged_value: "Male".into(),
            label_positive: "1".into(),
        }
    }

    fn model() -> MlpModel {
        MlpModel::from_parts(
            vec![2, 1],
            vec![Tensor::matrix(1, 2, vec![1.8, 0.9]).unwrap()],
            vec![Tensor::vector(vec![-0.4])],
        )
        .unwrap()
    }

    fn dataset(n: usize) -> EncodedDataset {
        let mut data = Vec::with_capacity(n * 2);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let score = (i as f64 / n as f64) * 4.0 - 2.0;
            let male = i % 3 != 0;
            data.push(score);
            data.push(f64::from(u8::from(male)));
            labels.push(u8::from(score > 0.0));
        }
        EncodedDataset::new(Tensor::matrix(n, 2, data).unwrap(), labels, schema()).unwrap()
    }

    #[test]
    fn boundary_is_kept_strictly_greater_flags() {
        let m = model();
        let s = schema();
        let x = [0.5, 1.0];
        let sens = crate::sensitivity::profile(&m, &s, &x, Default::default())
            .unwrap()
            .protected_sensitivity;

        let at = MonitorConfig::new(sens, "sex").unwrap();
        assert!(!evaluate(&m, &s, &x, &at).unwrap().flagged);

        let below = MonitorConfig::new(sens * (1.0 - 1e-12), "sex").unwrap();
        assert!(evaluate(&m, &s, &x, &below).unwrap().flagged);
    }

    #[test]
    fn zero_threshold_flags_everything_nonzero() {
        let m = model();
        let s = schema();
        let config = MonitorConfig::new(0.0, "sex").unwrap();
        let v = evaluate(&m, &s, &[0.3, 1.0], &config).unwrap();
        assert!(v.sensitivity > 0.0);
        assert!(v.flagged);
    }

    #[test]
    fn infinite_threshold_never_flags() {
        let m = model();
        let s = schema();
        let config = MonitorConfig::off("sex");
        for i in 0..20 {
            let x = [i as f64 / 3.0 - 3.0, f64::from(u8::from(i % 2 == 0))];
            assert!(!evaluate(&m, &s, &x, &config).unwrap().flagged);
        }
    }

    #[test]
    fn wrong_protected_name_is_rejected() {
        let m = model();
        let s = schema();
        let config = MonitorConfig::new(0.1, "race").unwrap();
        assert!(evaluate(&m, &s, &[0.0, 1.0], &config).is_err());
    }

    #[test]
    fn config_rejects_negative_or_nan_threshold() {
        assert!(MonitorConfig::new(-0.1, "sex").is_err());
        assert!(MonitorConfig::new(f64::NAN, "sex").is_err());
        assert!(MonitorConfig::new(f64::INFINITY, "sex").is_ok());
    }

    #[test]
    fn keep_all_threshold_equals_unfiltered_metrics() {
        let m = model();
        let ds = dataset(60);
        let fm = filtered_metrics(&m, &ds, &MonitorConfig::off("sex")).unwrap();
        assert_eq!(fm.kept, 60);
        assert_eq!(fm.discarded, 0);

        let decisions: Vec<u8> = (0..ds.n_rows())
            .map(|i| crate::model::decision(m.predict(ds.row(i)).unwrap()))
            .collect();
        let groups: Vec<Group> = (0..ds.n_rows())
            .map(|i| {
                if ds.is_privileged_row(i) {
                    Group::Privileged
                } else {
                    Group::Unprivileged
                }
            })
            .collect();
        let report = FairnessReport::compute(&GroupedPredictions::new(decisions, groups).unwrap())
            .unwrap();
        assert_eq!(fm.statistical_parity, Some(report.statistical_parity));
        assert_eq!(fm.disparate_impact, Some(report.disparate_impact));
    }

    #[test]
    fn threshold_below_minimum_discards_all_and_flags_undefined() {
        let m = model();
        let ds = dataset(30);
        let fm = filtered_metrics(&m, &ds, &MonitorConfig::new(0.0, "sex").unwrap()).unwrap();
        // the model uses the protected column, so every sensitivity is > 0
        assert_eq!(fm.kept, 0);
        assert_eq!(fm.discarded, 30);
        assert_eq!(fm.statistical_parity, None);
        assert_eq!(fm.disparate_impact, None);
    }

    #[test]
    fn filtered_metrics_agree_with_example_by_example_verdicts() {
        let m = model();
        let ds = dataset(45);
        let records = batch_profiles(&m, &ds, Default::default()).unwrap();
        let median = {
            let mut s: Vec<f64> = records.iter().map(|r| r.protected_sensitivity).collect();
            s.sort_by(|a, b| a.partial_cmp(b).unwrap());
            s[s.len() / 2]
        };
        let config = MonitorConfig::new(median, "sex").unwrap();
        let fm = filtered_metrics(&m, &ds, &config).unwrap();

        let mut decisions = Vec::new();
        let mut groups = Vec::new();
        for i in 0..ds.n_rows() {
            let v = evaluate(&m, ds.schema(), ds.row(i), &config).unwrap();
            if !v.flagged {
                decisions.push(v.decision);
                groups.push(if ds.is_privileged_row(i) {
                    Group::Privileged
                } else {
                    Group::Unprivileged
                });
            }
        }
        assert_eq!(fm.kept, decisions.len());
        let gp = GroupedPredictions::new(decisions, groups).unwrap();
        assert_eq!(fm.statistical_parity, gp.statistical_parity().ok());
        assert_eq!(fm.disparate_impact, gp.disparate_impact().ok());
    }

    #[test]
    fn filter_is_idempotent_and_monotone() {
        let m = model();
        let ds = dataset(50);
        let records = batch_profiles(&m, &ds, Default::default()).unwrap();
        let sens: Vec<f64> = records.iter().map(|r| r.protected_sensitivity).collect();

        let kept_at = |tau: f64| -> Vec<usize> {
            (0..sens.len()).filter(|&i| sens[i] <= tau).collect()
        };
        let mut taus = sens.clone();
        taus.push(0.0);
        taus.push(f64::INFINITY);
        taus.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut prev = kept_at(f64::INFINITY);
        for &tau in &taus {
            let now = kept_at(tau);
            // monotone: kept(tau) is a subset of kept(tau') for tau <= tau'
            assert!(now.iter().all(|i| prev.contains(i)));
            // idempotent: filtering the kept subset again changes nothing
            let again: Vec<usize> = now
                .iter()
                .copied()
                .filter(|&i| sens[i] <= tau)
                .collect();
            assert_eq!(now, again);
            prev = now;
        }
    }

    #[test]
    fn sweep_with_only_infinity_equals_unfiltered() {
        let m = model();
        let ds = dataset(40);
        let config = MonitorConfig::off("sex");
        let report = threshold_sweep(
            &m,
            &ds,
            &config,
            &GridSpec::Explicit(vec![f64::INFINITY]),
        )
        .unwrap();
        assert_eq!(report.rows.len(), 1);
        let fm = filtered_metrics(&m, &ds, &config).unwrap();
        assert_eq!(report.rows[0].kept, fm.kept);
        assert_eq!(report.rows[0].statistical_parity, fm.statistical_parity);
        assert_eq!(report.rows[0].disparate_impact, fm.disparate_impact);
    }

    #[test]
    fn sweep_rows_descend_and_kept_is_non_increasing() {
        let m = model();
        let ds = dataset(80);
        let report = threshold_sweep(&m, &ds, &MonitorConfig::off("sex"), &GridSpec::Deciles)
            .unwrap();
        assert_eq!(report.rows.len(), 11);
        assert!(report.rows[0].tau.is_infinite());
        for pair in report.rows.windows(2) {
            assert!(pair[0].tau >= pair[1].tau);
            assert!(pair[0].kept >= pair[1].kept);
            assert_eq!(pair[0].kept + pair[0].discarded, 80);
        }
        // the 100th percentile keeps everything (strict > never fires at the max)
        assert_eq!(report.rows[1].kept, 80);
        // the 10th percentile keeps about a tenth
        let last = report.rows.last().unwrap();
        assert!(last.kept >= 8 && last.kept <= 9, "kept {}", last.kept);
    }

    #[test]
    fn empty_explicit_grid_is_rejected() {
        let m = model();
        let ds = dataset(10);
        assert!(threshold_sweep(
            &m,
            &ds,
            &MonitorConfig::off("sex"),
            &GridSpec::Explicit(vec![])
        )
        .is_err());
    }

    #[test]
    fn sweep_csv_format() {
        let report = SweepReport {
            rows: vec![
                SweepRow {
                    tau: f64::INFINITY,
                    kept: 10,
                    discarded: 0,
                    statistical_parity: Some(-0.25),
                    disparate_impact: Some(0.5),
                },
                SweepRow {
                    tau: 0.125,
                    kept: 0,
                    discarded: 10,
                    statistical_parity: None,
                    disparate_impact: None,
                },
            ],
        };
        let mut buf = Vec::new();
        write_sweep_csv(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "tau,kept,discarded,stat_parity,stat_parity_defined,disp_impact,disp_impact_defined"
        );
        assert_eq!(lines[1], "inf,10,0,-0.25,true,0.5,true");
        assert_eq!(lines[2], "0.125,0,10,,false,,false");
    }
}
