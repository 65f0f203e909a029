//! Single-pass statistics over a stream of prediction sensitivities:
//! Welford mean/variance plus a Greenwald-Khanna quantile sketch.

use ordered_float::NotNan;
use quantiles::greenwald_khanna::Stream as GkStream;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rank-error bound of the quantile sketch: a reported phi-quantile has
/// true rank within `phi*n ± RANK_ERROR*n`.
pub const RANK_ERROR: f64 = 0.01;

/// Running statistics for a non-negative stream. Single-writer; snapshots
/// are plain values, so readers are never exposed to partial updates.
pub struct StreamStats {
    count: u64,
    mean: f64,
    m2: f64,
    sketch: GkStream<NotNan<f64>>,
}

impl Default for StreamStats {
    fn default() -> Self {
        Self::new()
    }
}

impl StreamStats {
    pub fn new() -> Self {
        StreamStats {
            count: 0,
            mean: 0.0,
            m2: 0.0,
            sketch: GkStream::new(RANK_ERROR),
        }
    }

    /// Fold one sensitivity into the stream. Negative or non-finite values
    /// are rejected.
    pub fn update(&mut self, value: f64) -> Result<()> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::Domain(format!(
                "stream values must be finite and non-negative, got {value}"
            )));
        }
        self.count += 1;
        let delta = value - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (value - self.mean);
        self.sketch
            .insert(NotNan::new(value).expect("finiteness checked"));
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample variance (n-1 denominator); 0 by convention below two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn stddev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Approximate phi-quantile; `None` on an empty stream.
    pub fn quantile(&self, phi: f64) -> Option<f64> {
        if self.count == 0 {
            return None;
        }
        Some(self.sketch.quantile(phi).into_inner())
    }

    pub fn snapshot(&self) -> StreamSnapshot {
        StreamSnapshot {
            count: self.count,
            mean: self.mean,
            stddev: self.stddev(),
            // below two samples the 0 stddev is a convention, not an estimate
            stddev_defined: self.count >= 2,
            q50: self.quantile(0.5),
            q90: self.quantile(0.9),
            q99: self.quantile(0.99),
        }
    }
}

/// Serializable point-in-time view of a [`StreamStats`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSnapshot {
    pub count: u64,
    pub mean: f64,
    pub stddev: f64,
    pub stddev_defined: bool,
    pub q50: Option<f64>,
    pub q90: Option<f64>,
    pub q99: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn small_stream_mean_and_sample_variance() {
        let mut s = StreamStats::new();
        for v in [1.0, 2.0, 3.0, 4.0, 5.0] {
            s.update(v).unwrap();
        }
        assert_relative_eq!(s.mean(), 3.0);
        assert_relative_eq!(s.variance(), 2.5);
        assert_eq!(s.count(), 5);
    }

    #[test]
    fn single_element_stddev_is_zero_and_flagged() {
        let mut s = StreamStats::new();
        s.update(4.2).unwrap();
        let snap = s.snapshot();
        assert_eq!(snap.stddev, 0.0);
        assert!(!snap.stddev_defined);
        assert_eq!(snap.q50, Some(4.2));
    }

    #[test]
    fn rejects_negative_and_non_finite() {
        let mut s = StreamStats::new();
        assert!(s.update(-0.1).is_err());
        assert!(s.update(f64::NAN).is_err());
        assert!(s.update(f64::INFINITY).is_err());
        assert_eq!(s.count(), 0);
    }

    #[test]
    fn empty_snapshot_has_no_quantiles() {
        let snap = StreamStats::new().snapshot();
        assert_eq!(snap.count, 0);
        assert_eq!(snap.q50, None);
        let json = serde_json::to_string(&snap).unwrap();
        assert!(json.contains("\"q50\":null"));
    }

    #[test]
    fn sketch_median_close_to_exact_on_uniform_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut s = StreamStats::new();
        let mut values = Vec::with_capacity(10_000);
        for _ in 0..10_000 {
            let v: f64 = rng.random();
            values.push(v);
            s.update(v).unwrap();
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let exact_median = crate::stats::quantile_linear(&values, 0.5);
        let q50 = s.quantile(0.5).unwrap();
        assert!((q50 - exact_median).abs() < 0.01, "q50 {q50} vs {exact_median}");

        // rank error within the documented bound (+1 for the sort-based oracle's
        // own convention slack)
        for phi in [0.5, 0.9, 0.99] {
            let q = s.quantile(phi).unwrap();
            let rank = values.partition_point(|v| *v <= q) as f64;
            let target = phi * values.len() as f64;
            let tolerance = RANK_ERROR * values.len() as f64 + 1.0;
            assert!(
                (rank - target).abs() <= tolerance,
                "phi {phi}: rank {rank} vs target {target}"
            );
        }
    }

    #[test]
    fn streaming_matches_batch_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let values: Vec<f64> = (0..500).map(|_| rng.random::<f64>() * 3.0).collect();
        let mut s = StreamStats::new();
        for &v in &values {
            s.update(v).unwrap();
        }
        let batch_mean = values.iter().sum::<f64>() / values.len() as f64;
        let batch_var = values
            .iter()
            .map(|v| (v - batch_mean) * (v - batch_mean))
            .sum::<f64>()
            / (values.len() - 1) as f64;
        assert_relative_eq!(s.mean(), batch_mean, max_relative = 1e-9);
        assert_relative_eq!(s.variance(), batch_var, max_relative = 1e-9);
    }
}
