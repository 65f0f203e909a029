//! Finite-difference gradient checking, independent of the tape.
//!
//! This module re-implements the MLP forward pass with plain loops so that
//! central-difference estimates never touch the autodiff code path they are
//! used to verify.

use crate::model::MlpModel;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Output logit via a naive forward pass (no tape).
pub fn forward_logit(model: &MlpModel, x: &[f64]) -> f64 {
    let mut h = x.to_vec();
    let last = model.weights().len() - 1;
    for (l, (w, b)) in model.weights().iter().zip(model.biases()).enumerate() {
        let (m, n) = (w.shape()[0], w.shape()[1]);
        let mut z = vec![0.0; m];
        for i in 0..m {
            let mut acc = b.data()[i];
            for j in 0..n {
                acc += w.data()[i * n + j] * h[j];
            }
            z[i] = acc;
        }
        if l != last {
            for v in &mut z {
                *v = v.max(0.0);
            }
        }
        h = z;
    }
    h[0]
}

/// Output probability via the naive forward pass.
pub fn forward_probability(model: &MlpModel, x: &[f64]) -> f64 {
    sigmoid(forward_logit(model, x))
}

/// BCE loss via the naive forward pass.
pub fn forward_loss(model: &MlpModel, x: &[f64], y: u8) -> f64 {
    let z = forward_logit(model, x);
    let softplus = if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    };
    softplus - f64::from(y) * z
}

/// Which hidden units are active (pre-activation > 0), layer by layer.
///
/// A central difference is only a valid derivative estimate if the two
/// perturbed evaluations sit on the same side of every ReLU kink; comparing
/// patterns at x-h and x+h detects crossings.
pub fn relu_pattern(model: &MlpModel, x: &[f64]) -> Vec<bool> {
    let mut pattern = Vec::new();
    let mut h = x.to_vec();
    let last = model.weights().len() - 1;
    for (l, (w, b)) in model.weights().iter().zip(model.biases()).enumerate() {
        let (m, n) = (w.shape()[0], w.shape()[1]);
        let mut z = vec![0.0; m];
        for i in 0..m {
            let mut acc = b.data()[i];
            for j in 0..n {
                acc += w.data()[i * n + j] * h[j];
            }
            z[i] = acc;
        }
        if l != last {
            for v in &mut z {
                pattern.push(*v > 0.0);
                *v = v.max(0.0);
            }
        }
        h = z;
    }
    pattern
}

/// Central difference (f(x+h) - f(x-h)) / 2h.
pub fn central_difference<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Default tolerance for comparing an analytic partial against a central
/// difference at h = 1e-5: relative error 1e-6 with an absolute floor of
/// 1e-10. The floor exists because a pure relative bound is unattainable
/// near zero (zero-path partials are exactly 0, and the finite-difference
/// roundoff floor is around 1e-11).
pub fn grad_close(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= 1e-10 + 1e-6 * analytic.abs().max(numeric.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::init;
    use crate::tape::Tape;
    use approx::assert_relative_eq;

    #[test]
    fn naive_forward_matches_tape_forward() {
        let model = init(&[5, 7, 3, 1], 42).unwrap();
        let x: Vec<f64> = (0..5).map(|i| (i as f64) * 0.37 - 1.0).collect();
        let naive = forward_probability(&model, &x);

        let mut tape = Tape::new();
        let fwd = model.record_forward(&mut tape, &x).unwrap();
        let p = tape.sigmoid(fwd.logit);
        assert_relative_eq!(naive, tape.value(p).item(), max_relative = 1e-14);
    }

    #[test]
    fn central_difference_on_square() {
        let d = central_difference(|v| v * v, 3.0, 1e-5);
        assert!(grad_close(6.0, d));
    }

    #[test]
    fn grad_close_floor_handles_exact_zeros() {
        assert!(grad_close(0.0, 3e-11));
        assert!(!grad_close(0.0, 1e-6));
    }

    #[test]
    fn pattern_has_one_entry_per_hidden_unit() {
        let model = init(&[4, 6, 5, 1], 1).unwrap();
        let p = relu_pattern(&model, &[0.1, -0.2, 0.3, -0.4]);
        assert_eq!(p.len(), 11);
    }
}
