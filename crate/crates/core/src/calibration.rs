//! Score calibration: Platt's sigmoid fit from classifier scores to event
//! probabilities, and 2-sigma event-range derivation from labeled samples.

use crate::error::{Error, Result};
use crate::model::Interval;

/// Fitted sigmoid `p(s) = 1 / (1 + exp(a*s + b))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlattModel {
    pub a: f64,
    pub b: f64,
}

const MAX_ITER: usize = 200;
const GRAD_TOL: f64 = 1e-8;
const MIN_STEP: f64 = 1e-10;

/// Fits the sigmoid by maximizing the log-likelihood against the smoothed
/// targets `t+ = (N+ + 1) / (N+ + 2)` and `t- = 1 / (N- + 2)`, which keep
/// the optimum finite even on separable data. Damped Newton iterations with
/// step halving run until the gradient norm drops below 1e-8.
pub fn platt_fit(scores: &[f64], labels: &[bool]) -> Result<PlattModel> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    if scores.len() < 2 {
        return Err(Error::NotEnoughInput(
            "calibration needs at least 2 samples".into(),
        ));
    }
    for &s in scores {
        if !s.is_finite() {
            return Err(Error::NonFiniteInput(s));
        }
    }
    let n_pos = labels.iter().filter(|&&l| l).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return Err(Error::SingleClassLabels);
    }
    let t_pos = (n_pos + 1.0) / (n_pos + 2.0);
    let t_neg = 1.0 / (n_neg + 2.0);
    let targets: Vec<f64> = labels
        .iter()
        .map(|&l| if l { t_pos } else { t_neg })
        .collect();

    let mut a = 0.0;
    let mut b = ((n_neg + 1.0) / (n_pos + 1.0)).ln();
    let mut fval = neg_log_likelihood(scores, &targets, a, b);

    for _ in 0..MAX_ITER {
        // gradient and Hessian of the negative log-likelihood
        let (mut h11, mut h22) = (1e-12, 1e-12);
        let (mut h21, mut g1, mut g2) = (0.0, 0.0, 0.0);
        for (&s, &t) in scores.iter().zip(&targets) {
            let f = a * s + b;
            let (p, q) = if f >= 0.0 {
                let e = (-f).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = f.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += s * s * d2;
            h22 += d2;
            h21 += s * d2;
            let d1 = t - p;
            g1 += s * d1;
            g2 += d1;
        }
        if (g1 * g1 + g2 * g2).sqrt() < GRAD_TOL {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;

        let mut step = 1.0;
        while step >= MIN_STEP {
            let na = a + step * da;
            let nb = b + step * db;
            let nf = neg_log_likelihood(scores, &targets, na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < MIN_STEP {
            break; // line search exhausted; current point is the answer
        }
    }
    Ok(PlattModel { a, b })
}

fn neg_log_likelihood(scores: &[f64], targets: &[f64], a: f64, b: f64) -> f64 {
    scores
        .iter()
        .zip(targets)
        .map(|(&s, &t)| {
            let f = a * s + b;
            if f >= 0.0 {
                t * f + (1.0 + (-f).exp()).ln()
            } else {
                (t - 1.0) * f + (1.0 + f.exp()).ln()
            }
        })
        .sum()
}

/// Log-likelihood of a model under the same smoothed targets used by
/// [`platt_fit`]; exposed so fits can be compared against independent
/// optimizers.
pub fn platt_log_likelihood(scores: &[f64], labels: &[bool], model: &PlattModel) -> f64 {
    let n_pos = labels.iter().filter(|&&l| l).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    let t_pos = (n_pos + 1.0) / (n_pos + 2.0);
    let t_neg = 1.0 / (n_neg + 2.0);
    let targets: Vec<f64> = labels
        .iter()
        .map(|&l| if l { t_pos } else { t_neg })
        .collect();
    -neg_log_likelihood(scores, &targets, model.a, model.b)
}

/// Applies the fitted sigmoid, clamped away from exact 0 and 1.
pub fn platt_apply(score: f64, model: &PlattModel) -> f64 {
    let f = model.a * score + model.b;
    let p = if f >= 0.0 {
        let e = (-f).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + f.exp())
    };
    p.clamp(1e-12, 1.0 - 1e-12)
}

/// Event range from labeled samples: two sample standard deviations either
/// side of the mean. `clamp_at_zero` floors the lower bound at 0 for
/// nonnegative features; zero-variance samples are widened by a relative
/// epsilon so the interval stays non-empty.
pub fn derive_event_range(samples: &[f64], clamp_at_zero: bool) -> Result<Interval> {
    if samples.len() < 2 {
        return Err(Error::NotEnoughInput(
            "range derivation needs at least 2 samples".into(),
        ));
    }
    for &s in samples {
        if !s.is_finite() {
            return Err(Error::NonFiniteInput(s));
        }
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    let (mut lo, mut hi) = (mean - 2.0 * sd, mean + 2.0 * sd);
    if sd == 0.0 {
        let eps = 1e-6 * mean.abs().max(1.0);
        lo = mean - eps;
        hi = mean + eps;
    }
    if clamp_at_zero {
        lo = lo.max(0.0);
    }
    Interval::new(lo, hi)
}
