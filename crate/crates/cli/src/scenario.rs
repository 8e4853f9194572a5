//! Synthetic scenario generation: correlated latent feature values per
//! class, turned into soft per-event probability reports.
//!
//! Each sample draws a class by prior, then a latent feature vector from a
//! correlated multivariate normal (a Gaussian copula supplies the
//! cross-feature correlation; per-class mean and spread set the marginals).
//! Feature values become event probabilities through logistic soft
//! thresholds around the event boundaries, leaving the leaked tail mass to
//! the complement atom. Everything is driven by one seeded generator, so a
//! config reproduces its dataset bit for bit.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use evfuse::model::EventSpace;

use crate::error::CliError;
use crate::io::{EventDecl, SpaceDecl};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatentSpec {
    pub mean: f64,
    pub spread: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassSpec {
    pub label: String,
    pub prior: f64,
    /// Latent mean/spread per feature id; every feature must appear.
    pub latents: BTreeMap<String, LatentSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub feature_id: String,
    pub sensor_id: String,
    /// Scale of the logistic soft threshold at the event boundaries, in
    /// feature units.
    pub softness: f64,
    pub events: Vec<EventDecl>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub n_samples: usize,
    pub classes: Vec<ClassSpec>,
    pub features: Vec<FeatureSpec>,
    /// Pairwise latent correlation over the features, in `features` order.
    pub correlation: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct GeneratedDataset {
    pub spaces: Vec<Arc<EventSpace>>,
    /// Raw per-feature event probabilities, one map per sample.
    pub samples: Vec<BTreeMap<String, Vec<f64>>>,
    pub labels: Vec<String>,
    /// Latent feature values per sample, in `features` order.
    pub latents: Vec<Vec<f64>>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Data(format!("bad scenario config: {e}")))
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.n_samples == 0 {
            return Err(CliError::Data("n_samples must be at least 1".into()));
        }
        if self.classes.is_empty() || self.features.is_empty() {
            return Err(CliError::Data(
                "scenario needs at least one class and one feature".into(),
            ));
        }
        let prior_sum: f64 = self.classes.iter().map(|c| c.prior).sum();
        if (prior_sum - 1.0).abs() > 1e-9 {
            return Err(CliError::Data(format!(
                "class priors sum to {prior_sum}, expected 1"
            )));
        }
        for c in &self.classes {
            if c.prior < 0.0 {
                return Err(CliError::Data(format!(
                    "class `{}` has a negative prior",
                    c.label
                )));
            }
            for f in &self.features {
                let spec = c.latents.get(&f.feature_id).ok_or_else(|| {
                    CliError::Data(format!(
                        "class `{}` declares no latent for feature `{}`",
                        c.label, f.feature_id
                    ))
                })?;
                if spec.spread <= 0.0 {
                    return Err(CliError::Data(format!(
                        "class `{}` feature `{}`: spread must be positive",
                        c.label, f.feature_id
                    )));
                }
            }
        }
        for f in &self.features {
            if f.softness <= 0.0 {
                return Err(CliError::Data(format!(
                    "feature `{}`: softness must be positive",
                    f.feature_id
                )));
            }
            if f.events.is_empty() {
                return Err(CliError::Data(format!(
                    "feature `{}` declares no events",
                    f.feature_id
                )));
            }
        }
        let n = self.features.len();
        if self.correlation.len() != n || self.correlation.iter().any(|r| r.len() != n) {
            return Err(CliError::Data(format!(
                "correlation matrix must be {n}x{n}"
            )));
        }
        for i in 0..n {
            if (self.correlation[i][i] - 1.0).abs() > 1e-9 {
                return Err(CliError::Data("correlation diagonal must be 1".into()));
            }
            for j in 0..n {
                if (self.correlation[i][j] - self.correlation[j][i]).abs() > 1e-9 {
                    return Err(CliError::Data("correlation matrix must be symmetric".into()));
                }
            }
        }
        Ok(())
    }
}

/// Lower-triangular Cholesky factor, tolerating semidefinite pivots.
fn cholesky(m: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, CliError> {
    let n = m.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[i][j];
            for (lik, ljk) in l[i][..j].iter().zip(&l[j][..j]) {
                s -= lik * ljk;
            }
            if i == j {
                if s < -1e-9 {
                    return Err(CliError::Data(
                        "correlation matrix is not positive semidefinite".into(),
                    ));
                }
                l[i][j] = s.max(0.0).sqrt();
            } else if l[j][j] > 1e-12 {
                l[i][j] = s / l[j][j];
            } else if s.abs() > 1e-9 {
                return Err(CliError::Data(
                    "correlation matrix is not positive semidefinite".into(),
                ));
            }
        }
    }
    Ok(l)
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Soft event probability for a feature value: the logistic mass between
/// the event's boundaries.
fn soft_event_prob(x: f64, decl: &EventDecl, softness: f64) -> f64 {
    match decl.range {
        Some((lo, Some(hi))) => sigmoid((x - lo) / softness) - sigmoid((x - hi) / softness),
        Some((lo, None)) => sigmoid((x - lo) / softness),
        None => 0.0,
    }
}

pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<GeneratedDataset, CliError> {
    cfg.validate()?;
    let chol = cholesky(&cfg.correlation)?;
    let spaces: Vec<Arc<EventSpace>> = cfg
        .features
        .iter()
        .map(|f| {
            SpaceDecl {
                feature_id: f.feature_id.clone(),
                sensor_id: f.sensor_id.clone(),
                events: f.events.clone(),
            }
            .to_space()
            .map(Arc::new)
        })
        .collect::<Result<_, _>>()?;

    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let n_features = cfg.features.len();
    let mut samples = Vec::with_capacity(cfg.n_samples);
    let mut labels = Vec::with_capacity(cfg.n_samples);
    let mut latents = Vec::with_capacity(cfg.n_samples);

    for _ in 0..cfg.n_samples {
        // class by prior
        let u: f64 = rng.random();
        let mut cumulative = 0.0;
        let mut class = &cfg.classes[cfg.classes.len() - 1];
        for c in &cfg.classes {
            cumulative += c.prior;
            if u < cumulative {
                class = c;
                break;
            }
        }
        // correlated standard normals
        let g: Vec<f64> = (0..n_features)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let mut z = vec![0.0; n_features];
        for (i, zi) in z.iter_mut().enumerate() {
            for (k, gk) in g.iter().enumerate().take(i + 1) {
                *zi += chol[i][k] * gk;
            }
        }
        // latent feature values and soft event probabilities
        let mut row = BTreeMap::new();
        let mut latent_row = Vec::with_capacity(n_features);
        for (fi, feature) in cfg.features.iter().enumerate() {
            let spec = &class.latents[&feature.feature_id];
            let x = spec.mean + spec.spread * z[fi];
            latent_row.push(x);
            let mut probs: Vec<f64> = feature
                .events
                .iter()
                .map(|e| soft_event_prob(x, e, feature.softness))
                .collect();
            let sum: f64 = probs.iter().sum();
            if sum > 1.0 {
                // only possible with overlapping event ranges
                for p in &mut probs {
                    *p /= sum;
                }
            }
            row.insert(feature.feature_id.clone(), probs);
        }
        samples.push(row);
        labels.push(class.label.clone());
        latents.push(latent_row);
    }

    Ok(GeneratedDataset {
        spaces,
        samples,
        labels,
        latents,
    })
}
