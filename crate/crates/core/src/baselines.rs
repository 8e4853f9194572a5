//! Reference fusion methods the coupled approach is compared against:
//! Dempster-Shafer combination over a frame of class labels, and
//! independence-assuming fusion (the rho = 0 endpoint).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fusion::{fuse, EvaluationMode, FusionConfig, RhoMode};
use crate::model::{FusedReport, ProbReport, ResolvedFormula, PROB_TOL};

/// A basic belief assignment over subsets of a frame of class labels.
/// Subsets are encoded as bitmasks over the frame order; the map holds only
/// focal elements (subsets with positive mass).
#[derive(Debug, Clone, PartialEq)]
pub struct MassFunction {
    frame: Vec<String>,
    masses: BTreeMap<u32, f64>,
}

impl MassFunction {
    pub fn new(frame: Vec<String>, masses: BTreeMap<u32, f64>) -> Result<Self> {
        if frame.is_empty() || frame.len() > 31 {
            return Err(Error::InvalidMassFunction(format!(
                "frame must hold 1..=31 labels, got {}",
                frame.len()
            )));
        }
        let full: u32 = (1u32 << frame.len()) - 1;
        let mut sum = 0.0;
        for (&subset, &mass) in &masses {
            if subset == 0 && mass != 0.0 {
                return Err(Error::InvalidMassFunction(
                    "the empty set cannot carry mass".into(),
                ));
            }
            if subset > full {
                return Err(Error::InvalidMassFunction(format!(
                    "subset {subset:#b} outside the frame"
                )));
            }
            if !(0.0..=1.0 + PROB_TOL).contains(&mass) {
                return Err(Error::InvalidMassFunction(format!(
                    "mass {mass} outside [0, 1]"
                )));
            }
            sum += mass;
        }
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidMassFunction(format!(
                "masses sum to {sum}, expected 1"
            )));
        }
        Ok(MassFunction { frame, masses })
    }

    /// Total ignorance: all mass on the full frame.
    pub fn vacuous(frame: Vec<String>) -> Result<Self> {
        let full = (1u32 << frame.len()) - 1;
        MassFunction::new(frame, BTreeMap::from([(full, 1.0)]))
    }

    pub fn frame(&self) -> &[String] {
        &self.frame
    }

    pub fn mass(&self, subset: u32) -> f64 {
        self.masses.get(&subset).copied().unwrap_or(0.0)
    }

    pub fn focal_elements(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.masses.iter().map(|(&s, &m)| (s, m))
    }
}

/// Dempster's rule: conjunctive pooling of two belief assignments over the
/// same frame, renormalized by the non-conflicting mass `1 - K`.
pub fn dempster_combine(m1: &MassFunction, m2: &MassFunction) -> Result<MassFunction> {
    if m1.frame != m2.frame {
        return Err(Error::InvalidMassFunction(
            "mass functions live on different frames".into(),
        ));
    }
    let mut combined: BTreeMap<u32, f64> = BTreeMap::new();
    let mut conflict = 0.0;
    for (a, ma) in m1.focal_elements() {
        for (b, mb) in m2.focal_elements() {
            let c = a & b;
            let w = ma * mb;
            if c == 0 {
                conflict += w;
            } else {
                *combined.entry(c).or_insert(0.0) += w;
            }
        }
    }
    let scale = 1.0 - conflict;
    if scale < 1e-12 {
        return Err(Error::TotalConflict);
    }
    for mass in combined.values_mut() {
        *mass /= scale;
    }
    MassFunction::new(m1.frame.clone(), combined)
}

/// Pignistic transform: each focal element's mass is split evenly among its
/// members, yielding a probability vector over the frame order.
pub fn pignistic(m: &MassFunction) -> Vec<f64> {
    let n = m.frame.len();
    let mut probs = vec![0.0; n];
    for (subset, mass) in m.focal_elements() {
        let size = subset.count_ones() as f64;
        for (i, p) in probs.iter_mut().enumerate() {
            if subset & (1 << i) != 0 {
                *p += mass / size;
            }
        }
    }
    probs
}

/// Fusion under the independence assumption: the rho = 0 endpoint of the
/// blended coupling, with classes ordered as the objects are listed.
pub fn independent_fuse(
    reports: &[ProbReport],
    objects: &[(String, ResolvedFormula)],
) -> Result<FusedReport> {
    let config = FusionConfig::new(
        RhoMode::Fixed(0.0),
        EvaluationMode::GlobalJoint,
        objects.iter().map(|(l, _)| l.clone()).collect(),
    )?;
    fuse(reports, objects, &config)
}
