//! Runs a fusion method over a labeled dataset and accumulates metrics.
//!
//! Three methods are supported: the blended-coupling fusion at a given rho,
//! independence-assuming fusion (rho = 0), and a Dempster-Shafer baseline.
//! The Dempster baseline builds one mass function per feature report: each
//! class's singleton receives the likelihood of the report under that
//! class, modeled as uniform over the product-space atoms satisfying the
//! class formula; whatever evidence is left (or, when the likelihoods sum
//! past one, nothing after rescaling) goes to the full frame. The
//! per-feature masses are pooled with Dempster's rule and read out through
//! the pignistic transform. This is a comparison scaffold, not a
//! reconstruction of any particular published Dempster-Shafer setup.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use evfuse::baselines::{dempster_combine, independent_fuse, pignistic, MassFunction};
use evfuse::defs::ResolvedDefinitions;
use evfuse::fusion::{classify, fuse, EvaluationMode, FusionConfig, RhoMode, COMPLEMENT_CLASS};
use evfuse::model::{normalize_report, EventSpace, ProbReport, ResolvedFormula};

use crate::error::CliError;
use crate::metrics::MetricsReport;

#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Proposed(RhoMode),
    Independent,
    Dempster,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Proposed(_) => "proposed",
            Method::Independent => "independent",
            Method::Dempster => "dempster",
        }
    }
}

/// Normalizes one sample's raw vectors into reports, in definition order.
pub fn sample_reports(
    spaces: &[Arc<EventSpace>],
    sample: &BTreeMap<String, Vec<f64>>,
) -> Result<Vec<ProbReport>, CliError> {
    spaces
        .iter()
        .map(|space| {
            let raw = sample.get(&space.feature_id).ok_or_else(|| {
                CliError::Data(format!("sample lacks feature `{}`", space.feature_id))
            })?;
            normalize_report(raw, space).map_err(CliError::from)
        })
        .collect()
}

/// Class labels a method reports over: the declared objects plus the
/// complement class.
pub fn class_labels(defs: &ResolvedDefinitions) -> Vec<String> {
    let mut labels: Vec<String> = defs.objects.iter().map(|(l, _)| l.clone()).collect();
    labels.push(COMPLEMENT_CLASS.to_string());
    labels
}

/// Per-sample class probabilities for one method.
pub fn sample_class_probs(
    defs: &ResolvedDefinitions,
    reports: &[ProbReport],
    method: &Method,
    evidence_cache: &mut EvidenceCache,
) -> Result<Vec<f64>, CliError> {
    match method {
        Method::Proposed(rho_mode) => {
            let config = FusionConfig::new(
                rho_mode.clone(),
                EvaluationMode::GlobalJoint,
                defs.objects.iter().map(|(l, _)| l.clone()).collect(),
            )?;
            let fused = fuse(reports, &defs.objects, &config)?;
            Ok(fused.class_probs().to_vec())
        }
        Method::Independent => {
            let fused = independent_fuse(reports, &defs.objects)?;
            Ok(fused.class_probs().to_vec())
        }
        Method::Dempster => dempster_class_probs(defs, reports, evidence_cache),
    }
}

/// Evaluates one method over a whole dataset.
pub fn evaluate(
    defs: &ResolvedDefinitions,
    samples: &[BTreeMap<String, Vec<f64>>],
    labels: &[String],
    method: &Method,
) -> Result<MetricsReport, CliError> {
    if samples.len() != labels.len() {
        return Err(CliError::Data(format!(
            "{} samples but {} labels",
            samples.len(),
            labels.len()
        )));
    }
    if samples.is_empty() {
        return Err(CliError::Data("dataset is empty".into()));
    }
    let classes = class_labels(defs);
    let class_index: HashMap<&str, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let truth: Vec<usize> = labels
        .iter()
        .map(|l| {
            class_index.get(l.as_str()).copied().ok_or_else(|| {
                CliError::Data(format!(
                    "label `{l}` is not a declared object class or `{COMPLEMENT_CLASS}`"
                ))
            })
        })
        .collect::<Result<_, _>>()?;

    let mut evidence_cache = EvidenceCache::default();
    let mut all_probs = Vec::with_capacity(samples.len());
    let mut predicted = Vec::with_capacity(samples.len());
    for sample in samples {
        let reports = sample_reports(&defs.spaces, sample)?;
        let probs = sample_class_probs(defs, &reports, method, &mut evidence_cache)?;
        let fused = evfuse::model::FusedReport::new(classes.clone(), probs.clone())
            .map_err(CliError::from)?;
        let label = classify(&fused);
        predicted.push(class_index[label]);
        all_probs.push(probs);
    }
    Ok(MetricsReport::from_predictions(
        classes, &all_probs, &predicted, &truth,
    ))
}

// ---------------------------------------------------------------------------
// Dempster-Shafer scaffold
// ---------------------------------------------------------------------------

/// Per-class atom statistics for one joint shape:
/// `counts[class][axis][atom]` is the number of product-space atoms
/// satisfying the class formula whose coordinate on `axis` is `atom`, and
/// `totals[class]` the size of the whole satisfying region.
struct ClassRegions {
    counts: Vec<Vec<Vec<f64>>>,
    totals: Vec<f64>,
}

#[derive(Default)]
pub struct EvidenceCache {
    by_dims: HashMap<Vec<usize>, ClassRegions>,
}

fn class_regions(formulas: &[ResolvedFormula], dims: &[usize]) -> ClassRegions {
    let mut counts: Vec<Vec<Vec<f64>>> = formulas
        .iter()
        .map(|_| dims.iter().map(|&d| vec![0.0; d]).collect())
        .collect();
    let mut totals = vec![0.0; formulas.len()];
    // one sweep over the product space; it is capped at MAX_TABLE_CELLS
    let mut idx = vec![0usize; dims.len()];
    loop {
        for (fi, formula) in formulas.iter().enumerate() {
            if formula.satisfied_by(&idx) {
                totals[fi] += 1.0;
                for (axis, &x) in idx.iter().enumerate() {
                    counts[fi][axis][x] += 1.0;
                }
            }
        }
        let mut carry = true;
        for a in (0..dims.len()).rev() {
            idx[a] += 1;
            if idx[a] < dims[a] {
                carry = false;
                break;
            }
            idx[a] = 0;
        }
        if carry {
            break;
        }
    }
    ClassRegions { counts, totals }
}

fn dempster_class_probs(
    defs: &ResolvedDefinitions,
    reports: &[ProbReport],
    cache: &mut EvidenceCache,
) -> Result<Vec<f64>, CliError> {
    let dims: Vec<usize> = reports.iter().map(|r| r.probs().len()).collect();
    let frame: Vec<String> = class_labels(defs);
    let regions = cache.by_dims.entry(dims.clone()).or_insert_with(|| {
        let mut formulas: Vec<ResolvedFormula> =
            defs.objects.iter().map(|(_, f)| f.clone()).collect();
        // the complement class is everything no object covers
        formulas.push(ResolvedFormula::Not(Box::new(ResolvedFormula::Or(
            defs.objects.iter().map(|(_, f)| f.clone()).collect(),
        ))));
        class_regions(&formulas, &dims)
    });

    let full_frame: u32 = (1u32 << frame.len()) - 1;
    let mut combined: Option<MassFunction> = None;
    for (axis, report) in reports.iter().enumerate() {
        // likelihood of the report under each class's region model
        let mut evidence = vec![0.0; frame.len()];
        for (class, ev) in evidence.iter_mut().enumerate() {
            if regions.totals[class] == 0.0 {
                continue; // logically impossible class
            }
            for (atom, &p) in report.probs().iter().enumerate() {
                *ev += p * regions.counts[class][axis][atom] / regions.totals[class];
            }
        }
        let total: f64 = evidence.iter().sum();
        let mut masses: BTreeMap<u32, f64> = BTreeMap::new();
        if total > 1.0 {
            for (class, &e) in evidence.iter().enumerate() {
                if e > 0.0 {
                    masses.insert(1 << class, e / total);
                }
            }
        } else {
            for (class, &e) in evidence.iter().enumerate() {
                if e > 0.0 {
                    masses.insert(1 << class, e);
                }
            }
            if 1.0 - total > 0.0 {
                masses.insert(full_frame, 1.0 - total);
            }
        }
        let mass = MassFunction::new(frame.clone(), masses).map_err(CliError::from)?;
        combined = Some(match combined {
            None => mass,
            Some(acc) => dempster_combine(&acc, &mass).map_err(CliError::from)?,
        });
    }
    let combined = combined.ok_or_else(|| CliError::Data("no reports to fuse".into()))?;
    Ok(pignistic(&combined))
}
