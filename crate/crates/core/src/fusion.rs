//! Fusion engine: assembles the blended joint distribution over the full
//! product space for one sample and reads object-class probabilities off it.
//!
//! Every class probability is a sum of cells of one shared joint table, so
//! inclusion-exclusion, complements and monotonicity hold exactly across
//! classes. The paper-literal pairwise rules for two-event combinations are
//! kept as a separate evaluation mode.

use crate::coupling::{blend_couplings, max_mi_coupling, min_mi_coupling, RhoMethod};
use crate::error::{Error, Result};
use crate::model::{
    CouplingTable, FusedReport, ProbReport, ResolvedFormula, PROB_TOL,
};

/// Label of the implicit "none of the objects" class, always appended last.
pub const COMPLEMENT_CLASS: &str = "none";

/// Where the blend weight comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum RhoMode {
    Fixed(f64),
    /// A value estimated upstream from training data, kept with its method
    /// for provenance.
    Estimated { method: RhoMethod, value: f64 },
}

impl RhoMode {
    pub fn value(&self) -> f64 {
        match self {
            RhoMode::Fixed(v) => *v,
            RhoMode::Estimated { value, .. } => *value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvaluationMode {
    /// One joint over all reports; formulas are sums of its cells.
    GlobalJoint,
    /// Paper-literal mode: each object must be a single `and`/`or` of two
    /// events, evaluated on its own 2-axis coupling.
    Pairwise,
}

/// Per-run fusion settings.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionConfig {
    pub rho_mode: RhoMode,
    pub evaluation_mode: EvaluationMode,
    /// Output order of the object classes; the complement class follows.
    pub class_order: Vec<String>,
}

impl FusionConfig {
    pub fn new(
        rho_mode: RhoMode,
        evaluation_mode: EvaluationMode,
        class_order: Vec<String>,
    ) -> Result<Self> {
        let rho = rho_mode.value();
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::RhoOutOfRange(rho));
        }
        if class_order.is_empty() {
            return Err(Error::InvalidConfig("class order is empty".into()));
        }
        for (i, label) in class_order.iter().enumerate() {
            if class_order[..i].contains(label) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate class label `{label}`"
                )));
            }
            if label == COMPLEMENT_CLASS {
                return Err(Error::InvalidConfig(format!(
                    "`{COMPLEMENT_CLASS}` is reserved for the complement class"
                )));
            }
        }
        Ok(FusionConfig {
            rho_mode,
            evaluation_mode,
            class_order,
        })
    }
}

/// Builds the blended joint over all reports' event spaces. A single report
/// is returned as a 1-axis table; otherwise the maximum- and minimum-MI
/// couplings of the marginals are blended with weight `rho`.
pub fn build_global_joint(reports: &[ProbReport], rho: f64) -> Result<CouplingTable> {
    if reports.is_empty() {
        return Err(Error::NotEnoughInput("no reports to fuse".into()));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::RhoOutOfRange(rho));
    }
    if reports.len() == 1 {
        return CouplingTable::from_vector(reports[0].probs());
    }
    let marginals: Vec<&[f64]> = reports.iter().map(|r| r.probs()).collect();
    let t_max = max_mi_coupling(&marginals)?;
    let t_min = min_mi_coupling(&marginals)?;
    blend_couplings(&t_max, &t_min, rho)
}

/// Probability that the joint satisfies the formula: the sum of the cells
/// whose atom tuple makes it true.
pub fn eval_formula_on_joint(joint: &CouplingTable, formula: &ResolvedFormula) -> Result<f64> {
    formula.check_dims(joint.dims())?;
    let mut total = 0.0;
    joint.for_each_cell(|idx, p| {
        if p > 0.0 && formula.satisfied_by(idx) {
            total += p;
        }
    });
    Ok(total)
}

/// Connective for the paper-literal pairwise rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connective {
    And,
    Or,
}

/// Pairwise combination of one event from each of two reports: `and` is the
/// blended joint cell, `or` is the inclusion-exclusion complement
/// `P(alpha) + P(beta) - P(alpha, beta)`.
pub fn eval_pairwise(
    alpha: &str,
    beta: &str,
    connective: Connective,
    report_a: &ProbReport,
    report_b: &ProbReport,
    rho: f64,
) -> Result<f64> {
    let ia = report_a
        .space()
        .index_of(alpha)
        .ok_or_else(|| Error::UnresolvedAtom(format!("`{alpha}` not in first report")))?;
    let ib = report_b
        .space()
        .index_of(beta)
        .ok_or_else(|| Error::UnresolvedAtom(format!("`{beta}` not in second report")))?;
    let joint = build_global_joint(&[report_a.clone(), report_b.clone()], rho)?;
    let p_joint = joint.cell(&[ia, ib]);
    Ok(match connective {
        Connective::And => p_joint,
        Connective::Or => report_a.probs()[ia] + report_b.probs()[ib] - p_joint,
    })
}

/// Combines two reports over the same event labels into one by weighted
/// averaging; weights are normalized to sum to one first.
pub fn merge_duplicate_feature(
    report_a: &ProbReport,
    report_b: &ProbReport,
    weights: (f64, f64),
) -> Result<ProbReport> {
    let (wa, wb) = weights;
    if wa < 0.0 || wb < 0.0 {
        return Err(Error::InvalidWeights(format!(
            "weights must be nonnegative, got ({wa}, {wb})"
        )));
    }
    let total = wa + wb;
    if total <= 0.0 {
        return Err(Error::InvalidWeights("both weights are zero".into()));
    }
    let sa = report_a.space();
    let sb = report_b.space();
    if sa.len() != sb.len()
        || sa
            .events()
            .iter()
            .zip(sb.events())
            .any(|(a, b)| a.label != b.label)
    {
        return Err(Error::LabelMismatch(format!(
            "spaces for `{}` and `{}` declare different events",
            sa.feature_id, sb.feature_id
        )));
    }
    let (wa, wb) = (wa / total, wb / total);
    let probs: Vec<f64> = report_a
        .probs()
        .iter()
        .zip(report_b.probs())
        .map(|(&a, &b)| wa * a + wb * b)
        .collect();
    ProbReport::new(sa.clone(), probs)
}

/// Fuses one sample's reports into class probabilities over the objects
/// plus the complement class.
///
/// The global joint is built once; each object probability is the mass of
/// its formula and the complement class receives `1 - P(o_1 or ... or o_I)`.
/// Object formulas must be mutually exclusive (as class definitions are) or
/// the class vector cannot form a distribution and an error is raised.
pub fn fuse(
    reports: &[ProbReport],
    objects: &[(String, ResolvedFormula)],
    config: &FusionConfig,
) -> Result<FusedReport> {
    if objects.is_empty() {
        return Err(Error::NotEnoughInput("no object formulas".into()));
    }
    for label in &config.class_order {
        if !objects.iter().any(|(l, _)| l == label) {
            return Err(Error::InvalidConfig(format!(
                "class order names unknown object `{label}`"
            )));
        }
    }
    if config.class_order.len() != objects.len() {
        return Err(Error::InvalidConfig(format!(
            "class order lists {} labels for {} objects",
            config.class_order.len(),
            objects.len()
        )));
    }
    match config.evaluation_mode {
        EvaluationMode::GlobalJoint => fuse_global(reports, objects, config),
        EvaluationMode::Pairwise => fuse_pairwise(reports, objects, config),
    }
}

fn fuse_global(
    reports: &[ProbReport],
    objects: &[(String, ResolvedFormula)],
    config: &FusionConfig,
) -> Result<FusedReport> {
    let rho = config.rho_mode.value();
    let joint = build_global_joint(reports, rho)?;
    let mut probs = Vec::with_capacity(config.class_order.len() + 1);
    for label in &config.class_order {
        let formula = &objects.iter().find(|(l, _)| l == label).unwrap().1;
        probs.push(eval_formula_on_joint(&joint, formula)?);
    }
    let union = ResolvedFormula::Or(objects.iter().map(|(_, f)| f.clone()).collect());
    let p_union = eval_formula_on_joint(&joint, &union)?;
    finish_classes(probs, p_union, config)
}

fn fuse_pairwise(
    reports: &[ProbReport],
    objects: &[(String, ResolvedFormula)],
    config: &FusionConfig,
) -> Result<FusedReport> {
    let rho = config.rho_mode.value();
    let mut probs = Vec::with_capacity(config.class_order.len() + 1);
    for label in &config.class_order {
        let formula = &objects.iter().find(|(l, _)| l == label).unwrap().1;
        let (conn, a, b) = match formula {
            ResolvedFormula::And(items) if items.len() == 2 => {
                (Connective::And, &items[0], &items[1])
            }
            ResolvedFormula::Or(items) if items.len() == 2 => {
                (Connective::Or, &items[0], &items[1])
            }
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "pairwise mode needs `{label}` to be a two-event and/or combination"
                )))
            }
        };
        let (ResolvedFormula::Atom { axis: ax, index: ia },
             ResolvedFormula::Atom { axis: bx, index: ib }) = (a, b)
        else {
            return Err(Error::InvalidConfig(format!(
                "pairwise mode needs `{label}` to combine two plain events"
            )));
        };
        if *ax == *bx {
            return Err(Error::InvalidConfig(format!(
                "pairwise mode needs `{label}` to span two different reports"
            )));
        }
        let ra = reports.get(*ax).ok_or(Error::AxisOutOfRange {
            axis: *ax,
            rank: reports.len(),
        })?;
        let rb = reports.get(*bx).ok_or(Error::AxisOutOfRange {
            axis: *bx,
            rank: reports.len(),
        })?;
        let alpha = &ra.space().events()[*ia].label;
        let beta = &rb.space().events()[*ib].label;
        probs.push(eval_pairwise(alpha, beta, conn, ra, rb, rho)?);
    }
    // Without a shared joint the union is not observable; for mutually
    // exclusive classes it equals the plain sum.
    let p_union: f64 = probs.iter().sum();
    finish_classes(probs, p_union, config)
}

fn finish_classes(
    mut probs: Vec<f64>,
    p_union: f64,
    config: &FusionConfig,
) -> Result<FusedReport> {
    let sum: f64 = probs.iter().sum();
    if sum - p_union > PROB_TOL {
        return Err(Error::OverlappingObjects(sum - p_union));
    }
    let complement = (1.0 - p_union).max(0.0);
    probs.push(complement);
    // absorb rounding dust so the class vector sums to exactly one
    let total: f64 = probs.iter().sum();
    let last = probs.len() - 1;
    probs[last] = (probs[last] + (1.0 - total)).max(0.0);
    let mut labels = config.class_order.clone();
    labels.push(COMPLEMENT_CLASS.to_string());
    FusedReport::new(labels, probs)
}

/// Argmax class of a fused report; ties go to the earlier class.
pub fn classify(report: &FusedReport) -> &str {
    let probs = report.class_probs();
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = i;
        }
    }
    &report.class_labels()[best]
}
