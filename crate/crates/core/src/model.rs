//! Probability-space data model: event spaces, per-feature probability
//! reports, joint tables over product spaces, object formulas and fused
//! class reports, plus the entropy / mutual-information primitives.
//!
//! All types are immutable values after construction and all operations are
//! pure functions, so everything here is safe to share across threads.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Tolerance for probability-sum and marginal checks.
pub const PROB_TOL: f64 = 1e-9;

/// Upper bound on joint-table cell counts.
pub const MAX_TABLE_CELLS: usize = 1_000_000;

/// Label used for the synthetic complement atom appended by
/// [`normalize_report`]. The leading `~` keeps it out of the identifier
/// space of the definition language, so it can never collide with a
/// declared event.
pub const COMPLEMENT_ATOM: &str = "~other";

/// Half-open numeric interval `[lo, hi)`; `hi` may be `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() {
            return Err(Error::NonFiniteInput(lo));
        }
        if hi <= lo {
            return Err(Error::InvalidDistribution(format!(
                "empty interval [{lo}, {hi})"
            )));
        }
        Ok(Interval { lo, hi })
    }

    /// Whether two intervals share any point.
    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo < other.hi && other.lo < self.hi
    }
}

/// One atom of an event space: a label plus an optional numeric range.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub label: String,
    pub range: Option<Interval>,
}

/// The finite set of mutually exclusive events one sensor reports for one
/// feature. Ranges are descriptive metadata; probabilities attach to the
/// atoms themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSpace {
    pub feature_id: String,
    pub sensor_id: String,
    events: Vec<Event>,
    has_complement: bool,
}

impl EventSpace {
    pub fn new(
        feature_id: impl Into<String>,
        sensor_id: impl Into<String>,
        events: Vec<Event>,
    ) -> Result<Self> {
        if events.is_empty() {
            return Err(Error::InvalidDistribution(
                "event space needs at least one event".into(),
            ));
        }
        for (i, e) in events.iter().enumerate() {
            if events[..i].iter().any(|p| p.label == e.label) {
                return Err(Error::LabelMismatch(format!(
                    "duplicate event label `{}`",
                    e.label
                )));
            }
        }
        Ok(EventSpace {
            feature_id: feature_id.into(),
            sensor_id: sensor_id.into(),
            events,
            has_complement: false,
        })
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Number of atoms, complement included when present.
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn has_complement(&self) -> bool {
        self.has_complement
    }

    /// Number of declared (non-complement) events.
    pub fn declared_len(&self) -> usize {
        self.events.len() - usize::from(self.has_complement)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.events.iter().position(|e| e.label == label)
    }

    /// A copy of this space with the synthetic complement atom appended.
    /// Returns a clone of `self` when the complement is already present.
    pub fn with_complement(&self) -> EventSpace {
        if self.has_complement {
            return self.clone();
        }
        let mut events = self.events.clone();
        events.push(Event {
            label: COMPLEMENT_ATOM.to_string(),
            range: None,
        });
        EventSpace {
            feature_id: self.feature_id.clone(),
            sensor_id: self.sensor_id.clone(),
            events,
            has_complement: true,
        }
    }
}

/// A sensor's probability vector over one event space for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbReport {
    space: Arc<EventSpace>,
    probs: Vec<f64>,
}

impl ProbReport {
    /// Wraps a complete probability vector (one entry per atom).
    pub fn new(space: Arc<EventSpace>, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != space.len() {
            return Err(Error::LengthMismatch {
                left: probs.len(),
                right: space.len(),
            });
        }
        validate_prob_vector(&probs)?;
        Ok(ProbReport { space, probs })
    }

    pub fn space(&self) -> &Arc<EventSpace> {
        &self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob_of(&self, label: &str) -> Option<f64> {
        self.space.index_of(label).map(|i| self.probs[i])
    }
}

fn validate_prob_vector(probs: &[f64]) -> Result<()> {
    let mut sum = 0.0;
    for &p in probs {
        if !p.is_finite() {
            return Err(Error::NonFiniteInput(p));
        }
        if p < 0.0 {
            return Err(Error::NegativeMass(p));
        }
        if p > 1.0 + PROB_TOL {
            return Err(Error::InvalidDistribution(format!(
                "probability entry {p} exceeds 1"
            )));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidDistribution(format!(
            "probabilities sum to {sum}, expected 1"
        )));
    }
    Ok(())
}

/// Turns raw per-event probabilities into a complete report over `space`.
///
/// When the entries leave mass unaccounted for, a synthetic complement atom
/// absorbs the remainder and the returned report lives on the augmented
/// space. Sums within [`PROB_TOL`] of one are rescaled to exactly one and
/// keep the space as-is, so normalizing an already normalized report is the
/// identity.
pub fn normalize_report(raw: &[f64], space: &Arc<EventSpace>) -> Result<ProbReport> {
    if raw.len() != space.len() {
        return Err(Error::LengthMismatch {
            left: raw.len(),
            right: space.len(),
        });
    }
    let mut sum = 0.0;
    for &p in raw {
        if !p.is_finite() {
            return Err(Error::NonFiniteInput(p));
        }
        if p < 0.0 {
            return Err(Error::NegativeMass(p));
        }
        if p > 1.0 + PROB_TOL {
            return Err(Error::InvalidDistribution(format!(
                "probability entry {p} exceeds 1"
            )));
        }
        sum += p;
    }
    if sum > 1.0 + PROB_TOL {
        return Err(Error::MassExceedsUnity(sum));
    }
    if (sum - 1.0).abs() <= PROB_TOL {
        // Complete report; clean up rounding dust only.
        if sum == 1.0 {
            return ProbReport::new(Arc::clone(space), raw.to_vec());
        }
        let probs: Vec<f64> = raw.iter().map(|p| p / sum).collect();
        return ProbReport::new(Arc::clone(space), probs);
    }
    // Mass is genuinely missing: route it to the complement atom.
    let mut probs = raw.to_vec();
    let report_space = if space.has_complement() {
        // the input already carries a complement entry; fold the missing
        // mass into it instead of appending a second one
        let last = probs.len() - 1;
        probs[last] += 1.0 - sum;
        Arc::clone(space)
    } else {
        probs.push(1.0 - sum);
        Arc::new(space.with_complement())
    };
    // force the total to exactly one by absorbing dust into the complement
    let total: f64 = probs.iter().sum();
    let last = probs.len() - 1;
    probs[last] = (probs[last] + (1.0 - total)).max(0.0);
    ProbReport::new(report_space, probs)
}

/// An N-dimensional joint probability table over a product of event spaces.
///
/// Cells are stored flat in row-major order; axis `i` has `dims[i]` atoms
/// ordered exactly as in the corresponding event space (complement last).
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTable {
    dims: Vec<usize>,
    cells: Vec<f64>,
}

impl CouplingTable {
    pub fn new(dims: Vec<usize>, cells: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidDistribution(
                "table axes must be non-empty".into(),
            ));
        }
        let expected: usize = dims.iter().product();
        if expected > MAX_TABLE_CELLS {
            return Err(Error::CapacityExceeded {
                cells: expected,
                limit: MAX_TABLE_CELLS,
            });
        }
        if cells.len() != expected {
            return Err(Error::LengthMismatch {
                left: cells.len(),
                right: expected,
            });
        }
        let mut sum = 0.0;
        for &c in &cells {
            if !c.is_finite() {
                return Err(Error::NonFiniteInput(c));
            }
            if c < 0.0 {
                return Err(Error::NegativeMass(c));
            }
            sum += c;
        }
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidDistribution(format!(
                "table mass is {sum}, expected 1"
            )));
        }
        Ok(CouplingTable { dims, cells })
    }

    /// A 1-axis table holding a single probability vector.
    pub fn from_vector(probs: &[f64]) -> Result<Self> {
        CouplingTable::new(vec![probs.len()], probs.to_vec())
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    /// Cell value at a full multi-index. Panics if the index shape is wrong.
    pub fn cell(&self, idx: &[usize]) -> f64 {
        self.cells[self.offset(idx)]
    }

    fn offset(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.dims.len(), "index rank mismatch");
        let mut off = 0;
        for (i, (&d, &x)) in self.dims.iter().zip(idx).enumerate() {
            assert!(x < d, "index {x} out of range on axis {i}");
            off = off * d + x;
        }
        off
    }

    /// Visits every cell in row-major order with its multi-index.
    pub fn for_each_cell<F: FnMut(&[usize], f64)>(&self, mut f: F) {
        let mut idx = vec![0usize; self.dims.len()];
        for &v in &self.cells {
            f(&idx, v);
            for axis in (0..idx.len()).rev() {
                idx[axis] += 1;
                if idx[axis] < self.dims[axis] {
                    break;
                }
                idx[axis] = 0;
            }
        }
    }
}

/// Shannon entropy of a probability vector, in bits. Zero entries contribute
/// nothing.
pub fn entropy(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.log2())
        .sum()
}

/// Mutual information of a 2-axis table, in bits: the sum of
/// `p(x,y) * log2(p(x,y) / (p(x) p(y)))` over cells with positive mass.
pub fn mutual_information(t: &CouplingTable) -> Result<f64> {
    if t.rank() != 2 {
        return Err(Error::RankMismatch {
            expected: 2,
            found: t.rank(),
        });
    }
    let px = marginalize(t, 0)?;
    let py = marginalize(t, 1)?;
    let mut mi = 0.0;
    t.for_each_cell(|idx, p| {
        if p > 0.0 {
            mi += p * (p / (px[idx[0]] * py[idx[1]])).log2();
        }
    });
    Ok(mi)
}

/// Sums out every axis except `axis`, returning that axis' marginal vector.
pub fn marginalize(t: &CouplingTable, axis: usize) -> Result<Vec<f64>> {
    if axis >= t.rank() {
        return Err(Error::AxisOutOfRange {
            axis,
            rank: t.rank(),
        });
    }
    let mut out = vec![0.0; t.dims()[axis]];
    t.for_each_cell(|idx, p| {
        out[idx[axis]] += p;
    });
    Ok(out)
}

/// Boolean combination of named events defining one object class.
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectFormula {
    Atom(String),
    And(Vec<ObjectFormula>),
    Or(Vec<ObjectFormula>),
    Not(Box<ObjectFormula>),
}

impl ObjectFormula {
    /// Binds every atom label to its (axis, atom-index) position among
    /// `spaces`. A label must match exactly one event in exactly one space.
    pub fn resolve(&self, spaces: &[Arc<EventSpace>]) -> Result<ResolvedFormula> {
        match self {
            ObjectFormula::Atom(label) => {
                let mut hit = None;
                for (axis, space) in spaces.iter().enumerate() {
                    if let Some(index) = space.index_of(label) {
                        if hit.is_some() {
                            return Err(Error::UnresolvedAtom(format!(
                                "`{label}` is ambiguous across event spaces"
                            )));
                        }
                        hit = Some((axis, index));
                    }
                }
                let (axis, index) = hit.ok_or_else(|| {
                    Error::UnresolvedAtom(format!("`{label}` matches no declared event"))
                })?;
                Ok(ResolvedFormula::Atom { axis, index })
            }
            ObjectFormula::And(children) => Ok(ResolvedFormula::And(
                children
                    .iter()
                    .map(|c| c.resolve(spaces))
                    .collect::<Result<_>>()?,
            )),
            ObjectFormula::Or(children) => Ok(ResolvedFormula::Or(
                children
                    .iter()
                    .map(|c| c.resolve(spaces))
                    .collect::<Result<_>>()?,
            )),
            ObjectFormula::Not(child) => Ok(ResolvedFormula::Not(Box::new(
                child.resolve(spaces)?,
            ))),
        }
    }
}

/// An object formula with atoms bound to axis/atom positions of a product
/// space.
#[derive(Debug, Clone, PartialEq)]
pub enum ResolvedFormula {
    Atom { axis: usize, index: usize },
    And(Vec<ResolvedFormula>),
    Or(Vec<ResolvedFormula>),
    Not(Box<ResolvedFormula>),
}

impl ResolvedFormula {
    /// Whether the product-space atom at `idx` satisfies the formula.
    pub fn satisfied_by(&self, idx: &[usize]) -> bool {
        match self {
            ResolvedFormula::Atom { axis, index } => idx[*axis] == *index,
            ResolvedFormula::And(children) => children.iter().all(|c| c.satisfied_by(idx)),
            ResolvedFormula::Or(children) => children.iter().any(|c| c.satisfied_by(idx)),
            ResolvedFormula::Not(child) => !child.satisfied_by(idx),
        }
    }

    /// Largest axis index referenced anywhere in the formula, if any atom
    /// exists.
    pub fn max_axis(&self) -> Option<usize> {
        match self {
            ResolvedFormula::Atom { axis, .. } => Some(*axis),
            ResolvedFormula::And(children) | ResolvedFormula::Or(children) => {
                children.iter().filter_map(|c| c.max_axis()).max()
            }
            ResolvedFormula::Not(child) => child.max_axis(),
        }
    }

    /// Checks every atom fits inside a table of the given dims.
    pub fn check_dims(&self, dims: &[usize]) -> Result<()> {
        match self {
            ResolvedFormula::Atom { axis, index } => {
                if *axis >= dims.len() || *index >= dims[*axis] {
                    Err(Error::UnresolvedAtom(format!(
                        "atom (axis {axis}, index {index}) does not fit table dims {dims:?}"
                    )))
                } else {
                    Ok(())
                }
            }
            ResolvedFormula::And(children) | ResolvedFormula::Or(children) => {
                children.iter().try_for_each(|c| c.check_dims(dims))
            }
            ResolvedFormula::Not(child) => child.check_dims(dims),
        }
    }
}

/// Fused per-sample probabilities over the object classes plus the
/// complement ("none of the objects") class, which is always last.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedReport {
    class_labels: Vec<String>,
    class_probs: Vec<f64>,
}

impl FusedReport {
    pub fn new(class_labels: Vec<String>, class_probs: Vec<f64>) -> Result<Self> {
        if class_labels.len() != class_probs.len() {
            return Err(Error::LengthMismatch {
                left: class_labels.len(),
                right: class_probs.len(),
            });
        }
        validate_prob_vector(&class_probs)?;
        Ok(FusedReport {
            class_labels,
            class_probs,
        })
    }

    pub fn class_labels(&self) -> &[String] {
        &self.class_labels
    }

    pub fn class_probs(&self) -> &[f64] {
        &self.class_probs
    }

    pub fn prob_of(&self, label: &str) -> Option<f64> {
        self.class_labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.class_probs[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(labels: &[&str]) -> Arc<EventSpace> {
        Arc::new(
            EventSpace::new(
                "f",
                "s",
                labels
                    .iter()
                    .map(|l| Event {
                        label: l.to_string(),
                        range: None,
                    })
                    .collect(),
            )
            .unwrap(),
        )
    }

    fn table2(rows: &[&[f64]]) -> CouplingTable {
        let cells: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        CouplingTable::new(vec![rows.len(), rows[0].len()], cells).unwrap()
    }

    #[test]
    fn normalize_complete_report_is_untouched() {
        let s = space(&["a", "b"]);
        let r = normalize_report(&[0.6, 0.4], &s).unwrap();
        assert_eq!(r.probs(), &[0.6, 0.4]);
        assert!(!r.space().has_complement());
    }

    #[test]
    fn normalize_appends_complement_mass() {
        let s = space(&["a", "b"]);
        let r = normalize_report(&[0.5, 0.3], &s).unwrap();
        assert_eq!(r.probs().len(), 3);
        assert!((r.probs()[2] - 0.2).abs() < 1e-12);
        assert!(r.space().has_complement());
        assert_eq!(r.space().events()[2].label, COMPLEMENT_ATOM);
        assert_eq!(r.probs().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn normalize_rejects_excess_mass() {
        let s = space(&["a", "b"]);
        match normalize_report(&[0.7, 0.6], &s) {
            Err(Error::MassExceedsUnity(sum)) => assert!((sum - 1.3).abs() < 1e-12),
            other => panic!("expected MassExceedsUnity, got {other:?}"),
        }
    }

    #[test]
    fn normalize_rejects_negative_mass() {
        let s = space(&["a", "b"]);
        assert!(matches!(
            normalize_report(&[-0.1, 0.5], &s),
            Err(Error::NegativeMass(_))
        ));
    }

    #[test]
    fn normalize_is_idempotent() {
        let s = space(&["a", "b"]);
        let r = normalize_report(&[0.5, 0.3], &s).unwrap();
        let again = normalize_report(r.probs(), r.space()).unwrap();
        assert_eq!(again.probs(), r.probs());
        assert_eq!(again.space().len(), r.space().len());
    }

    #[test]
    fn entropy_known_values() {
        assert_eq!(entropy(&[0.5, 0.5]), 1.0);
        assert_eq!(entropy(&[1.0, 0.0]), 0.0);
        // independent high-precision evaluation of the formula
        assert!((entropy(&[0.5, 0.3, 0.2]) - 1.4854752972273344).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_of_product_is_zero() {
        let t = table2(&[&[0.3, 0.2], &[0.3, 0.2]]);
        assert!(mutual_information(&t).unwrap().abs() < 1e-12);
    }

    #[test]
    fn mutual_information_of_diagonal_is_one_bit() {
        let t = table2(&[&[0.5, 0.0], &[0.0, 0.5]]);
        assert!((mutual_information(&t).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_matches_direct_sum() {
        let t = table2(&[&[0.5, 0.0], &[0.1, 0.4]]);
        let mi = mutual_information(&t).unwrap();
        // frozen from an independent evaluation of the defining sum; also
        // equals H(X) + H(Y) - H(X,Y)
        assert!((mi - 0.6099865470109875).abs() < 1e-12);
        let hx = entropy(&marginalize(&t, 0).unwrap());
        let hy = entropy(&marginalize(&t, 1).unwrap());
        let hj = entropy(t.cells());
        assert!((mi - (hx + hy - hj)).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_requires_two_axes() {
        let t = CouplingTable::from_vector(&[0.5, 0.5]).unwrap();
        assert!(matches!(
            mutual_information(&t),
            Err(Error::RankMismatch { .. })
        ));
    }

    #[test]
    fn marginalize_rows_and_columns() {
        let t = table2(&[&[0.5, 0.0], &[0.1, 0.4]]);
        let rows = marginalize(&t, 0).unwrap();
        let cols = marginalize(&t, 1).unwrap();
        assert!((rows[0] - 0.5).abs() < 1e-12 && (rows[1] - 0.5).abs() < 1e-12);
        assert!((cols[0] - 0.6).abs() < 1e-12 && (cols[1] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn marginalize_single_axis_is_identity() {
        let t = CouplingTable::from_vector(&[0.25, 0.75]).unwrap();
        assert_eq!(marginalize(&t, 0).unwrap(), vec![0.25, 0.75]);
        assert!(matches!(
            marginalize(&t, 1),
            Err(Error::AxisOutOfRange { .. })
        ));
    }

    #[test]
    fn table_capacity_guard() {
        let err = CouplingTable::new(vec![101, 101, 101], vec![]).unwrap_err();
        assert!(matches!(err, Error::CapacityExceeded { .. }));
    }

    #[test]
    fn formula_resolution_binds_atoms() {
        let spaces = vec![space(&["a1", "a2"]), {
            let s = EventSpace::new(
                "g",
                "s",
                vec![
                    Event {
                        label: "b1".into(),
                        range: None,
                    },
                    Event {
                        label: "b2".into(),
                        range: None,
                    },
                ],
            )
            .unwrap();
            Arc::new(s)
        }];
        let f = ObjectFormula::And(vec![
            ObjectFormula::Atom("a2".into()),
            ObjectFormula::Not(Box::new(ObjectFormula::Atom("b1".into()))),
        ]);
        let r = f.resolve(&spaces).unwrap();
        assert!(r.satisfied_by(&[1, 1]));
        assert!(!r.satisfied_by(&[1, 0]));
        assert!(!r.satisfied_by(&[0, 1]));

        let missing = ObjectFormula::Atom("zzz".into());
        assert!(matches!(
            missing.resolve(&spaces),
            Err(Error::UnresolvedAtom(_))
        ));
    }

    #[test]
    fn fused_report_validates_mass() {
        let ok = FusedReport::new(
            vec!["o1".into(), "none".into()],
            vec![0.25, 0.75],
        )
        .unwrap();
        assert_eq!(ok.prob_of("none"), Some(0.75));
        assert!(FusedReport::new(vec!["o1".into()], vec![0.5]).is_err());
    }
}
