//! Decision-level sensor fusion over feature event spaces.
//!
//! Targets are boolean combinations of feature events observed by different
//! sensors. Each sensor reports a probability vector over its feature's
//! events; a joint distribution over the product event space is built by
//! blending the maximum- and minimum-mutual-information couplings of those
//! marginals according to the estimated feature correlation, and object
//! probabilities are read off the joint. Dempster-Shafer combination and
//! independence-assuming fusion are included as baselines, together with a
//! small definition language for declaring sensors, events and object
//! formulas, and Platt calibration for turning classifier scores into event
//! probabilities.

pub mod baselines;
pub mod calibration;
pub mod coupling;
pub mod defs;
pub mod error;
pub mod fusion;
pub mod model;

pub use error::{Error, Result};
pub use model::{
    entropy, marginalize, mutual_information, normalize_report, CouplingTable, Event,
    EventSpace, FusedReport, Interval, ObjectFormula, ProbReport, ResolvedFormula,
};
