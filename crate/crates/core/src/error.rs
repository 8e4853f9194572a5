//! Error type shared by the probability model, coupling construction and
//! fusion evaluation.

use thiserror::Error;

/// Errors produced by model construction and fusion operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Report entries sum to more than one.
    #[error("probability mass exceeds unity: sum = {0}")]
    MassExceedsUnity(f64),

    /// A probability entry is negative.
    #[error("negative probability mass: {0}")]
    NegativeMass(f64),

    /// An entry set does not form a probability distribution.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// Axis index does not exist on the table.
    #[error("axis {axis} out of range for a table with {rank} axes")]
    AxisOutOfRange { axis: usize, rank: usize },

    /// Tables that must share shape do not.
    #[error("axis mismatch: {0}")]
    AxisMismatch(String),

    /// Tables that must share marginals do not.
    #[error("marginal mismatch on axis {axis}: |delta| = {delta}")]
    MarginalMismatch { axis: usize, delta: f64 },

    /// Expected a table of a specific rank.
    #[error("expected a table with {expected} axes, found {found}")]
    RankMismatch { expected: usize, found: usize },

    /// Blend weight outside [0, 1].
    #[error("rho out of range: {0}")]
    RhoOutOfRange(f64),

    /// Joint table would exceed the cell-count capacity guard.
    #[error("product space of {cells} cells exceeds the capacity limit of {limit}")]
    CapacityExceeded { cells: usize, limit: usize },

    /// A formula atom does not identify a unique (axis, atom) pair.
    #[error("unresolved atom: {0}")]
    UnresolvedAtom(String),

    /// Not enough input data for the operation.
    #[error("not enough input: {0}")]
    NotEnoughInput(String),

    /// Paired samples of different lengths.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// Event labels of two spaces that must agree do not.
    #[error("event label mismatch: {0}")]
    LabelMismatch(String),

    /// Merge weights are both zero (or negative).
    #[error("invalid merge weights: {0}")]
    InvalidWeights(String),

    /// Object formulas assign overlapping probability mass, so class
    /// probabilities cannot form a distribution.
    #[error("object formulas overlap: excess probability mass {0}")]
    OverlappingObjects(f64),

    /// Fusion configuration is invalid.
    #[error("invalid fusion config: {0}")]
    InvalidConfig(String),

    /// Labels contain only one class where two are required.
    #[error("labels contain a single class")]
    SingleClassLabels,

    /// A score or sample is NaN or infinite.
    #[error("non-finite input: {0}")]
    NonFiniteInput(f64),

    /// Dempster combination with total conflict (no compatible mass).
    #[error("total conflict: combined evidence has no compatible mass")]
    TotalConflict,

    /// Mass function construction failed.
    #[error("invalid mass function: {0}")]
    InvalidMassFunction(String),
}

pub type Result<T> = std::result::Result<T, Error>;
