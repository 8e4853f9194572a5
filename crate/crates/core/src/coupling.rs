//! Joint-distribution construction over product event spaces.
//!
//! Two extreme couplings share the same prescribed marginals: the product
//! coupling (minimum mutual information, independence) and the coupling that
//! maximizes mutual information, found by greedily minimizing joint entropy.
//! Partial dependence is modeled as their convex blend, weighted by a
//! correlation score `rho` estimated from training data.

use crate::error::{Error, Result};
use crate::model::{marginalize, CouplingTable, PROB_TOL};

/// Residual masses below this are treated as exhausted by the greedy
/// allocator so it always terminates.
const RESIDUAL_FLOOR: f64 = 1e-12;

/// How a correlation score was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhoMethod {
    Pearson,
    DistanceCorrelation,
    Fixed,
}

impl std::fmt::Display for RhoMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RhoMethod::Pearson => write!(f, "pearson"),
            RhoMethod::DistanceCorrelation => write!(f, "distance-correlation"),
            RhoMethod::Fixed => write!(f, "fixed"),
        }
    }
}

/// A correlation-extent score in [0, 1] for one feature pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoEstimate {
    pub value: f64,
    pub method: RhoMethod,
    /// Feature ids the estimate belongs to, when the caller knows them.
    pub pair: Option<(String, String)>,
    /// Set when an input sample had zero variance, forcing the value to 0.
    pub degenerate: bool,
}

impl RhoEstimate {
    fn new(value: f64, method: RhoMethod) -> Self {
        RhoEstimate {
            value,
            method,
            pair: None,
            degenerate: false,
        }
    }
}

fn check_marginals(marginals: &[&[f64]]) -> Result<()> {
    if marginals.len() < 2 {
        return Err(Error::NotEnoughInput(format!(
            "coupling needs at least 2 marginals, got {}",
            marginals.len()
        )));
    }
    for m in marginals {
        if m.is_empty() {
            return Err(Error::InvalidDistribution("empty marginal".into()));
        }
        let mut sum = 0.0;
        for &p in *m {
            if !p.is_finite() {
                return Err(Error::NonFiniteInput(p));
            }
            if p < 0.0 {
                return Err(Error::NegativeMass(p));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidDistribution(format!(
                "marginal sums to {sum}, expected 1"
            )));
        }
    }
    Ok(())
}

/// The product coupling: every cell is the product of its axis marginals.
/// This is the joint with minimum (zero) mutual information.
pub fn min_mi_coupling(marginals: &[&[f64]]) -> Result<CouplingTable> {
    check_marginals(marginals)?;
    let dims: Vec<usize> = marginals.iter().map(|m| m.len()).collect();
    let mut cells = vec![1.0];
    for m in marginals {
        let mut next = Vec::with_capacity(cells.len() * m.len());
        for &c in &cells {
            for &p in *m {
                next.push(c * p);
            }
        }
        cells = next;
    }
    CouplingTable::new(dims, cells)
}

/// Greedy maximum-mutual-information coupling.
///
/// With the marginals fixed, maximizing mutual information is the same as
/// minimizing joint entropy. Splitting a probability mass only increases its
/// entropy contribution, so the allocator keeps the largest residual masses
/// intact: each round it picks the largest remaining entry on every axis
/// (lowest index on ties), places their minimum into the matching joint
/// cell, and subtracts it from each chosen residual, until all mass is
/// placed. The result stays within one bit of the true joint-entropy
/// minimum on the instance sizes used here.
pub fn max_mi_coupling(marginals: &[&[f64]]) -> Result<CouplingTable> {
    check_marginals(marginals)?;
    let dims: Vec<usize> = marginals.iter().map(|m| m.len()).collect();
    let n_cells: usize = dims.iter().product();
    if n_cells > crate::model::MAX_TABLE_CELLS {
        return Err(Error::CapacityExceeded {
            cells: n_cells,
            limit: crate::model::MAX_TABLE_CELLS,
        });
    }
    let mut residuals: Vec<Vec<f64>> = marginals.iter().map(|m| m.to_vec()).collect();
    let mut cells = vec![0.0; n_cells];
    let mut assigned = 0.0;
    // Each round exhausts at least one residual entry, so the number of
    // rounds is bounded by the total number of entries.
    let max_rounds: usize = dims.iter().sum::<usize>() + dims.len();
    let mut idx = vec![0usize; dims.len()];
    for _ in 0..max_rounds {
        if 1.0 - assigned <= RESIDUAL_FLOOR {
            break;
        }
        let mut m = f64::INFINITY;
        let mut exhausted = false;
        for (axis, res) in residuals.iter().enumerate() {
            let mut best = 0usize;
            let mut best_mass = res[0];
            for (j, &mass) in res.iter().enumerate().skip(1) {
                if mass > best_mass {
                    best = j;
                    best_mass = mass;
                }
            }
            if best_mass <= 0.0 {
                exhausted = true;
                break;
            }
            idx[axis] = best;
            m = m.min(best_mass);
        }
        if exhausted {
            break;
        }
        let mut off = 0;
        for (axis, &d) in dims.iter().enumerate() {
            off = off * d + idx[axis];
        }
        cells[off] += m;
        assigned += m;
        for (axis, res) in residuals.iter_mut().enumerate() {
            res[idx[axis]] -= m;
            if res[idx[axis]] < RESIDUAL_FLOOR {
                res[idx[axis]] = 0.0;
            }
        }
    }
    CouplingTable::new(dims, cells)
}

/// Convex blend of the two extreme couplings: `rho * t_max + (1 - rho) *
/// t_min`, cellwise. Inputs must share shape and marginals.
pub fn blend_couplings(
    t_max: &CouplingTable,
    t_min: &CouplingTable,
    rho: f64,
) -> Result<CouplingTable> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::RhoOutOfRange(rho));
    }
    if t_max.dims() != t_min.dims() {
        return Err(Error::AxisMismatch(format!(
            "{:?} vs {:?}",
            t_max.dims(),
            t_min.dims()
        )));
    }
    for axis in 0..t_max.rank() {
        let a = marginalize(t_max, axis)?;
        let b = marginalize(t_min, axis)?;
        for (x, y) in a.iter().zip(&b) {
            let delta = (x - y).abs();
            if delta > PROB_TOL {
                return Err(Error::MarginalMismatch { axis, delta });
            }
        }
    }
    let cells: Vec<f64> = t_max
        .cells()
        .iter()
        .zip(t_min.cells())
        .map(|(&a, &b)| rho * a + (1.0 - rho) * b)
        .collect();
    CouplingTable::new(t_max.dims().to_vec(), cells)
}

fn check_paired(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::NotEnoughInput(
            "correlation needs at least 2 samples".into(),
        ));
    }
    for &v in x.iter().chain(y) {
        if !v.is_finite() {
            return Err(Error::NonFiniteInput(v));
        }
    }
    Ok(())
}

/// Absolute Pearson correlation as a correlation-extent score. Zero-variance
/// inputs yield 0 with the `degenerate` flag set.
pub fn pearson_rho(x: &[f64], y: &[f64]) -> Result<RhoEstimate> {
    check_paired(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        let mut est = RhoEstimate::new(0.0, RhoMethod::Pearson);
        est.degenerate = true;
        return Ok(est);
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    Ok(RhoEstimate::new(r.abs().min(1.0), RhoMethod::Pearson))
}

/// Sample distance correlation: dependence score in [0, 1] built from
/// double-centered pairwise distance matrices. Zero only under independence
/// in the population version, which makes it sensitive to the nonlinear
/// relations Pearson misses.
pub fn distance_correlation(x: &[f64], y: &[f64]) -> Result<RhoEstimate> {
    check_paired(x, y)?;
    let n = x.len();
    let a = centered_distance_matrix(x);
    let b = centered_distance_matrix(y);
    let nn = (n * n) as f64;
    let mut dcov2 = 0.0;
    let mut dvarx = 0.0;
    let mut dvary = 0.0;
    for i in 0..n {
        for j in 0..n {
            dcov2 += a[i][j] * b[i][j];
            dvarx += a[i][j] * a[i][j];
            dvary += b[i][j] * b[i][j];
        }
    }
    dcov2 /= nn;
    dvarx /= nn;
    dvary /= nn;
    if dvarx <= 0.0 || dvary <= 0.0 {
        let mut est = RhoEstimate::new(0.0, RhoMethod::DistanceCorrelation);
        est.degenerate = true;
        return Ok(est);
    }
    let r2 = dcov2 / (dvarx * dvary).sqrt();
    Ok(RhoEstimate::new(
        r2.max(0.0).sqrt().min(1.0),
        RhoMethod::DistanceCorrelation,
    ))
}

fn centered_distance_matrix(v: &[f64]) -> Vec<Vec<f64>> {
    let n = v.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            d[i][j] = (v[i] - v[j]).abs();
        }
    }
    let nf = n as f64;
    let row_means: Vec<f64> = d.iter().map(|r| r.iter().sum::<f64>() / nf).collect();
    let col_means: Vec<f64> = (0..n)
        .map(|j| d.iter().map(|r| r[j]).sum::<f64>() / nf)
        .collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    for i in 0..n {
        for j in 0..n {
            d[i][j] = d[i][j] - row_means[i] - col_means[j] + grand;
        }
    }
    d
}

/// One scalar correlation score for a whole feature set: the mean of the
/// pairwise estimates over all unordered column pairs.
pub fn estimate_rho_for_set(columns: &[Vec<f64>], method: RhoMethod) -> Result<f64> {
    if columns.len() < 2 {
        return Err(Error::NotEnoughInput(format!(
            "rho estimation needs at least 2 feature columns, got {}",
            columns.len()
        )));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for i in 0..columns.len() {
        for j in (i + 1)..columns.len() {
            let est = match method {
                RhoMethod::Pearson => pearson_rho(&columns[i], &columns[j])?,
                RhoMethod::DistanceCorrelation => {
                    distance_correlation(&columns[i], &columns[j])?
                }
                RhoMethod::Fixed => {
                    return Err(Error::InvalidConfig(
                        "`fixed` is not an estimation method".into(),
                    ))
                }
            };
            total += est.value;
            count += 1;
        }
    }
    Ok(total / count as f64)
}
