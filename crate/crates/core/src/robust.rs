//! Median-trick aggregation: estimate on `ν` disjoint splits and return the
//! center of a ball holding a strict majority of the split estimates.
//!
//! Candidate centers are the split estimates themselves, so the search is an
//! exact `O(ν² D)` scan.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::enumerate_basis;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::operator::DifferentialOperator;
use crate::regression::{estimate, EstimateResult, EstimatorConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusMode {
    /// Ball radius `2ρ` around candidate centers.
    Fixed(f64),
    /// Smallest majority-covering radius over the candidates.
    Adaptive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregationConfig {
    /// Target failure probability `ε`.
    pub target_failure: f64,
    /// Per-split failure probability `ε₀`.
    #[serde(default = "default_epsilon_zero")]
    pub epsilon_zero: f64,
    #[serde(default = "default_radius_mode")]
    pub radius_mode: RadiusMode,
}

fn default_epsilon_zero() -> f64 {
    0.4
}

fn default_radius_mode() -> RadiusMode {
    RadiusMode::Adaptive
}

impl AggregationConfig {
    pub fn new(target_failure: f64) -> Self {
        Self {
            target_failure,
            epsilon_zero: default_epsilon_zero(),
            radius_mode: RadiusMode::Adaptive,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_probabilities(self.target_failure, self.epsilon_zero)?;
        if let RadiusMode::Fixed(r) = self.radius_mode {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "ball radius {r} must be positive"
                )));
            }
        }
        Ok(())
    }

    pub fn splits(&self) -> Result<usize> {
        num_splits(self.target_failure, self.epsilon_zero)
    }
}

fn check_probabilities(eps: f64, eps0: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "failure probability {eps} is outside (0, 1)"
        )));
    }
    if !(eps0 > 0.0 && eps0 < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "per-split failure probability {eps0} is outside (0, 0.5)"
        )));
    }
    Ok(())
}

/// `ν = ⌈ln(1/ε) / (2(0.5 − ε₀)²)⌉`, at least 1.
pub fn num_splits(eps: f64, eps0: f64) -> Result<usize> {
    check_probabilities(eps, eps0)?;
    let gap = 0.5 - eps0;
    let nu = (1.0 / eps).ln() / (2.0 * gap * gap);
    // absorb rounding noise so that exact integers are not bumped up
    let nu = (nu - 1e-9 * nu.max(1.0)).ceil();
    Ok((nu as usize).max(1))
}

/// Partitions the rows into `nu` parts by a seeded uniform permutation; the
/// first `n mod nu` parts get one extra row.
pub fn split_dataset(dataset: &Dataset, nu: usize, seed: u64) -> Result<Vec<Dataset>> {
    Ok(split_indices(dataset.len(), nu, seed)?
        .iter()
        .map(|idx| dataset.subset(idx))
        .collect())
}

pub fn split_indices(n: usize, nu: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if nu == 0 {
        return Err(Error::InvalidArgument(
            "number of splits must be positive".into(),
        ));
    }
    if n < nu {
        return Err(Error::TooFewSamples { n, splits: nu });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / nu, n % nu);
    let mut parts = Vec::with_capacity(nu);
    let mut start = 0;
    for p in 0..nu {
        let len = base + usize::from(p < extra);
        parts.push(perm[start..start + len].to_vec());
        start += len;
    }
    Ok(parts)
}

/// The chosen ball.
#[derive(Clone, Debug, PartialEq)]
pub struct Center {
    /// Index of the estimate used as center.
    pub index: usize,
    /// Distance from the center within which `support` estimates lie.
    pub radius: f64,
    /// Estimates within `radius`, the center included.
    pub support: usize,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn pairwise(estimates: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let Some(first) = estimates.first() else {
        return Err(Error::InvalidArgument("no estimates to aggregate".into()));
    };
    if estimates.iter().any(|e| e.len() != first.len()) {
        return Err(Error::DimensionMismatch(
            "estimates differ in dimension".into(),
        ));
    }
    let nu = estimates.len();
    let mut dist = vec![vec![0.0; nu]; nu];
    for i in 0..nu {
        for j in i + 1..nu {
            let v = distance(&estimates[i], &estimates[j]);
            dist[i][j] = v;
            dist[j][i] = v;
        }
    }
    Ok(dist)
}

/// Finds an estimate with strictly more than `ν/2` estimates within
/// `2·radius` of it. Among qualifying centers the one covering the most
/// estimates wins, then the smallest index.
pub fn median_ball(estimates: &[Vec<f64>], radius: f64) -> Result<Center> {
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ball radius {radius} must be positive"
        )));
    }
    let dist = pairwise(estimates)?;
    let nu = estimates.len();
    let diameter = 2.0 * radius;
    let mut best: Option<Center> = None;
    for (i, row) in dist.iter().enumerate() {
        let support = row.iter().filter(|&&d| d <= diameter).count();
        if 2 * support > nu && best.as_ref().is_none_or(|b| support > b.support) {
            best = Some(Center {
                index: i,
                radius: diameter,
                support,
            });
        }
    }
    best.ok_or(Error::NoMajorityBall { diameter })
}

/// The estimate whose `⌊ν/2⌋`-th nearest other estimate is closest, i.e. the
/// center of the smallest strict-majority ball among the candidates. Ties go
/// to the smallest index.
pub fn adaptive_median(estimates: &[Vec<f64>]) -> Result<Center> {
    let dist = pairwise(estimates)?;
    let nu = estimates.len();
    let h = nu / 2;
    let mut best = Center {
        index: 0,
        radius: f64::INFINITY,
        support: 0,
    };
    for (i, row) in dist.iter().enumerate() {
        let r = if h == 0 {
            0.0
        } else {
            let mut others: Vec<f64> = row
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &d)| d)
                .collect();
            others.select_nth_unstable_by(h - 1, f64::total_cmp);
            others[h - 1]
        };
        if r < best.radius {
            best = Center {
                index: i,
                radius: r,
                support: row.iter().filter(|&&d| d <= r).count(),
            };
        }
    }
    Ok(best)
}

#[derive(Clone, Debug)]
pub struct RobustEstimate {
    /// The aggregated estimate `T̂_n`.
    pub value: Vec<f64>,
    pub center: Center,
    pub mode: RadiusMode,
    /// One result per split, in split order.
    pub splits: Vec<EstimateResult>,
}

impl RobustEstimate {
    pub fn num_splits(&self) -> usize {
        self.splits.len()
    }
}

/// Splits the data, estimates on every part, and aggregates.
pub fn estimate_robust(
    dataset: &Dataset,
    op: &DifferentialOperator,
    config: &EstimatorConfig,
    agg: &AggregationConfig,
    seed: u64,
) -> Result<RobustEstimate> {
    agg.validate()?;
    config.validate()?;
    let nu = agg.splits()?;
    let n = dataset.len();
    let basis_len = enumerate_basis(dataset.input_dim(), config.degree()).len();
    if n < nu || nu > n / (4 * basis_len) {
        return Err(Error::TooFewSamples { n, splits: nu });
    }
    let parts = split_dataset(dataset, nu, seed)?;
    estimate_on_splits(&parts, op, config, agg)
}

/// Aggregation over caller-provided splits.
pub fn estimate_on_splits(
    parts: &[Dataset],
    op: &DifferentialOperator,
    config: &EstimatorConfig,
    agg: &AggregationConfig,
) -> Result<RobustEstimate> {
    agg.validate()?;
    let splits: Vec<EstimateResult> = parts
        .par_iter()
        .map(|part| estimate(part, op, config))
        .collect::<Result<_>>()?;
    let estimates: Vec<Vec<f64>> = splits.iter().map(|r| r.value.clone()).collect();
    let center = match agg.radius_mode {
        RadiusMode::Fixed(rho) => median_ball(&estimates, rho)?,
        RadiusMode::Adaptive => adaptive_median(&estimates)?,
    };
    Ok(RobustEstimate {
        value: estimates[center.index].clone(),
        center,
        mode: agg.radius_mode,
        splits,
    })
}
