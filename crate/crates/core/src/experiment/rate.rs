use serde::{Deserialize, Serialize};

use super::ResultTable;
use crate::error::{Error, Result};

/// Failure rate above which the smallest `n` of a curve is left out of the fit.
pub const EXCLUDE_FAILURE_RATE: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionSlope {
    #[serde(rename = "D")]
    pub dim_out: usize,
    /// `None` when fewer than 3 points survive.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Excluded {
    #[serde(rename = "D")]
    pub dim_out: usize,
    pub n: usize,
    pub failure_rate: f64,
}

/// Least-squares fit of `ln(error) = intercept + slope · ln(n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Pooled over every dimension.
    pub slope: f64,
    pub intercept: f64,
    pub r_expected: f64,
    /// `slope + r_expected`; zero when the fit matches the theory.
    pub deviation: f64,
    pub per_dim: Vec<DimensionSlope>,
    pub excluded: Vec<Excluded>,
}

/// Ordinary least squares `y = a + b x`, returns `(b, a)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let b = sxy / sxx;
    (b, my - b * mx)
}

fn distinct(ns: &[usize]) -> usize {
    let mut v = ns.to_vec();
    v.sort_unstable();
    v.dedup();
    v.len()
}

pub fn fit_rate(table: &ResultTable, r_expected: f64) -> Result<RateFit> {
    let mut excluded = Vec::new();
    let mut per_dim = Vec::new();
    let mut pooled_n = Vec::new();
    let mut pooled_e = Vec::new();
    for dim_out in table.dims() {
        let mut pts: Vec<(usize, f64)> = table
            .aggregates
            .iter()
            .filter(|a| a.dim_out == dim_out && a.mean_error > 0.0 && a.mean_error.is_finite())
            .map(|a| (a.n, a.mean_error))
            .collect();
        pts.sort_by_key(|p| p.0);
        if let Some(&(n0, _)) = pts.first() {
            let rate = table.failure_rate(dim_out, n0);
            if rate > EXCLUDE_FAILURE_RATE {
                excluded.push(Excluded {
                    dim_out,
                    n: n0,
                    failure_rate: rate,
                });
                pts.remove(0);
            }
        }
        let xs: Vec<f64> = pts.iter().map(|p| (p.0 as f64).ln()).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
        let (slope, intercept) = if distinct(&pts.iter().map(|p| p.0).collect::<Vec<_>>()) >= 3 {
            let (b, a) = fit_line(&xs, &ys);
            (Some(b), Some(a))
        } else {
            (None, None)
        };
        per_dim.push(DimensionSlope {
            dim_out,
            slope,
            intercept,
            points: pts.len(),
        });
        pooled_n.extend(pts.iter().map(|p| p.0));
        pooled_e.extend(xs.into_iter().zip(ys));
    }
    let found = distinct(&pooled_n);
    if found < 3 {
        return Err(Error::TooFewPoints { found });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pooled_e.into_iter().unzip();
    let (slope, intercept) = fit_line(&xs, &ys);
    Ok(RateFit {
        slope,
        intercept,
        r_expected,
        deviation: slope + r_expected,
        per_dim,
        excluded,
    })
}
