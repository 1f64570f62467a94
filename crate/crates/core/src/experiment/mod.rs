//! Monte-Carlo convergence study: for every output dimension `D`, sample size
//! `n` and trial, draw a random polynomial and a dataset, estimate `L[f](0)`
//! and record the error against the analytic value.

mod csv_io;
mod rate;
mod svg;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::select_neighborhood;
use crate::error::{Error, Result};
use crate::operator::{DifferentialOperator, OperatorSpec};
use crate::regression::{bandwidth, estimate_within, EstimatorConfig};
use crate::robust::{estimate_robust, AggregationConfig};
use crate::seed;
use crate::synth::{
    gen_random_polynomial, make_dataset, make_dataset_within, CoefficientLaw,
    ExperimentFunctionSpec, NoiseModel, VectorFunction,
};

pub use csv_io::{
    emit_csv, read_aggregate_csv, read_csv, read_raw_csv, write_aggregate_csv, write_raw_csv,
    AGGREGATE_FILE, AGGREGATE_HEADER, RAW_FILE, RAW_HEADER,
};
pub use rate::{fit_line, fit_rate, DimensionSlope, Excluded, RateFit, EXCLUDE_FAILURE_RATE};
pub use svg::{emit_svg, render_svg, SvgOptions};

/// How the per-(D, n) error statistic is formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    #[default]
    Mean,
    /// Median of the trial errors, reported in the `mean_error` column.
    Median,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub d: usize,
    pub k: usize,
    /// Operator order; checked against `operator` when given.
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub operator: OperatorSpec,
    #[serde(rename = "D_list")]
    pub dim_list: Vec<usize>,
    pub n_list: Vec<usize>,
    pub trials: usize,
    pub noise: NoiseModel,
    #[serde(default = "one")]
    pub bandwidth_constant: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub robust: Option<AggregationConfig>,
    /// Degree of the random target polynomials, `k - 1` by default.
    #[serde(default)]
    pub function_degree: Option<usize>,
    #[serde(default)]
    pub coefficient_law: CoefficientLaw,
    #[serde(default = "one")]
    pub half_width: f64,
    /// Draw one function per `D` instead of one per trial.
    #[serde(default)]
    pub fix_function: bool,
    #[serde(default)]
    pub aggregate: Aggregate,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self =
            serde_json::from_str(text).map_err(|e| Error::SpecInvalid(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Resolves the operator and checks every range constraint.
    pub fn validate(&self) -> Result<DifferentialOperator> {
        let bad = |msg: String| Err(Error::SpecInvalid(msg));
        if self.d == 0 {
            return bad("d must be at least 1".into());
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        let op = self
            .operator
            .resolve(self.d)
            .map_err(|e| Error::SpecInvalid(e.to_string()))?;
        if let Some(m) = self.m {
            if m != op.order() {
                return bad(format!("m = {m} but the operator has order {}", op.order()));
            }
        }
        if op.order() >= self.k {
            return bad(format!(
                "operator order {} must be below k = {}",
                op.order(),
                self.k
            ));
        }
        if self.dim_list.is_empty() || self.dim_list.contains(&0) {
            return bad("D_list must be non-empty with positive entries".into());
        }
        if self.n_list.is_empty()
            || self.n_list[0] == 0
            || self.n_list.windows(2).any(|w| w[0] >= w[1])
        {
            return bad("n_list must be non-empty, positive and strictly increasing".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        self.noise
            .validate()
            .map_err(|e| Error::SpecInvalid(e.to_string()))?;
        if !(self.bandwidth_constant > 0.0 && self.bandwidth_constant.is_finite()) {
            return bad("bandwidth_constant must be positive".into());
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return bad("half_width must be positive".into());
        }
        if let Some(agg) = &self.robust {
            agg.validate()
                .map_err(|e| Error::SpecInvalid(e.to_string()))?;
        }
        Ok(op)
    }

    /// Theoretical exponent `r = (k − m)/(2k + d)`.
    pub fn expected_rate(&self) -> Result<f64> {
        let m = self.validate()?.order();
        Ok((self.k - m) as f64 / (2 * self.k + self.d) as f64)
    }

    pub fn function_degree(&self) -> usize {
        self.function_degree.unwrap_or(self.k - 1)
    }

    fn estimator(&self) -> EstimatorConfig {
        EstimatorConfig::new(self.k).with_bandwidth_constant(self.bandwidth_constant)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Ok,
    Insufficient,
    RankDeficient,
    /// Fixed-radius aggregation found no majority ball.
    NoMajority,
}

impl TrialStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialStatus::Ok => "ok",
            TrialStatus::Insufficient => "insufficient",
            TrialStatus::RankDeficient => "rank_deficient",
            TrialStatus::NoMajority => "no_majority",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "ok" => TrialStatus::Ok,
            "insufficient" => TrialStatus::Insufficient,
            "rank_deficient" => TrialStatus::RankDeficient,
            "no_majority" => TrialStatus::NoMajority,
            other => return Err(Error::Parse(format!("unknown trial status {other:?}"))),
        })
    }
}

/// One Monte-Carlo trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRow {
    pub dim_out: usize,
    pub n: usize,
    pub trial: usize,
    /// `‖T̂ − T(f)‖`, NaN for failed trials.
    pub error: f64,
    pub n_neighbors: usize,
    pub delta: f64,
    pub status: TrialStatus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub dim_out: usize,
    pub n: usize,
    pub mean_error: f64,
    /// Unbiased sample variance of the trial errors, 0 for a single trial.
    pub var_error: f64,
    pub trials_ok: usize,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ResultTable {
    pub rows: Vec<TrialRow>,
    pub aggregates: Vec<AggregateRow>,
}

/// A grid point whose failure rate exceeds this is marked untrusted.
pub const UNTRUSTED_FAILURE_RATE: f64 = 0.2;

impl ResultTable {
    /// Builds aggregates from raw rows, grouped by `(D, n)` in first-seen order.
    pub fn from_rows(rows: Vec<TrialRow>, how: Aggregate) -> Self {
        let mut aggregates = Vec::new();
        for (dim_out, n) in grid_points(&rows) {
            let errors: Vec<f64> = rows
                .iter()
                .filter(|r| r.dim_out == dim_out && r.n == n && r.status == TrialStatus::Ok)
                .map(|r| r.error)
                .collect();
            if errors.is_empty() {
                continue;
            }
            let (mean, var) = mean_var(&errors);
            let center = match how {
                Aggregate::Mean => mean,
                Aggregate::Median => median(&errors),
            };
            aggregates.push(AggregateRow {
                dim_out,
                n,
                mean_error: center,
                var_error: var,
                trials_ok: errors.len(),
            });
        }
        Self { rows, aggregates }
    }

    /// `(total, failed)` trial counts at a grid point.
    pub fn counts(&self, dim_out: usize, n: usize) -> (usize, usize) {
        let at = self
            .rows
            .iter()
            .filter(|r| r.dim_out == dim_out && r.n == n);
        let total = at.clone().count();
        let failed = at.filter(|r| r.status != TrialStatus::Ok).count();
        (total, failed)
    }

    pub fn failure_rate(&self, dim_out: usize, n: usize) -> f64 {
        let (total, failed) = self.counts(dim_out, n);
        if total == 0 {
            0.0
        } else {
            failed as f64 / total as f64
        }
    }

    /// Grid points with more than 20% failed trials.
    pub fn untrusted(&self) -> Vec<(usize, usize)> {
        grid_points(&self.rows)
            .into_iter()
            .filter(|&(dd, n)| self.failure_rate(dd, n) > UNTRUSTED_FAILURE_RATE)
            .collect()
    }

    pub fn failed_trials(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.status != TrialStatus::Ok)
            .count()
    }

    /// Distinct output dimensions, in first-seen order.
    pub fn dims(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for a in &self.aggregates {
            if !out.contains(&a.dim_out) {
                out.push(a.dim_out);
            }
        }
        out
    }
}

fn grid_points(rows: &[TrialRow]) -> Vec<(usize, usize)> {
    let mut keys: Vec<(usize, usize)> = Vec::new();
    for r in rows {
        if !keys.contains(&(r.dim_out, r.n)) {
            keys.push((r.dim_out, r.n));
        }
    }
    keys
}

pub(crate) fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let h = s.len() / 2;
    if s.len() % 2 == 1 {
        s[h]
    } else {
        0.5 * (s[h - 1] + s[h])
    }
}

// Seed-derivation keys.
const FUNCTION_KEY: u64 = 0xF;
const DATA_KEY: u64 = 0xD;
const SPLIT_KEY: u64 = 0x5;

/// Seed of trial `(D, n, trial)`.
pub fn trial_seed(base: u64, dim_out: usize, n: usize, trial: usize) -> u64 {
    seed::derive(base, &[dim_out as u64, n as u64, trial as u64])
}

/// Runs every `(D, n, trial)` job. Jobs may run in parallel on the current
/// rayon pool; the table is identical to a sequential run.
pub fn run_convergence(spec: &ExperimentSpec) -> Result<ResultTable> {
    let op = spec.validate()?;
    let jobs: Vec<(usize, usize, usize)> = spec
        .dim_list
        .iter()
        .flat_map(|&dd| {
            spec.n_list
                .iter()
                .flat_map(move |&n| (0..spec.trials).map(move |t| (dd, n, t)))
        })
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(dd, n, t)| run_trial(spec, &op, dd, n, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(ResultTable::from_rows(rows, spec.aggregate))
}

fn run_trial(
    spec: &ExperimentSpec,
    op: &DifferentialOperator,
    dim_out: usize,
    n: usize,
    trial: usize,
) -> Result<TrialRow> {
    let s = trial_seed(spec.seed, dim_out, n, trial);
    let function_seed = if spec.fix_function {
        seed::derive(spec.seed, &[dim_out as u64, FUNCTION_KEY])
    } else {
        seed::derive(s, &[FUNCTION_KEY])
    };
    let f = gen_random_polynomial(&ExperimentFunctionSpec {
        d: spec.d,
        dim_out,
        degree: spec.function_degree(),
        coefficient_law: spec.coefficient_law,
        seed: function_seed,
    })?;
    let truth = f
        .operator_at_origin(op)
        .expect("polynomial maps know every derivative at the origin");
    let data_seed = seed::derive(s, &[DATA_KEY]);
    let config = spec.estimator();

    let (outcome, n_neighbors, delta) = match &spec.robust {
        None => {
            let eps = bandwidth(n, spec.k, spec.d, spec.bandwidth_constant);
            // only the neighborhood enters the fit
            let local = make_dataset_within(&f, n, &spec.noise, spec.half_width, eps, data_seed)?;
            let nb = select_neighborhood(&local, eps);
            let outcome = estimate_within(&local, op, &config, eps).map(|r| r.value);
            (outcome, nb.count(), nb.delta)
        }
        Some(agg) => {
            let ds = make_dataset(&f, n, &spec.noise, spec.half_width, data_seed)?;
            match estimate_robust(&ds, op, &config, agg, seed::derive(s, &[SPLIT_KEY])) {
                Ok(r) => {
                    let nb = &r.splits[r.center.index].neighborhood;
                    (Ok(r.value), nb.count(), nb.delta)
                }
                Err(e) => (Err(e), 0, f64::NAN),
            }
        }
    };
    let (error, status) = match outcome {
        Ok(value) => {
            let err = value
                .iter()
                .zip(&truth)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            (err, TrialStatus::Ok)
        }
        Err(Error::InsufficientSamples { .. } | Error::TooFewSamples { .. } | Error::ZeroScale) => {
            (f64::NAN, TrialStatus::Insufficient)
        }
        Err(Error::RankDeficient { .. }) => (f64::NAN, TrialStatus::RankDeficient),
        Err(Error::NoMajorityBall { .. }) => (f64::NAN, TrialStatus::NoMajority),
        Err(e) => return Err(e),
    };
    Ok(TrialRow {
        dim_out,
        n,
        trial,
        error,
        n_neighbors,
        delta,
        status,
    })
}
