//! Synthetic sampling: inputs uniform on a cube around the origin, outputs
//! `f(x) + z` with isotropic noise of total scale `σ`.
//!
//! Every noise model has per-coordinate variance `σ²/D`, so `‖cov(z)‖_op = σ²/D`
//! and `E‖z‖² = σ²` whatever the output dimension.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::basis::{enumerate_basis, BasisSet, MultiIndex};
use crate::dataset::{norm, Dataset};
use crate::error::{Error, Result};
use crate::operator::DifferentialOperator;
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// Uniform on the sphere of radius `σ`.
    SphereUniform,
    /// Uniform in the ball of radius `σ·√((D+2)/D)`.
    BallUniform,
    /// `N(0, σ²/D · I)`.
    GaussianIsotropic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub sigma: f64,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, sigma: f64) -> Self {
        Self { kind, sigma }
    }

    pub fn none() -> Self {
        Self::new(NoiseKind::SphereUniform, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise scale must be finite and non-negative, got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    /// Per-coordinate variance, which is also the covariance operator norm.
    pub fn coordinate_variance(&self, dim_out: usize) -> f64 {
        self.sigma * self.sigma / dim_out as f64
    }

    /// Writes one draw into `out` (length `D`).
    pub fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let dim = out.len();
        if self.sigma == 0.0 {
            out.fill(0.0);
            return;
        }
        match self.kind {
            NoiseKind::GaussianIsotropic => {
                let s = self.sigma / (dim as f64).sqrt();
                for v in out.iter_mut() {
                    *v = s * rng.sample::<f64, _>(StandardNormal);
                }
            }
            NoiseKind::SphereUniform => {
                let r = gaussian_direction(rng, out);
                for v in out.iter_mut() {
                    *v = *v / r * self.sigma;
                }
            }
            NoiseKind::BallUniform => {
                let r = gaussian_direction(rng, out);
                let outer = self.sigma * ((dim as f64 + 2.0) / dim as f64).sqrt();
                // inverse CDF of the radius, P(ρ <= t) = (t / R)^D
                let u: f64 = rng.random();
                let radius = outer * u.powf(1.0 / dim as f64);
                for v in out.iter_mut() {
                    *v *= radius / r;
                }
            }
        }
    }
}

// Fills `out` with a standard Gaussian vector, returns its (non-zero) norm.
fn gaussian_direction<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) -> f64 {
    loop {
        for v in out.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let r = norm(out);
        if r > 0.0 {
            return r;
        }
    }
}

/// `count` i.i.d. noise vectors, row-major `count × D`.
pub fn sample_noise(model: &NoiseModel, dim_out: usize, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0.0; dim_out * count];
    for row in out.chunks_mut(dim_out) {
        model.draw_into(&mut rng, row);
    }
    out
}

/// `n` points i.i.d. uniform on `[-half_width, half_width]^d`, row-major.
pub fn sample_x(n: usize, d: usize, half_width: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0.0; n * d];
    fill_uniform(&mut rng, half_width, &mut out);
    out
}

fn fill_uniform<R: Rng + ?Sized>(rng: &mut R, half_width: f64, out: &mut [f64]) {
    for v in out {
        *v = half_width * (2.0 * rng.random::<f64>() - 1.0);
    }
}

/// A deterministic map `R^d → R^D`, optionally with analytic derivatives at
/// the origin for ground truth.
pub trait VectorFunction: Send + Sync {
    fn input_dim(&self) -> usize;

    fn output_dim(&self) -> usize;

    fn eval_into(&self, x: &[f64], out: &mut [f64]);

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.output_dim()];
        self.eval_into(x, &mut out);
        out
    }

    /// `∂^alpha f(0)`, when known.
    fn derivative_at_origin(&self, _alpha: &MultiIndex) -> Option<Vec<f64>> {
        None
    }

    /// `L[f](0)`, when every derivative it needs is known.
    fn operator_at_origin(&self, op: &DifferentialOperator) -> Option<Vec<f64>> {
        let mut out = vec![0.0; self.output_dim()];
        for term in op.terms() {
            let dv = self.derivative_at_origin(&term.alpha)?;
            for (o, v) in out.iter_mut().zip(dv) {
                *o += term.coeff * v;
            }
        }
        Some(out)
    }
}

/// Coefficient distribution for random polynomials.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientLaw {
    Uniform { low: f64, high: f64 },
}

impl Default for CoefficientLaw {
    fn default() -> Self {
        CoefficientLaw::Uniform {
            low: -1.0,
            high: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentFunctionSpec {
    pub d: usize,
    #[serde(rename = "D")]
    pub dim_out: usize,
    pub degree: usize,
    #[serde(default)]
    pub coefficient_law: CoefficientLaw,
    pub seed: u64,
}

/// Polynomial map with coefficients against the plain monomials `x^a`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialMap {
    basis: BasisSet,
    dim_out: usize,
    /// Row-major `D × |basis|`.
    coefficients: Vec<f64>,
}

impl PolynomialMap {
    /// `coefficients[j]` holds output coordinate `j`, one entry per basis index.
    pub fn new(d: usize, degree: usize, coefficients: Vec<Vec<f64>>) -> Result<Self> {
        let basis = enumerate_basis(d, degree);
        if coefficients.is_empty() {
            return Err(Error::InvalidArgument(
                "polynomial map needs an output coordinate".into(),
            ));
        }
        if let Some(bad) = coefficients.iter().find(|c| c.len() != basis.len()) {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for a basis of size {}",
                bad.len(),
                basis.len()
            )));
        }
        Ok(Self {
            dim_out: coefficients.len(),
            coefficients: coefficients.concat(),
            basis,
        })
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn degree(&self) -> usize {
        self.basis.max_degree()
    }

    pub fn coordinate(&self, j: usize) -> &[f64] {
        let m = self.basis.len();
        &self.coefficients[j * m..(j + 1) * m]
    }

    pub fn coefficient_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim_out)
            .map(|j| self.coordinate(j).to_vec())
            .collect()
    }
}

impl VectorFunction for PolynomialMap {
    fn input_dim(&self) -> usize {
        self.basis.dim()
    }

    fn output_dim(&self) -> usize {
        self.dim_out
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let mut mono = vec![0.0; self.basis.len()];
        self.basis.monomials_into(x, &mut mono);
        for (j, o) in out.iter_mut().enumerate() {
            *o = self
                .coordinate(j)
                .iter()
                .zip(&mono)
                .map(|(c, m)| c * m)
                .sum();
        }
    }

    fn derivative_at_origin(&self, alpha: &MultiIndex) -> Option<Vec<f64>> {
        if alpha.dim() != self.basis.dim() {
            return None;
        }
        // derivatives past the degree vanish
        let Some(pos) = self.basis.position(alpha) else {
            return Some(vec![0.0; self.dim_out]);
        };
        let f = alpha.factorial();
        Some(
            (0..self.dim_out)
                .map(|j| f * self.coordinate(j)[pos])
                .collect(),
        )
    }
}

/// Draws every coefficient of every output coordinate independently.
pub fn gen_random_polynomial(spec: &ExperimentFunctionSpec) -> Result<PolynomialMap> {
    if spec.d == 0 || spec.dim_out == 0 {
        return Err(Error::InvalidArgument(
            "polynomial dimensions must be positive".into(),
        ));
    }
    let CoefficientLaw::Uniform { low, high } = spec.coefficient_law;
    if !(low < high && low.is_finite() && high.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "bad coefficient range [{low}, {high}]"
        )));
    }
    let m = enumerate_basis(spec.d, spec.degree).len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let rows = (0..spec.dim_out)
        .map(|_| (0..m).map(|_| rng.random_range(low..high)).collect())
        .collect();
    PolynomialMap::new(spec.d, spec.degree, rows)
}

// Input and noise streams of one dataset seed.
const X_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

/// `n` samples `y_i = f(x_i) + z_i`, deterministic in `seed`.
pub fn make_dataset(
    f: &dyn VectorFunction,
    n: usize,
    noise: &NoiseModel,
    half_width: f64,
    seed: u64,
) -> Result<Dataset> {
    make_dataset_within(f, n, noise, half_width, f64::INFINITY, seed)
}

/// The rows of `make_dataset(f, n, noise, half_width, seed)` with
/// `‖x‖ <= radius`, without materializing the others.
///
/// Each row draws its noise from its own stream, so the retained rows are
/// identical to the corresponding rows of the full dataset.
pub fn make_dataset_within(
    f: &dyn VectorFunction,
    n: usize,
    noise: &NoiseModel,
    half_width: f64,
    radius: f64,
    seed: u64,
) -> Result<Dataset> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for_each_sample(f, n, noise, half_width, radius, seed, |x, y| {
        xs.extend_from_slice(x);
        ys.extend_from_slice(y);
    })?;
    // an empty result keeps the (d, D) shape
    Dataset::new(f.input_dim(), f.output_dim(), xs, ys)
}

/// Streams the samples of [`make_dataset_within`] to `visit` in row order,
/// holding one row in memory at a time.
pub fn for_each_sample(
    f: &dyn VectorFunction,
    n: usize,
    noise: &NoiseModel,
    half_width: f64,
    radius: f64,
    seed: u64,
    mut visit: impl FnMut(&[f64], &[f64]),
) -> Result<()> {
    noise.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument(
            "dataset size must be positive".into(),
        ));
    }
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "half width {half_width} must be positive"
        )));
    }
    let d = f.input_dim();
    let dim_out = f.output_dim();
    let mut x_rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, &[X_STREAM]));
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, &[NOISE_STREAM]));
    let mut x = vec![0.0; d];
    let mut z = vec![0.0; dim_out];
    let mut y = vec![0.0; dim_out];
    for i in 0..n {
        fill_uniform(&mut x_rng, half_width, &mut x);
        if norm(&x) > radius {
            continue;
        }
        rng.set_stream(i as u64);
        rng.set_word_pos(0);
        noise.draw_into(&mut rng, &mut z);
        f.eval_into(&x, &mut y);
        for (a, b) in y.iter_mut().zip(&z) {
            *a += b;
        }
        visit(&x, &y);
    }
    Ok(())
}
