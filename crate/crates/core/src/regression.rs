//! Local polynomial regression of a vector-valued function at the origin.
//!
//! The fit minimizes `Σ_{i ∈ I_n} ‖y_i − π(x_i)‖²` over polynomials of degree
//! `k − 1`, with `I_n` the samples in the closed ball of radius
//! `ε_n = b · n^{−1/(2k+d)}`. Coefficients are stored against the scaled
//! monomials `x^a / δ^{|a|}`, `δ` being the largest neighbor radius, which
//! keeps the design matrix entries in `[-1, 1]`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::{enumerate_basis, BasisSet, MultiIndex};
use crate::dataset::{select_neighborhood, Dataset, Neighborhood};
use crate::error::{Error, Result};
use crate::lstsq::{self, SolveDiagnostics};
use crate::operator::DifferentialOperator;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Smoothness `k`; the fitted degree is `k - 1`.
    pub k: usize,
    /// `b` in `ε_n = b · n^{-1/(2k+d)}`.
    pub bandwidth_constant: f64,
    /// Condition numbers above this are flagged in [`EstimateResult`].
    pub min_condition_warn: f64,
    /// Relative rank tolerance; `None` means `|basis| · ε_machine`.
    #[serde(default)]
    pub rank_rtol: Option<f64>,
}

impl EstimatorConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            bandwidth_constant: 1.0,
            min_condition_warn: 1e8,
            rank_rtol: None,
        }
    }

    pub fn with_bandwidth_constant(mut self, b: f64) -> Self {
        self.bandwidth_constant = b;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument(
                "smoothness k must be at least 1".into(),
            ));
        }
        if !(self.bandwidth_constant > 0.0 && self.bandwidth_constant.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "bandwidth constant must be positive and finite, got {}",
                self.bandwidth_constant
            )));
        }
        if !(self.min_condition_warn > 0.0) {
            return Err(Error::InvalidArgument(
                "condition warning threshold must be positive".into(),
            ));
        }
        if let Some(r) = self.rank_rtol {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "rank tolerance {r} is outside (0, 1)"
                )));
            }
        }
        Ok(())
    }

    pub fn degree(&self) -> usize {
        self.k - 1
    }
}

/// `ε_n = b · n^{−1/(2k+d)}`.
pub fn bandwidth(n: usize, k: usize, d: usize, b: f64) -> f64 {
    b * (n as f64).powf(-1.0 / (2 * k + d) as f64)
}

/// Rows `x_i^a / δ^{|a|}` for every point and basis index. The `a = 0`
/// column is all ones.
pub fn build_design_matrix(
    points: &[&[f64]],
    basis: &BasisSet,
    delta: f64,
) -> Result<DMatrix<f64>> {
    let delta = if delta == 0.0 {
        if points.iter().any(|p| p.iter().any(|&v| v != 0.0)) {
            return Err(Error::ZeroScale);
        }
        1.0
    } else if delta > 0.0 && delta.is_finite() {
        delta
    } else {
        return Err(Error::InvalidArgument(format!(
            "basis scale {delta} must be positive"
        )));
    };
    let cols = basis.len();
    let mut m = DMatrix::zeros(points.len(), cols);
    let mut u = vec![0.0; basis.dim()];
    let mut row = vec![0.0; cols];
    for (i, p) in points.iter().enumerate() {
        if p.len() != basis.dim() {
            return Err(Error::DimensionMismatch(format!(
                "point of dimension {} for a {}-variate basis",
                p.len(),
                basis.dim()
            )));
        }
        for (uj, &xj) in u.iter_mut().zip(p.iter()) {
            *uj = xj / delta;
        }
        basis.monomials_into(&u, &mut row);
        for (j, &v) in row.iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

/// A polynomial map `R^d → R^D` in the scaled monomial basis.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorPolynomial {
    basis: BasisSet,
    scale: f64,
    /// `|basis| × D`; row `a` holds the coefficients of `x^a / scale^{|a|}`.
    coefficients: DMatrix<f64>,
}

impl VectorPolynomial {
    pub fn new(basis: BasisSet, scale: f64, coefficients: DMatrix<f64>) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "polynomial scale {scale} must be positive"
            )));
        }
        if coefficients.nrows() != basis.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficient rows for {} basis functions",
                coefficients.nrows(),
                basis.len()
            )));
        }
        Ok(Self {
            basis,
            scale,
            coefficients,
        })
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coefficients
    }

    pub fn output_dim(&self) -> usize {
        self.coefficients.ncols()
    }

    /// Coefficient row of `alpha` (scaled basis), if present.
    pub fn coefficient(&self, alpha: &MultiIndex) -> Option<Vec<f64>> {
        let r = self.basis.position(alpha)?;
        Some(self.coefficients.row(r).iter().copied().collect())
    }

    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        let u: Vec<f64> = x.iter().map(|v| v / self.scale).collect();
        let mut mono = vec![0.0; self.basis.len()];
        self.basis.monomials_into(&u, &mut mono);
        (0..self.output_dim())
            .map(|j| {
                mono.iter()
                    .enumerate()
                    .map(|(r, m)| m * self.coefficients[(r, j)])
                    .sum()
            })
            .collect()
    }
}

/// Least-squares polynomial through the rows `indices` of `dataset`, in the
/// basis scaled by `scale`.
pub fn fit_polynomial(
    dataset: &Dataset,
    indices: &[usize],
    basis: &BasisSet,
    scale: f64,
    rank_rtol: Option<f64>,
) -> Result<(VectorPolynomial, SolveDiagnostics)> {
    if basis.dim() != dataset.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}-variate basis for {}-dimensional inputs",
            basis.dim(),
            dataset.input_dim()
        )));
    }
    if indices.len() < basis.len() {
        return Err(Error::InsufficientSamples {
            needed: basis.len(),
            found: indices.len(),
        });
    }
    let points: Vec<&[f64]> = indices.iter().map(|&i| dataset.x(i)).collect();
    let design = build_design_matrix(&points, basis, scale)?;
    let dim_out = dataset.output_dim();
    let rhs = DMatrix::from_fn(indices.len(), dim_out, |r, c| dataset.y(indices[r])[c]);
    let (coefficients, diagnostics) = lstsq::solve(design, rhs, rank_rtol)?;
    let scale = if scale == 0.0 { 1.0 } else { scale };
    Ok((
        VectorPolynomial::new(basis.clone(), scale, coefficients)?,
        diagnostics,
    ))
}

/// Result of [`fit_local_polynomial`].
#[derive(Clone, Debug)]
pub struct LocalFit {
    pub polynomial: VectorPolynomial,
    pub neighborhood: Neighborhood,
    pub diagnostics: SolveDiagnostics,
}

/// Fits the degree `k - 1` polynomial on the bandwidth neighborhood of the origin.
pub fn fit_local_polynomial(dataset: &Dataset, config: &EstimatorConfig) -> Result<LocalFit> {
    let epsilon = bandwidth(
        dataset.len(),
        config.k,
        dataset.input_dim(),
        config.bandwidth_constant,
    );
    fit_local_polynomial_within(dataset, config, epsilon)
}

/// As [`fit_local_polynomial`] with an explicit bandwidth, for callers that
/// hold only part of a larger sample.
pub fn fit_local_polynomial_within(
    dataset: &Dataset,
    config: &EstimatorConfig,
    epsilon: f64,
) -> Result<LocalFit> {
    config.validate()?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bandwidth {epsilon} must be positive"
        )));
    }
    let basis = enumerate_basis(dataset.input_dim(), config.degree());
    let neighborhood = select_neighborhood(dataset, epsilon);
    if neighborhood.count() < basis.len() {
        return Err(Error::InsufficientSamples {
            needed: basis.len(),
            found: neighborhood.count(),
        });
    }
    // δ = 0 only when every neighbor sits at the origin; a unit scale then
    // leaves the constant fit well posed and higher degrees rank deficient.
    let scale = if neighborhood.delta > 0.0 {
        neighborhood.delta
    } else {
        1.0
    };
    let (polynomial, diagnostics) = fit_polynomial(
        dataset,
        &neighborhood.indices,
        &basis,
        scale,
        config.rank_rtol,
    )?;
    Ok(LocalFit {
        polynomial,
        neighborhood,
        diagnostics,
    })
}

/// `L[π](0) = Σ_a c_a · a! · coeff_a / δ^{|a|}`.
pub fn apply_operator(poly: &VectorPolynomial, op: &DifferentialOperator) -> Result<Vec<f64>> {
    let basis = poly.basis();
    if op.dim() != basis.dim() {
        return Err(Error::DimensionMismatch(format!(
            "operator of dimension {} on a {}-variate polynomial",
            op.dim(),
            basis.dim()
        )));
    }
    if op.order() > basis.max_degree() {
        return Err(Error::OperatorOrderTooHigh {
            order: op.order(),
            max_degree: basis.max_degree(),
        });
    }
    let mut out = vec![0.0; poly.output_dim()];
    for term in op.terms() {
        let row = basis
            .position(&term.alpha)
            .expect("every index up to the basis degree is present");
        let weight =
            term.coeff * term.alpha.factorial() / poly.scale().powi(term.alpha.order() as i32);
        for (o, c) in out.iter_mut().zip(poly.coefficients().row(row).iter()) {
            *o += weight * c;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateResult {
    /// `T̂_n ∈ R^D`.
    pub value: Vec<f64>,
    pub neighborhood: Neighborhood,
    pub condition_number: f64,
    pub rank_ok: bool,
    /// Condition number exceeded [`EstimatorConfig::min_condition_warn`].
    pub ill_conditioned: bool,
}

/// Estimates `L[f](0)` from the samples.
pub fn estimate(
    dataset: &Dataset,
    op: &DifferentialOperator,
    config: &EstimatorConfig,
) -> Result<EstimateResult> {
    let epsilon = bandwidth(
        dataset.len(),
        config.k,
        dataset.input_dim(),
        config.bandwidth_constant,
    );
    estimate_within(dataset, op, config, epsilon)
}

/// [`estimate`] with an explicit bandwidth.
pub fn estimate_within(
    dataset: &Dataset,
    op: &DifferentialOperator,
    config: &EstimatorConfig,
    epsilon: f64,
) -> Result<EstimateResult> {
    config.validate()?;
    if op.dim() != dataset.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "operator of dimension {} on {}-dimensional inputs",
            op.dim(),
            dataset.input_dim()
        )));
    }
    if op.order() > config.degree() {
        return Err(Error::OperatorOrderTooHigh {
            order: op.order(),
            max_degree: config.degree(),
        });
    }
    let fit = fit_local_polynomial_within(dataset, config, epsilon)?;
    let value = apply_operator(&fit.polynomial, op)?;
    let condition_number = fit.diagnostics.condition_number;
    Ok(EstimateResult {
        value,
        neighborhood: fit.neighborhood,
        condition_number,
        rank_ok: fit.diagnostics.rank == fit.polynomial.basis().len(),
        ill_conditioned: condition_number > config.min_condition_warn,
    })
}
