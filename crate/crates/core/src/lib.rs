//! Local polynomial estimation of linear differential functionals of
//! vector-valued regression functions, with median-of-means style robust
//! aggregation and a Monte-Carlo convergence harness.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod lstsq;
pub mod operator;
pub mod regression;
pub mod robust;
pub mod seed;
pub mod synth;

pub use basis::{enumerate_basis, BasisSet, MultiIndex};
pub use dataset::{csv_header, select_neighborhood, write_csv_row, Dataset, Neighborhood};
pub use error::{Error, Result};
pub use operator::{DifferentialOperator, OperatorSpec, Term};
pub use regression::{
    apply_operator, bandwidth, estimate, estimate_within, fit_local_polynomial,
    fit_local_polynomial_within, EstimateResult, EstimatorConfig, LocalFit, VectorPolynomial,
};
pub use robust::{
    adaptive_median, estimate_on_splits, estimate_robust, median_ball, num_splits, split_dataset,
    split_indices, AggregationConfig, Center, RadiusMode, RobustEstimate,
};
pub use synth::{
    for_each_sample, gen_random_polynomial, make_dataset, make_dataset_within, CoefficientLaw,
    ExperimentFunctionSpec, NoiseKind, NoiseModel, PolynomialMap, VectorFunction,
};
