//! Linear differential operators `L = Σ c_a ∂^a` evaluated at the origin.

use serde::{Deserialize, Serialize};

use crate::basis::MultiIndex;
use crate::error::{Error, Result};

/// One `c_a ∂^a` term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub alpha: MultiIndex,
    pub coeff: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DifferentialOperator {
    dim: usize,
    terms: Vec<Term>,
    order: usize,
}

impl DifferentialOperator {
    /// Builds an operator from its terms. Repeated multi-indices are merged.
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        let dim = terms
            .first()
            .map(|t| t.alpha.dim())
            .ok_or_else(|| Error::InvalidArgument("operator has no terms".into()))?;
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "operator multi-indices are empty".into(),
            ));
        }
        let mut merged: Vec<Term> = Vec::with_capacity(terms.len());
        for t in terms {
            if t.alpha.dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "operator term {:?} has dimension {}, expected {dim}",
                    t.alpha,
                    t.alpha.dim()
                )));
            }
            if !t.coeff.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "operator coefficient for {:?} is not finite",
                    t.alpha
                )));
            }
            match merged.iter_mut().find(|m| m.alpha == t.alpha) {
                Some(m) => m.coeff += t.coeff,
                None => merged.push(t),
            }
        }
        let order = merged.iter().map(|t| t.alpha.order()).max().unwrap_or(0);
        Ok(Self {
            dim,
            terms: merged,
            order,
        })
    }

    /// Point evaluation, `L = ∂^0`.
    pub fn identity(d: usize) -> Self {
        Self::derivative(MultiIndex::zero(d))
    }

    /// A single partial derivative `∂^alpha`.
    pub fn derivative(alpha: MultiIndex) -> Self {
        let dim = alpha.dim();
        let order = alpha.order();
        Self {
            dim,
            terms: vec![Term { alpha, coeff: 1.0 }],
            order,
        }
    }

    /// First partial derivative along coordinate `axis` (zero based).
    pub fn partial(d: usize, axis: usize) -> Self {
        Self::derivative(MultiIndex::unit(d, axis))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn scaled(&self, c: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| Term {
                alpha: t.alpha.clone(),
                coeff: c * t.coeff,
            })
            .collect();
        Self::new(terms).expect("scaling keeps an operator valid")
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        Self::new(self.terms.iter().chain(&other.terms).cloned().collect())
    }

    /// Parses the CLI operator syntax for inputs of dimension `d`:
    /// `identity`, `d<j>`, `d<j>d<l>` (any number of factors, 1-based axes),
    /// or a JSON list of `{"alpha": [...], "coeff": c}` objects.
    pub fn parse(text: &str, d: usize) -> Result<Self> {
        let text = text.trim();
        if text.starts_with('[') {
            let terms: Vec<Term> = serde_json::from_str(text)
                .map_err(|e| Error::Parse(format!("operator JSON: {e}")))?;
            let op = Self::new(terms)?;
            if op.dim != d {
                return Err(Error::DimensionMismatch(format!(
                    "operator has dimension {}, data has {d}",
                    op.dim
                )));
            }
            return Ok(op);
        }
        if text == "identity" {
            return Ok(Self::identity(d));
        }
        let Some(rest) = text.strip_prefix('d') else {
            return Err(Error::Parse(format!(
                "unknown operator {text:?}; expected identity, d<j>, d<j>d<l> or a JSON term list"
            )));
        };
        let mut exponents = vec![0u32; d];
        for factor in rest.split('d') {
            let axis: usize = factor
                .parse()
                .map_err(|_| Error::Parse(format!("bad axis {factor:?} in operator {text:?}")))?;
            if axis == 0 || axis > d {
                return Err(Error::Parse(format!(
                    "axis {axis} in operator {text:?} is out of range 1..={d}"
                )));
            }
            exponents[axis - 1] += 1;
        }
        Ok(Self::derivative(MultiIndex::new(exponents)))
    }
}

/// Serialized form of an operator inside JSON configs: either the textual
/// mini-language or an explicit term list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorSpec {
    Text(String),
    Terms(Vec<Term>),
}

impl Default for OperatorSpec {
    fn default() -> Self {
        OperatorSpec::Text("identity".into())
    }
}

impl OperatorSpec {
    pub fn resolve(&self, d: usize) -> Result<DifferentialOperator> {
        match self {
            OperatorSpec::Text(t) => DifferentialOperator::parse(t, d),
            OperatorSpec::Terms(terms) => {
                let op = DifferentialOperator::new(terms.clone())?;
                if op.dim() != d {
                    return Err(Error::DimensionMismatch(format!(
                        "operator has dimension {}, expected {d}",
                        op.dim()
                    )));
                }
                Ok(op)
            }
        }
    }
}
