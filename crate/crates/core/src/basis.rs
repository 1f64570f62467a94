//! Multi-indices and the graded monomial basis they span.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Exponent tuple `(a_1, ..., a_d)` addressing the monomial `x^a` and the
/// mixed partial derivative `∂^a`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<u32>", into = "Vec<u32>")]
pub struct MultiIndex {
    exponents: Vec<u32>,
    order: usize,
}

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        let order = exponents.iter().map(|&e| e as usize).sum();
        Self { exponents, order }
    }

    pub fn zero(d: usize) -> Self {
        Self::new(vec![0; d])
    }

    /// Unit index along coordinate `axis` (zero based).
    pub fn unit(d: usize, axis: usize) -> Self {
        let mut e = vec![0; d];
        e[axis] = 1;
        Self::new(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    /// Total degree `|a|`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Multi-index factorial `a! = a_1! ... a_d!`.
    pub fn factorial(&self) -> f64 {
        self.exponents
            .iter()
            .map(|&e| (1..=e).map(f64::from).product::<f64>())
            .product()
    }

    /// `x^a` for a point of matching dimension.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        self.exponents
            .iter()
            .zip(x)
            .map(|(&e, &v)| v.powi(e as i32))
            .product()
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(exponents: Vec<u32>) -> Self {
        Self::new(exponents)
    }
}

impl From<MultiIndex> for Vec<u32> {
    fn from(m: MultiIndex) -> Self {
        m.exponents
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.exponents)
    }
}

/// All multi-indices of dimension `d` with total degree at most `max_degree`,
/// in graded lexicographic order: degree ascending, and within one degree the
/// leading exponent descending, e.g. `(2,0), (1,1), (0,2)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisSet {
    dim: usize,
    max_degree: usize,
    indices: Vec<MultiIndex>,
}

impl BasisSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        if alpha.dim() != self.dim || alpha.order() > self.max_degree {
            return None;
        }
        self.indices.iter().position(|a| a == alpha)
    }

    /// Evaluates every basis monomial at `u` into `out` (length `len()`).
    pub(crate) fn monomials_into(&self, u: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.len());
        let p = self.max_degree;
        // powers[j * (p + 1) + e] = u_j^e
        let mut powers = vec![1.0; self.dim * (p + 1)];
        for (j, &v) in u.iter().enumerate() {
            for e in 1..=p {
                powers[j * (p + 1) + e] = powers[j * (p + 1) + e - 1] * v;
            }
        }
        for (slot, alpha) in out.iter_mut().zip(&self.indices) {
            *slot = alpha
                .exponents()
                .iter()
                .enumerate()
                .map(|(j, &e)| powers[j * (p + 1) + e as usize])
                .product();
        }
    }
}

/// Enumerates the basis of polynomials in `d` variables of degree `<= max_degree`.
///
/// The cardinality is `binomial(max_degree + d, d)`.
pub fn enumerate_basis(d: usize, max_degree: usize) -> BasisSet {
    assert!(d >= 1, "basis dimension must be at least 1");
    let mut indices = Vec::new();
    let mut current = vec![0u32; d];
    for degree in 0..=max_degree {
        push_compositions(&mut indices, &mut current, 0, degree as u32);
    }
    BasisSet {
        dim: d,
        max_degree,
        indices,
    }
}

// Exponent vectors of `current[pos..]` summing to `remaining`, leading exponent first
// taking the largest value.
fn push_compositions(out: &mut Vec<MultiIndex>, current: &mut [u32], pos: usize, remaining: u32) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(MultiIndex::new(current.to_vec()));
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e;
        push_compositions(out, current, pos + 1, remaining - e);
    }
    current[pos] = 0;
}
