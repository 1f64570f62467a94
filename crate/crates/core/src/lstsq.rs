//! Least squares with one factorization shared by every right-hand side.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SolveDiagnostics {
    /// Singular values of the design matrix, descending.
    pub singular_values: Vec<f64>,
    pub rank: usize,
    /// `σ_max / σ_min`.
    pub condition_number: f64,
}

/// Minimizes `‖A X − B‖_F` for a tall `A` with full column rank.
///
/// `A = QR` by Householder QR; the singular values of the square `R` equal
/// those of `A` and decide the numerical rank at tolerance `rtol · σ_max`
/// (default `rtol = cols · ε`). Rank deficiency is an error.
pub fn solve(
    a: DMatrix<f64>,
    mut b: DMatrix<f64>,
    rtol: Option<f64>,
) -> Result<(DMatrix<f64>, SolveDiagnostics)> {
    let (rows, cols) = a.shape();
    if rows < cols {
        return Err(Error::InsufficientSamples {
            needed: cols,
            found: rows,
        });
    }
    if b.nrows() != rows {
        return Err(Error::DimensionMismatch(format!(
            "{} right-hand side rows for a {rows}-row system",
            b.nrows()
        )));
    }
    let qr = a.qr();
    let r = qr.r();
    let mut singular_values = r.clone().singular_values().as_slice().to_vec();
    singular_values.sort_by(|x, y| y.total_cmp(x));
    let sigma_max = singular_values.first().copied().unwrap_or(0.0);
    let sigma_min = singular_values.last().copied().unwrap_or(0.0);
    let tol = rtol.unwrap_or(cols as f64 * f64::EPSILON) * sigma_max;
    let rank = singular_values.iter().filter(|&&s| s > tol).count();
    let diagnostics = SolveDiagnostics {
        condition_number: if sigma_min > 0.0 {
            sigma_max / sigma_min
        } else {
            f64::INFINITY
        },
        singular_values,
        rank,
    };
    if rank < cols {
        return Err(Error::RankDeficient {
            rank,
            expected: cols,
        });
    }
    qr.q_tr_mul(&mut b);
    let top = b.rows(0, cols).into_owned();
    let x = r.solve_upper_triangular(&top).ok_or(Error::RankDeficient {
        rank,
        expected: cols,
    })?;
    Ok((x, diagnostics))
}
