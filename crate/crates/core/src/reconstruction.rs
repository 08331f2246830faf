//! Rebuilding the inner products `<m|a>` from conditional probabilities.
//!
//! Given a table of `p(m|a,b)` and the Born probabilities of the reference
//! outcome `b`,
//!
//! ```text
//! <m|a> = sqrt(p(b|a) / p(b|m)) * p(m|a,b)
//! ```
//!
//! holds exactly in the gauge where every `<b|.>` is real and positive. Any
//! other choice of phases for the basis kets differs from it by diagonal
//! unit-modulus factors on either side.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{QergoError, RefSide, Result};
use crate::linalg::{check_overlaps, Basis, Ket, C64};
use crate::probability::{cond_prob_table, TransitionTable};

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMatrix {
    mat: DMatrix<C64>,
    gauge_ref: Ket,
}

impl OverlapMatrix {
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn gauge_ref(&self) -> &Ket {
        &self.gauge_ref
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.mat.nrows(), self.mat.ncols())
    }

    /// Entrywise `|<m|a>|`.
    pub fn magnitudes(&self) -> DMatrix<f64> {
        self.mat.map(|z| z.norm())
    }
}

/// `|<b|col_j>|^2` for each column of `basis`.
pub fn reference_born(basis: &Basis, b: &Ket) -> Result<Vec<f64>> {
    Ok(basis.overlaps_with_ket(b)?.iter().map(|z| z.norm_sqr()).collect())
}

fn check_born(p: &[f64], tol: f64, side: RefSide) -> Result<()> {
    match p.iter().position(|&v| !(v > tol * tol)) {
        Some(index) => Err(QergoError::OrthogonalReference { side, index, overlap: p[index].max(0.0).sqrt(), tol }),
        None => Ok(()),
    }
}

/// Noisy tables are used as given; quality shows up in
/// [`unitarity_residual`].
pub fn reconstruct_overlaps(table: &TransitionTable, pba: &[f64], pbm: &[f64], tol: f64) -> Result<OverlapMatrix> {
    let (dm, da) = table.dims();
    if pba.len() != da {
        return Err(QergoError::DimMismatch { expected: da, found: pba.len() });
    }
    if pbm.len() != dm {
        return Err(QergoError::DimMismatch { expected: dm, found: pbm.len() });
    }
    check_born(pba, tol, RefSide::Initial)?;
    check_born(pbm, tol, RefSide::Intermediate)?;
    let mat = DMatrix::from_fn(dm, da, |m, a| table.entry(m, a) * (pba[a] / pbm[m]).sqrt());
    Ok(OverlapMatrix { mat, gauge_ref: table.reference().clone() })
}

/// Rephase every column so that `<b|col>` is real and positive.
pub fn gauge_fix(basis: &Basis, b: &Ket, tol: f64) -> Result<Basis> {
    let ov = basis.overlaps_with_ket(b)?;
    check_overlaps(&ov, tol, RefSide::Initial)?;
    let phases: Vec<f64> = ov.iter().map(|z| -z.arg()).collect();
    basis.rephased(&phases)
}

/// `max|M^dag M - I|`.
pub fn unitarity_residual(m: &OverlapMatrix) -> Result<f64> {
    let (rows, cols) = m.dims();
    if rows != cols {
        return Err(QergoError::ShapeError { rows, cols });
    }
    let g = m.mat.ad_mul(&m.mat) - DMatrix::<C64>::identity(rows, cols);
    Ok(g.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// `<m|a>` computed directly from both bases after gauge fixing to `b`.
pub fn gauged_overlaps(basis_m: &Basis, basis_a: &Basis, b: &Ket, tol: f64) -> Result<DMatrix<C64>> {
    gauge_fix(basis_m, b, tol)?.overlaps(&gauge_fix(basis_a, b, tol)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundTrip {
    pub max_entry_error: f64,
    pub unitarity_residual: f64,
}

/// Exact tables in, reconstruction out, compared against the gauged truth.
pub fn round_trip(basis_m: &Basis, basis_a: &Basis, b: &Ket, tol: f64) -> Result<RoundTrip> {
    let table = cond_prob_table(basis_m, basis_a, b, tol)?;
    let rec = reconstruct_overlaps(&table, &reference_born(basis_a, b)?, &reference_born(basis_m, b)?, tol)?;
    let truth = gauged_overlaps(basis_m, basis_a, b, tol)?;
    let max_entry_error = (rec.matrix() - truth).iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(RoundTrip { max_entry_error, unitarity_residual: unitarity_residual(&rec)? })
}
