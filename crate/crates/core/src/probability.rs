//! Weak values, complex conditional probabilities and Kirkwood-Dirac
//! distributions.
//!
//! The conditional probability of an intermediate outcome `m` given an
//! initial outcome `a` and a final outcome `b` is
//!
//! ```text
//! p(m|a,b) = <b|m><m|a> / <b|a>
//! ```
//!
//! which is the weak value of the projector `|m><m|` between `a` and `b`.
//! Summed over a complete basis `{m}` it is exactly one, but individual
//! entries are complex.
//!
//! The joint quasiprobability of a state over bases `A` and `B` uses the
//! a-then-b ordering `rho(a,b) = <b|a><a|rho|b>`. Swapping the roles of the
//! two bases conjugates every entry.

use nalgebra::{DMatrix, DVector};

use crate::error::{QergoError, RefSide, Result};
use crate::exec::{map_indices, Execution};
use crate::linalg::{check_overlaps, Basis, Ket, Operator, C64, NORM_TOL};

/// Default threshold on `|<f|psi>|` and reference overlaps.
pub const DEFAULT_TOL: f64 = 1e-12;

/// `<f|A|psi> / <f|psi>`.
pub fn weak_value(a: &Operator, psi: &Ket, f: &Ket, tol: f64) -> Result<C64> {
    let num = a.matrix_element(f, psi)?;
    let den = f.inner(psi);
    if den.norm() <= tol {
        return Err(QergoError::OrthogonalPostselection { overlap: den.norm(), tol });
    }
    Ok(num / den)
}

/// `p(m|a,b) = <b|m><m|a> / <b|a>`.
pub fn cond_prob(m: &Ket, a: &Ket, b: &Ket, tol: f64) -> Result<C64> {
    if m.dim() != a.dim() || b.dim() != a.dim() {
        let found = if m.dim() != a.dim() { m.dim() } else { b.dim() };
        return Err(QergoError::DimMismatch { expected: a.dim(), found });
    }
    let ba = b.inner(a);
    if ba.norm() <= tol {
        return Err(QergoError::OrthogonalReference { side: RefSide::Initial, index: 0, overlap: ba.norm(), tol });
    }
    Ok(b.inner(m) * m.inner(a) / ba)
}

/// Table of `p(m|a,b)` for a fixed reference `b`; `entries[(m, a)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable {
    entries: DMatrix<C64>,
    ref_b: Ket,
}

impl TransitionTable {
    /// Wrap externally estimated entries (e.g. from sampled pointer data).
    /// No normalization is applied.
    pub fn from_entries(entries: DMatrix<C64>, ref_b: Ket) -> Self {
        TransitionTable { entries, ref_b }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.entries.nrows(), self.entries.ncols())
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn entry(&self, m: usize, a: usize) -> C64 {
        self.entries[(m, a)]
    }

    pub fn reference(&self) -> &Ket {
        &self.ref_b
    }

    /// `max_a |sum_m p(m|a,b) - 1|`.
    pub fn column_sum_deviation(&self) -> f64 {
        self.entries.column_iter().map(|col| (col.sum() - C64::new(1.0, 0.0)).norm()).fold(0.0, f64::max)
    }
}

/// Full `dM x dA` table of conditional probabilities.
///
/// Every reference overlap `<b|a>` and `<b|m>` must exceed `tol`; the first
/// failing `a` index is reported, then the first failing `m`.
pub fn cond_prob_table(basis_m: &Basis, basis_a: &Basis, b: &Ket, tol: f64) -> Result<TransitionTable> {
    let ba = basis_a.overlaps_with_ket(b)?;
    let bm = basis_m.overlaps_with_ket(b)?;
    check_overlaps(&ba, tol, RefSide::Initial)?;
    check_overlaps(&bm, tol, RefSide::Intermediate)?;
    let ma = basis_m.overlaps(basis_a)?;
    let entries = DMatrix::from_fn(ma.nrows(), ma.ncols(), |m, a| bm[m] * ma[(m, a)] / ba[a]);
    Ok(TransitionTable { entries, ref_b: b.clone() })
}

/// Complex conditional probabilities `p(x|psi,post)` over the basis `{x}`.
///
/// The result sums to one. When `<post|x>` is the same for every `x` (the
/// uniform zero-momentum ket against the position basis) it is the
/// wavefunction divided by the sum of its amplitudes.
pub fn wavefunction_via_weak(psi: &Ket, basis_x: &Basis, post: &Ket, tol: f64) -> Result<DVector<C64>> {
    let den = post.inner(psi);
    if den.norm() <= tol {
        return Err(QergoError::OrthogonalPostselection { overlap: den.norm(), tol });
    }
    let post_x = basis_x.overlaps_with_ket(post)?;
    let x_psi = basis_x.coordinates(psi)?;
    Ok(post_x.component_mul(&x_psi) / den)
}

/// Positive semidefinite, unit-trace hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(mat: DMatrix<C64>) -> Result<Self> {
        let op = Operator::hermitian(mat).map_err(|e| QergoError::InvalidDensity { reason: e.to_string() })?;
        let mat = op.matrix().clone();
        let tr = mat.trace();
        if (tr - C64::new(1.0, 0.0)).norm() >= NORM_TOL {
            return Err(QergoError::InvalidDensity { reason: format!("trace {tr} != 1") });
        }
        let min_eig = mat.clone().symmetric_eigenvalues().min();
        if min_eig < -1e-10 {
            return Err(QergoError::InvalidDensity { reason: format!("negative eigenvalue {min_eig:.3e}") });
        }
        Ok(DensityMatrix { mat })
    }

    pub fn pure(psi: &Ket) -> Self {
        DensityMatrix { mat: psi.outer() }
    }

    /// Convex mixture `sum_k w_k |psi_k><psi_k|`; weights are renormalized.
    pub fn mixture(weights: &[f64], states: &[Ket]) -> Result<Self> {
        let first = states.first().ok_or(QergoError::InvalidDimension { dim: 0 })?;
        if weights.len() != states.len() {
            return Err(QergoError::DimMismatch { expected: states.len(), found: weights.len() });
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(QergoError::InvalidParameter("negative mixture weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(QergoError::InvalidParameter("mixture weights sum to zero".into()));
        }
        let d = first.dim();
        let mut mat = DMatrix::zeros(d, d);
        for (w, s) in weights.iter().zip(states) {
            if s.dim() != d {
                return Err(QergoError::DimMismatch { expected: d, found: s.dim() });
            }
            mat += s.outer() * C64::new(w / total, 0.0);
        }
        Self::new(mat)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    /// Born probabilities `<m|rho|m>` in `basis`.
    pub fn born(&self, basis: &Basis) -> Result<Vec<f64>> {
        if basis.dim() != self.dim() {
            return Err(QergoError::DimMismatch { expected: self.dim(), found: basis.dim() });
        }
        let u = basis.matrix();
        let r = u.ad_mul(&(&self.mat * u));
        Ok((0..self.dim()).map(|m| r[(m, m)].re).collect())
    }
}

/// Kirkwood-Dirac quasiprobability; `entries[(a, b)] = <b|a><a|rho|b>`.
#[derive(Debug, Clone, PartialEq)]
pub struct KDDistribution {
    basis_a: Basis,
    basis_b: Basis,
    entries: DMatrix<C64>,
}

impl KDDistribution {
    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn basis_a(&self) -> &Basis {
        &self.basis_a
    }

    pub fn basis_b(&self) -> &Basis {
        &self.basis_b
    }

    pub fn total(&self) -> C64 {
        self.entries.sum()
    }

    /// `sum_b rho(a,b)` for each `a`.
    pub fn marginal_a(&self) -> Vec<C64> {
        self.entries.row_iter().map(|r| r.sum()).collect()
    }

    /// `sum_a rho(a,b)` for each `b`.
    pub fn marginal_b(&self) -> Vec<C64> {
        self.entries.column_iter().map(|c| c.sum()).collect()
    }
}

pub fn kd_distribution(rho: &DensityMatrix, basis_a: &Basis, basis_b: &Basis) -> Result<KDDistribution> {
    for found in [basis_a.dim(), basis_b.dim()] {
        if found != rho.dim() {
            return Err(QergoError::DimMismatch { expected: rho.dim(), found });
        }
    }
    let ba = basis_b.overlaps(basis_a)?;
    let arb = basis_a.matrix().ad_mul(&(rho.matrix() * basis_b.matrix()));
    let entries = DMatrix::from_fn(rho.dim(), rho.dim(), |a, b| ba[(b, a)] * arb[(a, b)]);
    Ok(KDDistribution { basis_a: basis_a.clone(), basis_b: basis_b.clone(), entries })
}

/// `p(m) = sum_{a,b} p(m|a,b) rho(a,b)` with the complex sum kept.
pub fn born_via_bayes_complex(kd: &KDDistribution, basis_m: &Basis, tol: f64) -> Result<Vec<C64>> {
    let d = kd.entries.nrows();
    if basis_m.dim() != d {
        return Err(QergoError::DimMismatch { expected: d, found: basis_m.dim() });
    }
    // ba[(b, a)] = <b|a>, bm[(b, m)] = <b|m>, ma[(m, a)] = <m|a>
    let ba = kd.basis_b.overlaps(&kd.basis_a)?;
    for b in 0..d {
        for a in 0..d {
            let o = ba[(b, a)].norm();
            if o <= tol {
                return Err(QergoError::OrthogonalReference { side: RefSide::Initial, index: a, overlap: o, tol });
            }
        }
    }
    let bm = kd.basis_b.overlaps(basis_m)?;
    let ma = basis_m.overlaps(&kd.basis_a)?;
    let rho = &kd.entries;
    Ok(map_indices(Execution::default(), d, |m| {
        let mut acc = C64::new(0.0, 0.0);
        for b in 0..d {
            for a in 0..d {
                acc += bm[(b, m)] * ma[(m, a)] / ba[(b, a)] * rho[(a, b)];
            }
        }
        acc
    }))
}

/// Real measurement probabilities from a quasiprobability and the complex
/// conditional kernel. The discarded imaginary parts vanish identically.
pub fn born_via_bayes(kd: &KDDistribution, basis_m: &Basis, tol: f64) -> Result<Vec<f64>> {
    Ok(born_via_bayes_complex(kd, basis_m, tol)?.into_iter().map(|z| z.re).collect())
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::linalg::{make_fourier_basis, random_basis, random_state, FourierSign};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2 as S;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn plus() -> Ket {
        Ket::from_real(&[1.0, 1.0]).unwrap()
    }

    fn plus_i() -> Ket {
        Ket::from_amplitudes(&[c(1.0, 0.0), c(0.0, 1.0)]).unwrap()
    }

    #[test]
    fn weak_value_qubit_reference() {
        let a = Operator::index_projector(2, 1).unwrap();
        let w = weak_value(&a, &plus(), &plus_i(), DEFAULT_TOL).unwrap();
        assert!((w - c(0.5, -0.5)).norm() < 1e-14);
    }

    #[test]
    fn weak_value_with_f_equal_psi_is_expectation() {
        let psi = random_state(6, 1).unwrap();
        let a = crate::linalg::random_hermitian_from(6, &mut crate::linalg::stream_rng(1, 3)).unwrap();
        let w = weak_value(&a, &psi, &psi, DEFAULT_TOL).unwrap();
        let e = a.expectation(&psi).unwrap();
        assert!((w - e).norm() < 1e-12);
        assert!(w.im.abs() < 1e-12);
    }

    #[test]
    fn weak_value_of_identity_is_one() {
        let id = Operator::identity(5).unwrap();
        let w = weak_value(&id, &random_state(5, 1).unwrap(), &random_state(5, 2).unwrap(), DEFAULT_TOL).unwrap();
        assert!((w - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn weak_value_orthogonal_postselection() {
        let a = Operator::identity(2).unwrap();
        let err =
            weak_value(&a, &Ket::basis_state(2, 0).unwrap(), &Ket::basis_state(2, 1).unwrap(), 1e-12).unwrap_err();
        assert!(matches!(err, QergoError::OrthogonalPostselection { .. }));
    }

    #[test]
    fn cond_prob_qubit_reference() {
        let a = Ket::basis_state(2, 0).unwrap();
        let p = cond_prob(&plus_i(), &a, &plus(), DEFAULT_TOL).unwrap();
        // <b|m> = (1+i)/2, <m|a> = 1/sqrt2, <b|a> = 1/sqrt2
        assert!((p - c(0.5, 0.5)).norm() < 1e-14);
    }

    #[test]
    fn cond_prob_same_basis_is_kronecker() {
        let basis = random_basis(4, 2).unwrap();
        let b = random_state(4, 3).unwrap();
        for m in 0..4 {
            for a in 0..4 {
                let p = cond_prob(&basis.ket(m), &basis.ket(a), &b, DEFAULT_TOL).unwrap();
                let expect = if m == a { 1.0 } else { 0.0 };
                assert!((p - c(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn cond_prob_orthogonal_reference() {
        let err = cond_prob(&plus(), &Ket::basis_state(2, 0).unwrap(), &Ket::basis_state(2, 1).unwrap(), DEFAULT_TOL)
            .unwrap_err();
        assert!(matches!(err, QergoError::OrthogonalReference { .. }));
    }

    #[test]
    fn table_same_basis_is_identity() {
        let basis = random_basis(5, 8).unwrap();
        let t = cond_prob_table(&basis, &basis, &random_state(5, 1).unwrap(), DEFAULT_TOL).unwrap();
        let id = DMatrix::<C64>::identity(5, 5);
        assert!((t.entries() - id).norm() < 1e-12);
    }

    #[test]
    fn table_magnitudes_for_mub_with_uniform_reference() {
        let d = 6;
        let comp = Basis::computational(d).unwrap();
        let four = make_fourier_basis(d, FourierSign::Plus).unwrap();
        // uniform ket is Fourier column 0; use a reference that overlaps every
        // Fourier column as well
        let b = random_state(d, 11).unwrap();
        let t = cond_prob_table(&four, &comp, &b, DEFAULT_TOL).unwrap();
        for m in 0..d {
            for a in 0..d {
                let direct = b.inner(&four.ket(m)) * four.ket(m).inner(&comp.ket(a)) / b.inner(&comp.ket(a));
                assert_abs_diff_eq!(t.entry(m, a).norm(), direct.norm(), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn table_reports_failing_index() {
        let comp = Basis::computational(3).unwrap();
        let b = Ket::from_real(&[1.0, 0.0, 1.0]).unwrap();
        let err = cond_prob_table(&comp, &comp, &b, DEFAULT_TOL).unwrap_err();
        match err {
            QergoError::OrthogonalReference { side, index, .. } => {
                assert_eq!(side, RefSide::Initial);
                assert_eq!(index, 1);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn wavefunction_of_position_eigenstate_is_indicator() {
        let d = 5;
        let psi = Ket::basis_state(d, 3).unwrap();
        let v = wavefunction_via_weak(&psi, &Basis::computational(d).unwrap(), &Ket::uniform(d).unwrap(), DEFAULT_TOL)
            .unwrap();
        for x in 0..d {
            let e = if x == 3 { 1.0 } else { 0.0 };
            assert!((v[x] - c(e, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn wavefunction_d2_reference_values() {
        let psi = Ket::from_real(&[(1.0f64 / 3.0).sqrt(), (2.0f64 / 3.0).sqrt()]).unwrap();
        let v = wavefunction_via_weak(&psi, &Basis::computational(2).unwrap(), &plus(), DEFAULT_TOL).unwrap();
        assert_abs_diff_eq!(v[0].re, 0.414_213_562_373_095, epsilon = 1e-12);
        assert_abs_diff_eq!(v[1].re, 0.585_786_437_626_905, epsilon = 1e-12);
        assert_abs_diff_eq!(v[0].im, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1].im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn kd_of_diagonal_state_in_own_basis() {
        let basis = random_basis(4, 3).unwrap();
        let w = [0.4, 0.3, 0.2, 0.1];
        let rho = DensityMatrix::mixture(&w, &basis.kets()).unwrap();
        let kd = kd_distribution(&rho, &basis, &basis).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let e = if a == b { w[a] } else { 0.0 };
                assert!((kd.entries()[(a, b)] - c(e, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn kd_qubit_reference() {
        let rho = DensityMatrix::pure(&Ket::basis_state(2, 0).unwrap());
        let kd = kd_distribution(
            &rho,
            &Basis::computational(2).unwrap(),
            &make_fourier_basis(2, FourierSign::Plus).unwrap(),
        )
        .unwrap();
        let expect = [[0.5, 0.5], [0.0, 0.0]];
        for a in 0..2 {
            for b in 0..2 {
                assert!((kd.entries()[(a, b)] - c(expect[a][b], 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn kd_swap_conjugates() {
        let d = 5;
        let psi = random_state(d, 1).unwrap();
        let phi = random_state(d, 2).unwrap();
        let rho = DensityMatrix::mixture(&[0.7, 0.3], &[psi, phi]).unwrap();
        let a = random_basis(d, 3).unwrap();
        let b = random_basis(d, 4).unwrap();
        let ab = kd_distribution(&rho, &a, &b).unwrap();
        let ba = kd_distribution(&rho, &b, &a).unwrap();
        assert!((ab.entries().map(|z| z.conj()) - ba.entries().transpose()).norm() < 1e-12);
    }

    #[test]
    fn kd_marginals_are_born() {
        let d = 6;
        let rho = DensityMatrix::mixture(
            &[0.5, 0.25, 0.25],
            &[random_state(d, 1).unwrap(), random_state(d, 2).unwrap(), random_state(d, 3).unwrap()],
        )
        .unwrap();
        let a = random_basis(d, 5).unwrap();
        let b = random_basis(d, 6).unwrap();
        let kd = kd_distribution(&rho, &a, &b).unwrap();
        assert!((kd.total() - c(1.0, 0.0)).norm() < 1e-12);
        for (z, p) in kd.marginal_a().iter().zip(rho.born(&a).unwrap()) {
            assert!((z - c(p, 0.0)).norm() < 1e-12);
            assert!(p >= -1e-12);
        }
        for (z, p) in kd.marginal_b().iter().zip(rho.born(&b).unwrap()) {
            assert!((z - c(p, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn kd_dimension_mismatch() {
        let rho = DensityMatrix::pure(&random_state(3, 1).unwrap());
        let err =
            kd_distribution(&rho, &Basis::computational(3).unwrap(), &Basis::computational(4).unwrap()).unwrap_err();
        assert_eq!(err, QergoError::DimMismatch { expected: 3, found: 4 });
    }

    #[test]
    fn bayes_in_own_basis_gives_diagonal() {
        let d = 4;
        let rho = DensityMatrix::pure(&random_state(d, 9).unwrap());
        let a = random_basis(d, 1).unwrap();
        let b = random_basis(d, 2).unwrap();
        let kd = kd_distribution(&rho, &a, &b).unwrap();
        let p = born_via_bayes(&kd, &a, DEFAULT_TOL).unwrap();
        for (x, y) in p.iter().zip(rho.born(&a).unwrap()) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn bayes_pure_state_matches_direct_born() {
        let d = 8;
        let psi = random_state(d, 4).unwrap();
        let rho = DensityMatrix::pure(&psi);
        let a = random_basis(d, 5).unwrap();
        let b = random_basis(d, 6).unwrap();
        let m = random_basis(d, 7).unwrap();
        let kd = kd_distribution(&rho, &a, &b).unwrap();
        let p = born_via_bayes_complex(&kd, &m, DEFAULT_TOL).unwrap();
        for (k, z) in p.iter().enumerate() {
            let direct = m.ket(k).inner(&psi).norm_sqr();
            assert!((z.re - direct).abs() < 1e-10);
            assert!(z.im.abs() < 1e-10);
        }
    }

    #[test]
    fn bayes_rejects_orthogonal_reference() {
        let rho = DensityMatrix::pure(&plus());
        let comp = Basis::computational(2).unwrap();
        let kd = kd_distribution(&rho, &comp, &comp).unwrap();
        assert!(matches!(born_via_bayes(&kd, &comp, DEFAULT_TOL), Err(QergoError::OrthogonalReference { .. })));
    }

    #[test]
    fn density_validation() {
        let bad_trace = DMatrix::<C64>::identity(2, 2);
        assert!(matches!(DensityMatrix::new(bad_trace), Err(QergoError::InvalidDensity { .. })));
        let neg = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.5, 0.0), c(-0.5, 0.0)]));
        assert!(matches!(DensityMatrix::new(neg), Err(QergoError::InvalidDensity { .. })));
        let ok = DMatrix::from_diagonal(&DVector::from_vec(vec![c(S * S, 0.0), c(0.5, 0.0)]));
        assert!(DensityMatrix::new(ok).is_ok());
    }
}
