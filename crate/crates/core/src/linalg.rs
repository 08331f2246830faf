//! Dense complex states, operators and orthonormal bases.
//!
//! Conventions used throughout the crate:
//!
//! * `a.inner(&b)` is `<a|b>`, conjugate-linear in the left argument.
//! * A [`Basis`] stores its kets as the columns of a unitary matrix, so
//!   `basis.matrix()[(k, j)] = <k|e_j>` in computational coordinates.
//! * The discrete Fourier frame with [`FourierSign::Plus`] has columns
//!   `exp(+2 pi i j k / d) / sqrt(d)` and plays the role of the momentum
//!   basis; position is the computational basis.
//!
//! Random inputs come from ChaCha20 (`rand_chacha`), a counter-based stream
//! cipher generator. `stream_rng(seed, stream)` seeds it with
//! `ChaCha20Rng::seed_from_u64(seed)` and selects the 64-bit stream, so every
//! (seed, stream) pair is an independent reproducible sequence.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{QergoError, RefSide, Result};

pub type C64 = Complex64;

/// Tolerance on normalization at construction time.
pub const NORM_TOL: f64 = 1e-12;
/// Tolerance on orthonormality checks.
pub const ORTHO_TOL: f64 = 1e-10;

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        Err(QergoError::InvalidDimension { dim })
    } else {
        Ok(())
    }
}

fn check_same(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        Err(QergoError::DimMismatch { expected, found })
    } else {
        Ok(())
    }
}

/// Fails on the first overlap with magnitude at or below `tol`.
pub(crate) fn check_overlaps(overlaps: &DVector<C64>, tol: f64, side: RefSide) -> Result<()> {
    match overlaps.iter().position(|z| z.norm() <= tol) {
        Some(index) => Err(QergoError::OrthogonalReference { side, index, overlap: overlaps[index].norm(), tol }),
        None => Ok(()),
    }
}

/// Normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    amp: DVector<C64>,
}

impl Ket {
    /// Normalizes `amp`. Fails for `len < 2` or a zero vector.
    pub fn from_vector(amp: DVector<C64>) -> Result<Self> {
        check_dim(amp.len())?;
        let norm = amp.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(QergoError::ZeroNorm);
        }
        Ok(Ket { amp: amp / C64::new(norm, 0.0) })
    }

    pub fn from_amplitudes(amp: &[C64]) -> Result<Self> {
        Self::from_vector(DVector::from_column_slice(amp))
    }

    pub fn from_real(amp: &[f64]) -> Result<Self> {
        Self::from_vector(DVector::from_iterator(amp.len(), amp.iter().map(|&x| C64::new(x, 0.0))))
    }

    /// Computational basis state `|k>`.
    pub fn basis_state(dim: usize, k: usize) -> Result<Self> {
        check_dim(dim)?;
        if k >= dim {
            return Err(QergoError::InvalidTarget { index: k, dim });
        }
        let mut amp = DVector::zeros(dim);
        amp[k] = C64::new(1.0, 0.0);
        Ok(Ket { amp })
    }

    /// Equal-weight superposition of all computational states, which is also
    /// the zero-momentum Fourier column.
    pub fn uniform(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let a = C64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Ok(Ket { amp: DVector::from_element(dim, a) })
    }

    pub fn dim(&self) -> usize {
        self.amp.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amp
    }

    pub fn amp(&self, k: usize) -> C64 {
        self.amp[k]
    }

    pub fn norm(&self) -> f64 {
        self.amp.norm()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Ket) -> C64 {
        self.amp.dotc(&other.amp)
    }

    /// `<self|v>` for a raw coordinate vector.
    pub fn inner_vec(&self, v: &DVector<C64>) -> C64 {
        self.amp.dotc(v)
    }

    /// Multiply by a global phase `exp(i phi)`.
    pub fn with_phase(&self, phi: f64) -> Ket {
        Ket { amp: &self.amp * C64::from_polar(1.0, phi) }
    }

    /// `|self><self|`.
    pub fn outer(&self) -> DMatrix<C64> {
        &self.amp * self.amp.adjoint()
    }

    pub(crate) fn from_normalized_unchecked(amp: DVector<C64>) -> Ket {
        Ket { amp }
    }
}

/// Square complex matrix, optionally asserted hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    mat: DMatrix<C64>,
    hermitian: bool,
}

/// Largest entrywise deviation `max|A - A^dag|`.
pub fn hermiticity_deviation(m: &DMatrix<C64>) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

impl Operator {
    /// Arbitrary square matrix.
    pub fn general(mat: DMatrix<C64>) -> Result<Self> {
        if !mat.is_square() {
            return Err(QergoError::ShapeError { rows: mat.nrows(), cols: mat.ncols() });
        }
        check_dim(mat.nrows())?;
        Ok(Operator { mat, hermitian: false })
    }

    /// Square matrix checked to be hermitian within `NORM_TOL`.
    pub fn hermitian(mat: DMatrix<C64>) -> Result<Self> {
        let mut op = Self::general(mat)?;
        let deviation = hermiticity_deviation(&op.mat);
        if deviation >= NORM_TOL {
            return Err(QergoError::NotHermitian { deviation });
        }
        op.hermitian = true;
        Ok(op)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::hermitian(DMatrix::identity(dim, dim))
    }

    /// Real diagonal observable.
    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let v = DVector::from_iterator(values.len(), values.iter().map(|&x| C64::new(x, 0.0)));
        Self::hermitian(DMatrix::from_diagonal(&v))
    }

    /// Rank-one projector `|k><k|` onto a computational state.
    pub fn index_projector(dim: usize, k: usize) -> Result<Self> {
        Self::projector(&Ket::basis_state(dim, k)?)
    }

    pub fn projector(ket: &Ket) -> Result<Self> {
        Self::hermitian(ket.outer())
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn apply(&self, ket: &Ket) -> Result<DVector<C64>> {
        check_same(self.dim(), ket.dim())?;
        Ok(&self.mat * ket.amplitudes())
    }

    /// `<bra|A|ket>`.
    pub fn matrix_element(&self, bra: &Ket, ket: &Ket) -> Result<C64> {
        check_same(self.dim(), bra.dim())?;
        Ok(bra.inner_vec(&self.apply(ket)?))
    }

    /// `<psi|A|psi>`.
    pub fn expectation(&self, psi: &Ket) -> Result<C64> {
        self.matrix_element(psi, psi)
    }

    /// `alpha A + beta B`; hermitian only if re-checked by the caller.
    pub fn combine(&self, alpha: C64, other: &Operator, beta: C64) -> Result<Operator> {
        check_same(self.dim(), other.dim())?;
        Operator::general(&self.mat * alpha + &other.mat * beta)
    }

    pub fn product(&self, other: &Operator) -> Result<Operator> {
        check_same(self.dim(), other.dim())?;
        Operator::general(&self.mat * &other.mat)
    }

    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        check_same(self.dim(), other.dim())?;
        Operator::general(&self.mat * &other.mat - &other.mat * &self.mat)
    }
}

/// Largest entrywise deviation of the Gram matrix of `cols` from identity.
pub fn gram_deviation(cols: &DMatrix<C64>) -> f64 {
    let gram = cols.adjoint() * cols;
    let id = DMatrix::<C64>::identity(gram.nrows(), gram.ncols());
    (gram - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Ordered orthonormal frame, stored as the columns of a unitary matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    mat: DMatrix<C64>,
    label: String,
}

impl Basis {
    pub fn new(mat: DMatrix<C64>, label: impl Into<String>) -> Result<Self> {
        if !mat.is_square() {
            return Err(QergoError::ShapeError { rows: mat.nrows(), cols: mat.ncols() });
        }
        check_dim(mat.nrows())?;
        let deviation = gram_deviation(&mat);
        if deviation >= ORTHO_TOL {
            return Err(QergoError::NotOrthonormal { deviation });
        }
        Ok(Basis { mat, label: label.into() })
    }

    pub fn computational(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Basis { mat: DMatrix::identity(dim, dim), label: "computational".into() })
    }

    /// Basis from kets, in order.
    pub fn from_kets(kets: &[Ket], label: impl Into<String>) -> Result<Self> {
        let dim = kets.first().map_or(0, Ket::dim);
        for k in kets {
            check_same(dim, k.dim())?;
        }
        let cols: Vec<DVector<C64>> = kets.iter().map(|k| k.amplitudes().clone()).collect();
        Self::new(DMatrix::from_columns(&cols), label)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn ket(&self, j: usize) -> Ket {
        Ket::from_normalized_unchecked(self.mat.column(j).into_owned())
    }

    pub fn kets(&self) -> Vec<Ket> {
        (0..self.dim()).map(|j| self.ket(j)).collect()
    }

    /// `<ref|col_j>` for every column.
    pub fn overlaps_with_ket(&self, reference: &Ket) -> Result<DVector<C64>> {
        check_same(self.dim(), reference.dim())?;
        Ok(self.mat.ad_mul(reference.amplitudes()).map(|z| z.conj()))
    }

    /// Matrix `O[m][a] = <self_m|other_a>`.
    pub fn overlaps(&self, other: &Basis) -> Result<DMatrix<C64>> {
        check_same(self.dim(), other.dim())?;
        Ok(self.mat.ad_mul(&other.mat))
    }

    /// Coordinates of `ket` in this basis, `<col_j|ket>`.
    pub fn coordinates(&self, ket: &Ket) -> Result<DVector<C64>> {
        check_same(self.dim(), ket.dim())?;
        Ok(self.mat.ad_mul(ket.amplitudes()))
    }

    pub fn gram_deviation(&self) -> f64 {
        gram_deviation(&self.mat)
    }

    /// Replace column `j` by `exp(i phases[j])` times itself.
    pub fn rephased(&self, phases: &[f64]) -> Result<Basis> {
        check_same(self.dim(), phases.len())?;
        let mut mat = self.mat.clone();
        for (j, &phi) in phases.iter().enumerate() {
            let u = C64::from_polar(1.0, phi);
            mat.column_mut(j).iter_mut().for_each(|z| *z *= u);
        }
        Ok(Basis { mat, label: self.label.clone() })
    }
}

/// `hbar` in the caller's action units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    hbar: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants { hbar: 1.0 }
    }
}

impl PhysicalConstants {
    pub fn new(hbar: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(QergoError::InvalidParameter(format!("hbar must be positive, got {hbar}")));
        }
        Ok(PhysicalConstants { hbar })
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FourierSign {
    Plus,
    Minus,
}

/// Discrete Fourier frame: column `j` has entries `exp(sign 2 pi i j k / d) / sqrt(d)`.
pub fn make_fourier_basis(dim: usize, sign: FourierSign) -> Result<Basis> {
    check_dim(dim)?;
    let s = match sign {
        FourierSign::Plus => 1.0,
        FourierSign::Minus => -1.0,
    };
    let norm = 1.0 / (dim as f64).sqrt();
    let mat = DMatrix::from_fn(dim, dim, |k, j| {
        // reduce jk mod d before scaling so large grids keep full phase accuracy
        let jk = (j * k) % dim;
        C64::from_polar(norm, s * 2.0 * PI * jk as f64 / dim as f64)
    });
    Ok(Basis { mat, label: "fourier".into() })
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-random ket drawn from `rng`.
pub fn random_state_from<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Ket> {
    check_dim(dim)?;
    let v = DVector::from_fn(dim, |_, _| gaussian_c64(rng));
    Ket::from_vector(v)
}

/// Haar-random ket, reproducible per seed.
pub fn random_state(dim: usize, seed: u64) -> Result<Ket> {
    random_state_from(dim, &mut stream_rng(seed, 0))
}

/// Haar-random unitary drawn from `rng` (QR of a Ginibre matrix with the
/// phases of `diag(R)` folded back into `Q`).
pub fn random_unitary_from<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<DMatrix<C64>> {
    check_dim(dim)?;
    let z = DMatrix::from_fn(dim, dim, |_, _| gaussian_c64(rng));
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let rjj = r[(j, j)];
        let ph = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { C64::new(1.0, 0.0) };
        q.column_mut(j).iter_mut().for_each(|z| *z *= ph);
    }
    Ok(q)
}

pub fn random_basis_from<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Basis> {
    let mat = random_unitary_from(dim, rng)?;
    Basis::new(mat, "haar")
}

/// Haar-random orthonormal basis, reproducible per seed.
pub fn random_basis(dim: usize, seed: u64) -> Result<Basis> {
    random_basis_from(dim, &mut stream_rng(seed, 1))
}

/// Gaussian-unitary-ensemble hermitian operator, scaled to unit spectral
/// radius on average.
pub fn random_hermitian_from<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Operator> {
    check_dim(dim)?;
    let z = DMatrix::from_fn(dim, dim, |_, _| gaussian_c64(rng));
    let h = (&z + z.adjoint()) * C64::new(0.5 / (dim as f64).sqrt(), 0.0);
    Operator::hermitian(h)
}

/// `exp(-i H t / hbar) psi` through the eigendecomposition of `H`.
pub fn evolve(psi: &Ket, h: &Operator, t: f64, c: &PhysicalConstants) -> Result<Ket> {
    check_same(h.dim(), psi.dim())?;
    if !h.is_hermitian() {
        return Err(QergoError::NotHermitian { deviation: hermiticity_deviation(h.matrix()) });
    }
    let eig = h.matrix().clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let mut coeff = v.ad_mul(psi.amplitudes());
    for (z, &e) in coeff.iter_mut().zip(eig.eigenvalues.iter()) {
        *z *= C64::from_polar(1.0, -e * t / c.hbar());
    }
    Ok(Ket::from_normalized_unchecked(v * coeff))
}
