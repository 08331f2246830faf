//! Expectation-value dynamics as imaginary correlations with the energy:
//! `d<A>/dt = (2/hbar) Im <A H>`, plus a periodic-grid wavepacket on which
//! `Im <X H> = hbar <P> / (2m)`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{QergoError, Result};
use crate::linalg::{
    evolve, hermiticity_deviation, make_fourier_basis, FourierSign, Ket, Operator, PhysicalConstants, C64,
};
use crate::stats::loglog_slope;

fn require_hermitian(op: &Operator) -> Result<()> {
    if op.is_hermitian() {
        Ok(())
    } else {
        Err(QergoError::NotHermitian { deviation: hermiticity_deviation(op.matrix()) })
    }
}

fn check_dims(a: &Operator, h: &Operator, psi: &Ket) -> Result<()> {
    for found in [h.dim(), psi.dim()] {
        if found != a.dim() {
            return Err(QergoError::DimMismatch { expected: a.dim(), found });
        }
    }
    require_hermitian(a)?;
    require_hermitian(h)
}

/// `(2/hbar) Im <psi|A H|psi>`.
pub fn ehrenfest_rate(a: &Operator, h: &Operator, psi: &Ket, c: &PhysicalConstants) -> Result<f64> {
    check_dims(a, h, psi)?;
    // <psi|A H|psi> = <A psi|H psi> for hermitian A
    let a_psi = a.apply(psi)?;
    let h_psi = h.apply(psi)?;
    Ok(2.0 / c.hbar() * a_psi.dotc(&h_psi).im)
}

/// `-(i/hbar) <psi|[A, H]|psi>`, kept complex so callers can see that the
/// imaginary part vanishes.
pub fn commutator_rate(a: &Operator, h: &Operator, psi: &Ket, c: &PhysicalConstants) -> Result<C64> {
    check_dims(a, h, psi)?;
    let comm = a.commutator(h)?.expectation(psi)?;
    Ok(C64::new(0.0, -1.0 / c.hbar()) * comm)
}

fn real_expectation(a: &Operator, psi: &Ket) -> Result<f64> {
    Ok(a.expectation(psi)?.re)
}

/// Central difference `[<A>(dt) - <A>(-dt)] / (2 dt)` through exact evolution.
pub fn finite_difference_rate(a: &Operator, h: &Operator, psi: &Ket, dt: f64, c: &PhysicalConstants) -> Result<f64> {
    check_dims(a, h, psi)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(QergoError::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let fwd = real_expectation(a, &evolve(psi, h, dt, c)?)?;
    let bwd = real_expectation(a, &evolve(psi, h, -dt, c)?)?;
    Ok((fwd - bwd) / (2.0 * dt))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdConvergence {
    pub dts: Vec<f64>,
    pub errors: Vec<f64>,
    /// Fitted exponent of `error ~ dt^slope`.
    pub slope: Option<f64>,
}

pub fn fd_convergence(
    a: &Operator,
    h: &Operator,
    psi: &Ket,
    dts: &[f64],
    c: &PhysicalConstants,
) -> Result<FdConvergence> {
    let exact = ehrenfest_rate(a, h, psi, c)?;
    let errors = dts
        .iter()
        .map(|&dt| Ok((finite_difference_rate(a, h, psi, dt, c)? - exact).abs()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(FdConvergence { dts: dts.to_vec(), slope: loglog_slope(dts, &errors), errors })
}

pub fn pauli_x() -> Operator {
    Operator::hermitian(nalgebra::DMatrix::from_row_slice(
        2,
        2,
        &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
    ))
    .expect("pauli x is hermitian")
}

pub fn pauli_z() -> Operator {
    Operator::diagonal(&[1.0, -1.0]).expect("pauli z is hermitian")
}

/// Discrete Gaussian packet on a periodic grid of `grid_size` points with
/// centered coordinates `x_j = j - grid_size/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavepacketConfig {
    pub grid_size: usize,
    pub center: f64,
    /// Position standard deviation of `|psi|^2`.
    pub width: f64,
    /// Carrier wavenumber in grid units: `psi ~ exp(2 pi i k x / N)`.
    pub momentum_index: f64,
    pub mass: f64,
}

impl Default for WavepacketConfig {
    fn default() -> Self {
        WavepacketConfig { grid_size: 256, center: 0.0, width: 10.0, momentum_index: 8.0, mass: 1.0 }
    }
}

impl WavepacketConfig {
    /// Rejects grids that are not powers of two, packets wider than a quarter
    /// of the grid, and packets whose 4-sigma window crosses the wrap-around.
    pub fn validate(&self) -> Result<()> {
        let n = self.grid_size;
        if n < 4 || !n.is_power_of_two() {
            return Err(QergoError::InvalidParameter(format!("grid size {n} must be a power of two >= 4")));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(QergoError::InvalidParameter(format!("mass must be positive, got {}", self.mass)));
        }
        if !(self.width > 0.0) || !self.center.is_finite() || !self.momentum_index.is_finite() {
            return Err(QergoError::InvalidParameter("width must be positive, center and momentum finite".into()));
        }
        if 4.0 * self.width >= n as f64 {
            return Err(QergoError::GridOverflow {
                reason: format!("4 * width = {} >= grid size {n}", 4.0 * self.width),
            });
        }
        let half = n as f64 / 2.0;
        if self.center.abs() + 4.0 * self.width >= half {
            return Err(QergoError::GridOverflow {
                reason: format!(
                    "|center| + 4 * width = {} reaches the grid edge {half}",
                    self.center.abs() + 4.0 * self.width
                ),
            });
        }
        Ok(())
    }

    pub fn positions(&self) -> Vec<f64> {
        let half = (self.grid_size / 2) as f64;
        (0..self.grid_size).map(|j| j as f64 - half).collect()
    }

    pub fn state(&self) -> Result<Ket> {
        self.validate()?;
        let n = self.grid_size as f64;
        let amps: Vec<C64> = self
            .positions()
            .into_iter()
            .map(|x| {
                let envelope = (-(x - self.center).powi(2) / (4.0 * self.width * self.width)).exp();
                C64::from_polar(envelope, 2.0 * PI * self.momentum_index * x / n)
            })
            .collect();
        Ket::from_amplitudes(&amps)
    }
}

/// Momentum eigenvalues `hbar 2 pi kappa / N` with `kappa` in `[-N/2, N/2)`,
/// in the column order of the `Plus` Fourier basis.
pub fn momentum_grid(grid_size: usize, c: &PhysicalConstants) -> Vec<f64> {
    let n = grid_size as i64;
    (0..n)
        .map(|j| {
            let kappa = if j < n / 2 { j } else { j - n };
            c.hbar() * 2.0 * PI * kappa as f64 / n as f64
        })
        .collect()
}

/// Applies a function of momentum spectrally: `F diag(g(p)) F^dag psi`.
pub fn apply_momentum_function<G: Fn(f64) -> f64>(psi: &Ket, c: &PhysicalConstants, g: G) -> Result<DVector<C64>> {
    let f = make_fourier_basis(psi.dim(), FourierSign::Plus)?;
    let mut coeff = f.coordinates(psi)?;
    for (z, p) in coeff.iter_mut().zip(momentum_grid(psi.dim(), c)) {
        *z *= g(p);
    }
    Ok(f.matrix() * coeff)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavepacketReport {
    pub im_xh: f64,
    pub mean_momentum: f64,
    pub velocity: f64,
    /// `hbar <P> / (2m) = hbar v / 2`.
    pub hbar_v_over_2: f64,
    pub relative_error: f64,
}

/// `Im <X H>` for `H = P^2/(2m)` on the packet, alongside `hbar v / 2`.
pub fn wavepacket_imaginary_correlation(cfg: &WavepacketConfig, c: &PhysicalConstants) -> Result<WavepacketReport> {
    let psi = cfg.state()?;
    let xs = cfg.positions();
    let h_psi = apply_momentum_function(&psi, c, |p| p * p / (2.0 * cfg.mass))?;
    let p_psi = apply_momentum_function(&psi, c, |p| p)?;
    let x_psi = DVector::from_iterator(xs.len(), xs.iter().zip(psi.amplitudes().iter()).map(|(x, a)| a * *x));
    let im_xh = x_psi.dotc(&h_psi).im;
    let mean_momentum = psi.inner_vec(&p_psi).re;
    let velocity = mean_momentum / cfg.mass;
    let hbar_v_over_2 = c.hbar() * velocity / 2.0;
    let relative_error =
        if hbar_v_over_2 == 0.0 { im_xh.abs() } else { ((im_xh - hbar_v_over_2) / hbar_v_over_2).abs() };
    Ok(WavepacketReport { im_xh, mean_momentum, velocity, hbar_v_over_2, relative_error })
}
