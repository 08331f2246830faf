//! Residual checks for the exact relations between Born probabilities and
//! complex conditional probabilities:
//!
//! * ergodicity law: `p(p|x) p(x|psi) = p(p|psi) |p(x|psi,p)|^2`
//! * determinism: `sum_m p(a'|m,b) p(m|a,b) = delta(a, a')`
//! * ergodic decomposition: `p(a|m,b) p(m|a,b) = p(m|a)`, which forces the
//!   phases of the two conditionals to be opposite.
//!
//! All three hold identically, so residuals measure floating-point error only.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{Basis, Ket};
use crate::probability::{cond_prob_table, DEFAULT_TOL};

/// Threshold pair used by the residual checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Minimum `|<b|.>|` for an overlap to count as non-orthogonal.
    pub overlap: f64,
    /// A report passes when its largest residual is strictly below this.
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { overlap: DEFAULT_TOL, residual: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub identity: String,
    pub dims: Vec<usize>,
    pub max_abs_residual: f64,
    pub argmax_index: Vec<usize>,
    pub pass: bool,
    pub tolerance: f64,
    /// Index tuples left out because a reference overlap was below threshold.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<Vec<usize>>,
    /// Seed of the random instance, when the report belongs to a batch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ResidualReport {
    /// Builds a report from `(index, residual)` pairs. A NaN residual wins
    /// the max and fails the report.
    pub fn collect<I>(identity: &str, dims: Vec<usize>, residuals: I, tolerance: f64) -> Self
    where
        I: IntoIterator<Item = (Vec<usize>, f64)>,
    {
        let mut max: f64 = 0.0;
        let mut argmax = Vec::new();
        for (idx, r) in residuals {
            if max.is_nan() {
                break;
            }
            if argmax.is_empty() || r.is_nan() || r > max {
                max = r;
                argmax = idx;
            }
        }
        ResidualReport {
            identity: identity.to_string(),
            dims,
            max_abs_residual: max,
            argmax_index: argmax,
            pass: max < tolerance,
            tolerance,
            skipped: Vec::new(),
            seed: None,
        }
    }

    pub fn with_skipped(mut self, skipped: Vec<Vec<usize>>) -> Self {
        self.skipped = skipped;
        self
    }
}

/// Ergodicity law over all `(x, p)`. Columns `p` with `|<p|psi>|` at or below
/// the overlap threshold are skipped and listed as `[p]`.
pub fn ergodicity_residual(psi: &Ket, basis_x: &Basis, basis_p: &Basis, tol: &Tolerances) -> Result<ResidualReport> {
    let d = basis_x.dim();
    let x_psi = basis_x.coordinates(psi)?;
    let p_psi = basis_p.coordinates(psi)?;
    let p_x = basis_p.overlaps(basis_x)?;
    let mut skipped = Vec::new();
    let mut residuals = Vec::with_capacity(d * d);
    for p in 0..basis_p.dim() {
        if p_psi[p].norm() <= tol.overlap {
            skipped.push(vec![p]);
            continue;
        }
        let born_p = p_psi[p].norm_sqr();
        for x in 0..d {
            let sequential = p_x[(p, x)].norm_sqr() * x_psi[x].norm_sqr();
            let conditional = p_x[(p, x)] * x_psi[x] / p_psi[p];
            let weak = born_p * conditional.norm_sqr();
            residuals.push((vec![x, p], (sequential - weak).abs()));
        }
    }
    Ok(ResidualReport::collect("ergodicity_law", vec![d, basis_p.dim()], residuals, tol.residual).with_skipped(skipped))
}

/// Determinism condition; the residual matrix is indexed `[a', a]`.
pub fn determinism_residual(basis_a: &Basis, basis_m: &Basis, b: &Ket, tol: &Tolerances) -> Result<ResidualReport> {
    let forward = cond_prob_table(basis_m, basis_a, b, tol.overlap)?;
    let backward = cond_prob_table(basis_a, basis_m, b, tol.overlap)?;
    let round_trip = backward.entries() * forward.entries();
    let (da, _) = (round_trip.nrows(), round_trip.ncols());
    let residuals = (0..da).flat_map(|ap| {
        let rt = &round_trip;
        (0..da).map(move |a| {
            let delta = if a == ap { 1.0 } else { 0.0 };
            (vec![ap, a], (rt[(ap, a)] - delta).norm())
        })
    });
    Ok(ResidualReport::collect("determinism", vec![da, basis_m.dim()], residuals, tol.residual))
}

/// Product and phase parts of the ergodic decomposition check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    /// `|p(a|m,b) p(m|a,b) - |<m|a>|^2|`, indexed `[a, m]`.
    pub product: ResidualReport,
    /// `|arg(p(a|m,b) p(m|a,b))|` where both factors exceed `PHASE_FLOOR`.
    pub phase: ResidualReport,
}

/// Magnitude below which a conditional probability has no meaningful phase.
pub const PHASE_FLOOR: f64 = 1e-10;

pub fn ergodic_decomposition_residual(
    basis_a: &Basis,
    basis_m: &Basis,
    b: &Ket,
    tol: &Tolerances,
) -> Result<DecompositionReport> {
    let forward = cond_prob_table(basis_m, basis_a, b, tol.overlap)?;
    let backward = cond_prob_table(basis_a, basis_m, b, tol.overlap)?;
    let ma = basis_m.overlaps(basis_a)?;
    let (dm, da) = forward.dims();
    let mut product = Vec::with_capacity(dm * da);
    let mut phase = Vec::with_capacity(dm * da);
    for a in 0..da {
        for m in 0..dm {
            let fwd = forward.entry(m, a);
            let bwd = backward.entry(a, m);
            let prod = bwd * fwd;
            product.push((vec![a, m], (prod - ma[(m, a)].norm_sqr()).norm()));
            if fwd.norm() > PHASE_FLOOR && bwd.norm() > PHASE_FLOOR {
                // distance from the positive real axis, no angle wrapping
                phase.push((vec![a, m], prod.im.atan2(prod.re).abs()));
            }
        }
    }
    Ok(DecompositionReport {
        product: ResidualReport::collect("ergodic_decomposition", vec![da, dm], product, tol.residual),
        phase: ResidualReport::collect("phase_antisymmetry", vec![da, dm], phase, tol.residual),
    })
}
