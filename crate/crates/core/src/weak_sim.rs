//! Weak measurement with a qubit pointer.
//!
//! The system is coupled to a pointer qubit prepared in `|0>` through
//!
//! ```text
//! U = P_x (x) R(theta) + (1 - P_x) (x) 1,   R(theta)|0> = cos(theta/2)|0> + sin(theta/2)|1>
//! ```
//!
//! where `P_x` projects onto one position. After post-selecting the system on
//! `f`, the pointer is proportional to
//! `(1 - w (1 - cos(theta/2)))|0> + w sin(theta/2)|1>` with `w` the weak value
//! of `P_x`, so `(<sigma_x> + i <sigma_y>) / theta` recovers `w` up to
//! `O(theta^2)`.
//!
//! Joint amplitudes are laid out system-major: index `2 x + pointer`.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{QergoError, Result};
use crate::exec::{try_map_indices, Execution};
use crate::linalg::{evolve, stream_rng, Basis, Ket, Operator, PhysicalConstants, C64};
use crate::probability::{wavefunction_via_weak, TransitionTable, DEFAULT_TOL};

/// Pointer rotation angle and the probed position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingConfig {
    theta: f64,
    target_index: usize,
}

impl CouplingConfig {
    /// `theta = 0` is accepted (no coupling); estimators that divide by
    /// `theta` reject it themselves.
    pub fn new(theta: f64, target_index: usize) -> Result<Self> {
        if !theta.is_finite() || theta.abs() >= FRAC_PI_2 {
            return Err(QergoError::InvalidParameter(format!(
                "coupling angle must satisfy |theta| < pi/2, got {theta}"
            )));
        }
        Ok(CouplingConfig { theta, target_index })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn target_index(&self) -> usize {
        self.target_index
    }
}

/// System (x) pointer-qubit pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    dim_sys: usize,
    amp: DVector<C64>,
}

impl JointState {
    pub fn dim_sys(&self) -> usize {
        self.dim_sys
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amp
    }

    pub fn amp(&self, x: usize, pointer: usize) -> C64 {
        self.amp[2 * x + pointer]
    }

    pub fn norm(&self) -> f64 {
        self.amp.norm()
    }

    /// Total probability of finding the pointer in `|1>`.
    pub fn pointer_one_mass(&self) -> f64 {
        (0..self.dim_sys).map(|x| self.amp(x, 1).norm_sqr()).sum()
    }
}

pub fn couple_pointer(psi: &Ket, cfg: &CouplingConfig) -> Result<JointState> {
    let d = psi.dim();
    if cfg.target_index >= d {
        return Err(QergoError::InvalidTarget { index: cfg.target_index, dim: d });
    }
    let half = cfg.theta / 2.0;
    let mut amp = DVector::zeros(2 * d);
    for x in 0..d {
        let a = psi.amp(x);
        if x == cfg.target_index {
            amp[2 * x] = a * half.cos();
            amp[2 * x + 1] = a * half.sin();
        } else {
            amp[2 * x] = a;
        }
    }
    Ok(JointState { dim_sys: d, amp })
}

/// Normalized pointer-qubit state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointerState {
    amp: [C64; 2],
}

impl PointerState {
    pub fn new(c0: C64, c1: C64) -> Result<Self> {
        let n = (c0.norm_sqr() + c1.norm_sqr()).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(QergoError::ZeroNorm);
        }
        Ok(PointerState { amp: [c0 / n, c1 / n] })
    }

    pub fn amplitudes(&self) -> [C64; 2] {
        self.amp
    }

    /// `2 c0* c1 = <sigma_x> + i <sigma_y>`.
    fn coherence(&self) -> C64 {
        self.amp[0].conj() * self.amp[1] * 2.0
    }

    pub fn sigma_x(&self) -> f64 {
        self.coherence().re
    }

    pub fn sigma_y(&self) -> f64 {
        self.coherence().im
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostselectOutcome {
    pub pointer: PointerState,
    pub success_prob: f64,
}

/// Apply `<f| (x) 1` to the joint state.
pub fn postselect(joint: &JointState, f: &Ket, tol: f64) -> Result<PostselectOutcome> {
    if f.dim() != joint.dim_sys {
        return Err(QergoError::DimMismatch { expected: joint.dim_sys, found: f.dim() });
    }
    let mut c = [C64::new(0.0, 0.0); 2];
    for x in 0..joint.dim_sys {
        let fx = f.amp(x).conj();
        c[0] += fx * joint.amp(x, 0);
        c[1] += fx * joint.amp(x, 1);
    }
    let success_prob = c[0].norm_sqr() + c[1].norm_sqr();
    if success_prob <= tol * tol {
        return Err(QergoError::OrthogonalPostselection { overlap: success_prob.sqrt(), tol });
    }
    Ok(PostselectOutcome { pointer: PointerState::new(c[0], c[1])?, success_prob: success_prob.min(1.0) })
}

/// First-order weak-value readout `(<sigma_x> + i <sigma_y>) / theta`.
pub fn estimate_weak_value(pointer: &PointerState, theta: f64) -> C64 {
    pointer.coherence() / theta
}

/// Exact (noise-free) pointer estimate of the weak value of `P_target`.
pub fn pointer_weak_value(psi: &Ket, f: &Ket, target: usize, theta: f64) -> Result<C64> {
    if theta == 0.0 {
        return Err(QergoError::InvalidParameter("theta must be nonzero".into()));
    }
    let joint = couple_pointer(psi, &CouplingConfig::new(theta, target)?)?;
    let out = postselect(&joint, f, DEFAULT_TOL)?;
    Ok(estimate_weak_value(&out.pointer, theta))
}

/// `[p_f(eps) - p_f(0)] / (2 eps p_f(0))` with `p_f(eps) = |<f|exp(-i eps A)|psi>|^2`.
///
/// Tends to `Im` of the weak value of `A` with an `O(eps)` error.
pub fn imag_from_unitary_response(a: &Operator, psi: &Ket, f: &Ket, eps: f64, tol: f64) -> Result<f64> {
    if !(eps != 0.0 && eps.is_finite()) {
        return Err(QergoError::InvalidParameter(format!("eps must be finite and nonzero, got {eps}")));
    }
    let p0 = f.inner(psi).norm_sqr();
    if p0.sqrt() <= tol {
        return Err(QergoError::OrthogonalPostselection { overlap: p0.sqrt(), tol });
    }
    let kicked = evolve(psi, a, eps, &PhysicalConstants::default())?;
    let pe = f.inner(&kicked).norm_sqr();
    Ok((pe - p0) / (2.0 * eps * p0))
}

/// Shot budget and randomness for [`run_direct_measurement`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectRunConfig {
    pub theta: f64,
    /// Trials per position, split evenly between the two readouts.
    pub shots: u64,
    pub seed: u64,
    /// First RNG stream; position `x` uses streams `base + 2x` and `base + 2x + 1`.
    pub stream_base: u64,
    pub exec: Execution,
}

impl DirectRunConfig {
    pub fn new(theta: f64, shots: u64, seed: u64) -> Self {
        DirectRunConfig { theta, shots, seed, stream_base: 0, exec: Execution::default() }
    }

    pub fn with_exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionEstimate {
    pub x: usize,
    pub true_amp: C64,
    pub est_amp: C64,
    pub stderr_re: f64,
    pub stderr_im: f64,
    pub postselect_rate: f64,
    /// Post-selected trials that contributed to the estimate.
    pub shots_used: u64,
}

impl PositionEstimate {
    pub fn pull_re(&self) -> f64 {
        (self.est_amp.re - self.true_amp.re) / self.stderr_re
    }

    pub fn pull_im(&self) -> f64 {
        (self.est_amp.im - self.true_amp.im) / self.stderr_im
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectMeasurementResult {
    pub theta: f64,
    pub shots: u64,
    pub seed: u64,
    pub positions: Vec<PositionEstimate>,
}

impl DirectMeasurementResult {
    pub fn est_vector(&self) -> DVector<C64> {
        DVector::from_iterator(self.positions.len(), self.positions.iter().map(|p| p.est_amp))
    }

    /// All real and imaginary pulls, position-major.
    pub fn pulls(&self) -> Vec<f64> {
        self.positions.iter().flat_map(|p| [p.pull_re(), p.pull_im()]).collect()
    }
}

/// Sampled +/-1 readout of one pointer observable.
struct Readout {
    mean: f64,
    var_of_mean: f64,
    successes: u64,
}

fn sample_readout(trials: u64, success_prob: f64, expectation: f64, seed: u64, stream: u64) -> Option<Readout> {
    let mut rng = stream_rng(seed, stream);
    let successes = Binomial::new(trials, success_prob.clamp(0.0, 1.0)).ok()?.sample(&mut rng);
    if successes == 0 {
        return None;
    }
    let p_plus = ((1.0 + expectation) / 2.0).clamp(0.0, 1.0);
    let plus = Binomial::new(successes, p_plus).ok()?.sample(&mut rng);
    let n = successes as f64;
    let mean = (2.0 * plus as f64 - n) / n;
    // floor keeps the error bar positive when every outcome agrees
    let var_of_mean = (1.0 - mean * mean).max(1.0 / n) / n;
    Some(Readout { mean, var_of_mean, successes })
}

/// Unnormalized per-position estimate of the weak value.
struct RawEstimate {
    w: C64,
    var_re: f64,
    var_im: f64,
    rate: f64,
    used: u64,
}

/// Monte Carlo run of the direct wavefunction measurement: probe every
/// position of `basis_x` with the pointer, post-select on `post`, read the
/// pointer in the sigma_x basis for half the trials and sigma_y for the other
/// half, then normalize the estimates by their complex sum.
///
/// Error bars combine binomial readout noise with linear propagation through
/// the normalization, evaluated at the unnormalized estimates.
pub fn run_direct_measurement(
    psi: &Ket,
    basis_x: &Basis,
    post: &Ket,
    cfg: &DirectRunConfig,
) -> Result<DirectMeasurementResult> {
    if cfg.shots < 2 {
        return Err(QergoError::InvalidParameter("need at least 2 shots per position".into()));
    }
    if cfg.theta == 0.0 {
        return Err(QergoError::InvalidParameter("theta must be nonzero".into()));
    }
    CouplingConfig::new(cfg.theta, 0)?;
    let truth = wavefunction_via_weak(psi, basis_x, post, DEFAULT_TOL)?;
    let d = basis_x.dim();
    // work in basis_x coordinates so that P_x is a coordinate projector
    let psi_x = Ket::from_vector(basis_x.coordinates(psi)?)?;
    let post_x = Ket::from_vector(basis_x.coordinates(post)?)?;
    let n_x = cfg.shots / 2;
    let n_y = cfg.shots - n_x;
    let theta = cfg.theta;

    let raw: Vec<RawEstimate> = try_map_indices(cfg.exec, d, |x| {
        let joint = couple_pointer(&psi_x, &CouplingConfig::new(theta, x)?)?;
        let (pointer, p_succ) = match postselect(&joint, &post_x, 0.0) {
            Ok(o) => (o.pointer, o.success_prob),
            Err(QergoError::OrthogonalPostselection { .. }) => {
                return Err(QergoError::DegenerateProtocol { position: x })
            }
            Err(e) => return Err(e),
        };
        let stream = cfg.stream_base + 2 * x as u64;
        let rx = sample_readout(n_x, p_succ, pointer.sigma_x(), cfg.seed, stream)
            .ok_or(QergoError::DegenerateProtocol { position: x })?;
        let ry = sample_readout(n_y, p_succ, pointer.sigma_y(), cfg.seed, stream + 1)
            .ok_or(QergoError::DegenerateProtocol { position: x })?;
        let used = rx.successes + ry.successes;
        Ok(RawEstimate {
            w: C64::new(rx.mean, ry.mean) / theta,
            var_re: rx.var_of_mean / (theta * theta),
            var_im: ry.var_of_mean / (theta * theta),
            rate: used as f64 / cfg.shots as f64,
            used,
        })
    })?;

    let sum: C64 = raw.iter().map(|r| r.w).sum();
    if sum.norm() == 0.0 {
        return Err(QergoError::DegenerateProtocol { position: 0 });
    }
    let positions = (0..d)
        .map(|x| {
            let est = raw[x].w / sum;
            // est_x - true_x = (dw_x - true_x dS) / S exactly, with S observed.
            // The numerator is linear in the readout noise; its coefficient
            // uses the unnormalized w_x, whose noise does not carry the 1/S
            // amplification that est_x would feed back into the error bar.
            let (mut var_re, mut var_im) = (0.0, 0.0);
            for (y, r) in raw.iter().enumerate() {
                let delta = if x == y { 1.0 } else { 0.0 };
                let g = (delta - raw[x].w) / sum;
                var_re += g.re * g.re * r.var_re + g.im * g.im * r.var_im;
                var_im += g.im * g.im * r.var_re + g.re * g.re * r.var_im;
            }
            PositionEstimate {
                x,
                true_amp: truth[x],
                est_amp: est,
                stderr_re: var_re.sqrt(),
                stderr_im: var_im.sqrt(),
                postselect_rate: raw[x].rate,
                shots_used: raw[x].used,
            }
        })
        .collect();
    Ok(DirectMeasurementResult { theta, shots: cfg.shots, seed: cfg.seed, positions })
}

/// Estimate the whole table `p(m|a,b)` by running the direct-measurement
/// protocol once per initial outcome `a` (prepare `a`, probe each `m`,
/// post-select on `b`).
pub fn sampled_cond_prob_table(
    basis_m: &Basis,
    basis_a: &Basis,
    b: &Ket,
    cfg: &DirectRunConfig,
) -> Result<TransitionTable> {
    let dm = basis_m.dim() as u64;
    let mut cols = Vec::with_capacity(basis_a.dim());
    for a in 0..basis_a.dim() {
        let run_cfg = DirectRunConfig { stream_base: cfg.stream_base + 2 * dm * a as u64, ..*cfg };
        let run = run_direct_measurement(&basis_a.ket(a), basis_m, b, &run_cfg)?;
        cols.push(run.est_vector());
    }
    Ok(TransitionTable::from_entries(DMatrix::from_columns(&cols), b.clone()))
}
