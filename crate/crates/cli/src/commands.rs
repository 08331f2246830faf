use serde::Serialize;

use qergo::dynamics::{
    commutator_rate, ehrenfest_rate, fd_convergence, pauli_x, pauli_z, wavepacket_imaginary_correlation,
    WavepacketConfig,
};
use qergo::ergodicity::{ResidualReport, Tolerances};
use qergo::linalg::{random_basis_from, random_hermitian_from, random_state, random_state_from, stream_rng};
use qergo::probability::DEFAULT_TOL;
use qergo::reconstruction::round_trip;
use qergo::suite::run_identity_suite;
use qergo::weak_sim::{run_direct_measurement, DirectRunConfig};
use qergo::{Basis, Execution, Ket, Operator, PhysicalConstants, QergoError, C64};

use crate::args::{CheckArgs, DirectArgs, DynamicsArgs, Format, ReconstructArgs};
use crate::output::{write_csv, write_json, CliError};

/// Fraction of positions whose estimate must lie within `PULL_BOUND` error
/// bars of the truth for a direct run to pass.
pub const DIRECT_COVERAGE: f64 = 0.95;
pub const PULL_BOUND: f64 = 4.0;
/// Relative tolerance of `Im <X H> = hbar v / 2` on the grid.
pub const WAVEPACKET_TOL: f64 = 1e-6;
/// Accepted window for the fitted central-difference order.
pub const FD_ORDER_WINDOW: (f64, f64) = (1.8, 2.2);
/// Dimension of the random commutator instance.
pub const DYNAMICS_INSTANCE_DIM: usize = 8;
/// Carrier velocity of the wavepacket, held fixed when hbar changes.
pub const WAVEPACKET_VELOCITY: f64 = 2.0 * std::f64::consts::PI * 8.0 / 256.0;

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

fn reject_format(found: Option<Format>, allowed: &[Format], command: &str) -> Result<(), CliError> {
    match found {
        Some(f) if !allowed.contains(&f) => {
            Err(CliError::Usage(format!("{command} does not support --format {f:?}").to_lowercase()))
        }
        _ => Ok(()),
    }
}

pub fn check(args: &CheckArgs) -> Result<Outcome, CliError> {
    reject_format(args.output.format, &[Format::Json], "check")?;
    let tol = Tolerances { residual: args.tol, ..Tolerances::default() };
    let seeds: Vec<u64> = (0..args.trials as u64).map(|i| args.seed.wrapping_add(i)).collect();
    let reports: Vec<ResidualReport> = run_identity_suite(args.dim as usize, &seeds, &tol, Execution::default())?;
    write_json(&reports, args.output.out.as_deref())?;
    Ok(Outcome::from_pass(reports.iter().all(|r| r.pass)))
}

#[derive(Debug, Serialize)]
pub struct DirectRow {
    pub x: usize,
    pub re_true: f64,
    pub im_true: f64,
    pub re_est: f64,
    pub im_est: f64,
    pub stderr_re: f64,
    pub stderr_im: f64,
    pub postselect_rate: f64,
}

pub fn direct(args: &DirectArgs) -> Result<Outcome, CliError> {
    reject_format(args.output.format, &[Format::Csv, Format::Json], "direct")?;
    let d = args.dim as usize;
    let psi = match args.basis_state {
        Some(k) => Ket::basis_state(d, k)?,
        None => random_state(d, args.seed)?,
    };
    let cfg = DirectRunConfig::new(args.theta, args.shots, args.seed);
    let run = run_direct_measurement(&psi, &Basis::computational(d)?, &Ket::uniform(d)?, &cfg)?;
    let rows: Vec<DirectRow> = run
        .positions
        .iter()
        .map(|p| DirectRow {
            x: p.x,
            re_true: p.true_amp.re,
            im_true: p.true_amp.im,
            re_est: p.est_amp.re,
            im_est: p.est_amp.im,
            stderr_re: p.stderr_re,
            stderr_im: p.stderr_im,
            postselect_rate: p.postselect_rate,
        })
        .collect();
    match args.output.format.unwrap_or(Format::Csv) {
        Format::Csv => write_csv(&rows, args.output.out.as_deref())?,
        Format::Json => write_json(&rows, args.output.out.as_deref())?,
    }
    let covered =
        run.positions.iter().filter(|p| p.pull_re().abs() < PULL_BOUND && p.pull_im().abs() < PULL_BOUND).count();
    Ok(Outcome::from_pass(covered as f64 >= DIRECT_COVERAGE * d as f64))
}

#[derive(Debug, Serialize)]
pub struct ReconstructReport {
    pub dim: usize,
    pub seed: u64,
    pub max_entry_error: f64,
    pub unitarity_residual: f64,
    pub pass: bool,
}

/// Initial basis, intermediate basis and phase reference for one seed.
pub fn reconstruction_instance(
    dim: usize,
    seed: u64,
    orthogonal_to: Option<usize>,
) -> Result<(Basis, Basis, Ket), QergoError> {
    let mut rng = stream_rng(seed, 0);
    let a = random_basis_from(dim, &mut rng)?;
    let m = random_basis_from(dim, &mut rng)?;
    let mut b = random_state_from(dim, &mut rng)?;
    if let Some(k) = orthogonal_to {
        if k >= dim {
            return Err(QergoError::InvalidTarget { index: k, dim });
        }
        let ak = a.ket(k);
        let coeff = ak.inner(&b);
        b = Ket::from_vector(b.amplitudes() - ak.amplitudes() * coeff)?;
    }
    Ok((a, m, b))
}

pub fn reconstruct(args: &ReconstructArgs) -> Result<Outcome, CliError> {
    reject_format(args.output.format, &[Format::Json], "reconstruct")?;
    let dim = args.dim as usize;
    let (a, m, b) = reconstruction_instance(dim, args.seed, args.orthogonal_ref)?;
    let rt = round_trip(&m, &a, &b, DEFAULT_TOL)?;
    let pass = rt.max_entry_error < args.tol && rt.unitarity_residual < args.tol;
    let report = ReconstructReport {
        dim,
        seed: args.seed,
        max_entry_error: rt.max_entry_error,
        unitarity_residual: rt.unitarity_residual,
        pass,
    };
    write_json(&report, args.output.out.as_deref())?;
    Ok(Outcome::from_pass(pass))
}

#[derive(Debug, Serialize)]
pub struct QubitDemo {
    pub omega: f64,
    pub ehrenfest_rate: f64,
    pub expected_rate: f64,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct CommutatorCheck {
    pub dim: usize,
    pub ehrenfest_rate: f64,
    pub commutator_re: f64,
    pub commutator_im: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct FiniteDifferenceCheck {
    pub dts: Vec<f64>,
    pub errors: Vec<f64>,
    pub order: Option<f64>,
    pub window: (f64, f64),
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct WavepacketCheck {
    pub grid_size: usize,
    pub width: f64,
    pub momentum_index: f64,
    pub velocity: f64,
    pub im_xh: f64,
    pub hbar_v_over_2: f64,
    pub relative_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct DynamicsReport {
    pub hbar: f64,
    pub seed: u64,
    pub qubit: QubitDemo,
    pub commutator: CommutatorCheck,
    pub finite_difference: FiniteDifferenceCheck,
    pub wavepacket: WavepacketCheck,
    pub pass: bool,
}

/// `A = sigma_z`, `H = (hbar omega / 2) sigma_x`, `psi = (1, i)/sqrt 2`: the
/// Bloch vector precesses and `d<sigma_z>/dt = omega <sigma_y> = omega`.
pub fn qubit_demo(c: &PhysicalConstants, tol: f64) -> Result<QubitDemo, QergoError> {
    let omega = 1.0;
    let h = Operator::hermitian(pauli_x().matrix() * C64::new(c.hbar() * omega / 2.0, 0.0))?;
    let psi = Ket::from_amplitudes(&[C64::new(1.0, 0.0), C64::new(0.0, 1.0)])?;
    let rate = ehrenfest_rate(&pauli_z(), &h, &psi, c)?;
    let residual = (rate - omega).abs();
    Ok(QubitDemo { omega, ehrenfest_rate: rate, expected_rate: omega, residual, pass: residual < tol })
}

pub fn dynamics_report(args: &DynamicsArgs) -> Result<DynamicsReport, QergoError> {
    let c = PhysicalConstants::new(args.hbar)?;
    let qubit = qubit_demo(&c, args.tol)?;

    let mut rng = stream_rng(args.seed, 0);
    let a = random_hermitian_from(DYNAMICS_INSTANCE_DIM, &mut rng)?;
    let h = random_hermitian_from(DYNAMICS_INSTANCE_DIM, &mut rng)?;
    let psi = random_state_from(DYNAMICS_INSTANCE_DIM, &mut rng)?;
    let rate = ehrenfest_rate(&a, &h, &psi, &c)?;
    let comm = commutator_rate(&a, &h, &psi, &c)?;
    let residual = (C64::new(rate, 0.0) - comm).norm();
    let commutator = CommutatorCheck {
        dim: DYNAMICS_INSTANCE_DIM,
        ehrenfest_rate: rate,
        commutator_re: comm.re,
        commutator_im: comm.im,
        residual,
        tolerance: args.tol,
        pass: residual < args.tol,
    };

    let dts: Vec<f64> = (0..4).map(|k| args.eps / f64::from(1 << k)).collect();
    let fd = fd_convergence(&a, &h, &psi, &dts, &c)?;
    let fd_pass = fd.slope.is_some_and(|s| (FD_ORDER_WINDOW.0..=FD_ORDER_WINDOW.1).contains(&s));
    let finite_difference = FiniteDifferenceCheck {
        dts: fd.dts,
        errors: fd.errors,
        order: fd.slope,
        window: FD_ORDER_WINDOW,
        pass: fd_pass,
    };

    let base = WavepacketConfig { grid_size: args.dim as usize, ..WavepacketConfig::default() };
    // hold the velocity fixed: p = hbar 2 pi k / N = m v
    let momentum_index =
        base.mass * WAVEPACKET_VELOCITY * base.grid_size as f64 / (2.0 * std::f64::consts::PI * c.hbar());
    let cfg = WavepacketConfig { momentum_index, ..base };
    let wp = wavepacket_imaginary_correlation(&cfg, &c)?;
    let wavepacket = WavepacketCheck {
        grid_size: cfg.grid_size,
        width: cfg.width,
        momentum_index,
        velocity: wp.velocity,
        im_xh: wp.im_xh,
        hbar_v_over_2: wp.hbar_v_over_2,
        relative_error: wp.relative_error,
        tolerance: WAVEPACKET_TOL,
        pass: wp.relative_error < WAVEPACKET_TOL,
    };

    let pass = qubit.pass && commutator.pass && finite_difference.pass && wavepacket.pass;
    Ok(DynamicsReport { hbar: args.hbar, seed: args.seed, qubit, commutator, finite_difference, wavepacket, pass })
}

pub fn dynamics(args: &DynamicsArgs) -> Result<Outcome, CliError> {
    reject_format(args.output.format, &[Format::Json], "dynamics")?;
    let report = dynamics_report(args)?;
    write_json(&report, args.output.out.as_deref())?;
    Ok(Outcome::from_pass(report.pass))
}
