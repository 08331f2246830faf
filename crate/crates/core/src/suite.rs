//! Batch of exact-identity checks over Haar-random instances.

use rand::Rng;

use crate::ergodicity::{
    determinism_residual, ergodic_decomposition_residual, ergodicity_residual, ResidualReport, Tolerances,
};
use crate::error::Result;
use crate::exec::{try_map_indices, Execution};
use crate::linalg::{random_basis_from, random_state_from, stream_rng, Basis, Ket, C64};
use crate::probability::{born_via_bayes_complex, kd_distribution, wavefunction_via_weak, DensityMatrix};
use crate::reconstruction::{gauged_overlaps, reconstruct_overlaps, reference_born, unitarity_residual};

/// RNG stream reserved for suite instances.
const SUITE_STREAM: u64 = 0x5eed;

/// One random instance: a state, a mixed state, four bases and a reference.
#[derive(Debug, Clone)]
pub struct Instance {
    pub psi: Ket,
    pub rho: DensityMatrix,
    pub basis_a: Basis,
    pub basis_m: Basis,
    pub basis_b: Basis,
    pub basis_c: Basis,
    pub reference: Ket,
}

impl Instance {
    pub fn random(dim: usize, seed: u64) -> Result<Self> {
        let mut rng = stream_rng(seed, SUITE_STREAM);
        let psi = random_state_from(dim, &mut rng)?;
        let basis_a = random_basis_from(dim, &mut rng)?;
        let basis_m = random_basis_from(dim, &mut rng)?;
        let basis_b = random_basis_from(dim, &mut rng)?;
        let basis_c = random_basis_from(dim, &mut rng)?;
        let reference = random_state_from(dim, &mut rng)?;
        let mix: Vec<Ket> = (0..3).map(|_| random_state_from(dim, &mut rng)).collect::<Result<_>>()?;
        let weights: Vec<f64> = (0..3).map(|_| rng.random::<f64>() + 0.05).collect();
        let rho = DensityMatrix::mixture(&weights, &mix)?;
        Ok(Instance { psi, rho, basis_a, basis_m, basis_b, basis_c, reference })
    }
}

fn tagged(mut r: ResidualReport, seed: u64) -> ResidualReport {
    r.seed = Some(seed);
    r
}

/// Normalization and proportionality of the weak-value wavefunction against
/// the position basis with uniform post-selection.
pub fn wavefunction_reports(psi: &Ket, tol: &Tolerances) -> Result<[ResidualReport; 2]> {
    let d = psi.dim();
    let post = Ket::uniform(d)?;
    let v = wavefunction_via_weak(psi, &Basis::computational(d)?, &post, tol.overlap)?;
    let amp_sum: C64 = psi.amplitudes().iter().sum();
    let sum = ResidualReport::collect(
        "wavefunction_sum",
        vec![d],
        [(vec![], (v.sum() - C64::new(1.0, 0.0)).norm())],
        tol.residual,
    );
    // p(x) * sum_x' psi(x') / psi(x) should be exactly one
    let prop = ResidualReport::collect(
        "wavefunction_proportionality",
        vec![d],
        (0..d)
            .filter(|&x| psi.amp(x).norm() > 1e-8)
            .map(|x| (vec![x], (v[x] * amp_sum / psi.amp(x) - C64::new(1.0, 0.0)).norm())),
        tol.residual,
    );
    Ok([sum, prop])
}

pub fn born_bayes_report(inst: &Instance, tol: &Tolerances) -> Result<ResidualReport> {
    let kd = kd_distribution(&inst.rho, &inst.basis_a, &inst.basis_b)?;
    let bayes = born_via_bayes_complex(&kd, &inst.basis_m, tol.overlap)?;
    let born = inst.rho.born(&inst.basis_m)?;
    Ok(ResidualReport::collect(
        "born_via_bayes",
        vec![inst.rho.dim()],
        bayes.iter().zip(&born).enumerate().map(|(m, (z, p))| (vec![m], (z - C64::new(*p, 0.0)).norm())),
        tol.residual,
    ))
}

/// Entrywise round-trip error and unitarity of the reconstructed overlaps.
pub fn reconstruction_reports(inst: &Instance, tol: &Tolerances) -> Result<[ResidualReport; 2]> {
    let table = crate::probability::cond_prob_table(&inst.basis_m, &inst.basis_a, &inst.reference, tol.overlap)?;
    let rec = reconstruct_overlaps(
        &table,
        &reference_born(&inst.basis_a, &inst.reference)?,
        &reference_born(&inst.basis_m, &inst.reference)?,
        tol.overlap,
    )?;
    let truth = gauged_overlaps(&inst.basis_m, &inst.basis_a, &inst.reference, tol.overlap)?;
    let (dm, da) = rec.dims();
    let entries = (0..dm).flat_map(|m| {
        let (rec, truth) = (&rec, &truth);
        (0..da).map(move |a| (vec![m, a], (rec.matrix()[(m, a)] - truth[(m, a)]).norm()))
    });
    let entry = ResidualReport::collect("overlap_reconstruction", vec![dm, da], entries, tol.residual);
    let unit =
        ResidualReport::collect("overlap_unitarity", vec![dm, da], [(vec![], unitarity_residual(&rec)?)], tol.residual);
    Ok([entry, unit])
}

/// Every exact identity on one random instance.
pub fn instance_reports(dim: usize, seed: u64, tol: &Tolerances) -> Result<Vec<ResidualReport>> {
    let inst = Instance::random(dim, seed)?;
    let mut out = Vec::with_capacity(9);
    out.extend(wavefunction_reports(&inst.psi, tol)?);
    out.push(ergodicity_residual(&inst.psi, &inst.basis_a, &inst.basis_m, tol)?);
    out.push(born_bayes_report(&inst, tol)?);
    out.push(determinism_residual(&inst.basis_a, &inst.basis_m, &inst.reference, tol)?);
    let dec = ergodic_decomposition_residual(&inst.basis_a, &inst.basis_m, &inst.reference, tol)?;
    out.push(dec.product);
    out.push(dec.phase);
    out.extend(reconstruction_reports(&inst, tol)?);
    Ok(out.into_iter().map(|r| tagged(r, seed)).collect())
}

/// [`instance_reports`] for each seed, concatenated in seed order.
pub fn run_identity_suite(dim: usize, seeds: &[u64], tol: &Tolerances, exec: Execution) -> Result<Vec<ResidualReport>> {
    let per_seed = try_map_indices(exec, seeds.len(), |i| instance_reports(dim, seeds[i], tol))?;
    Ok(per_seed.into_iter().flatten().collect())
}
