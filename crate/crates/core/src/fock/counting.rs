use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::C64;

use super::WORKING_TAIL;

/// Log of the Poisson mass `e^{-E} E^n / n!` for `n = 0..=n_max`.
fn log_poisson_masses(energy: f64, n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut lp = -energy;
    out.push(lp);
    let ln_e = energy.ln();
    for n in 1..=n_max {
        lp += ln_e - (n as f64).ln();
        out.push(lp);
    }
    out
}

/// Poisson tail `sum_{n > cutoff} e^{-E} E^n / n!`, summed directly rather
/// than as `1 - cdf` so that tiny tails keep their relative precision.
pub fn poisson_tail(energy: f64, cutoff: usize) -> f64 {
    if energy == 0.0 {
        return 0.0;
    }
    // Terms beyond this point are below 1e-320 of the peak.
    let horizon = cutoff.max((energy + 40.0 * energy.sqrt() + 800.0) as usize) + 1;
    let logs = log_poisson_masses(energy, horizon);
    logs[cutoff + 1..].iter().rev().map(|lp| lp.exp()).sum()
}

/// Smallest cutoff `N` whose Poisson tail beyond `N` is below `tail_tol`.
pub fn cutoff_for_energy(energy: f64, tail_tol: f64) -> Result<usize> {
    if !energy.is_finite() || energy < 0.0 {
        return Err(Error::param(format!("energy must be finite and >= 0, got {energy}")));
    }
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(Error::param(format!("tail tolerance must lie in (0, 1), got {tail_tol}")));
    }
    if energy == 0.0 {
        return Ok(0);
    }
    let horizon = (energy + 40.0 * energy.sqrt() + 800.0) as usize;
    let masses: Vec<f64> = log_poisson_masses(energy, horizon).into_iter().map(f64::exp).collect();
    // suffix[n] = sum_{j >= n} p_j
    let mut suffix = vec![0.0; masses.len() + 1];
    for n in (0..masses.len()).rev() {
        suffix[n] = suffix[n + 1] + masses[n];
    }
    (0..masses.len())
        .find(|&n| suffix[n + 1] < tail_tol)
        .ok_or_else(|| Error::Numerical(format!("no cutoff below {horizon} reaches tail {tail_tol:e}")))
}

/// Cutoff used for density-matrix work at mean photon number `energy`:
/// `cutoff_for_energy(E, 1e-12) + ceil(6 sqrt(E)) + 10`.
pub fn working_cutoff(energy: f64) -> Result<usize> {
    let base = cutoff_for_energy(energy, WORKING_TAIL)?;
    Ok(base + (6.0 * energy.sqrt()).ceil() as usize + 10)
}

/// Photon-number measurement on the coherent state `|alpha>`: a Poisson
/// sample with mean `|alpha|^2`.
pub fn sample_photon_count<R: Rng + ?Sized>(alpha: C64, rng: &mut R) -> u64 {
    let mean = alpha.norm_sqr();
    if mean == 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("finite positive Poisson mean");
    dist.sample(rng) as u64
}
