//! The state family of the protocol.
//!
//! A code state is the coherent state `|t e^{2 pi i (m + b/2) / M}>`. Bob,
//! not knowing `m`, holds the uniform mixture `sigma_b` of the `M` code
//! states for bit `b`. Both `sigma_0` and `sigma_1` approach the
//! phase-averaged state `rho` as `M` grows, which is what hides the bit.
//!
//! `sigma_b` is block structured: `<m|sigma_b|n>` vanishes unless `M`
//! divides `m - n`, so it splits into `M` rank-one blocks indexed by the
//! residue `r = n mod M`. Those blocks are the eigenvectors `phi_{r,b}`.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fock::{coherent_vector, poisson_tail, working_cutoff, FockOperator, FockVector};
use crate::{Bit, C64};

/// Amplitude `t`, modulation order `M` and truncation cutoff `N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CodeParams {
    pub amplitude: f64,
    pub modulation: usize,
    pub cutoff: usize,
}

impl CodeParams {
    pub fn new(amplitude: f64, modulation: usize, cutoff: usize) -> Result<Self> {
        if !amplitude.is_finite() || amplitude < 0.0 {
            return Err(Error::param(format!("amplitude t must be finite and >= 0, got {amplitude}")));
        }
        if modulation < 2 {
            return Err(Error::param(format!("modulation order M must be >= 2, got {modulation}")));
        }
        Ok(CodeParams { amplitude, modulation, cutoff })
    }

    /// Parameters with the standard working cutoff for energy `t^2`.
    pub fn with_working_cutoff(amplitude: f64, modulation: usize) -> Result<Self> {
        if !amplitude.is_finite() {
            return Err(Error::param("amplitude must be finite"));
        }
        let cutoff = working_cutoff(amplitude * amplitude)?;
        CodeParams::new(amplitude, modulation, cutoff)
    }

    pub fn energy(&self) -> f64 {
        self.amplitude * self.amplitude
    }

    /// Poisson mass discarded by the truncation.
    pub fn tail_mass(&self) -> f64 {
        poisson_tail(self.energy(), self.cutoff)
    }

    /// `e^{-t^2/2} t^n / sqrt(n!)` for `n = 0..=N`.
    fn coherent_magnitudes(&self) -> Vec<f64> {
        coherent_vector(C64::new(self.amplitude, 0.0), self.cutoff).amps().iter().map(|a| a.re).collect()
    }
}

/// Code phase `2 pi (m + b/2) / M`.
pub fn code_phase(m: usize, bit: Bit, modulation: usize) -> Result<f64> {
    if modulation == 0 || m >= modulation {
        return Err(Error::param(format!("phase index {m} outside [0, {modulation})")));
    }
    Ok(2.0 * PI * (m as f64 + bit.as_f64() / 2.0) / modulation as f64)
}

/// Code amplitude `t e^{i code_phase(m, b, M)}`.
pub fn code_amplitude(amplitude: f64, m: usize, bit: Bit, modulation: usize) -> Result<C64> {
    Ok(C64::from_polar(amplitude, code_phase(m, bit, modulation)?))
}

/// Phase-averaged coherent state: diagonal Poisson weights `e^{-t^2} t^{2n}/n!`.
pub fn build_ideal_rho(amplitude: f64, cutoff: usize) -> FockOperator {
    let mags = coherent_vector(C64::new(amplitude, 0.0), cutoff);
    let diag: Vec<f64> = mags.amps().iter().map(|a| a.norm_sqr()).collect();
    FockOperator::diagonal(&diag).expect("cutoff + 1 >= 1 entries")
}

/// `sigma_b` from its matrix elements
/// `e^{-t^2} t^{m+n} / sqrt(m! n!) e^{i pi b (m-n)/M}` on the `M`-stride
/// diagonals.
pub fn build_sigma(bit: Bit, params: &CodeParams) -> FockOperator {
    let c = params.coherent_magnitudes();
    let m_ord = params.modulation;
    let d = params.cutoff + 1;
    let m = DMatrix::from_fn(d, d, |row, col| {
        let diff = row.abs_diff(col);
        if diff % m_ord != 0 {
            return C64::new(0.0, 0.0);
        }
        // e^{i pi b (row-col)/M} = (-1)^{b (row-col)/M}
        let sign = if bit == Bit::One && (diff / m_ord) % 2 == 1 { -1.0 } else { 1.0 };
        C64::new(sign * c[row] * c[col], 0.0)
    });
    FockOperator::from_matrix(m).expect("square")
}

/// `sigma_b` as the uniform mixture of the `M` truncated code states.
pub fn build_sigma_mixture(bit: Bit, params: &CodeParams) -> Result<FockOperator> {
    let d = params.cutoff + 1;
    let mut acc = DMatrix::<C64>::zeros(d, d);
    for m in 0..params.modulation {
        let alpha = code_amplitude(params.amplitude, m, bit, params.modulation)?;
        acc += coherent_vector(alpha, params.cutoff).projector().into_matrix();
    }
    FockOperator::from_matrix(acc / C64::new(params.modulation as f64, 0.0))
}

/// Difference operator `D = rho - sigma_0`.
pub fn build_difference(params: &CodeParams) -> FockOperator {
    let rho = build_ideal_rho(params.amplitude, params.cutoff);
    &rho - &build_sigma(Bit::Zero, params)
}

/// Eigensystem of `sigma_b`: `M` sub-normalized vectors `phi_{r,b}` with
/// `sigma_b = sum_r |phi_{r,b}><phi_{r,b}|`, and eigenvalues
/// `lambda_r = ||phi_{r,b}||^2`.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub bit: Bit,
    pub vectors: Vec<FockVector>,
    pub values: Vec<f64>,
}

impl EigenSystem {
    /// `phi_{r,b} / sqrt(lambda_r)`.
    pub fn normalized(&self, r: usize) -> Result<FockVector> {
        self.vectors[r].normalized()
    }

    /// `sum_r |phi_r><phi_r|`.
    pub fn reconstruct(&self) -> FockOperator {
        let d = self.vectors[0].dim();
        let mut acc = DMatrix::<C64>::zeros(d, d);
        for v in &self.vectors {
            acc += v.projector().into_matrix();
        }
        FockOperator::from_matrix(acc).expect("square")
    }
}

/// Sector eigenvector `phi_{r,b}`: amplitudes
/// `e^{-t^2/2} t^{r+kM} e^{i pi b k} / sqrt((r+kM)!)` at `n = r + kM`.
pub fn sector_vector(r: usize, bit: Bit, params: &CodeParams) -> Result<FockVector> {
    if r >= params.modulation {
        return Err(Error::param(format!("sector {r} outside [0, {})", params.modulation)));
    }
    let c = params.coherent_magnitudes();
    let amps = (0..=params.cutoff)
        .map(|n| {
            if n % params.modulation != r {
                return C64::new(0.0, 0.0);
            }
            let k = n / params.modulation;
            let sign = if bit == Bit::One && k % 2 == 1 { -1.0 } else { 1.0 };
            C64::new(sign * c[n], 0.0)
        })
        .collect();
    Ok(FockVector::from_raw(amps))
}

pub fn eigen_sigma(bit: Bit, params: &CodeParams) -> EigenSystem {
    let vectors: Vec<FockVector> = (0..params.modulation)
        .map(|r| sector_vector(r, bit, params).expect("r < M"))
        .collect();
    let values = vectors.iter().map(FockVector::norm_sqr).collect();
    EigenSystem { bit, vectors, values }
}
