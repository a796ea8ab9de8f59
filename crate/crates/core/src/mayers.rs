//! Delayed-choice attack on the commitment.
//!
//! Alice keeps a purification `|Phi_b> = sum_r sqrt(lambda_r) phi^_{r,b} (x) phi^_{r,b}`
//! of `sigma_b`, sends the first factor to Bob and retains the second. A
//! local unitary `U` on Alice's factor switches between the two purifications,
//! and measuring `Theta_b` on it steers Bob's share onto a code state with
//! uniform outcome law.
//!
//! Factor 0 is Bob's share, factor 1 Alice's retained system.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::codestates::{build_sigma, code_amplitude, eigen_sigma, CodeParams};
use crate::error::{Error, Result};
use crate::fock::{coherent_vector, trace_norm, CompositeVector, FockOperator, FockVector};
use crate::format::{fmt17, ser_f64, ser_f64_seq};
use crate::{Bit, C64};

/// Sectors with `lambda_r` at or below this are left out of the purification.
pub const LAMBDA_FLOOR: f64 = 1e-14;
/// Tolerance of the verification checks.
pub const MAYERS_TOL: f64 = 1e-8;
/// Tolerance for rank-1 projector checks.
pub const PROJECTOR_TOL: f64 = 1e-10;

/// Everything needed to mount and verify the attack at one `(t, M, N)`.
#[derive(Clone, Debug)]
pub struct MayersKit {
    params: CodeParams,
    /// Sectors kept in the purifications.
    sectors: Vec<usize>,
    /// `lambda_r` for every sector (shared by both bits).
    lambdas: Vec<f64>,
    discarded_mass: f64,
    /// Normalized eigenvectors `phi^_{r,b}`, all `M` sectors.
    basis: [Vec<FockVector>; 2],
    purification: [CompositeVector; 2],
    switch: FockOperator,
    chi: [Vec<FockVector>; 2],
    povm: [Vec<FockOperator>; 2],
}

/// Bob's state after Alice measured outcome `m` on `|Phi_b>`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionalState {
    pub bit: Bit,
    pub outcome: usize,
    #[serde(serialize_with = "ser_f64")]
    pub probability: f64,
    /// Largest fidelity against the `M` code states of bit `b`.
    #[serde(serialize_with = "ser_f64")]
    pub fidelity: f64,
    /// Code-state index `m'` attaining it.
    pub matched_index: usize,
}

fn sector_of(n: usize, modulation: usize) -> usize {
    n % modulation
}

/// The switching unitary `diag((-1)^{floor(n/M)})`: it flips the sign of
/// every other stride-`M` block, so `U phi^_{r,0} = phi^_{r,1}` in every sector.
pub fn build_u(params: &CodeParams) -> FockOperator {
    let signs: Vec<f64> = (0..=params.cutoff).map(|n| if (n / params.modulation) % 2 == 1 { -1.0 } else { 1.0 }).collect();
    FockOperator::diagonal(&signs).expect("nonempty diagonal")
}

/// `(sum_r e^{-i pi r/M} lambda_r^{-1} |phi_{r,1}><phi_{r,1}|) e^{i pi n/M}`,
/// the switch written out sector by sector. It agrees with [`build_u`] on the
/// span of the `phi^_{r,0}` and vanishes on sectors below the floor.
pub fn literal_switch(params: &CodeParams) -> Result<FockOperator> {
    let m = params.modulation as f64;
    let eig = eigen_sigma(Bit::One, params);
    let d = params.cutoff + 1;
    let mut acc = DMatrix::<C64>::zeros(d, d);
    for (r, (v, &lambda)) in eig.vectors.iter().zip(&eig.values).enumerate() {
        if lambda <= LAMBDA_FLOOR {
            continue;
        }
        let w = C64::from_polar(1.0 / lambda, -PI * r as f64 / m);
        acc += v.projector().into_matrix() * w;
    }
    let phase = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(d, |n, _| C64::from_polar(1.0, PI * n as f64 / m)));
    FockOperator::from_matrix(acc * phase)
}

fn purification_over(basis: &[FockVector], lambdas: &[f64], sectors: &[usize]) -> CompositeVector {
    let d = basis[0].dim();
    let mut c = DMatrix::<C64>::zeros(d, d);
    for &r in sectors {
        let v = nalgebra::DVector::from_column_slice(basis[r].amps());
        c += (&v * v.transpose()) * C64::new(lambdas[r].sqrt(), 0.0);
    }
    CompositeVector::from_coefficients(&c)
}

/// `|Phi_b> = sum_r lambda_r^{-1/2} phi_{r,b} (x) phi_{r,b}`. Every sector
/// must clear [`LAMBDA_FLOOR`].
pub fn build_purification(bit: Bit, params: &CodeParams) -> Result<CompositeVector> {
    let eig = eigen_sigma(bit, params);
    if let Some((r, &v)) = eig.values.iter().enumerate().find(|(_, &v)| v <= LAMBDA_FLOOR) {
        return Err(Error::DegenerateEigenvalue { sector: r, value: v, floor: LAMBDA_FLOOR });
    }
    let basis = (0..params.modulation).map(|r| eig.normalized(r)).collect::<Result<Vec<_>>>()?;
    let all: Vec<usize> = (0..params.modulation).collect();
    Ok(purification_over(&basis, &eig.values, &all))
}

impl MayersKit {
    /// Builds the kit. Sectors with `lambda_r <= LAMBDA_FLOOR` are dropped
    /// from the purifications (their mass is reported); the POVM still uses
    /// all `M` normalized eigenvectors, so each must be representable.
    pub fn build(params: CodeParams) -> Result<Self> {
        let eig = [eigen_sigma(Bit::Zero, &params), eigen_sigma(Bit::One, &params)];
        let lambdas = eig[0].values.clone();
        for (r, &v) in lambdas.iter().enumerate() {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::DegenerateEigenvalue { sector: r, value: v, floor: LAMBDA_FLOOR });
            }
        }
        let sectors: Vec<usize> = (0..params.modulation).filter(|&r| lambdas[r] > LAMBDA_FLOOR).collect();
        let discarded_mass = (0..params.modulation).filter(|r| !sectors.contains(r)).fold(0.0, |acc, r| acc + lambdas[r]);
        let basis = [
            (0..params.modulation).map(|r| eig[0].normalized(r)).collect::<Result<Vec<_>>>()?,
            (0..params.modulation).map(|r| eig[1].normalized(r)).collect::<Result<Vec<_>>>()?,
        ];
        let purification = [
            purification_over(&basis[0], &lambdas, &sectors),
            purification_over(&basis[1], &lambdas, &sectors),
        ];
        let switch = build_u(&params);

        let m_f = params.modulation as f64;
        let d = params.cutoff + 1;
        let chi0: Vec<FockVector> = (0..params.modulation)
            .map(|m| {
                let mut amps = vec![C64::new(0.0, 0.0); d];
                for (r, v) in basis[0].iter().enumerate() {
                    let w = C64::from_polar(1.0 / m_f.sqrt(), 2.0 * PI * (m * r) as f64 / m_f);
                    for (a, x) in amps.iter_mut().zip(v.amps()) {
                        *a += w * x;
                    }
                }
                FockVector::from_raw(amps)
            })
            .collect();
        let chi1 = chi0.iter().map(|c| switch.apply(c)).collect::<Result<Vec<_>>>()?;
        let povm0 = complete(chi0.iter().map(FockVector::projector).collect(), d)?;
        let povm1 = povm0.iter().map(|t| t.conjugated_by(&switch)).collect::<Result<Vec<_>>>()?;

        Ok(MayersKit {
            params,
            sectors,
            lambdas,
            discarded_mass,
            basis,
            purification,
            switch,
            chi: [chi0, chi1],
            povm: [povm0, povm1],
        })
    }

    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    pub fn kept_sectors(&self) -> &[usize] {
        &self.sectors
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn discarded_mass(&self) -> f64 {
        self.discarded_mass
    }

    pub fn purification(&self, bit: Bit) -> &CompositeVector {
        &self.purification[bit as usize]
    }

    pub fn switch(&self) -> &FockOperator {
        &self.switch
    }

    /// The `M + 1` elements of `Theta_b`; the last one is the remainder.
    pub fn povm(&self, bit: Bit) -> &[FockOperator] {
        &self.povm[bit as usize]
    }

    pub fn chi(&self, bit: Bit) -> &[FockVector] {
        &self.chi[bit as usize]
    }

    pub fn normalized_eigenvector(&self, r: usize, bit: Bit) -> &FockVector {
        &self.basis[bit as usize][r]
    }

    /// `(|<Phi_1|(1 (x) U)|Phi_0>|, |<Phi_1|(U (x) U)|Phi_0>|)`.
    pub fn switch_fidelities(&self) -> Result<(f64, f64)> {
        let one = self.purification[0].apply_local(&self.switch, 1)?;
        let two = one.apply_local(&self.switch, 0)?;
        Ok((self.purification[1].inner(&one)?.norm(), self.purification[1].inner(&two)?.norm()))
    }

    /// `(||Tr_A - sigma_b||_1, ||Tr_B - sigma_b||_1)`, where `Tr_A` keeps
    /// Bob's factor.
    pub fn marginal_errors(&self, bit: Bit) -> Result<(f64, f64)> {
        let sigma = build_sigma(bit, &self.params);
        let p = &self.purification[bit as usize];
        let bob = p.reduced(0)?;
        let alice = p.reduced(1)?;
        Ok((trace_norm(&bob.try_sub(&sigma)?)?, trace_norm(&alice.try_sub(&sigma)?)?))
    }

    /// Largest gap between the squared Schmidt coefficients of `|Phi_b>` and
    /// the kept `lambda_r` (padded with zeros).
    pub fn schmidt_error(&self, bit: Bit) -> Result<f64> {
        let c = self.purification[bit as usize].coefficients()?;
        let mut got: Vec<f64> = c.svd(false, false).singular_values.iter().map(|s| s * s).collect();
        let mut want: Vec<f64> = self.sectors.iter().map(|&r| self.lambdas[r]).collect();
        want.resize(got.len(), 0.0);
        got.sort_by(|a, b| b.total_cmp(a));
        want.sort_by(|a, b| b.total_cmp(a));
        Ok(got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// `max |<U phi^_r|U phi^_s> - delta_rs|` over the bit-0 eigenbasis.
    pub fn unitarity_defect_on_span(&self) -> Result<f64> {
        let images = self.basis[0].iter().map(|v| self.switch.apply(v)).collect::<Result<Vec<_>>>()?;
        let mut worst: f64 = 0.0;
        for (r, a) in images.iter().enumerate() {
            for (s, b) in images.iter().enumerate() {
                let delta = if r == s { 1.0 } else { 0.0 };
                worst = worst.max((a.inner(b)? - delta).norm());
            }
        }
        Ok(worst)
    }

    /// `max_r ||U phi^_{r,0} - phi^_{r,1}||`.
    pub fn basis_switch_error(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (a, b) in self.basis[0].iter().zip(&self.basis[1]) {
            let ua = self.switch.apply(a)?;
            let diff: f64 = ua.amps().iter().zip(b.amps()).map(|(x, y)| (x - y).norm_sqr()).sum();
            worst = worst.max(diff.sqrt());
        }
        Ok(worst)
    }

    /// `||U sigma_0 U^dag - sigma_1||_1`.
    pub fn sigma_conjugation_error(&self) -> Result<f64> {
        let s0 = build_sigma(Bit::Zero, &self.params).conjugated_by(&self.switch)?;
        trace_norm(&s0.try_sub(&build_sigma(Bit::One, &self.params))?)
    }

    /// Largest `|U_{ij}|` with `i` and `j` in different residue classes.
    pub fn cross_sector_max(&self) -> f64 {
        let m = self.params.modulation;
        let u = self.switch.matrix();
        let mut worst: f64 = 0.0;
        for i in 0..u.nrows() {
            for j in 0..u.ncols() {
                if sector_of(i, m) != sector_of(j, m) {
                    worst = worst.max(u[(i, j)].norm());
                }
            }
        }
        worst
    }

    /// `max |<chi_m|chi_m'> - delta|`.
    pub fn chi_gram_defect(&self, bit: Bit) -> Result<f64> {
        let chi = &self.chi[bit as usize];
        let mut worst: f64 = 0.0;
        for (a, x) in chi.iter().enumerate() {
            for (b, y) in chi.iter().enumerate() {
                let delta = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((x.inner(y)? - delta).norm());
            }
        }
        Ok(worst)
    }

    /// Residual of `sum_{m<M} theta_{b,m}` acting as the identity on the span
    /// of the `phi^_{r,b}`, and of the full POVM (remainder included) on the
    /// truncated space.
    pub fn completeness_residuals(&self, bit: Bit) -> Result<(f64, f64)> {
        let povm = &self.povm[bit as usize];
        let m = self.params.modulation;
        let mut partial = FockOperator::zeros(self.params.cutoff);
        for t in &povm[..m] {
            partial = partial.try_add(t)?;
        }
        let mut span: f64 = 0.0;
        for v in &self.basis[bit as usize] {
            let w = partial.apply(v)?;
            let diff: f64 = w.amps().iter().zip(v.amps()).map(|(x, y)| (x - y).norm_sqr()).sum();
            span = span.max(diff.sqrt());
        }
        let full = partial.try_add(&povm[m])?.try_sub(&FockOperator::identity(self.params.cutoff))?.max_abs();
        Ok((span, full))
    }

    /// Largest deviation of `theta_{b,m}` (`m < M`) from a rank-1 projector:
    /// `max(||theta^2 - theta||_max, |tr theta - 1|)`. Also returns the
    /// smallest eigenvalue of the remainder element.
    pub fn projector_defect(&self, bit: Bit) -> Result<(f64, f64)> {
        let povm = &self.povm[bit as usize];
        let m = self.params.modulation;
        let mut worst: f64 = 0.0;
        for t in &povm[..m] {
            let sq = t.try_mul(t)?.try_sub(t)?.max_abs();
            worst = worst.max(sq).max((t.trace() - 1.0).norm());
        }
        let min_eig = povm[m].eigenvalues()?.into_iter().fold(f64::INFINITY, f64::min);
        Ok((worst, min_eig))
    }

    /// Bob's unnormalized state `C theta^T C^dag` after Alice obtains the
    /// outcome for `theta` on Alice's factor of `|Phi_b>`.
    fn bob_branch(&self, bit: Bit, theta: &FockOperator) -> Result<FockOperator> {
        let c = self.purification[bit as usize].coefficients()?;
        FockOperator::from_matrix(&c * theta.matrix().transpose() * c.adjoint())
    }

    /// `p(m|b)` for `m < M`, and the mass of the remainder element.
    pub fn outcome_distribution(&self, bit: Bit) -> Result<(Vec<f64>, f64)> {
        let povm = &self.povm[bit as usize];
        let m = self.params.modulation;
        let probs = povm[..m].iter().map(|t| Ok(self.bob_branch(bit, t)?.trace().re)).collect::<Result<Vec<_>>>()?;
        let rest = self.bob_branch(bit, &povm[m])?.trace().re;
        Ok((probs, rest))
    }

    /// Bob's conditional state for outcome `m`, compared against the `M`
    /// code states of bit `b`.
    pub fn conditional_bob_state(&self, outcome: usize, bit: Bit) -> Result<ConditionalState> {
        let m = self.params.modulation;
        if outcome >= m {
            return Err(Error::param(format!("outcome {outcome} outside [0, {m})")));
        }
        let rho = self.bob_branch(bit, &self.povm[bit as usize][outcome])?;
        let probability = rho.trace().re;
        let mut best = (f64::MIN, 0);
        for mp in 0..m {
            let alpha = code_amplitude(self.params.amplitude, mp, bit, m)?;
            let psi = coherent_vector(alpha, self.params.cutoff).normalized()?;
            let f = rho.expectation(&psi)?.re / probability;
            if f > best.0 {
                best = (f, mp);
            }
        }
        Ok(ConditionalState { bit, outcome, probability, fidelity: best.0, matched_index: best.1 })
    }

    /// Largest trace distance between Bob's reduced state when Alice measures
    /// `Theta_0`, `Theta_1`, or nothing on `|Phi_b>`.
    pub fn bob_invariance_error(&self, bit: Bit) -> Result<f64> {
        let untouched = self.purification[bit as usize].reduced(0)?;
        let mut worst: f64 = 0.0;
        for povm in &self.povm {
            let mut acc = FockOperator::zeros(self.params.cutoff);
            for t in povm {
                acc = acc.try_add(&self.bob_branch(bit, t)?)?;
            }
            worst = worst.max(trace_norm(&acc.try_sub(&untouched)?)?);
        }
        Ok(worst)
    }

    /// Runs every check and collects the results.
    pub fn verify(&self) -> Result<MayersReport> {
        MayersReport::build(self)
    }
}

/// Appends `1 - sum` to rank-1 elements.
fn complete(mut elements: Vec<FockOperator>, dim: usize) -> Result<Vec<FockOperator>> {
    let mut rest = FockOperator::identity(dim - 1);
    for e in &elements {
        rest = rest.try_sub(e)?;
    }
    elements.push(rest);
    Ok(elements)
}

/// One named verification check: passes when `value <= tolerance`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    #[serde(serialize_with = "ser_f64")]
    pub value: f64,
    #[serde(serialize_with = "ser_f64")]
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: &str, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, tolerance, pass: value <= tolerance }
    }
}

/// Outcome law for one bit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutcomeRow {
    pub bit: Bit,
    #[serde(serialize_with = "ser_f64_seq")]
    pub probabilities: Vec<f64>,
    #[serde(serialize_with = "ser_f64")]
    pub remainder: f64,
}

/// Verification report of a [`MayersKit`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MayersReport {
    #[serde(serialize_with = "ser_f64")]
    pub amplitude: f64,
    pub modulation: usize,
    pub cutoff: usize,
    pub kept_sectors: Vec<usize>,
    #[serde(serialize_with = "ser_f64")]
    pub discarded_mass: f64,
    #[serde(serialize_with = "ser_f64")]
    pub f_one_sided: f64,
    #[serde(serialize_with = "ser_f64")]
    pub f_two_sided: f64,
    pub outcomes: Vec<OutcomeRow>,
    /// Conditional Bob states, bit 0 first.
    pub conditional: Vec<ConditionalState>,
    /// `m -> m'` for each bit.
    pub index_map: Vec<Vec<usize>>,
    pub checks: Vec<Check>,
}

fn is_bijection(map: &[usize]) -> bool {
    let mut seen = vec![false; map.len()];
    map.iter().all(|&j| j < seen.len() && !std::mem::replace(&mut seen[j], true))
}

impl MayersReport {
    fn build(kit: &MayersKit) -> Result<Self> {
        let m = kit.params.modulation;
        let bits = [Bit::Zero, Bit::One];
        let mut checks = Vec::new();

        let mut marg: f64 = 0.0;
        let mut schmidt: f64 = 0.0;
        for b in bits {
            let (x, y) = kit.marginal_errors(b)?;
            marg = marg.max(x).max(y);
            schmidt = schmidt.max(kit.schmidt_error(b)?);
        }
        checks.push(Check::new("marginals_trace_distance", marg, MAYERS_TOL));
        checks.push(Check::new("schmidt_coefficients", schmidt, PROJECTOR_TOL));
        checks.push(Check::new("switch_unitarity_on_span", kit.unitarity_defect_on_span()?, MAYERS_TOL));
        checks.push(Check::new("switch_maps_eigenbasis", kit.basis_switch_error()?, MAYERS_TOL));
        checks.push(Check::new("switch_conjugates_sigma", kit.sigma_conjugation_error()?, MAYERS_TOL));
        checks.push(Check::new("switch_cross_sector", kit.cross_sector_max(), 0.0));

        let (f1, f2) = kit.switch_fidelities()?;
        checks.push(Check::new("two_sided_switch_fidelity", (1.0 - f2).abs(), MAYERS_TOL));

        let mut outcomes = Vec::new();
        let mut law: f64 = 0.0;
        let mut rest_max: f64 = 0.0;
        let mut gram: f64 = 0.0;
        let mut span: f64 = 0.0;
        let mut full: f64 = 0.0;
        let mut proj: f64 = 0.0;
        let mut rest_eig = f64::INFINITY;
        let mut invariance: f64 = 0.0;
        for b in bits {
            let (probs, rest) = kit.outcome_distribution(b)?;
            law = probs.iter().map(|p| (p - 1.0 / m as f64).abs()).fold(law, f64::max);
            rest_max = rest_max.max(rest.abs());
            outcomes.push(OutcomeRow { bit: b, probabilities: probs, remainder: rest });
            gram = gram.max(kit.chi_gram_defect(b)?);
            let (s, f) = kit.completeness_residuals(b)?;
            span = span.max(s);
            full = full.max(f);
            let (p, e) = kit.projector_defect(b)?;
            proj = proj.max(p);
            rest_eig = rest_eig.min(e);
            invariance = invariance.max(kit.bob_invariance_error(b)?);
        }
        checks.push(Check::new("chi_orthonormal", gram, PROJECTOR_TOL));
        checks.push(Check::new("povm_completeness_on_span", span, MAYERS_TOL));
        checks.push(Check::new("povm_completeness_full", full, MAYERS_TOL));
        checks.push(Check::new("povm_rank_one_projectors", proj, PROJECTOR_TOL));
        checks.push(Check::new("povm_remainder_positive", (-rest_eig).max(0.0), PROJECTOR_TOL));
        checks.push(Check::new("outcome_law_uniform", law, MAYERS_TOL));
        checks.push(Check::new("remainder_mass", rest_max, kit.params.tail_mass() + kit.discarded_mass + 1e-12));
        checks.push(Check::new("bob_state_invariance", invariance, MAYERS_TOL));

        let mut conditional = Vec::new();
        let mut index_map = Vec::new();
        for b in bits {
            let rows = (0..m).map(|o| kit.conditional_bob_state(o, b)).collect::<Result<Vec<_>>>()?;
            let worst = rows.iter().map(|r| 1.0 - r.fidelity).fold(0.0, f64::max);
            let map: Vec<usize> = rows.iter().map(|r| r.matched_index).collect();
            checks.push(Check::new(&format!("conditional_fidelity_b{}", b as u8), worst, MAYERS_TOL));
            checks.push(Check::new(&format!("index_map_bijective_b{}", b as u8), if is_bijection(&map) { 0.0 } else { 1.0 }, 0.0));
            conditional.extend(rows);
            index_map.push(map);
        }

        Ok(MayersReport {
            amplitude: kit.params.amplitude,
            modulation: m,
            cutoff: kit.params.cutoff,
            kept_sectors: kit.sectors.clone(),
            discarded_mass: kit.discarded_mass,
            f_one_sided: f1,
            f_two_sided: f2,
            outcomes,
            conditional,
            index_map,
            checks,
        })
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Human-readable summary with 17-digit floats.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out += &format!("amplitude = {}\nmodulation = {}\ncutoff = {}\n", fmt17(self.amplitude), self.modulation, self.cutoff);
        out += &format!("kept_sectors = {:?}\ndiscarded_mass = {}\n", self.kept_sectors, fmt17(self.discarded_mass));
        out += &format!("f_one_sided = {}\nf_two_sided = {}\n", fmt17(self.f_one_sided), fmt17(self.f_two_sided));
        for row in &self.outcomes {
            let ps: Vec<String> = row.probabilities.iter().map(|&p| fmt17(p)).collect();
            out += &format!("p(m|{}) = [{}] remainder = {}\n", row.bit, ps.join(", "), fmt17(row.remainder));
        }
        for c in &self.conditional {
            out += &format!(
                "conditional b={} m={} -> m'={} fidelity = {} probability = {}\n",
                c.bit,
                c.outcome,
                c.matched_index,
                fmt17(c.fidelity),
                fmt17(c.probability)
            );
        }
        for c in &self.checks {
            out += &format!(
                "check {} = {} (tol {}) {}\n",
                c.name,
                fmt17(c.value),
                fmt17(c.tolerance),
                if c.pass { "PASS" } else { "FAIL" }
            );
        }
        out
    }
}

/// `(f_one_sided, f_two_sided)` at the working cutoff.
pub fn switch_fidelities(params: &CodeParams) -> Result<(f64, f64)> {
    MayersKit::build(*params)?.switch_fidelities()
}

/// `(Theta_0, Theta_1)`, each with `M + 1` elements.
pub fn build_povm(params: &CodeParams) -> Result<(Vec<FockOperator>, Vec<FockOperator>)> {
    let kit = MayersKit::build(*params)?;
    let [p0, p1] = kit.povm;
    Ok((p0, p1))
}

/// `p(m|b)` for `m < M`.
pub fn outcome_distribution(bit: Bit, params: &CodeParams) -> Result<Vec<f64>> {
    Ok(MayersKit::build(*params)?.outcome_distribution(bit)?.0)
}

pub fn conditional_bob_state(outcome: usize, bit: Bit, params: &CodeParams) -> Result<ConditionalState> {
    MayersKit::build(*params)?.conditional_bob_state(outcome, bit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::partial_trace;

    fn kit(t: f64, m: usize) -> MayersKit {
        MayersKit::build(CodeParams::with_working_cutoff(t, m).unwrap()).unwrap()
    }

    #[test]
    fn purification_norm_and_marginals() {
        let params = CodeParams::with_working_cutoff(1.0, 4).unwrap();
        let phi = build_purification(Bit::Zero, &params).unwrap();
        assert!((phi.norm_sqr() - 1.0).abs() < 1e-10);
        let k = kit(1.0, 4);
        for b in [Bit::Zero, Bit::One] {
            let (x, y) = k.marginal_errors(b).unwrap();
            assert!(x <= 1e-8 && y <= 1e-8, "{x} {y}");
            assert!(k.schmidt_error(b).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn marginal_via_full_partial_trace() {
        let params = CodeParams::new(1.0, 4, 18).unwrap();
        let phi = build_purification(Bit::Zero, &params).unwrap();
        let reduced = partial_trace(&phi.projector(), 1).unwrap().into_single().unwrap();
        let sigma = build_sigma(Bit::Zero, &params);
        assert!(trace_norm(&reduced.try_sub(&sigma).unwrap()).unwrap() <= 1e-8);
    }

    #[test]
    fn degenerate_sector_is_rejected() {
        let params = CodeParams::with_working_cutoff(0.01, 8).unwrap();
        assert!(matches!(build_purification(Bit::Zero, &params), Err(Error::DegenerateEigenvalue { .. })));
        let k = MayersKit::build(params).unwrap();
        assert!(k.kept_sectors().len() < 8);
        assert!(k.discarded_mass() > 0.0 && k.discarded_mass() < 1e-14 * 8.0);
    }

    #[test]
    fn switch_properties() {
        let k = kit(1.0, 4);
        assert!(k.unitarity_defect_on_span().unwrap() <= 1e-8);
        let u = k.switch();
        assert!((u.matrix() * u.matrix().adjoint() - DMatrix::identity(u.dim(), u.dim())).camax() < 1e-15);
        assert!(k.basis_switch_error().unwrap() <= 1e-8);
        assert!(k.sigma_conjugation_error().unwrap() <= 1e-8);
        assert_eq!(k.cross_sector_max(), 0.0);
        // r = 0 sector: only the (-1)^k signs
        let v = k.switch().apply(k.normalized_eigenvector(0, Bit::Zero)).unwrap();
        for (a, b) in v.amps().iter().zip(k.normalized_eigenvector(0, Bit::One).amps()) {
            assert!((a - b).norm() <= 1e-8);
        }
    }

    #[test]
    fn literal_switch_agrees_on_span() {
        for m in [2, 3, 4, 6] {
            let k = kit(1.0, m);
            let lit = literal_switch(k.params()).unwrap();
            for r in 0..m {
                let v = k.normalized_eigenvector(r, Bit::Zero);
                let a = lit.apply(v).unwrap();
                let b = k.switch().apply(v).unwrap();
                let d: f64 = a.amps().iter().zip(b.amps()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
                assert!(d < 1e-8, "M={m} r={r}: {d}");
            }
        }
    }

    #[test]
    fn switch_fidelities_grid() {
        for m in [2, 3, 4, 6] {
            let (f1, f2) = kit(1.0, m).switch_fidelities().unwrap();
            assert!((f2 - 1.0).abs() <= 1e-8, "M={m}: {f2}");
            assert!(f1 < f2);
            // one-sided overlap is sum_r lambda_r <phi^_{r,1}|phi^_{r,0}>
            let k = kit(1.0, m);
            let want: f64 = (0..m)
                .map(|r| k.lambdas()[r] * k.normalized_eigenvector(r, Bit::One).inner(k.normalized_eigenvector(r, Bit::Zero)).unwrap().re)
                .sum();
            assert!((f1 - want.abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn global_phase_of_switch_is_irrelevant() {
        let k = kit(1.0, 3);
        let (f1, f2) = k.switch_fidelities().unwrap();
        let mut k2 = k.clone();
        k2.switch = k.switch.scaled(C64::from_polar(1.0, 0.7));
        let (g1, g2) = k2.switch_fidelities().unwrap();
        assert!((f1 - g1).abs() < 1e-14 && (f2 - g2).abs() < 1e-14);
    }

    #[test]
    fn povm_structure() {
        let k = kit(1.0, 4);
        for b in [Bit::Zero, Bit::One] {
            assert!(k.chi_gram_defect(b).unwrap() <= 1e-10);
            let (span, full) = k.completeness_residuals(b).unwrap();
            assert!(span <= 1e-8 && full <= 1e-8);
            let (proj, rest) = k.projector_defect(b).unwrap();
            assert!(proj <= 1e-10);
            assert!(rest >= -1e-10);
            assert_eq!(k.povm(b).len(), 5);
        }
    }

    #[test]
    fn outcome_law_is_uniform() {
        for m in [2, 3, 4, 6] {
            let k = kit(1.0, m);
            for b in [Bit::Zero, Bit::One] {
                let (p, rest) = k.outcome_distribution(b).unwrap();
                for x in &p {
                    assert!((x - 1.0 / m as f64).abs() <= 1e-8, "M={m}: {p:?}");
                }
                assert!((p.iter().sum::<f64>() + rest - k.purification(b).norm_sqr()).abs() <= 1e-10);
                assert!(rest.abs() <= k.params().tail_mass() + 1e-12);
            }
        }
    }

    #[test]
    fn bob_cannot_see_the_measurement() {
        let k = kit(1.0, 4);
        for b in [Bit::Zero, Bit::One] {
            assert!(k.bob_invariance_error(b).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn bit_zero_steering_hits_code_states() {
        for m in [2, 3, 4, 6] {
            let k = kit(1.0, m);
            let mut map = Vec::new();
            for o in 0..m {
                let c = k.conditional_bob_state(o, Bit::Zero).unwrap();
                assert!(c.fidelity >= 1.0 - 1e-8, "M={m} m={o}: {}", c.fidelity);
                assert!((c.probability - 1.0 / m as f64).abs() <= 1e-8);
                map.push(c.matched_index);
            }
            assert_eq!(map, (0..m).map(|o| (m - o) % m).collect::<Vec<_>>());
        }
    }

    /// Bob's bit-1 state is `sum_r e^{-2 pi i m r/M} phi_{r,1}`; the bit-1
    /// code states are `sum_r e^{i pi (2m'+1) r/M} phi_{r,1}`, so the best
    /// fidelity is `max_m' |sum_r lambda_r e^{i pi (2(m+m')+1) r/M}|^2 / (sum lambda)^2`.
    #[test]
    fn bit_one_steering_matches_closed_form() {
        for m in [2, 3, 4, 6] {
            let k = kit(1.0, m);
            let lam = k.lambdas();
            let total: f64 = lam.iter().sum();
            for o in 0..m {
                let want = (0..m)
                    .map(|mp| {
                        let s: C64 = (0..m)
                            .map(|r| C64::from_polar(lam[r], PI * ((2 * (o + mp) + 1) * r) as f64 / m as f64))
                            .sum();
                        s.norm_sqr() / (total * total)
                    })
                    .fold(f64::MIN, f64::max);
                let c = k.conditional_bob_state(o, Bit::One).unwrap();
                assert!((c.fidelity - want).abs() < 1e-10, "M={m} m={o}: {} vs {want}", c.fidelity);
                assert!((c.probability - 1.0 / m as f64).abs() <= 1e-8);
            }
        }
        let c = kit(1.0, 4).conditional_bob_state(0, Bit::One).unwrap();
        assert!((c.fidelity - 0.6028).abs() < 1e-4, "{}", c.fidelity);
    }

    #[test]
    fn report_serializes() {
        let r = kit(1.0, 3).verify().unwrap();
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"f_two_sided\""));
        assert!(r.check("marginals_trace_distance").unwrap().pass);
        assert!(r.check("conditional_fidelity_b0").unwrap().pass);
        assert!(r.to_text().contains("check outcome_law_uniform"));
        assert!(is_bijection(&[2, 0, 1]) && !is_bijection(&[0, 0, 1]));
    }
}
