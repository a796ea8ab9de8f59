//! Cheating bounds, epsilon-security checks and parameter planning.
//!
//! Bob's advantage is controlled by `||rho - sigma_0||_1 <= 2 (2 e t^2 / M)^{M/2}`
//! (valid once `(2 e t^2 / M)^{M/2} < 1/2`), which telescopes over `k` modes
//! into `p_CB <= 2 k (2 e t^2 / M)^{M/2}`. Alice's best opening attack passes
//! Bob's vacuum test with probability `exp(-4 E k sin^2(pi / 2M))`.
//!
//! Raising `M` hides the bit better but helps a cheating Alice; raising `k`
//! catches Alice but accumulates Bob's advantage. [`find_params`] searches
//! that trade-off.

use std::f64::consts::{E, PI};

use serde::Serialize;

use crate::codestates::{build_difference, build_sigma, CodeParams};
use crate::error::{Error, Result};
use crate::fmt17;
use crate::fock::{tensor_operators, trace_norm};
use crate::format::ser_f64;
use crate::Bit;

/// Slack allowed between a numeric trace norm and its analytic bound.
pub const BOUND_SLACK: f64 = 1e-10;
/// Tail mass above which a truncation is reported as insufficient.
pub const TRUNCATION_WARN: f64 = 1e-10;
/// Default upper limit of the modulation-order scan.
pub const DEFAULT_SCAN_LIMIT: usize = 512;

/// Analytic bound on `||rho - sigma_0||_1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceNormBound {
    /// `2 (2 e t^2 / M)^{M/2}`.
    #[serde(serialize_with = "ser_f64")]
    pub value: f64,
    /// Whether `(2 e t^2 / M)^{M/2} < 1/2`, the regime where `value` is proven.
    pub valid: bool,
    /// `2^{-M/2}`, present when `M > 4 e t^2 + 1`.
    pub simplified: Option<f64>,
}

impl TraceNormBound {
    /// Tightest applicable bound, or `None` outside the valid regime.
    pub fn best(&self) -> Option<f64> {
        if !self.valid {
            return None;
        }
        Some(self.simplified.map_or(self.value, |s| s.min(self.value)))
    }
}

/// `(2 e t^2 / M)^{M/2}`, evaluated through logarithms.
fn bound_base(amplitude: f64, modulation: usize) -> f64 {
    if amplitude == 0.0 {
        return 0.0;
    }
    let m = modulation as f64;
    (m / 2.0 * (2.0 * E * amplitude * amplitude / m).ln()).exp()
}

pub fn trace_norm_bound(amplitude: f64, modulation: usize) -> TraceNormBound {
    let base = bound_base(amplitude, modulation);
    let m = modulation as f64;
    let simplified = (m > 4.0 * E * amplitude * amplitude + 1.0).then(|| 2f64.powf(-m / 2.0));
    TraceNormBound { value: 2.0 * base, valid: base < 0.5, simplified }
}

/// Numeric `||rho - sigma_0||_1` next to its analytic bound.
#[derive(Clone, Debug, Serialize)]
pub struct TraceNormCheck {
    #[serde(serialize_with = "ser_f64")]
    pub amplitude: f64,
    pub modulation: usize,
    pub cutoff: usize,
    #[serde(serialize_with = "ser_f64")]
    pub numeric: f64,
    pub bound: TraceNormBound,
    #[serde(serialize_with = "ser_f64")]
    pub tail_mass: f64,
    pub truncation_warning: bool,
    /// `numeric <= bound + slack` (and `<= 2^{-M/2} + slack` when that bound
    /// applies). Vacuously true outside the valid regime.
    pub ok: bool,
}

pub fn numeric_trace_norm_check(amplitude: f64, modulation: usize) -> Result<TraceNormCheck> {
    let params = CodeParams::with_working_cutoff(amplitude, modulation)?;
    let numeric = trace_norm(&build_difference(&params))?;
    let bound = trace_norm_bound(amplitude, modulation);
    let tail_mass = params.tail_mass();
    let ok = !bound.valid
        || (numeric <= bound.value + BOUND_SLACK
            && bound.simplified.is_none_or(|s| numeric <= s + BOUND_SLACK));
    Ok(TraceNormCheck {
        amplitude,
        modulation,
        cutoff: params.cutoff,
        numeric,
        bound,
        tail_mass,
        truncation_warning: tail_mass > TRUNCATION_WARN,
        ok,
    })
}

/// Upper bound on Bob's cheating probability: `k * 2 (2 e t^2 / M)^{M/2}`.
pub fn pcb_bound(amplitude: f64, modulation: usize, repetitions: usize) -> f64 {
    repetitions as f64 * 2.0 * bound_base(amplitude, modulation)
}

/// Alice's opening-attack success: `exp(-4 E k sin^2(pi / 2M))`.
pub fn pca_exact(energy: f64, repetitions: usize, modulation: usize) -> f64 {
    let s = (PI / (2.0 * modulation as f64)).sin();
    (-4.0 * energy * repetitions as f64 * s * s).exp()
}

/// First-order large-`M` expansion `1 - E k pi^2 / M^2`.
pub fn pca_approx(energy: f64, repetitions: usize, modulation: usize) -> f64 {
    1.0 - energy * repetitions as f64 * PI * PI / (modulation * modulation) as f64
}

/// `1/2 ||sigma_0^{(x)k} - sigma_1^{(x)k}||_1` by direct diagonalisation.
/// The composite dimension grows as `(N+1)^k`, so `k` is limited to 3.
pub fn numeric_distinguishability(amplitude: f64, modulation: usize, repetitions: usize) -> Result<f64> {
    if !(1..=3).contains(&repetitions) {
        return Err(Error::param(format!("numeric distinguishability supports k in 1..=3, got {repetitions}")));
    }
    let params = CodeParams::with_working_cutoff(amplitude, modulation)?;
    let s0 = build_sigma(Bit::Zero, &params);
    let s1 = build_sigma(Bit::One, &params);
    if repetitions == 1 {
        return Ok(trace_norm(&(&s0 - &s1))? / 2.0);
    }
    let a = tensor_operators(&vec![&s0; repetitions])?;
    let b = tensor_operators(&vec![&s1; repetitions])?;
    Ok(trace_norm(&a.try_sub(&b)?.flattened())? / 2.0)
}

/// Which inequality of an epsilon-security pair failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// Alice's opening attack succeeds with probability above epsilon.
    AliceOpening,
    /// Bob's distinguishing bound exceeds epsilon.
    BobDistinguishing,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SecurityCheck {
    /// `exp(-4 t^2 k sin^2(pi/2M)) <= eps`.
    pub general_alice: bool,
    /// `2 k (2 e t^2 / M)^{M/2} <= eps`.
    pub general_bob: bool,
    /// `exp(-k / M^2) <= eps` (the `t = 1` sufficient condition).
    pub sufficient_alice: bool,
    /// `2 k (2 e / M)^{M/2} <= eps` (the `t = 1` sufficient condition).
    pub sufficient_bob: bool,
    /// Conditions of the general pair that failed.
    pub failed: Vec<Condition>,
}

impl SecurityCheck {
    pub fn secure(&self) -> bool {
        self.general_alice && self.general_bob
    }

    pub fn sufficient(&self) -> bool {
        self.sufficient_alice && self.sufficient_bob
    }
}

pub fn epsilon_secure_check(amplitude: f64, modulation: usize, repetitions: usize, epsilon: f64) -> SecurityCheck {
    let m = modulation as f64;
    let k = repetitions as f64;
    let general_alice = pca_exact(amplitude * amplitude, repetitions, modulation) <= epsilon;
    let general_bob = pcb_bound(amplitude, modulation, repetitions) <= epsilon;
    let sufficient_alice = (-k / (m * m)).exp() <= epsilon;
    let sufficient_bob = pcb_bound(1.0, modulation, repetitions) <= epsilon;
    let mut failed = Vec::new();
    if !general_alice {
        failed.push(Condition::AliceOpening);
    }
    if !general_bob {
        failed.push(Condition::BobDistinguishing);
    }
    SecurityCheck { general_alice, general_bob, sufficient_alice, sufficient_bob, failed }
}

/// Which inequality pair a plan was derived from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanRule {
    /// `k >= M^2 ln(1/eps)` and `k <= (eps/2) (M / 2e)^{M/2}` (used at `t = 1`).
    Sufficient,
    /// `k >= ln(1/eps) / (4 t^2 sin^2(pi/2M))` and
    /// `k <= (eps/2) (M / 2 e t^2)^{M/2}`.
    General,
}

/// Admissible repetition counts for one modulation order. `upper` is `None`
/// when the window's upper end does not fit in a `u64`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct KWindow {
    pub lower: u64,
    pub upper: Option<u64>,
}

impl KWindow {
    pub fn contains(&self, k: u64) -> bool {
        k >= self.lower && self.upper.is_none_or(|u| k <= u)
    }

    pub fn is_empty(&self) -> bool {
        self.upper.is_some_and(|u| u < self.lower)
    }
}

fn floor_exp_to_u64(log_value: f64) -> Option<u64> {
    if log_value >= 63.0 * 2f64.ln() {
        None
    } else {
        Some(log_value.exp().floor() as u64)
    }
}

pub fn k_window(epsilon: f64, amplitude: f64, modulation: usize, rule: PlanRule) -> KWindow {
    let m = modulation as f64;
    let ln_inv_eps = (1.0 / epsilon).ln();
    match rule {
        PlanRule::Sufficient => KWindow {
            lower: (m * m * ln_inv_eps).ceil() as u64,
            upper: floor_exp_to_u64((epsilon / 2.0).ln() + m / 2.0 * (m / (2.0 * E)).ln()),
        },
        PlanRule::General => {
            let t2 = amplitude * amplitude;
            let s = (PI / (2.0 * m)).sin();
            KWindow {
                lower: (ln_inv_eps / (4.0 * t2 * s * s)).ceil().max(1.0) as u64,
                upper: floor_exp_to_u64((epsilon / 2.0).ln() + m / 2.0 * (m / (2.0 * E * t2)).ln()),
            }
        }
    }
}

/// Smallest feasible `(M, k)` for a security target.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParamPlan {
    #[serde(serialize_with = "ser_f64")]
    pub epsilon: f64,
    #[serde(serialize_with = "ser_f64")]
    pub amplitude: f64,
    pub modulation: usize,
    pub repetitions: u64,
    pub window: KWindow,
    pub rule: PlanRule,
    /// Whether `k = M^3` lies in the window for this `M`.
    pub cube_in_window: bool,
}

pub fn find_params(epsilon: f64, amplitude: f64) -> Result<ParamPlan> {
    find_params_with_limit(epsilon, amplitude, DEFAULT_SCAN_LIMIT)
}

/// Scans `M = 2, 3, ...` up to `limit` and returns the smallest `M` with a
/// nonempty `k` window, together with the smallest `k` in it.
pub fn find_params_with_limit(epsilon: f64, amplitude: f64, limit: usize) -> Result<ParamPlan> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::param(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(amplitude.is_finite() && amplitude > 0.0) {
        return Err(Error::param(format!("amplitude must be finite and > 0, got {amplitude}")));
    }
    let rule = if amplitude == 1.0 { PlanRule::Sufficient } else { PlanRule::General };
    (2..=limit)
        .map(|m| (m, k_window(epsilon, amplitude, m, rule)))
        .find(|(_, w)| !w.is_empty())
        .map(|(m, window)| {
            let cube = (m as u64).checked_pow(3).unwrap_or(u64::MAX);
            ParamPlan {
                epsilon,
                amplitude,
                modulation: m,
                repetitions: window.lower,
                window,
                rule,
                cube_in_window: window.contains(cube),
            }
        })
        .ok_or(Error::SearchExhausted { limit })
}

/// One-stop summary of the bounds at `(t, M, k, eps)`.
#[derive(Clone, Debug, Serialize)]
pub struct SecurityReport {
    #[serde(serialize_with = "ser_f64")]
    pub amplitude: f64,
    pub modulation: usize,
    pub repetitions: usize,
    #[serde(serialize_with = "ser_f64")]
    pub epsilon: f64,
    #[serde(serialize_with = "ser_f64")]
    pub pcb_bound: f64,
    #[serde(serialize_with = "ser_f64")]
    pub pca_exact: f64,
    #[serde(serialize_with = "ser_f64")]
    pub trace_norm_numeric: f64,
    #[serde(serialize_with = "ser_f64")]
    pub trace_norm_bound: f64,
    pub bound_valid: bool,
    pub bound_ok: bool,
    pub feasible: bool,
}

impl SecurityReport {
    pub fn build(amplitude: f64, modulation: usize, repetitions: usize, epsilon: f64) -> Result<Self> {
        if repetitions == 0 {
            return Err(Error::param("repetitions k must be >= 1"));
        }
        let check = numeric_trace_norm_check(amplitude, modulation)?;
        let pcb = pcb_bound(amplitude, modulation, repetitions);
        let pca = pca_exact(amplitude * amplitude, repetitions, modulation);
        Ok(SecurityReport {
            amplitude,
            modulation,
            repetitions,
            epsilon,
            pcb_bound: pcb,
            pca_exact: pca,
            trace_norm_numeric: check.numeric,
            trace_norm_bound: check.bound.value,
            bound_valid: check.bound.valid,
            bound_ok: check.ok,
            feasible: pca.max(pcb) <= epsilon,
        })
    }

    /// `key = value` lines, floats with 17 significant digits.
    pub fn to_text(&self) -> String {
        let rows: [(&str, String); 11] = [
            ("amplitude", fmt17(self.amplitude)),
            ("modulation", self.modulation.to_string()),
            ("repetitions", self.repetitions.to_string()),
            ("epsilon", fmt17(self.epsilon)),
            ("pcb_bound", fmt17(self.pcb_bound)),
            ("pca_exact", fmt17(self.pca_exact)),
            ("trace_norm_numeric", fmt17(self.trace_norm_numeric)),
            ("trace_norm_bound", fmt17(self.trace_norm_bound)),
            ("bound_valid", self.bound_valid.to_string()),
            ("bound_ok", self.bound_ok.to_string()),
            ("feasible", self.feasible.to_string()),
        ];
        rows.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
