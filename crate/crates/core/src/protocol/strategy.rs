//! Pluggable behaviour for both parties.

use rand::{Rng, RngCore};

use super::{cheat_open, Commitment, Opening, ProtocolParams, QuantumPayload};
use crate::codestates::{build_sigma, CodeParams};
use crate::error::Result;
use crate::fock::{coherent_vector, FockOperator};
use crate::{Bit, C64};

/// How Alice picks the committed bit and what gets revealed.
pub trait AliceStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    /// Bit to commit to.
    fn choose_bit(&self, rng: &mut dyn RngCore) -> Bit;

    /// Opening sent to Bob for `commitment`.
    fn open(&self, commitment: &Commitment) -> Opening;
}

/// Commits to a fixed or uniformly random bit and opens it truthfully.
#[derive(Clone, Copy, Debug, Default)]
pub struct HonestAlice {
    pub bit: Option<Bit>,
}

impl AliceStrategy for HonestAlice {
    fn name(&self) -> &'static str {
        "honest"
    }

    fn choose_bit(&self, rng: &mut dyn RngCore) -> Bit {
        self.bit.unwrap_or_else(|| Bit::from(rng.random::<bool>()))
    }

    fn open(&self, commitment: &Commitment) -> Opening {
        commitment.honest_opening()
    }
}

/// Commits honestly, then claims the other bit while revealing the original
/// phases.
#[derive(Clone, Copy, Debug, Default)]
pub struct OpeningAttack {
    pub bit: Option<Bit>,
}

impl AliceStrategy for OpeningAttack {
    fn name(&self) -> &'static str {
        "cheat-open"
    }

    fn choose_bit(&self, rng: &mut dyn RngCore) -> Bit {
        self.bit.unwrap_or_else(|| Bit::from(rng.random::<bool>()))
    }

    fn open(&self, commitment: &Commitment) -> Opening {
        cheat_open(commitment, commitment.bit.flipped())
    }
}

/// Amplitudes handed to an adversarial Bob by the simulator. Only the crate
/// can build one.
#[derive(Clone, Copy, Debug)]
pub struct RawAmplitudes<'a>(&'a [C64]);

impl<'a> RawAmplitudes<'a> {
    pub(crate) fn new(amplitudes: &'a [C64]) -> Self {
        RawAmplitudes(amplitudes)
    }

    pub fn amplitudes(&self) -> &'a [C64] {
        self.0
    }
}

/// What Bob's strategy may look at before the opening.
#[derive(Clone, Copy, Debug)]
pub enum PayloadView<'a> {
    /// Honest link: the payload can only be displaced and counted.
    Sealed(&'a QuantumPayload),
    /// Adversarial simulation: the received amplitudes themselves.
    Raw(RawAmplitudes<'a>),
}

/// Bob's behaviour between COMMIT and OPEN.
pub trait BobStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    /// Optional guess of Alice's bit before the opening.
    fn inspect(&self, view: PayloadView<'_>, params: &ProtocolParams, rng: &mut dyn RngCore) -> Option<Bit>;
}

/// Stores the payload and never guesses.
#[derive(Clone, Copy, Debug, Default)]
pub struct HonestBob;

impl BobStrategy for HonestBob {
    fn name(&self) -> &'static str {
        "honest"
    }

    fn inspect(&self, _: PayloadView<'_>, _: &ProtocolParams, _: &mut dyn RngCore) -> Option<Bit> {
        None
    }
}

/// Guesses the bit with the single-mode Helstrom measurement
/// `{P_+, 1 - P_+}` of `sigma_0 - sigma_1`, applied to every received mode and
/// combined by majority vote (ties go to 0).
#[derive(Clone, Debug)]
pub struct HelstromBob {
    code: CodeParams,
    projector: FockOperator,
}

impl HelstromBob {
    pub fn new(energy: f64, modulation: usize) -> Result<Self> {
        let code = CodeParams::with_working_cutoff(energy.sqrt(), modulation)?;
        let diff = build_sigma(Bit::Zero, &code).try_sub(&build_sigma(Bit::One, &code))?;
        Ok(HelstromBob { code, projector: diff.positive_part_projector()? })
    }

    /// Probability that one mode with amplitude `alpha` yields outcome 0.
    pub fn zero_probability(&self, alpha: C64) -> Result<f64> {
        let v = coherent_vector(alpha, self.code.cutoff).normalized()?;
        Ok(self.projector.expectation(&v)?.re.clamp(0.0, 1.0))
    }

    pub fn matches(&self, params: &ProtocolParams) -> bool {
        self.code.modulation == params.modulation && (self.code.energy() - params.energy).abs() <= 1e-12 * params.energy.max(1.0)
    }
}

impl BobStrategy for HelstromBob {
    fn name(&self) -> &'static str {
        "helstrom"
    }

    fn inspect(&self, view: PayloadView<'_>, params: &ProtocolParams, rng: &mut dyn RngCore) -> Option<Bit> {
        let PayloadView::Raw(raw) = view else { return None };
        if !self.matches(params) {
            return None;
        }
        let mut zeros = 0usize;
        let modes = raw.amplitudes().len();
        for &alpha in raw.amplitudes() {
            let p0 = self.zero_probability(alpha).ok()?;
            if rng.random::<f64>() < p0 {
                zeros += 1;
            }
        }
        Some(if 2 * zeros >= modes { Bit::Zero } else { Bit::One })
    }
}
