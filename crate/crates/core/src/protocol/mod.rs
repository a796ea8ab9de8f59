//! Commit and open.
//!
//! Alice draws `m_j` uniformly from `[M]` for each of the `k` modes and sends
//! `|sqrt(E) e^{2 pi i (m_j + b/2)/M}>`. To open, Alice reveals `(b, m^k)`; Bob
//! displaces every mode by the negated code amplitude and accepts only if all
//! photon counts are zero.
//!
//! Quantum payloads are simulation objects: honest code can only displace and
//! count them, never read the amplitudes.

mod machine;
mod session;
mod strategy;

pub use machine::{AliceMachine, BobMachine, ChannelModel, Message, MessageKind};
pub use session::{run_protocol, run_protocol_with_channel, session_seed, SessionTranscript};
pub(crate) use session::drive as drive_session;
pub use strategy::{AliceStrategy, BobStrategy, HelstromBob, HonestAlice, HonestBob, OpeningAttack, PayloadView, RawAmplitudes};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codestates::{code_amplitude, code_phase};
use crate::error::{Error, Result};
use crate::fock::sample_photon_count;
use crate::format::ser_f64;
use crate::{Bit, C64};

/// Parameters agreed between Alice and Bob before a session.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolParams {
    /// Mean photon number per mode as received by Bob.
    #[serde(serialize_with = "ser_f64")]
    pub energy: f64,
    /// Number of phase positions `M`.
    pub modulation: usize,
    /// Number of modes `k` per commitment.
    pub repetitions: usize,
    /// Security target.
    #[serde(serialize_with = "ser_f64")]
    pub epsilon: f64,
    /// Link transmittivity `tau`.
    #[serde(serialize_with = "ser_f64")]
    pub transmittivity: f64,
}

impl ProtocolParams {
    pub fn new(energy: f64, modulation: usize, repetitions: usize) -> Result<Self> {
        let p = ProtocolParams { energy, modulation, repetitions, epsilon: 1e-2, transmittivity: 1.0 };
        p.validate()?;
        Ok(p)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        self.epsilon = epsilon;
        self.validate()?;
        Ok(self)
    }

    pub fn with_transmittivity(mut self, tau: f64) -> Result<Self> {
        self.transmittivity = tau;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.energy.is_finite() || self.energy < 0.0 {
            return Err(Error::param(format!("energy must be finite and >= 0, got {}", self.energy)));
        }
        if self.modulation < 2 {
            return Err(Error::param(format!("modulation M must be >= 2, got {}", self.modulation)));
        }
        if self.repetitions < 1 {
            return Err(Error::param("repetitions k must be >= 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::param(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if !(self.transmittivity > 0.0 && self.transmittivity <= 1.0) {
            return Err(Error::param(format!("transmittivity must lie in (0, 1], got {}", self.transmittivity)));
        }
        Ok(())
    }

    pub fn amplitude(&self) -> f64 {
        self.energy.sqrt()
    }
}

/// Alice's private record of the commitment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Commitment {
    pub bit: Bit,
    pub phases: Vec<usize>,
}

/// What Alice reveals when opening; may differ from the commitment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Opening {
    pub bit: Bit,
    pub phases: Vec<usize>,
}

impl Commitment {
    pub fn honest_opening(&self) -> Opening {
        Opening { bit: self.bit, phases: self.phases.clone() }
    }
}

/// The `k` coherent modes in flight.
///
/// Only [`displace_and_count`](QuantumPayload::displace_and_count) is public;
/// the amplitudes stay inside the crate:
///
/// ```compile_fail
/// # use phasebc::protocol::*;
/// # use rand::SeedableRng;
/// let params = ProtocolParams::new(1.0, 4, 2).unwrap();
/// let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(0);
/// let (_, payload) = commit(phasebc::Bit::Zero, &params, &mut rng).unwrap();
/// let _ = payload.amplitudes();
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumPayload {
    amplitudes: Vec<C64>,
}

impl QuantumPayload {
    pub(crate) fn from_amplitudes(amplitudes: Vec<C64>) -> Self {
        QuantumPayload { amplitudes }
    }

    pub(crate) fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// Pure-loss channel: every amplitude is scaled by `sqrt(tau)`.
    pub(crate) fn transmit(&self, transmittivity: f64) -> QuantumPayload {
        let s = transmittivity.sqrt();
        QuantumPayload { amplitudes: self.amplitudes.iter().map(|a| a * s).collect() }
    }

    pub fn modes(&self) -> usize {
        self.amplitudes.len()
    }

    /// Displaces mode `j` by `displacements[j]` and photon-counts every mode.
    pub fn displace_and_count<R: Rng + ?Sized>(&self, displacements: &[C64], rng: &mut R) -> Result<Vec<u64>> {
        if displacements.len() != self.modes() {
            return Err(Error::ProtocolAbort(format!(
                "{} displacements for {} modes",
                displacements.len(),
                self.modes()
            )));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(displacements)
            .map(|(a, d)| sample_photon_count(a + d, rng))
            .collect())
    }
}

/// Outcome of Bob's vacuum test.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    accepted: bool,
    counts: Vec<u64>,
}

impl Verdict {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        Verdict { accepted: counts.iter().all(|&c| c == 0), counts }
    }

    pub fn accepted(&self) -> bool {
        self.accepted
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }
}

/// Alice's commit step. The returned payload is the pre-channel state: each
/// amplitude carries `sqrt(E / tau)` so that `E` arrives after the link.
pub fn commit<R: Rng + ?Sized>(bit: Bit, params: &ProtocolParams, rng: &mut R) -> Result<(Commitment, QuantumPayload)> {
    params.validate()?;
    let phases: Vec<usize> = (0..params.repetitions).map(|_| rng.random_range(0..params.modulation)).collect();
    let launch = (params.energy / params.transmittivity).sqrt();
    let amplitudes = phases
        .iter()
        .map(|&m| code_amplitude(launch, m, bit, params.modulation))
        .collect::<Result<Vec<_>>>()?;
    Ok((Commitment { bit, phases }, QuantumPayload::from_amplitudes(amplitudes)))
}

/// Bob's opening test: displace every received mode by
/// `-sqrt(E) e^{i code_phase(m_j, b)}` and accept iff no photon is counted.
pub fn bob_verify<R: Rng + ?Sized>(
    payload: &QuantumPayload,
    revealed: &Opening,
    params: &ProtocolParams,
    rng: &mut R,
) -> Result<Verdict> {
    if revealed.phases.len() != params.repetitions || payload.modes() != params.repetitions {
        return Err(Error::ProtocolAbort(format!(
            "expected {} modes, payload has {} and opening reveals {}",
            params.repetitions,
            payload.modes(),
            revealed.phases.len()
        )));
    }
    let amp = params.amplitude();
    let displacements = revealed
        .phases
        .iter()
        .map(|&m| code_amplitude(amp, m, revealed.bit, params.modulation).map(|a| -a))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::ProtocolAbort(e.to_string()))?;
    Ok(Verdict::from_counts(payload.displace_and_count(&displacements, rng)?))
}

/// Alice's opening attack: claim `target` while revealing the original
/// phases, which maximises Bob's all-zero probability.
pub fn cheat_open(commitment: &Commitment, target: Bit) -> Opening {
    Opening { bit: target, phases: commitment.phases.clone() }
}

/// Probability that Bob accepts `revealed` for an honest commitment sent
/// over a lossless link:
/// `prod_j exp(-4 E sin^2(pi ((m_j - m^_j) + (b - b^)/2) / M))`.
pub fn acceptance_probability(commitment: &Commitment, revealed: &Opening, energy: f64, modulation: usize) -> Result<f64> {
    if commitment.phases.len() != revealed.phases.len() {
        return Err(Error::Dimension("commitment and opening lengths differ".into()));
    }
    let mut log_p = 0.0;
    for (&m, &mh) in commitment.phases.iter().zip(&revealed.phases) {
        let delta = code_phase(m, commitment.bit, modulation)? - code_phase(mh, revealed.bit, modulation)?;
        let s = (delta / 2.0).sin();
        log_p -= 4.0 * energy * s * s;
    }
    Ok(log_p.exp())
}
