//! In-process session driver and transcripts.

use std::collections::VecDeque;
use std::sync::Arc;

use super::{AliceMachine, AliceStrategy, BobMachine, BobStrategy, ChannelModel, Message, Opening, ProtocolParams, Verdict};
use crate::error::{Error, Result};
use crate::Bit;

/// Ordered message log as seen at Bob's endpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct SessionTranscript {
    pub session_id: String,
    pub messages: Vec<Message>,
    /// Alice's committed bit, known to the simulator only.
    pub committed: Option<Bit>,
}

impl SessionTranscript {
    pub fn verdict(&self) -> Option<&Verdict> {
        self.messages.iter().find_map(|m| match m {
            Message::Verdict { verdict, .. } => Some(verdict),
            _ => None,
        })
    }

    pub fn accepted(&self) -> bool {
        self.verdict().is_some_and(Verdict::accepted)
    }

    /// Bob's pre-opening guess, if the strategy made one.
    pub fn guess(&self) -> Option<Bit> {
        self.messages.iter().find_map(|m| match m {
            Message::Verdict { guess, .. } => *guess,
            _ => None,
        })
    }

    pub fn opening(&self) -> Option<&Opening> {
        self.messages.iter().find_map(|m| match m {
            Message::Open(o) => Some(o),
            _ => None,
        })
    }

    pub fn abort_reason(&self) -> Option<&str> {
        self.messages.iter().find_map(|m| match m {
            Message::Abort { reason } => Some(reason.as_str()),
            _ => None,
        })
    }

    /// JSON lines, one per message.
    pub fn to_lines(&self) -> Result<String> {
        let mut out = String::new();
        for m in &self.messages {
            out.push_str(&crate::transport::encode_message(&self.session_id, m)?);
            out.push('\n');
        }
        Ok(out)
    }
}

/// Runs both machines to completion, passing every message through `relay`
/// (identity in-process, encode/decode for the loopback transport).
pub(crate) fn drive(
    alice: &mut AliceMachine,
    bob: &mut BobMachine,
    mut relay: impl FnMut(&Message) -> Result<Message>,
) -> Result<Vec<Message>> {
    let mut log = Vec::new();
    let mut to_bob: VecDeque<Message> = alice.start()?.into();
    let mut to_alice: VecDeque<Message> = VecDeque::new();
    while !(to_bob.is_empty() && to_alice.is_empty()) {
        while let Some(m) = to_bob.pop_front() {
            if bob.is_finished() {
                break;
            }
            let m = relay(&m)?;
            log.push(m.clone());
            for reply in bob.handle(&m)? {
                let reply = relay(&reply)?;
                log.push(reply.clone());
                to_alice.push_back(reply);
            }
        }
        while let Some(m) = to_alice.pop_front() {
            if alice.is_finished() {
                to_alice.clear();
                break;
            }
            to_bob.extend(alice.handle(&m)?);
        }
        if bob.is_finished() {
            to_bob.clear();
        }
    }
    Ok(log)
}

/// Seed of session `index` in a run started from `base` (SplitMix64 of the
/// pair), so neighbouring runs do not share sessions.
pub fn session_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn check_seed_params(params: &ProtocolParams) -> Result<()> {
    params.validate().map_err(|e| Error::param(format!("invalid session parameters: {e}")))
}

/// Runs one honest-link session in process. The session id is derived from
/// the seed.
pub fn run_protocol(
    alice: Arc<dyn AliceStrategy>,
    bob: Arc<dyn BobStrategy>,
    params: &ProtocolParams,
    seed: u64,
) -> Result<SessionTranscript> {
    run_protocol_with_channel(alice, bob, params, ChannelModel::for_params(params), seed)
}

pub fn run_protocol_with_channel(
    alice: Arc<dyn AliceStrategy>,
    bob: Arc<dyn BobStrategy>,
    params: &ProtocolParams,
    channel: ChannelModel,
    seed: u64,
) -> Result<SessionTranscript> {
    check_seed_params(params)?;
    channel.validate()?;
    let mut a = AliceMachine::new(*params, alice, seed);
    let mut b = BobMachine::new(*params, bob, channel, seed);
    let messages = drive(&mut a, &mut b, |m| Ok(m.clone()))?;
    Ok(SessionTranscript { session_id: format!("{seed:016x}"), messages, committed: a.commitment().map(|c| c.bit) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{HelstromBob, HonestAlice, HonestBob, MessageKind, OpeningAttack};
    use crate::security::pcb_bound;

    fn sigma(p: f64, n: usize) -> f64 {
        (p * (1.0 - p) / n as f64).sqrt()
    }

    #[test]
    fn session_seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..1000).flat_map(|i| [session_seed(1729, i), session_seed(1730, i)]).collect();
        assert_eq!(seeds.len(), 2000);
    }

    #[test]
    fn honest_session_order() {
        let p = ProtocolParams::new(1.0, 8, 16).unwrap();
        let t = run_protocol(Arc::new(HonestAlice::default()), Arc::new(HonestBob), &p, 1729).unwrap();
        let kinds: Vec<_> = t.messages.iter().map(Message::kind).collect();
        use MessageKind::*;
        assert_eq!(kinds, [Hello, Hello, Commit, Open, Verdict]);
        assert!(t.accepted());
        assert_eq!(t.opening().unwrap().bit, t.committed.unwrap());
    }

    #[test]
    fn deterministic_per_seed() {
        let p = ProtocolParams::new(1.0, 4, 10).unwrap();
        let run = |seed| run_protocol(Arc::new(OpeningAttack::default()), Arc::new(HonestBob), &p, seed).unwrap();
        assert_eq!(run(11), run(11));
        assert_ne!(run(11).messages, run(12).messages);
    }

    #[test]
    fn honest_sessions_accept_under_loss() {
        let p = ProtocolParams::new(1.0, 8, 16).unwrap().with_transmittivity(0.25).unwrap();
        for seed in 0..2000 {
            let t = run_protocol(Arc::new(HonestAlice::default()), Arc::new(HonestBob), &p, seed).unwrap();
            assert!(t.accepted(), "seed {seed}");
        }
    }

    #[test]
    fn cheating_rate_through_sessions() {
        let p = ProtocolParams::new(1.0, 4, 10).unwrap();
        let want = crate::security::pca_exact(1.0, 10, 4);
        let n = 100_000;
        let alice: Arc<dyn AliceStrategy> = Arc::new(OpeningAttack::default());
        let bob: Arc<dyn BobStrategy> = Arc::new(HonestBob);
        let ok = (0..n).filter(|&s| run_protocol(alice.clone(), bob.clone(), &p, s as u64).unwrap().accepted()).count();
        let rate = ok as f64 / n as f64;
        assert!((rate - want).abs() < 3.0 * sigma(want, n), "{rate} vs {want}");
    }

    #[test]
    fn helstrom_needs_adversarial_link() {
        let p = ProtocolParams::new(1.0, 4, 1).unwrap();
        let bob: Arc<dyn BobStrategy> = Arc::new(HelstromBob::new(1.0, 4).unwrap());
        let alice: Arc<dyn AliceStrategy> = Arc::new(HonestAlice::default());
        assert_eq!(run_protocol(alice.clone(), bob.clone(), &p, 0).unwrap().guess(), None);
        let adv = ChannelModel::default().adversarial();
        let t = run_protocol_with_channel(alice, bob, &p, adv, 0).unwrap();
        assert!(t.guess().is_some());
        assert!(t.accepted());
    }

    #[test]
    fn helstrom_guess_rate_below_bound() {
        let (e, m) = (1.0, 8);
        let p = ProtocolParams::new(e, m, 1).unwrap();
        let bob: Arc<dyn BobStrategy> = Arc::new(HelstromBob::new(e, m).unwrap());
        let alice: Arc<dyn AliceStrategy> = Arc::new(HonestAlice::default());
        let adv = ChannelModel::default().adversarial();
        let n = 20_000;
        let hits = (0..n)
            .filter(|&s| {
                let t = run_protocol_with_channel(alice.clone(), bob.clone(), &p, adv, s as u64).unwrap();
                t.guess() == t.committed
            })
            .count();
        let rate = hits as f64 / n as f64;
        let cap = 0.5 + pcb_bound(1.0, m, 1) / 2.0;
        assert!(rate <= cap + 3.0 * sigma(0.5, n), "{rate} > {cap}");
    }
}
