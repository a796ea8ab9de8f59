//! Sans-IO session state machines.
//!
//! Message order: `HELLO(A) -> HELLO(B) -> COMMIT -> OPEN -> VERDICT`. Any
//! message out of place makes the receiver answer with `ABORT` and stop;
//! once a machine has finished, further input is an error.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::{bob_verify, commit, AliceStrategy, BobStrategy, Commitment, Opening, PayloadView, ProtocolParams, QuantumPayload, RawAmplitudes, Verdict};
use crate::error::{Error, Result};
use crate::Bit;

/// One protocol message.
#[derive(Clone, Debug, PartialEq)]
pub enum Message {
    Hello(ProtocolParams),
    Commit(QuantumPayload),
    Open(Opening),
    Verdict { verdict: Verdict, guess: Option<Bit> },
    Abort { reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MessageKind {
    Hello,
    Commit,
    Open,
    Verdict,
    Abort,
}

impl MessageKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MessageKind::Hello => "HELLO",
            MessageKind::Commit => "COMMIT",
            MessageKind::Open => "OPEN",
            MessageKind::Verdict => "VERDICT",
            MessageKind::Abort => "ABORT",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "HELLO" => MessageKind::Hello,
            "COMMIT" => MessageKind::Commit,
            "OPEN" => MessageKind::Open,
            "VERDICT" => MessageKind::Verdict,
            "ABORT" => MessageKind::Abort,
            _ => return None,
        })
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Message {
    pub fn kind(&self) -> MessageKind {
        match self {
            Message::Hello(_) => MessageKind::Hello,
            Message::Commit(_) => MessageKind::Commit,
            Message::Open(_) => MessageKind::Open,
            Message::Verdict { .. } => MessageKind::Verdict,
            Message::Abort { .. } => MessageKind::Abort,
        }
    }

    fn abort(reason: impl Into<String>) -> Message {
        Message::Abort { reason: reason.into() }
    }
}

/// The link between Alice and Bob.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelModel {
    /// Pure-loss transmittivity applied to every mode.
    pub transmittivity: f64,
    /// Hand Bob's strategy the raw amplitudes instead of a sealed payload.
    pub adversarial_bob: bool,
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel { transmittivity: 1.0, adversarial_bob: false }
    }
}

impl ChannelModel {
    /// Honest link with the transmittivity both parties agreed on.
    pub fn for_params(params: &ProtocolParams) -> Self {
        ChannelModel { transmittivity: params.transmittivity, adversarial_bob: false }
    }

    pub fn adversarial(mut self) -> Self {
        self.adversarial_bob = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.transmittivity > 0.0 && self.transmittivity <= 1.0) {
            return Err(Error::param(format!("transmittivity must lie in (0, 1], got {}", self.transmittivity)));
        }
        Ok(())
    }
}

/// Independent per-party randomness derived from one session seed.
pub(crate) fn party_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum AliceState {
    Idle,
    AwaitHello,
    AwaitVerdict,
    Done,
    Aborted,
}

/// Alice's side of a session.
pub struct AliceMachine {
    params: ProtocolParams,
    strategy: Arc<dyn AliceStrategy>,
    rng: ChaCha20Rng,
    state: AliceState,
    commitment: Option<Commitment>,
}

impl AliceMachine {
    pub fn new(params: ProtocolParams, strategy: Arc<dyn AliceStrategy>, seed: u64) -> Self {
        AliceMachine { params, strategy, rng: party_rng(seed, 0), state: AliceState::Idle, commitment: None }
    }

    /// Opening HELLO.
    pub fn start(&mut self) -> Result<Vec<Message>> {
        if self.state != AliceState::Idle {
            return Err(Error::ProtocolState("Alice already started".into()));
        }
        self.params.validate()?;
        self.state = AliceState::AwaitHello;
        Ok(vec![Message::Hello(self.params)])
    }

    pub fn handle(&mut self, msg: &Message) -> Result<Vec<Message>> {
        use AliceState::*;
        match (self.state, msg) {
            (Done | Aborted, _) => Err(Error::ProtocolState(format!("Alice received {} after the session ended", msg.kind()))),
            (_, Message::Abort { .. }) => {
                self.state = Aborted;
                Ok(vec![])
            }
            (AwaitHello, Message::Hello(p)) if *p != self.params => self.abort("parameter mismatch in HELLO"),
            (AwaitHello, Message::Hello(_)) => {
                let bit = self.strategy.choose_bit(&mut self.rng);
                let (commitment, payload) = commit(bit, &self.params, &mut self.rng)?;
                let opening = self.strategy.open(&commitment);
                self.commitment = Some(commitment);
                self.state = AwaitVerdict;
                Ok(vec![Message::Commit(payload), Message::Open(opening)])
            }
            (AwaitVerdict, Message::Verdict { .. }) => {
                self.state = Done;
                Ok(vec![])
            }
            (state, m) => self.abort(format!("unexpected {} while Alice is in {state:?}", m.kind())),
        }
    }

    fn abort(&mut self, reason: impl Into<String>) -> Result<Vec<Message>> {
        self.state = AliceState::Aborted;
        Ok(vec![Message::abort(reason)])
    }

    pub fn is_finished(&self) -> bool {
        matches!(self.state, AliceState::Done | AliceState::Aborted)
    }

    pub fn commitment(&self) -> Option<&Commitment> {
        self.commitment.as_ref()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BobState {
    AwaitHello,
    AwaitCommit,
    AwaitOpen,
    Done,
    Aborted,
}

/// Bob's side of a session.
pub struct BobMachine {
    params: ProtocolParams,
    strategy: Arc<dyn BobStrategy>,
    channel: ChannelModel,
    rng: ChaCha20Rng,
    state: BobState,
    received: Option<QuantumPayload>,
    guess: Option<Bit>,
    verdict: Option<Verdict>,
}

impl BobMachine {
    pub fn new(params: ProtocolParams, strategy: Arc<dyn BobStrategy>, channel: ChannelModel, seed: u64) -> Self {
        BobMachine {
            params,
            strategy,
            channel,
            rng: party_rng(seed, 1),
            state: BobState::AwaitHello,
            received: None,
            guess: None,
            verdict: None,
        }
    }

    pub fn handle(&mut self, msg: &Message) -> Result<Vec<Message>> {
        use BobState::*;
        match (self.state, msg) {
            (Done | Aborted, _) => Err(Error::ProtocolState(format!("Bob received {} after the session ended", msg.kind()))),
            (_, Message::Abort { .. }) => {
                self.state = Aborted;
                Ok(vec![])
            }
            (AwaitHello, Message::Hello(p)) => {
                if let Err(e) = self.params.validate().and(self.channel.validate()) {
                    return self.abort(e.to_string());
                }
                if *p != self.params {
                    return self.abort("parameter mismatch in HELLO");
                }
                self.state = AwaitCommit;
                Ok(vec![Message::Hello(self.params)])
            }
            (AwaitCommit, Message::Commit(payload)) => {
                if payload.modes() != self.params.repetitions {
                    return self.abort(format!("COMMIT carries {} modes, expected {}", payload.modes(), self.params.repetitions));
                }
                let received = payload.transmit(self.channel.transmittivity);
                let view = if self.channel.adversarial_bob {
                    PayloadView::Raw(RawAmplitudes::new(received.amplitudes()))
                } else {
                    PayloadView::Sealed(&received)
                };
                self.guess = self.strategy.inspect(view, &self.params, &mut self.rng);
                self.received = Some(received);
                self.state = AwaitOpen;
                Ok(vec![])
            }
            (AwaitOpen, Message::Open(opening)) => {
                let payload = self.received.take().expect("payload stored in AwaitOpen");
                match bob_verify(&payload, opening, &self.params, &mut self.rng) {
                    Ok(verdict) => {
                        self.verdict = Some(verdict.clone());
                        self.state = Done;
                        Ok(vec![Message::Verdict { verdict, guess: self.guess }])
                    }
                    Err(Error::ProtocolAbort(reason)) => self.abort(reason),
                    Err(e) => Err(e),
                }
            }
            (state, m) => self.abort(format!("unexpected {} while Bob is in {state:?}", m.kind())),
        }
    }

    fn abort(&mut self, reason: impl Into<String>) -> Result<Vec<Message>> {
        self.state = BobState::Aborted;
        Ok(vec![Message::abort(reason)])
    }

    pub fn is_finished(&self) -> bool {
        matches!(self.state, BobState::Done | BobState::Aborted)
    }

    pub fn verdict(&self) -> Option<&Verdict> {
        self.verdict.as_ref()
    }

    pub fn guess(&self) -> Option<Bit> {
        self.guess
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{HonestAlice, HonestBob};

    fn params() -> ProtocolParams {
        ProtocolParams::new(1.0, 8, 4).unwrap()
    }

    fn machines() -> (AliceMachine, BobMachine) {
        (
            AliceMachine::new(params(), Arc::new(HonestAlice::default()), 3),
            BobMachine::new(params(), Arc::new(HonestBob), ChannelModel::default(), 3),
        )
    }

    #[test]
    fn happy_path() {
        let (mut a, mut b) = machines();
        let hello = a.start().unwrap();
        let reply = b.handle(&hello[0]).unwrap();
        assert_eq!(reply[0].kind(), MessageKind::Hello);
        let out = a.handle(&reply[0]).unwrap();
        assert_eq!(out.iter().map(Message::kind).collect::<Vec<_>>(), [MessageKind::Commit, MessageKind::Open]);
        assert!(b.handle(&out[0]).unwrap().is_empty());
        let v = b.handle(&out[1]).unwrap();
        assert!(b.is_finished() && b.verdict().unwrap().accepted());
        assert!(a.handle(&v[0]).unwrap().is_empty());
        assert!(a.is_finished());
        assert!(a.handle(&v[0]).is_err());
    }

    #[test]
    fn open_before_commit_aborts() {
        let (mut a, mut b) = machines();
        let hello = a.start().unwrap();
        b.handle(&hello[0]).unwrap();
        let out = b.handle(&Message::Open(Opening { bit: Bit::Zero, phases: vec![0; 4] })).unwrap();
        assert_eq!(out[0].kind(), MessageKind::Abort);
        assert!(b.is_finished());
        assert!(matches!(b.handle(&hello[0]), Err(Error::ProtocolState(_))));
    }

    #[test]
    fn hello_mismatch_aborts() {
        let mut b = BobMachine::new(params(), Arc::new(HonestBob), ChannelModel::default(), 0);
        let other = ProtocolParams::new(1.0, 8, 5).unwrap();
        let out = b.handle(&Message::Hello(other)).unwrap();
        assert_eq!(out[0].kind(), MessageKind::Abort);
        assert!(b.verdict().is_none());
    }

    #[test]
    fn abort_is_terminal_for_alice() {
        let (mut a, _) = machines();
        a.start().unwrap();
        assert!(a.handle(&Message::abort("bye")).unwrap().is_empty());
        assert!(a.is_finished());
        assert!(a.handle(&Message::Hello(params())).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for k in [MessageKind::Hello, MessageKind::Commit, MessageKind::Open, MessageKind::Verdict, MessageKind::Abort] {
            assert_eq!(MessageKind::parse(k.as_str()), Some(k));
        }
        assert_eq!(MessageKind::parse("hello"), None);
    }
}
