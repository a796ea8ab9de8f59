use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;
use std::time::Duration;

use super::wire::{decode_line, encode_message, WireReader};
use crate::error::{Error, Result};
use crate::protocol::{AliceMachine, AliceStrategy, BobMachine, BobStrategy, ChannelModel, Message, ProtocolParams, SessionTranscript};
use crate::Bit;

const IO_TIMEOUT: Duration = Duration::from_secs(60);

/// How the two endpoints are connected.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransportKind {
    /// Same thread; every message is still encoded and decoded.
    Loopback,
    /// Two threads talking over a TCP socket on `127.0.0.1`.
    Tcp,
}

/// Everything needed to run one session.
#[derive(Clone, Debug)]
pub struct SessionSpec {
    pub session_id: String,
    pub alice_params: ProtocolParams,
    pub bob_params: ProtocolParams,
    pub channel: ChannelModel,
    pub seed: u64,
}

impl SessionSpec {
    /// Both parties agree on `params`; honest link.
    pub fn new(session_id: impl Into<String>, params: ProtocolParams, seed: u64) -> Self {
        SessionSpec {
            session_id: session_id.into(),
            alice_params: params,
            bob_params: params,
            channel: ChannelModel::for_params(&params),
            seed,
        }
    }
}

/// Messages one endpoint saw, in order (received and sent).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EndpointLog {
    pub messages: Vec<Message>,
    pub committed: Option<Bit>,
}

fn send<W: Write>(w: &mut W, session_id: &str, m: &Message) -> Result<()> {
    let mut line = encode_message(session_id, m)?;
    line.push('\n');
    w.write_all(line.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn session_mismatch(expected: &str, got: &str) -> Message {
    Message::Abort { reason: format!("session id {got:?} does not match {expected:?}") }
}

fn eof() -> Error {
    Error::Io(std::io::Error::new(std::io::ErrorKind::UnexpectedEof, "peer closed the connection mid-session"))
}

/// Runs Alice over a byte stream until its machine finishes.
pub fn run_alice_endpoint<R: BufRead, W: Write>(
    reader: R,
    mut writer: W,
    session_id: &str,
    params: ProtocolParams,
    strategy: Arc<dyn AliceStrategy>,
    seed: u64,
) -> Result<EndpointLog> {
    let mut alice = AliceMachine::new(params, strategy, seed);
    let mut reader = WireReader::new(reader);
    let mut log = EndpointLog::default();
    for m in alice.start()? {
        send(&mut writer, session_id, &m)?;
        log.messages.push(m);
    }
    while !alice.is_finished() {
        let wm = reader.next_message()?.ok_or_else(eof)?;
        log.messages.push(wm.message.clone());
        let replies = if wm.session_id != session_id {
            // treat as a protocol violation
            alice.handle(&Message::Abort { reason: String::new() })?;
            vec![session_mismatch(session_id, &wm.session_id)]
        } else {
            alice.handle(&wm.message)?
        };
        for m in replies {
            send(&mut writer, session_id, &m)?;
            log.messages.push(m);
        }
    }
    log.committed = alice.commitment().map(|c| c.bit);
    Ok(log)
}

/// Runs Bob over a byte stream until its machine finishes.
pub fn run_bob_endpoint<R: BufRead, W: Write>(
    reader: R,
    mut writer: W,
    session_id: &str,
    params: ProtocolParams,
    strategy: Arc<dyn BobStrategy>,
    channel: ChannelModel,
    seed: u64,
) -> Result<EndpointLog> {
    let mut bob = BobMachine::new(params, strategy, channel, seed);
    let mut reader = WireReader::new(reader);
    let mut log = EndpointLog::default();
    while !bob.is_finished() {
        let wm = reader.next_message()?.ok_or_else(eof)?;
        log.messages.push(wm.message.clone());
        let replies = if wm.session_id != session_id {
            bob.handle(&Message::Abort { reason: String::new() })?;
            vec![session_mismatch(session_id, &wm.session_id)]
        } else {
            bob.handle(&wm.message)?
        };
        for m in replies {
            send(&mut writer, session_id, &m)?;
            log.messages.push(m);
        }
    }
    Ok(log)
}

/// Runs a full session and returns Bob's transcript. Loopback and TCP give
/// identical transcripts for the same spec.
pub fn run_session(
    spec: &SessionSpec,
    alice: Arc<dyn AliceStrategy>,
    bob: Arc<dyn BobStrategy>,
    kind: TransportKind,
) -> Result<SessionTranscript> {
    spec.channel.validate()?;
    match kind {
        TransportKind::Loopback => loopback(spec, alice, bob),
        TransportKind::Tcp => tcp(spec, alice, bob),
    }
}

fn loopback(spec: &SessionSpec, alice: Arc<dyn AliceStrategy>, bob: Arc<dyn BobStrategy>) -> Result<SessionTranscript> {
    let mut a = AliceMachine::new(spec.alice_params, alice, spec.seed);
    let mut b = BobMachine::new(spec.bob_params, bob, spec.channel, spec.seed);
    let id = spec.session_id.as_str();
    let messages = crate::protocol::drive_session(&mut a, &mut b, |m| Ok(decode_line(&encode_message(id, m)?, 0)?.message))?;
    Ok(SessionTranscript { session_id: spec.session_id.clone(), messages, committed: a.commitment().map(|c| c.bit) })
}

fn tcp(spec: &SessionSpec, alice: Arc<dyn AliceStrategy>, bob: Arc<dyn BobStrategy>) -> Result<SessionTranscript> {
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;
    let (alice_log, bob_log) = std::thread::scope(|s| {
        let bob_side = s.spawn(move || -> Result<EndpointLog> {
            let (stream, _) = listener.accept()?;
            stream.set_read_timeout(Some(IO_TIMEOUT))?;
            let reader = BufReader::new(stream.try_clone()?);
            run_bob_endpoint(reader, stream, &spec.session_id, spec.bob_params, bob, spec.channel, spec.seed)
        });
        let alice_side = (|| -> Result<EndpointLog> {
            let stream = TcpStream::connect(addr)?;
            stream.set_read_timeout(Some(IO_TIMEOUT))?;
            let reader = BufReader::new(stream.try_clone()?);
            run_alice_endpoint(reader, stream, &spec.session_id, spec.alice_params, alice, spec.seed)
        })();
        let bob_side = bob_side.join().map_err(|_| Error::ProtocolState("Bob endpoint panicked".into()));
        (alice_side, bob_side)
    });
    let bob_log = bob_log??;
    let alice_log = alice_log?;
    Ok(SessionTranscript { session_id: spec.session_id.clone(), messages: bob_log.messages, committed: alice_log.committed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{run_protocol, HonestAlice, HonestBob, MessageKind, OpeningAttack};

    fn honest() -> (Arc<dyn AliceStrategy>, Arc<dyn BobStrategy>) {
        (Arc::new(HonestAlice::default()), Arc::new(HonestBob))
    }

    #[test]
    fn loopback_matches_tcp() {
        let p = ProtocolParams::new(1.0, 8, 16).unwrap();
        for seed in [1729, 1, 2] {
            let spec = SessionSpec::new("s", p, seed);
            let (a, b) = honest();
            let l = run_session(&spec, a.clone(), b.clone(), TransportKind::Loopback).unwrap();
            let t = run_session(&spec, a, b, TransportKind::Tcp).unwrap();
            assert_eq!(l, t);
            assert_eq!(l.to_lines().unwrap(), t.to_lines().unwrap());
            assert!(l.accepted());
        }
    }

    #[test]
    fn loopback_matches_in_process() {
        let p = ProtocolParams::new(0.7, 5, 4).unwrap();
        let alice: Arc<dyn AliceStrategy> = Arc::new(OpeningAttack::default());
        let bob: Arc<dyn BobStrategy> = Arc::new(HonestBob);
        let direct = run_protocol(alice.clone(), bob.clone(), &p, 9).unwrap();
        let spec = SessionSpec::new(direct.session_id.clone(), p, 9);
        assert_eq!(run_session(&spec, alice, bob, TransportKind::Loopback).unwrap(), direct);
    }

    #[test]
    fn hello_mismatch_aborts_over_tcp() {
        let p = ProtocolParams::new(1.0, 8, 16).unwrap();
        let mut spec = SessionSpec::new("m", p, 0);
        spec.bob_params.repetitions = 17;
        let (a, b) = honest();
        for kind in [TransportKind::Loopback, TransportKind::Tcp] {
            let t = run_session(&spec, a.clone(), b.clone(), kind).unwrap();
            let kinds: Vec<_> = t.messages.iter().map(Message::kind).collect();
            assert_eq!(kinds, [MessageKind::Hello, MessageKind::Abort]);
            assert!(t.verdict().is_none());
        }
    }

    #[test]
    fn out_of_order_open_aborts() {
        let p = ProtocolParams::new(1.0, 4, 2).unwrap();
        let id = "o";
        let script = [
            Message::Hello(p),
            Message::Open(crate::protocol::Opening { bit: Bit::Zero, phases: vec![0, 0] }),
        ];
        let input: String = script.iter().map(|m| encode_message(id, m).unwrap() + "\n").collect();
        let mut out = Vec::new();
        let log = run_bob_endpoint(input.as_bytes(), &mut out, id, p, Arc::new(HonestBob), ChannelModel::default(), 0).unwrap();
        let kinds: Vec<_> = log.messages.iter().map(Message::kind).collect();
        assert_eq!(kinds, [MessageKind::Hello, MessageKind::Hello, MessageKind::Open, MessageKind::Abort]);
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().last().unwrap().contains("\"ABORT\""));
    }

    #[test]
    fn wrong_session_id_aborts() {
        let p = ProtocolParams::new(1.0, 4, 2).unwrap();
        let input = encode_message("other", &Message::Hello(p)).unwrap() + "\n";
        let mut out = Vec::new();
        let log = run_bob_endpoint(input.as_bytes(), &mut out, "mine", p, Arc::new(HonestBob), ChannelModel::default(), 0).unwrap();
        assert_eq!(log.messages.last().unwrap().kind(), MessageKind::Abort);
    }

    #[test]
    fn truncated_stream_is_an_error() {
        let p = ProtocolParams::new(1.0, 4, 2).unwrap();
        let input = encode_message("s", &Message::Hello(p)).unwrap() + "\n";
        let r = run_bob_endpoint(input.as_bytes(), Vec::new(), "s", p, Arc::new(HonestBob), ChannelModel::default(), 0);
        assert!(matches!(r, Err(Error::Io(_))));
    }
}
