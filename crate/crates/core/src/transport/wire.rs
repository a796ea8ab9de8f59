use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::Dec17;
use crate::protocol::{Message, MessageKind, Opening, ProtocolParams, QuantumPayload, Verdict};
use crate::{Bit, C64};

/// A message together with the session it belongs to.
#[derive(Clone, Debug, PartialEq)]
pub struct WireMessage {
    pub session_id: String,
    pub message: Message,
}

#[derive(Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct Record {
    kind: String,
    session: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<ProtocolParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    amplitudes: Option<Vec<[Dec17; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bit: Option<Bit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phases: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    accepted: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    counts: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    guess: Option<Bit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
}

impl Record {
    fn present(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        let mut mark = |set: bool, name| {
            if set {
                v.push(name)
            }
        };
        mark(self.params.is_some(), "params");
        mark(self.amplitudes.is_some(), "amplitudes");
        mark(self.bit.is_some(), "bit");
        mark(self.phases.is_some(), "phases");
        mark(self.accepted.is_some(), "accepted");
        mark(self.counts.is_some(), "counts");
        mark(self.guess.is_some(), "guess");
        mark(self.reason.is_some(), "reason");
        v
    }
}

fn allowed(kind: MessageKind) -> (&'static [&'static str], &'static [&'static str]) {
    // (required, optional)
    match kind {
        MessageKind::Hello => (&["params"], &[]),
        MessageKind::Commit => (&["amplitudes"], &[]),
        MessageKind::Open => (&["bit", "phases"], &[]),
        MessageKind::Verdict => (&["accepted", "counts"], &["guess"]),
        MessageKind::Abort => (&["reason"], &[]),
    }
}

/// Encodes one message as a single JSON line (without the newline).
pub fn encode_message(session_id: &str, message: &Message) -> Result<String> {
    let mut r = Record { kind: message.kind().as_str().into(), session: session_id.into(), ..Record::default() };
    match message {
        Message::Hello(p) => r.params = Some(*p),
        Message::Commit(payload) => {
            r.amplitudes = Some(payload.amplitudes().iter().map(|a| [Dec17(a.re), Dec17(a.im)]).collect())
        }
        Message::Open(o) => {
            r.bit = Some(o.bit);
            r.phases = Some(o.phases.clone());
        }
        Message::Verdict { verdict, guess } => {
            r.accepted = Some(verdict.accepted());
            r.counts = Some(verdict.counts().to_vec());
            r.guess = *guess;
        }
        Message::Abort { reason } => r.reason = Some(reason.clone()),
    }
    serde_json::to_string(&r).map_err(|e| Error::Numerical(format!("cannot encode {}: {e}", message.kind())))
}

/// Decodes one line that starts at byte `offset` of the stream. Errors carry
/// the byte offset of the offending position.
pub fn decode_line(line: &str, offset: u64) -> Result<WireMessage> {
    let fail = |at: u64, message: String| Error::Decode { offset: at, message };
    let body = line.trim_end_matches(['\n', '\r']);
    let r: Record = serde_json::from_str(body).map_err(|e| {
        let col = if e.line() <= 1 { e.column().saturating_sub(1) } else { body.len() };
        fail(offset + col as u64, e.to_string())
    })?;
    let kind = MessageKind::parse(&r.kind).ok_or_else(|| fail(offset, format!("unknown message kind {:?}", r.kind)))?;
    let (required, optional) = allowed(kind);
    let present = r.present();
    for f in required {
        if !present.contains(f) {
            return Err(fail(offset, format!("{kind} is missing field `{f}`")));
        }
    }
    if let Some(f) = present.iter().find(|f| !required.contains(f) && !optional.contains(f)) {
        return Err(fail(offset, format!("field `{f}` is not allowed in {kind}")));
    }
    let message = match kind {
        MessageKind::Hello => Message::Hello(r.params.unwrap()),
        MessageKind::Commit => Message::Commit(QuantumPayload::from_amplitudes(
            r.amplitudes.unwrap().into_iter().map(|[re, im]| C64::new(re.0, im.0)).collect(),
        )),
        MessageKind::Open => Message::Open(Opening { bit: r.bit.unwrap(), phases: r.phases.unwrap() }),
        MessageKind::Verdict => {
            let verdict = Verdict::from_counts(r.counts.unwrap());
            if verdict.accepted() != r.accepted.unwrap() {
                return Err(fail(offset, "VERDICT `accepted` disagrees with `counts`".into()));
            }
            Message::Verdict { verdict, guess: r.guess }
        }
        MessageKind::Abort => Message::Abort { reason: r.reason.unwrap() },
    };
    Ok(WireMessage { session_id: r.session, message })
}

/// Reads messages line by line, tracking byte offsets for error reports.
pub struct WireReader<R> {
    inner: R,
    offset: u64,
    line: String,
}

impl<R: BufRead> WireReader<R> {
    pub fn new(inner: R) -> Self {
        WireReader { inner, offset: 0, line: String::new() }
    }

    /// Byte offset of the next unread line.
    pub fn offset(&self) -> u64 {
        self.offset
    }

    /// Next message, or `None` at end of stream. Blank lines are skipped.
    pub fn next_message(&mut self) -> Result<Option<WireMessage>> {
        loop {
            self.line.clear();
            let start = self.offset;
            let n = self.inner.read_line(&mut self.line)?;
            if n == 0 {
                return Ok(None);
            }
            self.offset += n as u64;
            if self.line.trim().is_empty() {
                continue;
            }
            return decode_line(&self.line, start).map(Some);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples() -> Vec<Message> {
        vec![
            Message::Hello(ProtocolParams::new(0.1, 8, 3).unwrap().with_transmittivity(0.3).unwrap()),
            Message::Commit(QuantumPayload::from_amplitudes(vec![C64::new(0.1, -1.0 / 3.0), C64::new(-2e-300, 7.0)])),
            Message::Open(Opening { bit: Bit::One, phases: vec![0, 7, 3] }),
            Message::Verdict { verdict: Verdict::from_counts(vec![0, 1, 0]), guess: Some(Bit::Zero) },
            Message::Verdict { verdict: Verdict::from_counts(vec![0]), guess: None },
            Message::Abort { reason: "line\nbreak \"quoted\"".into() },
        ]
    }

    #[test]
    fn round_trip_is_exact() {
        for m in samples() {
            let line = encode_message("s-1", &m).unwrap();
            assert!(!line.contains('\n'));
            let back = decode_line(&line, 0).unwrap();
            assert_eq!(back, WireMessage { session_id: "s-1".into(), message: m });
        }
    }

    #[test]
    fn floats_use_seventeen_digits() {
        let line = encode_message("x", &samples()[1]).unwrap();
        assert!(line.contains("-3.3333333333333331e-1"), "{line}");
    }

    #[test]
    fn reader_reports_offsets() {
        let good = encode_message("a", &samples()[2]).unwrap();
        let text = format!("{good}\n\n{{\"kind\":\"OPEN\",\"session\":\"a\",\"bit\":2,\"phases\":[]}}\n");
        let mut r = WireReader::new(text.as_bytes());
        assert!(r.next_message().unwrap().is_some());
        match r.next_message() {
            Err(Error::Decode { offset, .. }) => {
                let start = good.len() as u64 + 2;
                assert!(offset >= start && offset < text.len() as u64, "{offset}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_malformed() {
        for (line, at) in [
            ("{\"kind\":\"HELLO\"", 15),
            ("{\"kind\":\"PING\",\"session\":\"a\"}", 0),
            ("{\"kind\":\"OPEN\",\"session\":\"a\",\"bit\":1}", 0),
            ("{\"kind\":\"ABORT\",\"session\":\"a\",\"reason\":\"x\",\"bit\":0}", 0),
            ("{\"kind\":\"VERDICT\",\"session\":\"a\",\"accepted\":true,\"counts\":[1]}", 0),
            ("{\"kind\":\"ABORT\",\"session\":\"a\",\"reason\":\"x\",\"extra\":0}", 0),
        ] {
            match decode_line(line, 100) {
                Err(Error::Decode { offset, .. }) => assert!(offset >= 100 && offset <= 100 + at.max(line.len() as u64)),
                other => panic!("{line}: {other:?}"),
            }
        }
    }
}
