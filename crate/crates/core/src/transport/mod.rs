//! Line-delimited wire format and two-party session runner.
//!
//! Every message is one JSON object on its own line, tagged with `kind` and
//! `session`. Floats are written with 17 significant digits so decoding is
//! bit-exact, which keeps loopback and TCP transcripts identical.

mod runner;
mod wire;

pub use crate::protocol::ChannelModel;
pub use runner::{run_alice_endpoint, run_bob_endpoint, run_session, EndpointLog, SessionSpec, TransportKind};
pub use wire::{decode_line, encode_message, WireMessage, WireReader};
