use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::{Args, ValueEnum};
use serde::Serialize;

use phasebc::format::{ser_f64, ser_f64_seq};
use phasebc::protocol::{
    run_protocol_with_channel, session_seed, AliceStrategy, BobStrategy, ChannelModel, HelstromBob, HonestAlice, HonestBob, Message,
    OpeningAttack, ProtocolParams,
};
use phasebc::security::{pca_exact, pcb_bound};
use phasebc::transport::{run_alice_endpoint, run_bob_endpoint, run_session, EndpointLog, SessionSpec, TransportKind};
use phasebc::{Bit, Error, Result};

use crate::output::{render, KeyValues};
use crate::stats::{wilson, Z};
use crate::{Common, Status, Strength, DEFAULT_SEED};

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AliceKind {
    Honest,
    CheatOpen,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BobKind {
    Honest,
    /// Reads the raw amplitudes and guesses the bit before the opening.
    Helstrom,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransportArg {
    /// Direct message passing.
    Inproc,
    /// Same thread, every message through the wire encoding.
    Loopback,
    /// Two threads over a local TCP socket per session.
    Tcp,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub strength: Strength,
    /// Number of phase positions M.
    #[arg(short = 'M', long = "modulation")]
    pub modulation: usize,
    /// Modes per commitment k.
    #[arg(short = 'k', long = "repetitions")]
    pub repetitions: usize,
    /// Number of sessions.
    #[arg(short = 'n', long = "sessions", default_value_t = 1000)]
    pub sessions: u64,
    /// Alice's behaviour.
    #[arg(long, value_enum, default_value_t = AliceKind::Honest)]
    pub strategy: AliceKind,
    /// Bob's behaviour.
    #[arg(long, value_enum, default_value_t = BobKind::Honest)]
    pub bob: BobKind,
    /// Commit to this bit instead of a uniformly random one.
    #[arg(short = 'b', long = "bit", value_parser = clap::value_parser!(u8).range(0..=1))]
    pub bit: Option<u8>,
    /// Link transmittivity.
    #[arg(long = "tau", default_value_t = 1.0)]
    pub tau: f64,
    /// Security target carried in HELLO.
    #[arg(long, default_value_t = 1e-2)]
    pub epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = TransportArg::Loopback)]
    pub transport: TransportArg,
    /// Act as Bob and serve the sessions on this address.
    #[arg(long, conflicts_with_all = ["connect", "transport"])]
    pub listen: Option<String>,
    /// Act as Alice and connect to a Bob on this address.
    #[arg(long, conflicts_with = "transport")]
    pub connect: Option<String>,
    /// Output format of the summary (printed to stdout). `--out` receives
    /// the session transcripts as JSON lines.
    #[command(flatten)]
    pub common: Common,
}

#[derive(Serialize)]
struct GuessStats {
    scored: u64,
    correct: u64,
    #[serde(serialize_with = "ser_f64")]
    rate: f64,
    #[serde(serialize_with = "ser_f64_seq")]
    interval: Vec<f64>,
    /// `1/2 + pcb_bound / 2`.
    #[serde(serialize_with = "ser_f64")]
    bound: f64,
    ok: bool,
}

#[derive(Serialize)]
struct Summary {
    role: &'static str,
    strategy: AliceKind,
    bob: BobKind,
    transport: &'static str,
    #[serde(serialize_with = "ser_f64")]
    energy: f64,
    modulation: usize,
    repetitions: usize,
    #[serde(serialize_with = "ser_f64")]
    transmittivity: f64,
    seed: u64,
    sessions: u64,
    aborted: u64,
    accepted: u64,
    #[serde(serialize_with = "ser_f64")]
    acceptance_rate: f64,
    #[serde(serialize_with = "ser_f64_seq")]
    acceptance_interval: Vec<f64>,
    #[serde(serialize_with = "ser_f64")]
    expected_acceptance: f64,
    expected_in_interval: bool,
    guesses: Option<GuessStats>,
    ok: bool,
}

impl Summary {
    fn to_text(&self) -> String {
        let mut kv = KeyValues::default();
        kv.raw("role", &self.role)
            .raw("strategy", &format!("{:?}", self.strategy).to_lowercase())
            .raw("bob", &format!("{:?}", self.bob).to_lowercase())
            .raw("transport", &self.transport)
            .float("energy", self.energy)
            .raw("modulation", &self.modulation)
            .raw("repetitions", &self.repetitions)
            .float("transmittivity", self.transmittivity)
            .raw("seed", &self.seed)
            .raw("sessions", &self.sessions)
            .raw("aborted", &self.aborted)
            .raw("accepted", &self.accepted)
            .float("acceptance_rate", self.acceptance_rate)
            .float("acceptance_ci_low", self.acceptance_interval[0])
            .float("acceptance_ci_high", self.acceptance_interval[1])
            .float("expected_acceptance", self.expected_acceptance)
            .raw("expected_in_interval", &self.expected_in_interval);
        if let Some(g) = &self.guesses {
            kv.raw("guesses_scored", &g.scored)
                .raw("guesses_correct", &g.correct)
                .float("guess_rate", g.rate)
                .float("guess_ci_low", g.interval[0])
                .float("guess_ci_high", g.interval[1])
                .float("guess_bound", g.bound)
                .raw("guess_ok", &g.ok);
        }
        kv.raw("ok", &self.ok).finish()
    }
}

#[derive(Default)]
struct Tally {
    sessions: u64,
    aborted: u64,
    accepted: u64,
    scored: u64,
    correct: u64,
}

impl Tally {
    fn add(&mut self, messages: &[Message], committed: Option<Bit>) {
        self.sessions += 1;
        let mut verdict = None;
        for m in messages {
            match m {
                Message::Verdict { verdict: v, guess } => verdict = Some((v.accepted(), *guess)),
                Message::Abort { .. } => self.aborted += 1,
                _ => {}
            }
        }
        if let Some((accepted, guess)) = verdict {
            self.accepted += accepted as u64;
            if let (Some(g), Some(c)) = (guess, committed) {
                self.scored += 1;
                self.correct += (g == c) as u64;
            }
        }
    }
}

fn strategies(args: &SimulateArgs, params: &ProtocolParams) -> Result<(Arc<dyn AliceStrategy>, Arc<dyn BobStrategy>)> {
    let bit = args.bit.map(Bit::try_from).transpose()?;
    let alice: Arc<dyn AliceStrategy> = match args.strategy {
        AliceKind::Honest => Arc::new(HonestAlice { bit }),
        AliceKind::CheatOpen => Arc::new(OpeningAttack { bit }),
    };
    let bob: Arc<dyn BobStrategy> = match args.bob {
        BobKind::Honest => Arc::new(HonestBob),
        BobKind::Helstrom => Arc::new(HelstromBob::new(params.energy, params.modulation)?),
    };
    Ok((alice, bob))
}

fn session_id(seed: u64) -> String {
    format!("{seed:016x}")
}

fn connect_with_retry(addr: &str) -> Result<TcpStream> {
    let deadline = Instant::now() + Duration::from_secs(30);
    loop {
        match TcpStream::connect(addr) {
            Ok(s) => return Ok(s),
            Err(e) if Instant::now() < deadline && e.kind() == std::io::ErrorKind::ConnectionRefused => {
                std::thread::sleep(Duration::from_millis(50))
            }
            Err(e) => return Err(e.into()),
        }
    }
}

pub fn run(args: &SimulateArgs) -> Result<Status> {
    let amplitude = args.strength.amplitude();
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(Error::Parameter(format!("amplitude must be finite and >= 0, got {amplitude}")));
    }
    let params = ProtocolParams::new(args.strength.energy(), args.modulation, args.repetitions)?
        .with_epsilon(args.epsilon)?
        .with_transmittivity(args.tau)?;
    let (alice, bob) = strategies(args, &params)?;
    let channel = ChannelModel { transmittivity: args.tau, adversarial_bob: args.bob == BobKind::Helstrom };

    let mut transcripts = match &args.common.out {
        Some(path) => Some(BufWriter::new(File::create(path)?)),
        None => None,
    };
    let mut tally = Tally::default();
    let (role, transport) = match (&args.listen, &args.connect) {
        (Some(addr), _) => {
            let listener = TcpListener::bind(addr)?;
            eprintln!("listening on {}", listener.local_addr()?);
            for i in 0..args.sessions {
                let seed = session_seed(args.seed, i);
                let (stream, _) = listener.accept()?;
                stream.set_read_timeout(Some(Duration::from_secs(60)))?;
                let reader = BufReader::new(stream.try_clone()?);
                let log = run_bob_endpoint(reader, stream, &session_id(seed), params, bob.clone(), channel, seed)?;
                record(&mut transcripts, &session_id(seed), &log)?;
                tally.add(&log.messages, None);
            }
            ("bob", "tcp")
        }
        (None, Some(addr)) => {
            for i in 0..args.sessions {
                let seed = session_seed(args.seed, i);
                let stream = connect_with_retry(addr)?;
                stream.set_read_timeout(Some(Duration::from_secs(60)))?;
                let reader = BufReader::new(stream.try_clone()?);
                let log = run_alice_endpoint(reader, stream, &session_id(seed), params, alice.clone(), seed)?;
                record(&mut transcripts, &session_id(seed), &log)?;
                tally.add(&log.messages, log.committed);
            }
            ("alice", "tcp")
        }
        (None, None) => {
            for i in 0..args.sessions {
                let seed = session_seed(args.seed, i);
                let t = match args.transport {
                    TransportArg::Inproc => run_protocol_with_channel(alice.clone(), bob.clone(), &params, channel, seed)?,
                    kind => {
                        let spec = SessionSpec {
                            session_id: session_id(seed),
                            alice_params: params,
                            bob_params: params,
                            channel,
                            seed,
                        };
                        let kind = if kind == TransportArg::Tcp { TransportKind::Tcp } else { TransportKind::Loopback };
                        run_session(&spec, alice.clone(), bob.clone(), kind)?
                    }
                };
                if let Some(w) = transcripts.as_mut() {
                    w.write_all(t.to_lines()?.as_bytes())?;
                }
                tally.add(&t.messages, t.committed);
            }
            let name = match args.transport {
                TransportArg::Inproc => "inproc",
                TransportArg::Loopback => "loopback",
                TransportArg::Tcp => "tcp",
            };
            ("local", name)
        }
    };
    if let Some(mut w) = transcripts {
        w.flush()?;
    }

    let expected = match args.strategy {
        AliceKind::Honest => 1.0,
        AliceKind::CheatOpen => pca_exact(params.energy, params.repetitions, params.modulation),
    };
    let (lo, hi) = wilson(tally.accepted, tally.sessions, Z);
    let guesses = (tally.scored > 0).then(|| {
        let rate = tally.correct as f64 / tally.scored as f64;
        let (glo, ghi) = wilson(tally.correct, tally.scored, Z);
        let bound = (0.5 + pcb_bound(amplitude, params.modulation, params.repetitions) / 2.0).min(1.0);
        GuessStats { scored: tally.scored, correct: tally.correct, rate, interval: vec![glo, ghi], bound, ok: glo <= bound }
    });
    let honest_ok = args.strategy != AliceKind::Honest || (tally.accepted == tally.sessions && tally.aborted == 0);
    let ok = honest_ok && guesses.as_ref().is_none_or(|g| g.ok);
    let summary = Summary {
        role,
        strategy: args.strategy,
        bob: args.bob,
        transport,
        energy: params.energy,
        modulation: params.modulation,
        repetitions: params.repetitions,
        transmittivity: params.transmittivity,
        seed: args.seed,
        sessions: tally.sessions,
        aborted: tally.aborted,
        accepted: tally.accepted,
        acceptance_rate: if tally.sessions > 0 { tally.accepted as f64 / tally.sessions as f64 } else { 0.0 },
        acceptance_interval: vec![lo, hi],
        expected_acceptance: expected,
        expected_in_interval: lo <= expected && expected <= hi,
        guesses,
        ok,
    };
    let text = render(&args.common, &summary, || summary.to_text())?;
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(if ok { Status::Ok } else { Status::CheckFailed })
}

fn record(w: &mut Option<BufWriter<File>>, id: &str, log: &EndpointLog) -> Result<()> {
    if let Some(w) = w.as_mut() {
        for m in &log.messages {
            writeln!(w, "{}", phasebc::transport::encode_message(id, m)?)?;
        }
    }
    Ok(())
}

