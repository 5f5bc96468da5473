use std::io::{self, BufRead, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use pqkex::benchmark::{
    check_family, emit_report, emit_timing_report, measure_timings, run_family_tables, BenchConfig, ReportFormat, Step,
    METHODS, MIN_TIMING_ITERATIONS,
};
use pqkex::certificates::{random_serial, CaContext, CertScheme, Certificate, DEFAULT_CA_NAME};
use pqkex::codec::{self, Content, Tlv};
use pqkex::crypto::{DsaKeyPair, KemKeyPair};
use pqkex::handshake::{CredentialMode, HandshakeConfig, SessionTable, DEFAULT_SESSION_EXPIRY, DEFAULT_TABLE_CAPACITY};
use pqkex::kep_messages::{SignedData, DEFAULT_FRESHNESS_WINDOW};
use pqkex::{DsaFamily, SecurityLevel, Suite, Timestamp};
use pqkex_netdemo::files;
use pqkex_netdemo::frame::{parse_transcript, FrameKind};
use pqkex_netdemo::net::{self, PeerConfig, SessionWriter, Transcript};
use rand_core::OsRng;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "pqkex", version, about = "Post-quantum key exchange toolkit and chat demo")]
struct Cli {
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a DSA and a KEM key pair.
    Keygen {
        #[arg(long)]
        suite: Suite,
        /// Output prefix; writes <out>.dsa.key and <out>.kem.key.
        #[arg(long)]
        out: PathBuf,
    },
    /// Create a self-signed certificate authority.
    Ca {
        #[arg(long)]
        suite: Suite,
        /// Output prefix; writes <out>.key and <out>.crt.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = DEFAULT_CA_NAME)]
        name: String,
        #[arg(long, default_value_t = 365)]
        days: i64,
    },
    /// Issue certificate(s) for a key pair.
    Issue {
        /// CA prefix (<ca>.key and <ca>.crt).
        #[arg(long)]
        ca: PathBuf,
        /// Key prefix (<keys>.dsa.key and <keys>.kem.key).
        #[arg(long)]
        keys: PathBuf,
        /// composite, catalyst, chameleon, pure-dsa, pure-kem, or compared
        /// (a pure-dsa + pure-kem pair).
        #[arg(long)]
        scheme: String,
        #[arg(long)]
        subject: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 365)]
        days: i64,
    },
    /// Describe a certificate, certificate bundle, handshake message or transcript.
    Inspect { file: PathBuf },
    /// Check certificates against a CA certificate.
    Validate {
        /// CA certificate file or prefix.
        #[arg(long)]
        ca: PathBuf,
        /// Unix time to validate at; defaults to now.
        #[arg(long)]
        at: Option<i64>,
        #[arg(required = true)]
        certs: Vec<PathBuf>,
    },
    /// Print the DER structure of a file.
    Decode {
        /// Print the full TLV tree.
        #[arg(long)]
        dump: bool,
        file: PathBuf,
    },
    /// Regenerate message-length tables, optionally with timings.
    Bench {
        #[arg(long)]
        family: DsaFamily,
        #[arg(long, default_value = "markdown")]
        format: ReportFormat,
        #[arg(long)]
        include_ca_cert: bool,
        /// Also time each step over this many handshakes (at least 30).
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Accept handshakes and chat.
    Serve {
        #[arg(long, default_value = "127.0.0.1:7878")]
        listen: String,
        #[command(flatten)]
        peer: PeerArgs,
        /// Exit after this many connections.
        #[arg(long)]
        max_sessions: Option<usize>,
        /// Send every received message back to its sender.
        #[arg(long)]
        echo: bool,
        #[arg(long, env = "PQKEX_TABLE_CAPACITY", default_value_t = DEFAULT_TABLE_CAPACITY)]
        table_capacity: usize,
    },
    /// Handshake with a server and chat over stdin/stdout.
    Connect {
        #[arg(long, default_value = "127.0.0.1:7878")]
        peer_addr: String,
        #[command(flatten)]
        peer: PeerArgs,
    },
}

#[derive(Args)]
struct PeerArgs {
    #[arg(long)]
    suite: Suite,
    /// composite, catalyst, chameleon or compared.
    #[arg(long)]
    scheme: CredentialMode,
    /// Key prefix.
    #[arg(long)]
    keys: PathBuf,
    /// Certificate file (PEM bundle for compared).
    #[arg(long)]
    cert: PathBuf,
    /// CA certificate file or prefix.
    #[arg(long)]
    ca: PathBuf,
    #[arg(long, env = "PQKEX_FRESHNESS_WINDOW", default_value_t = DEFAULT_FRESHNESS_WINDOW)]
    freshness_window: i64,
    /// Seconds to wait for each handshake message.
    #[arg(long, default_value_t = 30)]
    timeout: u64,
    /// Append raw frames to this file.
    #[arg(long)]
    transcript: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command, cli.json) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

type Result<T> = std::result::Result<T, Box<dyn std::error::Error>>;

fn usage(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn emit(json: bool, value: Value, text: String) {
    if json {
        println!("{}", serde_json::to_string_pretty(&value).expect("json value"));
    } else {
        print!("{text}");
    }
}

fn validity(days: i64) -> (Timestamp, Timestamp) {
    let now = Timestamp::now();
    (now.plus_seconds(-60), now.plus_seconds(days * 86_400))
}

fn run(command: Command, json: bool) -> Result<ExitCode> {
    match command {
        Command::Keygen { suite, out } => {
            let dsa = DsaKeyPair::generate(suite.dsa(), &mut OsRng)?;
            let kem = KemKeyPair::generate(suite.kem(), &mut OsRng)?;
            let paths = files::write_key_pair(&out, &dsa, &kem)?;
            let (d, k) = (dsa.public().as_bytes().len(), kem.public().as_bytes().len());
            emit(
                json,
                json!({
                    "suite": suite.cli_name(),
                    "dsa": { "algorithm": suite.dsa().name(), "public_key_len": d, "file": paths[0] },
                    "kem": { "algorithm": suite.kem().name(), "public_key_len": k, "file": paths[1] },
                }),
                format!(
                    "{} public key: {d} bytes -> {}\n{} public key: {k} bytes -> {}\n",
                    suite.dsa(),
                    paths[0].display(),
                    suite.kem(),
                    paths[1].display()
                ),
            );
        }
        Command::Ca { suite, out, name, days } => {
            let (nb, na) = validity(days);
            let ca = CaContext::generate(suite, &name, nb, na, &mut OsRng)?;
            let paths = files::write_ca(&out, &ca)?;
            emit(
                json,
                json!({ "name": name, "suite": suite.cli_name(), "key": paths[0], "certificate": paths[1] }),
                format!("CA {name:?} ({suite}) -> {}, {}\n", paths[0].display(), paths[1].display()),
            );
        }
        Command::Issue { ca, keys, scheme, subject, out, days } => {
            let schemes = match scheme.to_ascii_lowercase().as_str() {
                "compared" | "pure" => vec![CertScheme::PureDsa, CertScheme::PureKem],
                s => match s.parse::<CertScheme>() {
                    Ok(s) => vec![s],
                    Err(e) => return Ok(usage(&e)),
                },
            };
            let ca = files::read_ca(&ca)?;
            let (dsa, kem) = files::read_key_pair(&keys)?;
            let (nb, na) = validity(days);
            let mut certs = Vec::new();
            for s in schemes {
                let t = ca.template(&subject, random_serial(&mut OsRng), nb, na);
                let d = s.carries_dsa().then(|| dsa.public());
                let k = s.carries_kem().then(|| kem.public());
                certs.push(ca.issue(&t, s, d, k)?);
            }
            files::write_certificates(&out, &certs)?;
            emit(
                json,
                Value::Array(certs.iter().map(cert_json).collect()),
                certs
                    .iter()
                    .map(|c| format!("{} certificate for {subject:?}: {} bytes\n", c.scheme(), c.encoded_length()))
                    .collect(),
            );
        }
        Command::Inspect { file } => return inspect(&file, json),
        Command::Validate { ca, at, certs } => {
            let ca_cert = files::read_ca_certificate(&ca)?;
            let ca_public = ca_cert.dsa_public().ok_or("CA certificate has no signature key")?.clone();
            let now = at.map(Timestamp).unwrap_or_else(Timestamp::now);
            let mut results = Vec::new();
            let mut ok = true;
            for path in &certs {
                for (i, cert) in files::read_certificates(path)?.iter().enumerate() {
                    let r = cert.validate(&ca_public, now);
                    ok &= r.is_ok();
                    results.push((
                        path.display().to_string(),
                        i,
                        cert.subject().to_owned(),
                        r.err().map(|e| e.to_string()),
                    ));
                }
            }
            emit(
                json,
                Value::Array(
                    results
                        .iter()
                        .map(|(p, i, s, e)| json!({ "file": p, "index": i, "subject": s, "valid": e.is_none(), "error": e }))
                        .collect(),
                ),
                results
                    .iter()
                    .map(|(p, i, s, e)| match e {
                        None => format!("{p}[{i}] {s:?}: ok\n"),
                        Some(e) => format!("{p}[{i}] {s:?}: {e}\n"),
                    })
                    .collect(),
            );
            return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
        Command::Decode { dump, file } => {
            let der = der_of(&files::read(&file)?);
            let tlv = codec::decode(&der)?;
            let text = if dump { codec::dump(&tlv) } else { format!("{} ({} bytes)\n", tlv.tag(), tlv.encoded_len()) };
            emit(json, tlv_json(&tlv), text);
        }
        Command::Bench { family, format, include_ca_cert, iterations, out } => {
            if let Some(n) = iterations {
                if n < MIN_TIMING_ITERATIONS {
                    return Ok(usage(&format!("--iterations must be at least {MIN_TIMING_ITERATIONS}")));
                }
            }
            return bench(family, format, include_ca_cert, iterations, out.as_deref(), json);
        }
        Command::Serve { listen, peer, max_sessions, echo, table_capacity } => {
            return serve(&listen, &peer, max_sessions, echo, table_capacity, json)
        }
        Command::Connect { peer_addr, peer } => return connect(&peer_addr, &peer, json),
    }
    Ok(ExitCode::SUCCESS)
}

/// PEM-armoured input becomes DER; anything else passes through.
fn der_of(bytes: &[u8]) -> Vec<u8> {
    match std::str::from_utf8(bytes) {
        Ok(text) if text.contains("-----BEGIN") => {
            Certificate::from_pem(text).map(|c| c.to_der().to_vec()).unwrap_or_else(|_| bytes.to_vec())
        }
        _ => bytes.to_vec(),
    }
}

fn tlv_json(t: &Tlv) -> Value {
    match t.content() {
        Content::Primitive(v) => json!({ "tag": t.tag().to_string(), "len": v.len(), "value": codec_hex(v) }),
        Content::Constructed(c) => {
            json!({ "tag": t.tag().to_string(), "children": c.iter().map(tlv_json).collect::<Vec<_>>() })
        }
    }
}

fn codec_hex(v: &[u8]) -> String {
    v.iter().map(|b| format!("{b:02x}")).collect()
}

fn cert_json(c: &Certificate) -> Value {
    json!({
        "scheme": c.scheme().name(),
        "subject": c.subject(),
        "issuer": c.issuer(),
        "serial": codec_hex(c.serial()),
        "not_before": c.not_before().to_string(),
        "not_after": c.not_after().to_string(),
        "is_ca": c.is_ca(),
        "signature_algorithm": c.signature_algorithm().name(),
        "dsa_algorithm": c.dsa_public().map(|k| k.algorithm().name()),
        "kem_algorithm": c.kem_public().map(|k| k.algorithm().name()),
        "delta_serial": c.delta_serial().map(codec_hex),
        "length": c.encoded_length(),
    })
}

fn cert_text(c: &Certificate) -> String {
    let mut s = format!(
        "certificate: {} subject={:?} issuer={:?} serial={} ({} bytes)\n  valid {} .. {}\n  signed with {}\n",
        if c.is_ca() { "ca".to_owned() } else { c.scheme().to_string() },
        c.subject(),
        c.issuer(),
        codec_hex(c.serial()),
        c.encoded_length(),
        c.not_before(),
        c.not_after(),
        c.signature_algorithm()
    );
    if let Some(k) = c.dsa_public() {
        s.push_str(&format!("  DSA key {} ({} bytes)\n", k.algorithm(), k.as_bytes().len()));
    }
    if let Some(k) = c.kem_public() {
        s.push_str(&format!("  KEM key {} ({} bytes)\n", k.algorithm(), k.as_bytes().len()));
    }
    if let Some(d) = c.delta_serial() {
        s.push_str(&format!("  delta certificate serial {}\n", codec_hex(d)));
    }
    s
}

fn message_json(m: &SignedData) -> Value {
    let si = m.signer_info();
    let peer = m.content().peer_message_id.map(|id| codec_hex(&id));
    json!({
        "message_type": m.message_type().name(),
        "length": m.encoded_length(),
        "message_id": codec_hex(&m.message_id()),
        "peer_message_id": peer,
        "ciphertext_len": m.content().payload.as_ref().map(|c| c.as_bytes().len()),
        "certificates": m.certificates().iter().map(cert_json).collect::<Vec<_>>(),
        "signing_time": si.signed_attributes.signing_time.to_string(),
        "signature_algorithm": si.signature.algorithm().name(),
        "signature_len": si.signature.as_bytes().len(),
    })
}

fn inspect(path: &Path, json: bool) -> Result<ExitCode> {
    let bytes = files::read(path)?;
    if let Ok(m) = SignedData::from_der(&bytes) {
        emit(json, message_json(&m), m.describe());
        return Ok(ExitCode::SUCCESS);
    }
    if let Ok(certs) = files::read_certificates(path) {
        emit(json, Value::Array(certs.iter().map(cert_json).collect()), certs.iter().map(cert_text).collect());
        return Ok(ExitCode::SUCCESS);
    }
    if let Ok(frames) = parse_transcript(&bytes) {
        let mut values = Vec::new();
        let mut text = String::new();
        for (i, f) in frames.iter().enumerate() {
            match (f.kind, SignedData::from_der(&f.body)) {
                (FrameKind::Handshake, Ok(m)) => {
                    text.push_str(&format!("frame {i}: handshake\n{}", m.describe()));
                    values.push(json!({ "frame": i, "kind": "handshake", "message": message_json(&m) }));
                }
                (kind, _) => {
                    text.push_str(&format!("frame {i}: {kind:?} ({} bytes)\n", f.body.len()));
                    values.push(json!({ "frame": i, "kind": format!("{kind:?}").to_lowercase(), "len": f.body.len() }));
                }
            }
        }
        emit(json, Value::Array(values), text);
        return Ok(ExitCode::SUCCESS);
    }
    Err(format!("{}: not a certificate, handshake message or transcript", path.display()).into())
}

fn bench(
    family: DsaFamily,
    format: ReportFormat,
    include_ca_cert: bool,
    iterations: Option<usize>,
    out: Option<&Path>,
    json: bool,
) -> Result<ExitCode> {
    let cfg = BenchConfig { include_ca_certificate: include_ca_cert, ..BenchConfig::default() };
    let rows = run_family_tables(family, &cfg)?;
    // The reference tables assume end-entity certificates only.
    let mut violations = if include_ca_cert { Vec::new() } else { check_family(&rows) };
    let mut timings = Vec::new();
    if let Some(n) = iterations {
        for level in SecurityLevel::ALL {
            for method in METHODS {
                timings.push(measure_timings(Suite::new(level, family), method, n, &cfg)?);
            }
        }
        for chunk in timings.chunks(METHODS.len()) {
            let (composite, compared) = (&chunk[0], &chunk[3]);
            for step in [Step::ProcessReq, Step::ProcessResp] {
                if compared.step(step).verifications != composite.step(step).verifications + 1 {
                    violations.push(format!(
                        "{}: {} verification count not composite + 1",
                        compared.suite,
                        step.name()
                    ));
                }
            }
        }
    }
    let text = if json {
        let v = json!({
            "family": family.cli_name(),
            "include_ca_cert": include_ca_cert,
            "rows": rows.iter().map(|r| json!({
                "level": r.suite.level().number(),
                "suite": r.suite.to_string(),
                "method": r.method.name(),
                "req": r.req_len,
                "resp": r.resp_len,
                "ack": r.ack_len,
                "total": r.total(),
            })).collect::<Vec<_>>(),
            "timings": timings.iter().map(|t| json!({
                "suite": t.suite.to_string(),
                "method": t.method.name(),
                "iterations": t.iterations,
                "steps": t.steps.iter().map(|s| json!({
                    "step": s.step.name(),
                    "median_us": s.median.as_secs_f64() * 1e6,
                    "verifications": s.verifications,
                })).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "violations": violations,
        });
        serde_json::to_string_pretty(&v)? + "\n"
    } else {
        let mut t = emit_report(&rows, format);
        if !timings.is_empty() {
            t.push('\n');
            t.push_str(&emit_timing_report(&timings, format));
        }
        t
    };
    match out {
        Some(p) => files::write(p, text.as_bytes())?,
        None => print!("{text}"),
    }
    for v in &violations {
        eprintln!("invariant violated: {v}");
    }
    Ok(if violations.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn peer_config(args: &PeerArgs) -> Result<PeerConfig> {
    let ca = files::read_ca_certificate(&args.ca)?;
    let credential = files::load_credential(args.scheme, &args.keys, &args.cert, &ca, Timestamp::now())?;
    let ca_public = ca.dsa_public().ok_or("CA certificate has no signature key")?.clone();
    let mut cfg = PeerConfig::new(args.suite, Arc::new(credential), ca_public);
    cfg.handshake = HandshakeConfig { freshness_window: args.freshness_window, ..HandshakeConfig::default() };
    cfg.handshake_timeout = Duration::from_secs(args.timeout);
    if let Some(p) = &args.transcript {
        cfg.transcript = Some(Transcript::create(p)?);
    }
    Ok(cfg)
}

fn status(json: bool, value: Value, text: String) {
    let line = if json { value.to_string() } else { text };
    let mut out = io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

fn serve(
    listen: &str,
    args: &PeerArgs,
    max_sessions: Option<usize>,
    echo: bool,
    capacity: usize,
    json: bool,
) -> Result<ExitCode> {
    let cfg = peer_config(args)?;
    let table = Arc::new(SessionTable::new(capacity, DEFAULT_SESSION_EXPIRY));
    let responder = Arc::new(net::responder_for(&cfg, table)?);
    let listener = TcpListener::bind(listen)?;
    status(
        json,
        json!({ "event": "listening", "addr": listener.local_addr()?.to_string() }),
        format!("listening on {}", listener.local_addr()?),
    );
    let writers: Arc<Mutex<Vec<Arc<Mutex<SessionWriter>>>>> = Arc::default();
    {
        // Lines typed at the server go to every live session.
        let writers = writers.clone();
        std::thread::spawn(move || {
            for line in io::stdin().lock().lines().map_while(|l| l.ok()) {
                let mut live = writers.lock().unwrap();
                live.retain(|w: &Arc<Mutex<SessionWriter>>| w.lock().unwrap().send(&line).is_ok());
            }
        });
    }
    let failures = Arc::new(Mutex::new(0usize));
    let failures_in = failures.clone();
    net::serve(listener, responder, cfg, max_sessions, move |addr, session| {
        let session = match session {
            Ok(s) => s,
            Err(e) => {
                *failures_in.lock().unwrap() += 1;
                status(
                    json,
                    json!({ "event": "handshake_failed", "peer": addr.to_string(), "error": e.to_string() }),
                    format!("handshake with {addr} failed: {e}"),
                );
                return;
            }
        };
        let peer = session.peer_subject().to_owned();
        status(
            json,
            json!({ "event": "established", "peer": peer, "addr": addr.to_string(), "fingerprint": session.fingerprint() }),
            format!("session with {peer:?} ({addr}) established, key fingerprint {}", session.fingerprint()),
        );
        let (writer, mut reader) = session.split();
        let writer = Arc::new(Mutex::new(writer));
        writers.lock().unwrap().push(writer.clone());
        loop {
            match reader.recv() {
                Ok(Some(text)) => {
                    status(json, json!({ "event": "message", "from": peer, "text": text }), format!("<{peer}> {text}"));
                    if echo && writer.lock().unwrap().send(&text).is_err() {
                        break;
                    }
                }
                Ok(None) => break,
                Err(e) => {
                    *failures_in.lock().unwrap() += 1;
                    status(
                        json,
                        json!({ "event": "session_error", "peer": peer, "error": e.to_string() }),
                        format!("session with {peer:?} dropped: {e}"),
                    );
                    break;
                }
            }
        }
        reader.close();
        status(json, json!({ "event": "closed", "peer": peer }), format!("session with {peer:?} closed"));
    })?;
    let failed = *failures.lock().unwrap();
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn connect(addr: &str, args: &PeerArgs, json: bool) -> Result<ExitCode> {
    let cfg = peer_config(args)?;
    let session = net::connect(addr, &cfg)?;
    let peer = session.peer_subject().to_owned();
    status(
        json,
        json!({ "event": "established", "peer": peer, "fingerprint": session.fingerprint() }),
        format!("session with {peer:?} established, key fingerprint {}", session.fingerprint()),
    );
    let (mut writer, mut reader) = session.split();
    let peer_in = peer.clone();
    let reader_thread = std::thread::spawn(move || -> std::result::Result<(), String> {
        loop {
            match reader.recv() {
                Ok(Some(text)) => status(
                    json,
                    json!({ "event": "message", "from": peer_in, "text": text }),
                    format!("<{peer_in}> {text}"),
                ),
                Ok(None) => return Ok(()),
                Err(e) => {
                    reader.close();
                    return Err(e.to_string());
                }
            }
        }
    });
    for line in io::stdin().lock().lines() {
        writer.send(&line?)?;
    }
    writer.finish()?;
    match reader_thread.join() {
        Ok(Ok(())) => {
            status(json, json!({ "event": "closed", "peer": peer }), format!("session with {peer:?} closed"));
            Ok(ExitCode::SUCCESS)
        }
        Ok(Err(e)) => Err(format!("session with {peer:?} dropped: {e}").into()),
        Err(_) => Err("reader thread panicked".into()),
    }
}
