use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn pqkex(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pqkex")).current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn data(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn keygen_reports_public_key_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let o = pqkex(dir.path(), &["keygen", "--suite", "l3-mldsa", "--out", "alice"]);
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    assert!(text.contains("ML-DSA-65 public key: 1952 bytes"), "{text}");
    assert!(text.contains("ML-KEM-768 public key: 1184 bytes"), "{text}");
    assert!(dir.path().join("alice.dsa.key").exists());
    assert!(dir.path().join("alice.kem.key").exists());

    let o = pqkex(dir.path(), &["--json", "keygen", "--suite", "l1-slhdsa-f", "--out", "bob"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["dsa"]["public_key_len"], 32);
    assert_eq!(v["kem"]["public_key_len"], 800);
}

#[test]
fn issue_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for args in [
        &["ca", "--suite", "l1-mldsa", "--out", "ca"][..],
        &["keygen", "--suite", "l1-mldsa", "--out", "alice"],
        &[
            "issue",
            "--ca",
            "ca",
            "--keys",
            "alice",
            "--scheme",
            "chameleon",
            "--subject",
            "Alice",
            "--out",
            "alice.crt",
        ],
        &["issue", "--ca", "ca", "--keys", "alice", "--scheme", "compared", "--subject", "Alice", "--out", "pure.crt"],
    ] {
        let o = pqkex(d, args);
        assert!(o.status.success(), "{args:?}: {o:?}");
    }
    let o = pqkex(d, &["validate", "--ca", "ca.crt", "alice.crt", "pure.crt"]);
    assert!(o.status.success(), "{o:?}");
    assert_eq!(stdout(&o).matches(": ok").count(), 3);

    let o = pqkex(d, &["inspect", "alice.crt"]);
    assert!(stdout(&o).contains("certificate: chameleon subject=\"Alice\""), "{o:?}");
    let o = pqkex(d, &["--json", "inspect", "pure.crt"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v[0]["scheme"], "pure-dsa");
    assert_eq!(v[1]["scheme"], "pure-kem");

    // Outside the validity period, and under a different CA.
    let o = pqkex(d, &["validate", "--ca", "ca.crt", "--at", "4102444800", "alice.crt"]);
    assert_eq!(o.status.code(), Some(1), "{o:?}");
    let o = pqkex(d, &["validate", "--ca", &data("ca.crt"), "alice.crt"]);
    assert_eq!(o.status.code(), Some(1), "{o:?}");
}

#[test]
fn inspect_golden_response() {
    let dir = tempfile::tempdir().unwrap();
    let o = pqkex(dir.path(), &["inspect", &data("kep_resp.der")]);
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    assert!(text.contains("messageType:    kepResp"), "{text}");
    assert!(text.contains("requestId:      39cb50d6a4302041"), "{text}");
    assert!(text.contains("ML-KEM-768 (1088 bytes)"), "{text}");

    let o = pqkex(dir.path(), &["--json", "inspect", &data("kep_resp.der")]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["message_type"], "kepResp");
    assert_eq!(v["peer_message_id"], "39cb50d6a4302041");
    assert_eq!(v["ciphertext_len"], 1088);
    assert_eq!(v["length"], 14702);

    let o = pqkex(dir.path(), &["decode", "--dump", &data("kep_resp.der")]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().count() > 20);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["keygen", "--suite", "l4-mldsa", "--out", "x"][..],
        &["keygen", "--out", "x"],
        &["frobnicate"],
        &["bench", "--family", "mldsa", "--iterations", "29"],
        &["bench", "--family", "mldsa", "--format", "yaml"],
        &["issue", "--ca", "ca", "--keys", "k", "--scheme", "bogus", "--subject", "S", "--out", "o"],
    ] {
        assert_eq!(pqkex(dir.path(), args).status.code(), Some(2), "{args:?}");
    }
    let o = pqkex(dir.path(), &["inspect", "missing.der"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bench_regenerates_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = pqkex(dir.path(), &["bench", "--family", "mldsa", "--format", "csv", "--out", "t.csv"]);
    assert!(o.status.success(), "{o:?}");
    let csv = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("family,method,level,suite,req,resp,ack,total"));
    assert_eq!(csv.lines().count(), 13);

    let o = pqkex(dir.path(), &["bench", "--family", "mldsa"]);
    let md = stdout(&o);
    assert_eq!(md.matches("| Method | Level 1 | Level 3 | Level 5 |").count(), 4);

    let o = pqkex(dir.path(), &["bench", "--family", "mldsa", "--iterations", "30", "--format", "csv"]);
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    assert!(text.contains("suite,method,iterations,step,median_us,verifications"));
    assert_eq!(text.lines().filter(|l| l.contains(",30,")).count(), 12 * 7);
}

#[test]
fn chat_between_processes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for args in [
        &["ca", "--suite", "l1-mldsa", "--out", "ca"][..],
        &["keygen", "--suite", "l1-mldsa", "--out", "alice"],
        &["keygen", "--suite", "l1-mldsa", "--out", "bob"],
        &[
            "issue",
            "--ca",
            "ca",
            "--keys",
            "alice",
            "--scheme",
            "composite",
            "--subject",
            "Alice",
            "--out",
            "alice.crt",
        ],
        &["issue", "--ca", "ca", "--keys", "bob", "--scheme", "composite", "--subject", "Bob", "--out", "bob.crt"],
    ] {
        assert!(pqkex(d, args).status.success(), "{args:?}");
    }
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let addr = format!("127.0.0.1:{port}");
    let peer = |keys: &str| {
        vec!["--suite", "l1-mldsa", "--scheme", "composite", "--keys", keys, "--ca", "ca.crt"]
            .into_iter()
            .map(String::from)
            .chain(["--cert".into(), format!("{keys}.crt")])
            .collect::<Vec<_>>()
    };
    let mut server = Command::new(env!("CARGO_BIN_EXE_pqkex"))
        .current_dir(d)
        .args(["--json", "serve", "--listen", &addr, "--max-sessions", "1", "--echo", "--transcript", "t.bin"])
        .args(peer("bob"))
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut server_out = BufReader::new(server.stdout.take().unwrap());
    let mut first = String::new();
    server_out.read_line(&mut first).unwrap();
    assert!(first.contains("listening"), "{first}");
    let mut client = Command::new(env!("CARGO_BIN_EXE_pqkex"))
        .current_dir(d)
        .args(["--json", "connect", "--peer-addr", &addr])
        .args(peer("alice"))
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    client.stdin.take().unwrap().write_all(b"hello\n").unwrap();
    let client = client.wait_with_output().unwrap();
    drop(server.stdin.take());
    let mut rest = String::new();
    server_out.read_to_string(&mut rest).unwrap();
    assert!(server.wait().unwrap().success(), "{rest}");
    assert!(client.status.success(), "{client:?}");

    let events = |o: &Output| -> Vec<serde_json::Value> {
        stdout(o).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
    };
    let c = events(&client);
    let s: Vec<serde_json::Value> = rest.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let fp = |ev: &[serde_json::Value]| ev.iter().find(|e| e["event"] == "established").unwrap()["fingerprint"].clone();
    assert_eq!(fp(&c), fp(&s));
    assert!(s.iter().any(|e| e["event"] == "message" && e["text"] == "hello" && e["from"] == "Alice"));
    assert!(c.iter().any(|e| e["event"] == "message" && e["text"] == "hello" && e["from"] == "Bob"));

    let transcript = std::fs::read(d.join("t.bin")).unwrap();
    assert!(!transcript.windows(5).any(|w| w == b"hello"));
    let o = pqkex(d, &["inspect", "t.bin"]);
    let text = stdout(&o);
    for t in ["kepReq", "kepResp", "kepAck"] {
        assert!(text.contains(t), "{text}");
    }
}
