use std::path::Path;
use std::process::{Command, Output};

use authcred::canonical::canonicalize_value;
use authcred::node::NodeConfig;
use authcred::wallet::WalletStore;
use authcred_node::{BackgroundNode, ServeConfig};
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_authcred");

fn authcred(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("AUTHCRED_NODE").env_remove("AUTHCRED_DATA_DIR").output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

/// Runs with `--output json`, asserts exit 0 and that stdout is already in
/// canonical form.
fn json(args: &[&str]) -> Value {
    let mut full = vec!["--output", "json"];
    full.extend_from_slice(args);
    let out = authcred(&full);
    assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    let text = out.stdout.strip_suffix(b"\n").unwrap();
    let value: Value = serde_json::from_slice(text).unwrap();
    assert_eq!(canonicalize_value(&value).unwrap(), text, "{args:?} output is not canonical");
    value
}

fn s(v: &Value) -> String {
    v.as_str().unwrap().to_string()
}

#[test]
fn demo_is_deterministic_per_seed() {
    let a = json(&["demo", "--seed", "42"]);
    let b = json(&["demo", "--seed", "42"]);
    let c = json(&["demo", "--seed", "43"]);
    assert_eq!(a["head"], b["head"]);
    assert_ne!(a["head"], c["head"]);
    assert_eq!(a["final_state"], "Published");
    assert_eq!(a["report"]["passed"], true);
}

#[test]
fn audit_after_tamper_demo_names_the_block() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let tamper = json(&["--data-dir", d, "tamper-demo", "--block", "7"]);
    assert_eq!(tamper["corrupted_block"], 7);
    let out = authcred(&["--data-dir", d, "ledger", "audit"]);
    assert_eq!(code(&out), 1);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("block 7"), "{text}");

    let again = authcred(&["--data-dir", d, "tamper-demo"]);
    assert_eq!(code(&again), 1, "refuses to reuse a populated data dir");
}

#[test]
fn usage_errors_exit_2_and_name_missing_flags() {
    let out = authcred(&["consent", "grant", "--did", "did:authcred:x"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--submission"));
    assert_eq!(code(&authcred(&["keygen"])), 2);
    assert_eq!(code(&authcred(&["submit", "--author", "did:authcred:x", "--role", "software"])), 2);
    assert_eq!(code(&authcred(&["nonsense"])), 2);
}

#[test]
fn operation_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = authcred(&["--data-dir", d, "journal", "submissions", "get", "00112233445566778899aabbccddeeff"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("NotFound"));
    let out = authcred(&["--node", "http://127.0.0.1:9", "ledger", "head"]);
    assert_eq!(code(&out), 1);
}

fn files_under(dir: &Path) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(files_under(&path));
        } else {
            out.push(std::fs::read(path).unwrap());
        }
    }
    out
}

#[test]
fn every_phase_over_http_with_a_local_wallet() {
    let data = tempfile::tempdir().unwrap();
    let config = NodeConfig { data_dir: Some(data.path().into()), kdf_rounds: 1_000, ..NodeConfig::default() };
    let server = BackgroundNode::start(ServeConfig { node: config, listen: "127.0.0.1:0".parse().unwrap() }).unwrap();
    let url = server.url();
    let home = tempfile::tempdir().unwrap();
    let wallet = home.path().join("wallet.json");
    let w = wallet.to_str().unwrap();
    let run = |args: &[&str]| {
        let mut full = vec!["--node", url.as_str()];
        full.extend_from_slice(args);
        json(&full)
    };

    let issuer = s(&run(&["did", "create"])["did"]);
    let a = s(&run(&["--wallet", w, "did", "create"])["did"]);
    let b = s(&run(&["--wallet", w, "did", "create"])["did"]);
    let r = s(&run(&["did", "create"])["did"]);
    assert_eq!(run(&["did", "resolve", &a])["did"], a);

    // an offline key registered afterwards
    let offline = s(&json(&["--wallet", w, "keygen"])["did"]);
    assert_eq!(code(&authcred(&["--node", &url, "did", "resolve", &offline])), 1);
    run(&["--wallet", w, "did", "register", "--did", &offline]);
    assert_eq!(run(&["did", "resolve", &offline])["did"], offline);

    for (did, aff, exp) in [(&a, "Uppsala University", "cryptography"), (&b, "KTH", "ledgers"), (&r, "TU Delft", "ledgers")] {
        let claims = [format!("affiliation={aff}"), format!("expertise={exp}"), "role=researcher".to_string()];
        let issued = run(&["--wallet", w, "vc", "issue", "--issuer", &issuer, "--subject", did, "--claim", &claims[0], "--claim", &claims[1], "--claim", &claims[2]]);
        assert_eq!(issued["stored_locally"], *did != r);
        let vc_file = home.path().join("vc.json");
        std::fs::write(&vc_file, serde_json::to_vec(&issued["issued"]["credential"]).unwrap()).unwrap();
        assert_eq!(run(&["vc", "verify", vc_file.to_str().unwrap()])["passed"], true);
    }
    let held = run(&["--wallet", w, "vc", "list", "--did", &a]);
    assert_eq!(held.as_array().unwrap().len(), 1);
    let shown = run(&["--wallet", w, "vc", "present", "--did", &a, "--disclose", "affiliation", "--challenge", &"ab".repeat(32)]);
    assert_eq!(shown["disclosed"].as_array().unwrap().len(), 1);
    assert!(!serde_json::to_string(&shown).unwrap().contains("cryptography"));

    let manuscript = home.path().join("manuscript.pdf");
    std::fs::write(&manuscript, b"a manuscript").unwrap();
    let coauthor = format!("{b}=software");
    let sub = run(&["--wallet", w, "submit", "--author", &a, "--role", "conceptualization", "--manuscript", manuscript.to_str().unwrap(), "--coauthor", &coauthor]);
    let id = s(&sub["submission"]["id"]);
    assert_eq!(sub["submission"]["state"], "AwaitingConsent");
    let pending = run(&["journal", "submissions", "list", "--pending-for", &b]);
    assert_eq!(pending[0]["id"], id);

    run(&["--wallet", w, "consent", "deny", "--did", &b, "--submission", &id]);
    let got = run(&["journal", "submissions", "get", &id]);
    assert_eq!(got["state"], "ConsentRejected");
    assert_eq!(got["alerts"].as_array().unwrap().len(), 1);
    run(&["alert", "resolve", "--submission", &id, "--alert", "0", "--action", "Reinstate"]);
    let granted = run(&["--wallet", w, "consent", "grant", "--did", &b, "--submission", &id]);
    assert_eq!(granted["submission"]["state"], "ConsentComplete");

    let assigned = run(&["reviewer", "assign", "--submission", &id, "--reviewer", &r, "--conflict", "ETH Zurich", "--conflict", "kth "]);
    let assignment = s(&assigned["assignment"]["id"]);
    let coi = run(&["coi", "run", "--assignment", &assignment]);
    assert_eq!(coi["assignment"]["coi_status"], "Conflict");
    let session = s(&coi["transcript"]["session_id"]);
    assert_eq!(run(&["coi", "verify", "--session", &session])["passed"], true);
    let review_file = home.path().join("review.txt");
    std::fs::write(&review_file, b"looks fine").unwrap();
    let blocked = authcred(&["--node", &url, "review", "--submission", &id, "--reviewer", &r, "--recommendation", "Accept", "--review", review_file.to_str().unwrap()]);
    assert_eq!(code(&blocked), 1);
    assert!(String::from_utf8_lossy(&blocked.stderr).contains("CoiNotClear"));

    // a second, unconflicted reviewer from the local wallet
    let r2 = s(&run(&["--wallet", w, "did", "create"])["did"]);
    run(&["--wallet", w, "vc", "issue", "--issuer", &issuer, "--subject", &r2, "--claim", "expertise=ledgers", "--claim", "affiliation=Aalto"]);
    let assigned = run(&["--wallet", w, "reviewer", "assign", "--submission", &id, "--reviewer", &r2, "--conflict", "Aalto"]);
    let coi = run(&["coi", "run", "--assignment", &s(&assigned["assignment"]["id"])]);
    assert_eq!(coi["assignment"]["coi_status"], "Clear");
    run(&["review", "--submission", &id, "--reviewer", &r2, "--recommendation", "Accept", "--review", review_file.to_str().unwrap()]);
    assert_eq!(run(&["decide", "--submission", &id, "--decision", "Accept"])["submission"]["state"], "Accepted");

    let sidecar = home.path().join("pub.authcred.json");
    run(&["publish", "--submission", &id, "--out", sidecar.to_str().unwrap()]);
    assert_eq!(run(&["verify-publication", "--submission", &id])["passed"], true);
    assert_eq!(run(&["verify-publication", "--file", sidecar.to_str().unwrap()])["passed"], true);
    let mut bytes = std::fs::read(&sidecar).unwrap();
    let at = bytes.len() / 2;
    bytes[at] = if bytes[at] == b'0' { b'1' } else { b'0' };
    std::fs::write(&sidecar, bytes).unwrap();
    assert_eq!(code(&authcred(&["--node", &url, "verify-publication", "--file", sidecar.to_str().unwrap()])), 1);

    assert_eq!(run(&["ledger", "audit"])["valid"], true);
    let head = run(&["ledger", "head"]);
    assert_eq!(run(&["ledger", "block", &head["index"].to_string()])["block_hash"], head["block_hash"]);

    // keys held in the local wallet never reached the node
    let local = WalletStore::open(&wallet, "authcred", 100_000, &mut rand::rngs::OsRng).unwrap();
    assert_eq!(local.dids().count(), 4);
    for file in files_under(data.path()) {
        assert!(!local.secret_appears_in(&file));
    }
}
