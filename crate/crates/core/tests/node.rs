use authcred::node::{ledger_file, Node, NodeConfig, NodeError, Roles};
use authcred::registry::record_offsets;
use authcred::scenario::run_demo;

fn config(dir: &std::path::Path, seed: u64) -> NodeConfig {
    NodeConfig { data_dir: Some(dir.to_path_buf()), kdf_rounds: 1_000, ..NodeConfig::seeded(seed) }
}

#[test]
fn fresh_data_dir_gets_genesis_and_journal_identity() {
    let dir = tempfile::tempdir().unwrap();
    let node = Node::open(config(dir.path(), 1)).unwrap();
    assert_eq!(node.registry().ledger.blocks()[0].entries.len(), 0);
    assert!(node.journal_did().is_some());
    assert!(ledger_file(dir.path()).exists());
}

#[test]
fn restart_keeps_head_and_state() {
    let dir = tempfile::tempdir().unwrap();
    let (head, id) = {
        let mut node = Node::open(config(dir.path(), 4)).unwrap();
        let out = run_demo(&mut node, 4).unwrap();
        (node.head(), out.submission_id)
    };
    let mut node = Node::open(config(dir.path(), 4)).unwrap();
    assert_eq!(node.head(), head);
    assert!(node.verify_publication(&id).unwrap().passed);
    assert!(node.audit().unwrap().valid);
    // the reopened node keeps working without reusing key material
    let more = run_demo(&mut node, 5).unwrap();
    assert!(more.report.passed);
}

#[test]
fn tampered_ledger_refuses_to_start() {
    let dir = tempfile::tempdir().unwrap();
    {
        let mut node = Node::open(config(dir.path(), 6)).unwrap();
        run_demo(&mut node, 6).unwrap();
    }
    let path = ledger_file(dir.path());
    let mut bytes = std::fs::read(&path).unwrap();
    let offsets = record_offsets(&bytes);
    let target = offsets[5] + 20;
    bytes[target] ^= 0x04;
    std::fs::write(&path, &bytes).unwrap();
    match Node::open(config(dir.path(), 6)) {
        Err(NodeError::CorruptLedgerAtStartup { index, .. }) => assert!(index <= 5),
        other => panic!("expected CorruptLedgerAtStartup, got {other:?}"),
    }
}

#[test]
fn wallet_secrets_stay_out_of_persisted_state() {
    let dir = tempfile::tempdir().unwrap();
    let mut node = Node::open(config(dir.path(), 8)).unwrap();
    run_demo(&mut node, 8).unwrap();
    let mut scanned = 0;
    for entry in walk(dir.path()) {
        let bytes = std::fs::read(&entry).unwrap();
        assert!(!node.wallet().secret_appears_in(&bytes), "{}", entry.display());
        scanned += 1;
    }
    assert!(scanned > 10);
}

fn walk(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

#[test]
fn config_validation_and_disabled_roles() {
    let none = Roles { issuer: false, journal: false, wallet: false, reader: false };
    assert!(matches!(Node::open(NodeConfig { roles: none, ..NodeConfig::seeded(1) }), Err(NodeError::InvalidConfig(_))));

    let reader_only = Roles { issuer: false, journal: false, wallet: false, reader: true };
    let mut node = Node::open(NodeConfig { roles: reader_only, ..NodeConfig::seeded(1) }).unwrap();
    let err = node.create_identity().unwrap_err();
    assert_eq!((err.code().as_str(), err.status()), ("RoleDisabled", 403));
    assert!(node.journal_did().is_none());
}

#[test]
fn error_codes_name_the_innermost_variant() {
    let mut node = Node::open(NodeConfig::seeded(2)).unwrap();
    let err = node.submission(&[0; 16]).unwrap_err();
    assert_eq!((err.code().as_str(), err.status()), ("NotFound", 404));
    let doc = node.create_identity().unwrap().document;
    let err = node.register_did(&doc).unwrap_err();
    assert_eq!((err.code().as_str(), err.status()), ("DuplicateDid", 409));
}
