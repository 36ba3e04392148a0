use authcred::identity::DidDocument;
use authcred::node::{ledger_file, NodeConfig, SignConsentRequest};
use authcred::registry::{record_offsets, LedgerReceipt};
use authcred::scenario::{prepare_submission, run_demo, run_local_demo, ApiError, Backend};
use authcred::workflow::{ConsentDecision, ContributionRole, Submission, WorkflowState};
use authcred::Digest;
use authcred_node::client::HttpBackend;
use authcred_node::{BackgroundNode, ServeConfig, ServeError};

fn start(node: NodeConfig) -> BackgroundNode {
    BackgroundNode::start(ServeConfig { node, listen: "127.0.0.1:0".parse().unwrap() }).unwrap()
}

#[test]
fn http_and_in_process_demo_reach_the_same_head() {
    let server = start(NodeConfig::seeded(42));
    let mut http = HttpBackend::new(&server.url());
    let over_http = run_demo(&mut http, 42).unwrap();
    let (_, local) = run_local_demo(42).unwrap();
    assert_eq!(over_http.head, local.head);
    assert_eq!(over_http.publication, local.publication);
    assert!(over_http.report.passed);
}

#[test]
fn no_private_key_in_any_body_or_persisted_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = NodeConfig { data_dir: Some(dir.path().into()), kdf_rounds: 1_000, ..NodeConfig::seeded(3) };
    let server = start(config);
    let mut http = HttpBackend::new(&server.url()).capturing();
    run_demo(&mut http, 3).unwrap();
    let node = server.node.lock().unwrap();
    assert!(http.captured().len() > 40);
    for body in http.captured() {
        assert!(!node.wallet().secret_appears_in(body));
    }
    assert!(!node.wallet().secret_appears_in(&std::fs::read(ledger_file(dir.path())).unwrap()));
}

#[test]
fn endpoint_statuses_and_codes() {
    let server = start(NodeConfig::seeded(4));
    let mut http = HttpBackend::new(&server.url());
    let out = run_demo(&mut http, 4).unwrap();

    // a fresh document registered directly
    let created = http.create_identity().unwrap();
    let dup: Result<LedgerReceipt, ApiError> = http.post("/dids", Some(&created.document));
    assert_eq!(dup.unwrap_err().code, "DuplicateDid");
    let resolved: DidDocument = http.get(&format!("/dids/{}", created.did)).unwrap();
    assert_eq!(resolved, created.document);

    // bad consent signature: record signed by the wrong wallet identity
    let a = out.participants[0].did.clone();
    let b = out.participants[1].did.clone();
    let ms = Digest([9; 32]);
    let req = prepare_submission(&mut http, ms, &a, ContributionRole::Software, &[(b.clone(), ContributionRole::Validation)]).unwrap();
    let id = req.id;
    http.submit(&req).unwrap();
    let mut forged = http
        .sign_consent(&a, &SignConsentRequest { submission_id: id, decision: ConsentDecision::Grant, manuscript_digest: Some(ms), role: Some(ContributionRole::Validation) })
        .unwrap();
    forged.coauthor_did = b.clone();
    let url = format!("{}/journal/submissions/{}/consents", server.url(), hex::encode(id));
    let resp = ureq::post(&url).config().http_status_as_error(false).build().header("content-type", "application/json").send(&serde_json::to_vec(&forged).unwrap()[..]).unwrap();
    assert_eq!(resp.status().as_u16(), 422);
    let body: ApiError = serde_json::from_slice(&resp.into_body().read_to_vec().unwrap()).unwrap();
    assert_eq!(body.code, "BadConsentSignature");

    // pending inbox for b, then deny shows ConsentRejected with one alert
    let pending: Vec<Submission> = http.get(&format!("/journal/submissions?pending_for={b}")).unwrap();
    assert_eq!(pending.iter().map(|s| s.id).collect::<Vec<_>>(), vec![id]);
    let rec = http.sign_consent(&b, &SignConsentRequest { submission_id: id, decision: ConsentDecision::Deny, manuscript_digest: None, role: None }).unwrap();
    let s = http.record_consent(&id, &rec).unwrap().submission;
    assert_eq!((s.state, s.alerts.len()), (WorkflowState::ConsentRejected, 1));

    let report = http.verify_publication(&out.submission_id).unwrap();
    assert!(report.passed);

    let err = http.raw("POST", "/journal/submissions", Some(b"{not json".to_vec())).unwrap_err();
    assert_eq!(err.code, "MalformedBody");
    assert_eq!(http.raw("GET", "/nope", None).unwrap_err().code, "NoSuchEndpoint");
    assert_eq!(http.raw("GET", "/journal/submissions/zz", None).unwrap_err().code, "BadRequest");
    assert_eq!(http.raw("GET", "/ledger/blocks/99999", None).unwrap_err().code, "NotFound");
}

#[test]
fn startup_refuses_tampered_ledger_and_restart_keeps_head() {
    let dir = tempfile::tempdir().unwrap();
    let config = NodeConfig { data_dir: Some(dir.path().into()), kdf_rounds: 1_000, ..NodeConfig::seeded(5) };
    let head = {
        let server = start(config.clone());
        let mut http = HttpBackend::new(&server.url());
        run_demo(&mut http, 5).unwrap();
        http.head().unwrap()
    };
    {
        let server = start(config.clone());
        assert_eq!(HttpBackend::new(&server.url()).head().unwrap(), head);
    }
    let path = ledger_file(dir.path());
    let mut bytes = std::fs::read(&path).unwrap();
    let at = record_offsets(&bytes)[3] + 9;
    bytes[at] ^= 0x01;
    std::fs::write(&path, bytes).unwrap();
    let err = BackgroundNode::start(ServeConfig { node: config, listen: "127.0.0.1:0".parse().unwrap() }).err().unwrap();
    assert!(matches!(err, ServeError::Node(authcred::node::NodeError::CorruptLedgerAtStartup { .. })), "{err}");
}

#[test]
fn port_in_use_is_reported() {
    let first = start(NodeConfig::seeded(6));
    let err = BackgroundNode::start(ServeConfig { node: NodeConfig::seeded(6), listen: first.addr }).err().unwrap();
    assert!(matches!(err, ServeError::PortInUse(_)));
}
