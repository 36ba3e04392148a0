use authcred::metadata::{self, canonicalize, verify_publication, MetadataError};
use authcred::node::{Node, NodeConfig};
use authcred::registry::{DocumentStore, EntryKind, Ledger, TrustRegistry};
use authcred::scenario::{publication_mutations, run_demo, run_local_demo};
use authcred::workflow::{ContributionRole, WorkflowState};

#[test]
fn demo_publishes_and_verifies() {
    let (node, out) = run_local_demo(42).unwrap();
    assert_eq!(out.final_state, WorkflowState::Published);
    assert!(out.report.passed, "{:?}", out.report);
    assert_eq!(out.publication.metadata.authors.len(), 3);
    assert_eq!(out.publication.metadata.review_attestation_refs.len(), 1);
    assert_eq!(out.publication.metadata.coi_outcome_refs.len(), 2);
    let clear: Vec<bool> = out.coi.iter().map(|(_, o)| o.clear).collect();
    assert_eq!(clear, vec![true, false]);
    assert!(node.registry().ledger.verify_chain().valid);
}

#[test]
fn demo_is_deterministic_per_seed() {
    let (_, a) = run_local_demo(42).unwrap();
    let (_, b) = run_local_demo(42).unwrap();
    let (_, c) = run_local_demo(43).unwrap();
    assert_eq!(a.head.block_hash, b.head.block_hash);
    assert_eq!(a.publication.to_bytes(), b.publication.to_bytes());
    assert_ne!(a.head.block_hash, c.head.block_hash);
}

#[test]
fn each_mutation_flips_its_own_check() {
    let (mut node, out) = run_local_demo(7).unwrap();
    let mutations = publication_mutations(&mut node, &out).unwrap();
    assert_eq!(mutations.len(), 5);
    for m in mutations {
        let report = verify_publication(&m.headers, &m.document).unwrap();
        assert!(!report.passed, "{}", m.name);
        for (name, ok) in report.checks() {
            assert_eq!(ok, name != m.target, "{}: check {name}", m.name);
        }
    }
}

#[test]
fn flipped_sidecar_bytes_never_pass() {
    let (node, out) = run_local_demo(9).unwrap();
    let headers = node.headers();
    let bytes = out.publication.to_bytes().0;
    for i in (0..bytes.len()).step_by(97) {
        let mut copy = bytes.clone();
        copy[i] ^= 0x01;
        match verify_publication(&headers, &copy) {
            Ok(r) => assert!(!r.anchored || copy == bytes, "byte {i}"),
            Err(MetadataError::ParseFailure(_)) => {}
            Err(e) => panic!("byte {i}: {e}"),
        }
    }
    assert!(matches!(verify_publication(&headers, b"{"), Err(MetadataError::ParseFailure(_))));
}

#[test]
fn build_preconditions() {
    let (node, out) = run_local_demo(5).unwrap();
    let journal = node.journal_did().unwrap().clone();
    let mut sub = node.submission(&out.submission_id).unwrap();

    sub.state = WorkflowState::UnderReview;
    assert!(matches!(metadata::build(&sub, node.registry(), &journal, 1), Err(MetadataError::NotAccepted(_))));

    // same history with the corresponding author's consent entry withheld
    sub.state = WorkflowState::Accepted;
    let withheld = sub.consents[0].digest();
    let mut ledger = Ledger::in_memory(node.registry().ledger.blocks()[0].timestamp);
    for block in &node.registry().ledger.blocks()[1..] {
        let kept: Vec<_> = block
            .entries
            .iter()
            .filter(|e| !(e.kind == EntryKind::ConsentRecord && e.payload_digest == withheld))
            .cloned()
            .collect();
        if !kept.is_empty() {
            ledger.append(kept, block.timestamp).unwrap();
        }
    }
    let registry = TrustRegistry { ledger, documents: DocumentStore::in_memory() };
    assert!(matches!(metadata::build(&sub, &registry, &journal, 1), Err(MetadataError::MissingConsentRef(d)) if d == sub.corresponding_author.did));
}

#[test]
fn anchor_twice_is_rejected() {
    let (node, out) = run_local_demo(5).unwrap();
    let ledger = Ledger::from_blocks(node.registry().ledger.blocks().to_vec()).unwrap();
    let mut registry = TrustRegistry { ledger, documents: DocumentStore::in_memory() };
    assert!(matches!(metadata::anchor(&mut registry, &out.publication.metadata), Err(MetadataError::DuplicateAnchor)));
    let mut fresh = out.publication.metadata.clone();
    fresh.published_at += 10;
    let receipt = metadata::anchor(&mut registry, &fresh).unwrap();
    assert!(authcred::registry::verify_inclusion(&receipt.proof, &registry.ledger.head_hash(), &registry.ledger.headers()));
}

#[test]
fn canonicalization_is_deterministic_and_role_sensitive() {
    let (_, out) = run_local_demo(3).unwrap();
    let m = out.publication.metadata.clone();
    assert_eq!(canonicalize(&m), canonicalize(&m.clone()));
    let reparsed: metadata::PublicationMetadata = serde_json::from_slice(&canonicalize(&m).0).unwrap();
    assert_eq!(canonicalize(&reparsed), canonicalize(&m));
    let mut other = m.clone();
    other.authors[1].role = ContributionRole::Visualization;
    assert_ne!(m.digest(), other.digest());
}

#[test]
fn interleaved_second_demo_shares_one_ledger() {
    let mut node = Node::open(NodeConfig::seeded(1)).unwrap();
    let first = run_demo(&mut node, 1).unwrap();
    let second = run_demo(&mut node, 2).unwrap();
    assert!(first.report.passed && second.report.passed);
    assert!(node.verify_publication(&first.submission_id).unwrap().passed);
}
