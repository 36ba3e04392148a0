//! The fixed demonstration scenario, written against [`Backend`] so the
//! same sequence of calls can run in process or over HTTP.
//!
//! Authors A (corresponding), B and C; C denies, the editor reinstates C and
//! C then grants. Reviewer R1 is clear, reviewer R2 shares B's affiliation and
//! is flagged. R1 reviews, the editor accepts, the journal publishes and a
//! reader verifies.

use serde::{Deserialize, Serialize};

use crate::coi::CoiOutcome;
use crate::credentials::{Presentation, VerifiableCredential};
use crate::crypto::{tagged_hash, Digest};
use crate::identity::Did;
use crate::metadata::{PublicationDocument, PublicationReport};
use crate::node::{
    AssignRequest, AssignmentCreated, ChallengeSpec, ClaimInput, CoiRun, IdentityCreated, IssueRequest, IssuedCredential, Node,
    NodeError, PresentRequest, ReviewRequest, SignConsentRequest, SubmissionUpdate,
};
use crate::registry::BlockHeader;
use crate::workflow::{
    CoauthorEntry, ConsentDecision, ConsentRecord, ContributionRole, Decision, EditorialAction, Recommendation, Submission,
    SubmissionRequest, WorkflowState,
};

/// An error as the HTTP API reports it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{code}: {message}")]
pub struct ApiError {
    pub code: String,
    pub message: String,
}

impl From<NodeError> for ApiError {
    fn from(e: NodeError) -> ApiError {
        ApiError { code: e.code(), message: e.to_string() }
    }
}

/// Every node operation the scenario needs.
pub trait Backend {
    fn create_identity(&mut self) -> Result<IdentityCreated, ApiError>;
    fn issue_credential(&mut self, req: &IssueRequest) -> Result<IssuedCredential, ApiError>;
    fn present(&mut self, did: &Did, req: &PresentRequest) -> Result<Presentation, ApiError>;
    fn sign_consent(&mut self, did: &Did, req: &SignConsentRequest) -> Result<ConsentRecord, ApiError>;
    fn submit(&mut self, req: &SubmissionRequest) -> Result<SubmissionUpdate, ApiError>;
    fn submission(&mut self, id: &[u8; 16]) -> Result<Submission, ApiError>;
    fn record_consent(&mut self, id: &[u8; 16], record: &ConsentRecord) -> Result<SubmissionUpdate, ApiError>;
    fn resolve_alert(&mut self, id: &[u8; 16], alert: usize, action: EditorialAction) -> Result<SubmissionUpdate, ApiError>;
    fn assign_reviewer(&mut self, id: &[u8; 16], req: &AssignRequest) -> Result<AssignmentCreated, ApiError>;
    fn run_coi(&mut self, assignment: &[u8; 16]) -> Result<CoiRun, ApiError>;
    fn record_review(&mut self, id: &[u8; 16], req: &ReviewRequest) -> Result<SubmissionUpdate, ApiError>;
    fn decide(&mut self, id: &[u8; 16], decision: Decision) -> Result<SubmissionUpdate, ApiError>;
    fn publish(&mut self, id: &[u8; 16]) -> Result<PublicationDocument, ApiError>;
    fn verify_publication(&mut self, id: &[u8; 16]) -> Result<PublicationReport, ApiError>;
    fn head(&mut self) -> Result<BlockHeader, ApiError>;
}

impl Backend for Node {
    fn create_identity(&mut self) -> Result<IdentityCreated, ApiError> {
        Ok(Node::create_identity(self)?)
    }
    fn issue_credential(&mut self, req: &IssueRequest) -> Result<IssuedCredential, ApiError> {
        Ok(Node::issue_credential(self, req)?)
    }
    fn present(&mut self, did: &Did, req: &PresentRequest) -> Result<Presentation, ApiError> {
        Ok(Node::present(self, did, req)?)
    }
    fn sign_consent(&mut self, did: &Did, req: &SignConsentRequest) -> Result<ConsentRecord, ApiError> {
        Ok(Node::sign_consent(self, did, req)?)
    }
    fn submit(&mut self, req: &SubmissionRequest) -> Result<SubmissionUpdate, ApiError> {
        Ok(Node::submit(self, req.clone())?)
    }
    fn submission(&mut self, id: &[u8; 16]) -> Result<Submission, ApiError> {
        Ok(Node::submission(self, id)?)
    }
    fn record_consent(&mut self, id: &[u8; 16], record: &ConsentRecord) -> Result<SubmissionUpdate, ApiError> {
        Ok(Node::record_consent(self, id, record.clone())?)
    }
    fn resolve_alert(&mut self, id: &[u8; 16], alert: usize, action: EditorialAction) -> Result<SubmissionUpdate, ApiError> {
        Ok(Node::resolve_alert(self, id, alert, action)?)
    }
    fn assign_reviewer(&mut self, id: &[u8; 16], req: &AssignRequest) -> Result<AssignmentCreated, ApiError> {
        Ok(Node::assign_reviewer(self, id, req)?)
    }
    fn run_coi(&mut self, assignment: &[u8; 16]) -> Result<CoiRun, ApiError> {
        Ok(Node::run_coi(self, assignment)?)
    }
    fn record_review(&mut self, id: &[u8; 16], req: &ReviewRequest) -> Result<SubmissionUpdate, ApiError> {
        Ok(Node::record_review(self, id, req)?)
    }
    fn decide(&mut self, id: &[u8; 16], decision: Decision) -> Result<SubmissionUpdate, ApiError> {
        Ok(Node::decide(self, id, decision)?)
    }
    fn publish(&mut self, id: &[u8; 16]) -> Result<PublicationDocument, ApiError> {
        Ok(Node::publish(self, id)?)
    }
    fn verify_publication(&mut self, id: &[u8; 16]) -> Result<PublicationReport, ApiError> {
        Ok(Node::verify_publication(self, id)?)
    }
    fn head(&mut self) -> Result<BlockHeader, ApiError> {
        Ok(Node::head(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Participant {
    pub label: String,
    pub did: Did,
    pub affiliation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemoOutcome {
    #[serde(with = "crate::canonical::hex16")]
    pub submission_id: [u8; 16],
    pub participants: Vec<Participant>,
    pub final_state: WorkflowState,
    pub coi: Vec<(String, CoiOutcome)>,
    pub publication: PublicationDocument,
    pub report: PublicationReport,
    pub head: BlockHeader,
    /// Human-readable step log.
    pub log: Vec<String>,
}

fn profile(affiliation: &str, expertise: &str) -> Vec<ClaimInput> {
    vec![
        ClaimInput { name: "affiliation".into(), value: affiliation.into() },
        ClaimInput { name: "role".into(), value: "researcher".into() },
        ClaimInput { name: "expertise".into(), value: expertise.into() },
    ]
}

/// Submission id a client derives for a manuscript and corresponding author.
pub fn derive_submission_id(manuscript_digest: &Digest, author: &Did) -> [u8; 16] {
    let d = tagged_hash("authcred/submission-id/v1", &[manuscript_digest.as_bytes(), author.to_string().as_bytes()]);
    d.0[..16].try_into().expect("16 bytes")
}

/// Everything a corresponding author's client does before `submit`.
pub fn prepare_submission<B: Backend + ?Sized>(
    backend: &mut B,
    manuscript_digest: Digest,
    author: &Did,
    author_role: ContributionRole,
    coauthors: &[(Did, ContributionRole)],
) -> Result<SubmissionRequest, ApiError> {
    let id = derive_submission_id(&manuscript_digest, author);
    let affiliation = |b: &mut B, did: &Did| {
        b.present(
            did,
            &PresentRequest {
                disclose: vec!["affiliation".into()],
                challenge: ChallengeSpec::Submission { submission_id: id, manuscript_digest },
            },
        )
    };
    let author_presentation = affiliation(backend, author)?;
    let author_consent = backend.sign_consent(
        author,
        &SignConsentRequest {
            submission_id: id,
            decision: ConsentDecision::Grant,
            manuscript_digest: Some(manuscript_digest),
            role: Some(author_role),
        },
    )?;
    let mut entries = Vec::new();
    for (did, role) in coauthors {
        entries.push(CoauthorEntry { did: did.clone(), role: *role, affiliation_presentation: Some(affiliation(backend, did)?) });
    }
    Ok(SubmissionRequest {
        id,
        manuscript_digest,
        corresponding_author: author.clone(),
        author_role,
        author_presentation,
        author_consent,
        coauthors: entries,
        consent_deadline: None,
    })
}

fn consent<B: Backend + ?Sized>(b: &mut B, did: &Did, id: [u8; 16], decision: ConsentDecision) -> Result<SubmissionUpdate, ApiError> {
    let rec = b.sign_consent(did, &SignConsentRequest { submission_id: id, decision, manuscript_digest: None, role: None })?;
    b.record_consent(&id, &rec)
}

fn fail(msg: String) -> ApiError {
    ApiError { code: "ScenarioFailed".into(), message: msg }
}

/// Runs the demo scenario. `seed` only varies the manuscript digest; key
/// material comes from the backend.
pub fn run_demo<B: Backend + ?Sized>(backend: &mut B, seed: u64) -> Result<DemoOutcome, ApiError> {
    let mut log = Vec::new();
    let mut participants = Vec::new();

    let issuer = backend.create_identity()?.did;
    log.push(format!("issuer        {issuer}"));
    let people = [
        ("A", "Massachusetts Institute of Technology", "consensus protocols"),
        ("B", "ETH Zürich", "applied cryptography"),
        ("C", "EPFL", "distributed systems"),
        ("R1", "University of Oxford", "distributed systems"),
        ("R2", "ETH  ZÜRICH", "applied cryptography"),
    ];
    for (label, affiliation, expertise) in people {
        let did = backend.create_identity()?.did;
        backend.issue_credential(&IssueRequest {
            issuer_did: issuer.clone(),
            subject_did: did.clone(),
            claims: profile(affiliation, expertise),
            validity_days: None,
        })?;
        log.push(format!("{label:<13} {did} ({affiliation})"));
        participants.push(Participant { label: label.into(), did, affiliation: affiliation.into() });
    }
    let did = |label: &str| participants.iter().find(|p| p.label == label).expect("fixed cast").did.clone();
    let (a, b, c, r1, r2) = (did("A"), did("B"), did("C"), did("R1"), did("R2"));

    let manuscript = tagged_hash("authcred/demo-manuscript/v1", &[&seed.to_be_bytes()]);
    let req = prepare_submission(
        backend,
        manuscript,
        &a,
        ContributionRole::Conceptualization,
        &[(b.clone(), ContributionRole::Software), (c.clone(), ContributionRole::FormalAnalysis)],
    )?;
    let id = req.id;
    let sub = backend.submit(&req)?.submission;
    log.push(format!("submitted     {} -> {}", hex::encode(id), sub.state));

    let s = consent(backend, &b, id, ConsentDecision::Grant)?.submission;
    log.push(format!("B grants      -> {}", s.state));
    let s = consent(backend, &c, id, ConsentDecision::Deny)?.submission;
    log.push(format!("C denies      -> {} ({} open alert)", s.state, s.alerts.iter().filter(|a| !a.resolved).count()));
    let alert = s.alerts.iter().position(|a| !a.resolved).ok_or_else(|| fail("deny raised no alert".into()))?;
    let s = backend.resolve_alert(&id, alert, EditorialAction::Reinstate)?.submission;
    log.push(format!("reinstate C   -> {}", s.state));
    let s = consent(backend, &c, id, ConsentDecision::Grant)?.submission;
    log.push(format!("C grants      -> {}", s.state));

    let mut coi = Vec::new();
    for (label, reviewer, conflicts) in [
        ("R1", &r1, vec!["University of Oxford".to_string(), "Imperial College London".to_string()]),
        ("R2", &r2, vec!["ETH Zurich".to_string(), "eth zürich".to_string()]),
    ] {
        let p = backend.present(
            reviewer,
            &PresentRequest { disclose: vec!["expertise".into()], challenge: ChallengeSpec::Review { submission_id: id } },
        )?;
        let created = backend.assign_reviewer(
            &id,
            &AssignRequest { reviewer_did: reviewer.clone(), expertise_presentation: p, conflict_set: conflicts },
        )?;
        let run = backend.run_coi(&created.assignment.id)?;
        log.push(format!(
            "COI {label:<9} -> {} (|∩| = {})",
            run.assignment.coi_status, run.transcript.outcome.intersection_cardinality
        ));
        coi.push((label.to_string(), run.transcript.outcome));
    }

    let blocked = backend.record_review(
        &id,
        &ReviewRequest { reviewer_did: r2.clone(), review_digest: tagged_hash("authcred/demo-review/v1", &[b"R2"]), recommendation: Recommendation::Reject },
    );
    match blocked {
        Err(e) if e.code == "CoiNotClear" => log.push("R2 review     -> refused (CoiNotClear)".into()),
        other => return Err(fail(format!("conflicted reviewer was not blocked: {other:?}"))),
    }
    backend.record_review(
        &id,
        &ReviewRequest { reviewer_did: r1.clone(), review_digest: tagged_hash("authcred/demo-review/v1", &[b"R1"]), recommendation: Recommendation::Accept },
    )?;
    let s = backend.decide(&id, Decision::Accept)?.submission;
    log.push(format!("decision      -> {}", s.state));
    let publication = backend.publish(&id)?;
    log.push(format!("published     metadata digest {}", publication.metadata.digest()));
    let report = backend.verify_publication(&id)?;
    log.push(format!("reader check  -> passed = {}", report.passed));
    let final_state = backend.submission(&id)?.state;
    let head = backend.head()?;
    log.push(format!("ledger head   #{} {}", head.index, head.block_hash));

    Ok(DemoOutcome { submission_id: id, participants, final_state, coi, publication, report, head, log })
}

/// Runs the demo against a fresh in-memory seeded node.
pub fn run_local_demo(seed: u64) -> Result<(Node, DemoOutcome), ApiError> {
    let mut node = Node::open(crate::node::NodeConfig::seeded(seed))?;
    let outcome = run_demo(&mut node, seed)?;
    Ok((node, outcome))
}

/// Convenience for fixtures that need the held credential of a participant.
pub fn held_credential(node: &Node, did: &Did) -> Option<VerifiableCredential> {
    node.held_credentials(did).ok()?.last().cloned()
}

/// A publication fixture with one targeted defect.
#[derive(Debug, Clone)]
pub struct PublicationMutation {
    pub name: &'static str,
    /// The report check this defect must falsify.
    pub target: &'static str,
    pub headers: Vec<BlockHeader>,
    pub document: Vec<u8>,
}

fn ledger_copy(node: &Node) -> Result<crate::registry::TrustRegistry, ApiError> {
    let ledger = crate::registry::Ledger::from_blocks(node.registry().ledger.blocks().to_vec()).map_err(NodeError::from)?;
    Ok(crate::registry::TrustRegistry { ledger, documents: crate::registry::DocumentStore::in_memory() })
}

/// Re-anchors edited metadata on a private copy of the ledger, as a
/// dishonest journal would, and returns the resulting headers and sidecar.
fn reanchor(
    mut registry: crate::registry::TrustRegistry,
    m: crate::metadata::PublicationMetadata,
) -> Result<(Vec<BlockHeader>, Vec<u8>), ApiError> {
    let doc = crate::metadata::publish(&mut registry, m).map_err(NodeError::from)?;
    Ok((registry.ledger.headers(), doc.to_bytes().0))
}

/// Five defects, one per reader-side check, built from a published demo:
/// a consent ref taken from another submission, a consent record with a
/// forged signature, a sidecar edited after anchoring, an author whose DID
/// registration ref points elsewhere, and a header that breaks the chain.
///
/// Appends one extra submission to `node` to obtain a foreign consent ref.
pub fn publication_mutations(node: &mut Node, outcome: &DemoOutcome) -> Result<Vec<PublicationMutation>, ApiError> {
    use crate::crypto::KeyPair;
    use crate::metadata::EntryRef;
    use crate::registry::{EntryKind, LedgerEntry};

    let author = outcome.participants[0].did.clone();
    let other = prepare_submission(node, tagged_hash("authcred/demo-manuscript/v1", &[b"other"]), &author, ContributionRole::Software, &[])?;
    let other_ref: EntryRef = Node::submit(node, other)?.receipt.ok_or_else(|| fail("submit returned no receipt".into()))?.into();

    let honest = outcome.publication.clone();
    let mut out = Vec::new();

    let mut m = honest.metadata.clone();
    m.authors[1].consent_ref = other_ref;
    let (headers, document) = reanchor(ledger_copy(node)?, m)?;
    out.push(PublicationMutation { name: "swapped consent ref", target: "every_consent_ref_verifies", headers, document });

    let mut registry = ledger_copy(node)?;
    let mut m = honest.metadata.clone();
    let forger = KeyPair::generate(Some(&[0xF0; 32])).expect("fixed seed length");
    let mut forged = m.authors[1].consent.clone();
    forged.signature = forger.sign(forged.signed_payload_digest.as_bytes());
    let now = registry.ledger.head().timestamp;
    let entry = LedgerEntry::new(EntryKind::ConsentRecord, m.id_hex(), forged.digest(), now);
    let receipt = registry.ledger.append_one(entry, now).map_err(NodeError::from)?;
    m.authors[1].consent = forged;
    m.authors[1].consent_ref = receipt.into();
    let (headers, document) = reanchor(registry, m)?;
    out.push(PublicationMutation { name: "forged consent signature", target: "consent_signatures_valid", headers, document });

    let mut doc = honest.clone();
    doc.metadata.published_at += 1;
    out.push(PublicationMutation {
        name: "unanchored metadata",
        target: "anchored",
        headers: node.headers(),
        document: doc.to_bytes().0,
    });

    let mut m = honest.metadata.clone();
    m.authors[2].did_registration_ref = m.authors[0].did_registration_ref.clone();
    let (headers, document) = reanchor(ledger_copy(node)?, m)?;
    out.push(PublicationMutation { name: "unresolvable author DID", target: "every_author_did_resolvable", headers, document });

    let mut headers = node.headers();
    headers[1].timestamp += 1;
    out.push(PublicationMutation { name: "broken chain", target: "chain_valid", headers, document: honest.to_bytes().0 });

    Ok(out)
}
