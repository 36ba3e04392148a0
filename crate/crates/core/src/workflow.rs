//! Manuscript lifecycle: submission, per-author signed consent, editorial
//! alerts, reviewer assignment gated on a conflict-of-interest check, review
//! attestations and the editorial decision.
//!
//! Every operation validates first, then appends its ledger entry, then
//! mutates the submission. A rejected event therefore leaves both the ledger
//! and the submission untouched, with one exception: a consent arriving after
//! the deadline raises a `ConsentTimeout` alert before failing.
//!
//! # Consent payload
//!
//! External wallets sign consent as follows:
//!
//! ```text
//! payload   = canonical JSON {"decision": "grant"|"deny",
//!                             "manuscript_digest": base64(32 bytes),
//!                             "role": <contribution label>,
//!                             "submission_id": hex(16 bytes)}
//! digest    = SHA-256("authcred/consent/v1" ‖ payload)
//! signature = Ed25519(secret_key, digest)
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::{canonical_digest, hex16, to_canonical_bytes};
use crate::coi::{verify_transcript, CoiOutcome, CoiTranscript};
use crate::credentials::{verify_presentation, CredentialError, Presentation};
use crate::crypto::{hash, tagged_hash, Commitment, Digest, KeyPair, PublicKey, Signature};
use crate::identity::{resolve_did, Did};
use crate::registry::{EntryKind, LedgerEntry, LedgerReceipt, RegistryError, TrustRegistry};

pub const DEFAULT_CONSENT_DEADLINE_DAYS: u64 = 14;

const TAG_CONSENT: &str = "authcred/consent/v1";
const TAG_CONSENT_RECORD: &str = "authcred/consent-record/v1";
const TAG_SUBMIT_CHALLENGE: &str = "authcred/submit-challenge/v1";
const TAG_REVIEW_CHALLENGE: &str = "authcred/review-challenge/v1";
const TAG_ASSIGNMENT: &str = "authcred/assignment/v1";
const TAG_ATTESTATION: &str = "authcred/review-attestation/v1";
const TAG_EVENT: &str = "authcred/workflow-event/v1";

#[derive(Debug, Error)]
pub enum WorkflowError {
    #[error("author credential rejected: {0}")]
    InvalidAuthorCredential(String),
    #[error("co-author credential rejected: {0}")]
    InvalidCoauthorCredential(String),
    #[error("co-author {0} does not resolve")]
    UnresolvableCoauthor(Did),
    #[error("{0} is listed more than once")]
    DuplicateCoauthor(Did),
    #[error("{0} is not an author of this submission")]
    NotACoauthor(Did),
    #[error("consent record signature or payload does not verify")]
    BadConsentSignature,
    #[error("{0} already has an effective consent decision")]
    ConsentAlreadyRecorded(Did),
    #[error("operation not allowed in state {0:?}")]
    WrongState(WorkflowState),
    #[error("consent deadline has passed")]
    PastDeadline,
    #[error("no alert at index {0}")]
    AlertNotFound(usize),
    #[error("alert already resolved")]
    AlreadyResolved,
    #[error("reviewer {0} is an author of this submission")]
    ReviewerIsAuthor(Did),
    #[error("reviewer {0} is already assigned")]
    DuplicateReviewer(Did),
    #[error("reviewer {0} is not assigned")]
    UnknownReviewer(Did),
    #[error("reviewer presentation does not disclose an expertise claim")]
    MissingExpertiseClaim,
    #[error("reviewer credential rejected: {0}")]
    InvalidReviewerCredential(String),
    #[error("conflict-of-interest transcript does not verify")]
    TranscriptInvalid,
    #[error("reviewer conflict-of-interest status is not clear")]
    CoiNotClear,
    #[error("review already recorded")]
    ReviewAlreadyRecorded,
    #[error("no reviews recorded")]
    NoReviews,
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

impl WorkflowError {
    pub fn code(&self) -> &'static str {
        match self {
            WorkflowError::InvalidAuthorCredential(_) => "InvalidAuthorCredential",
            WorkflowError::InvalidCoauthorCredential(_) => "InvalidCoauthorCredential",
            WorkflowError::UnresolvableCoauthor(_) => "UnresolvableCoauthor",
            WorkflowError::DuplicateCoauthor(_) => "DuplicateCoauthor",
            WorkflowError::NotACoauthor(_) => "NotACoauthor",
            WorkflowError::BadConsentSignature => "BadConsentSignature",
            WorkflowError::ConsentAlreadyRecorded(_) => "ConsentAlreadyRecorded",
            WorkflowError::WrongState(_) => "WrongState",
            WorkflowError::PastDeadline => "PastDeadline",
            WorkflowError::AlertNotFound(_) => "AlertNotFound",
            WorkflowError::AlreadyResolved => "AlreadyResolved",
            WorkflowError::ReviewerIsAuthor(_) => "ReviewerIsAuthor",
            WorkflowError::DuplicateReviewer(_) => "DuplicateReviewer",
            WorkflowError::UnknownReviewer(_) => "UnknownReviewer",
            WorkflowError::MissingExpertiseClaim => "MissingExpertiseClaim",
            WorkflowError::InvalidReviewerCredential(_) => "InvalidReviewerCredential",
            WorkflowError::TranscriptInvalid => "TranscriptInvalid",
            WorkflowError::CoiNotClear => "CoiNotClear",
            WorkflowError::ReviewAlreadyRecorded => "ReviewAlreadyRecorded",
            WorkflowError::NoReviews => "NoReviews",
            WorkflowError::Registry(_) => "RegistryError",
        }
    }
}

macro_rules! labelled_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $label:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $label)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(&self) -> &'static str {
                match self { $($name::$variant => $label),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($label => Ok($name::$variant),)+
                    other => Err(format!("unknown {} {:?}", stringify!($name), other)),
                }
            }
        }
    };
}

labelled_enum!(
    /// CRediT-style contribution vocabulary.
    ContributionRole {
        Conceptualization => "conceptualization",
        DataCuration => "data-curation",
        FormalAnalysis => "formal-analysis",
        FundingAcquisition => "funding-acquisition",
        Investigation => "investigation",
        Methodology => "methodology",
        ProjectAdministration => "project-administration",
        Resources => "resources",
        Software => "software",
        Supervision => "supervision",
        Validation => "validation",
        Visualization => "visualization",
        WritingOriginalDraft => "writing-original-draft",
        WritingReviewEditing => "writing-review-editing",
    }
);

labelled_enum!(WorkflowState {
    AwaitingConsent => "AwaitingConsent",
    ConsentRejected => "ConsentRejected",
    ConsentComplete => "ConsentComplete",
    UnderReview => "UnderReview",
    Accepted => "Accepted",
    Rejected => "Rejected",
    Published => "Published",
});

impl WorkflowState {
    pub fn can_transition(self, to: WorkflowState) -> bool {
        use WorkflowState::*;
        matches!(
            (self, to),
            (AwaitingConsent, ConsentComplete)
                | (AwaitingConsent, ConsentRejected)
                | (ConsentComplete, UnderReview)
                | (UnderReview, Accepted)
                | (UnderReview, Rejected)
                | (Accepted, Published)
                | (ConsentRejected, AwaitingConsent)
        )
    }
}

labelled_enum!(ConsentDecision { Grant => "grant", Deny => "deny" });
labelled_enum!(AlertKind { ConsentDenied => "ConsentDenied", ConsentTimeout => "ConsentTimeout", CoiConflict => "CoiConflict" });
labelled_enum!(EditorialAction { RemoveCoauthor => "RemoveCoauthor", Reinstate => "Reinstate" });
labelled_enum!(CoiStatus { Pending => "Pending", Clear => "Clear", Conflict => "Conflict" });
labelled_enum!(Recommendation { Accept => "Accept", Revise => "Revise", Reject => "Reject" });
labelled_enum!(Decision { Accept => "Accept", Reject => "Reject" });

// ---------------------------------------------------------------------------
// Consent records
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ConsentPayload<'a> {
    #[serde(with = "hex16")]
    submission_id: [u8; 16],
    manuscript_digest: &'a Digest,
    role: ContributionRole,
    decision: ConsentDecision,
}

pub fn consent_payload(submission_id: [u8; 16], manuscript_digest: &Digest, role: ContributionRole, decision: ConsentDecision) -> Vec<u8> {
    to_canonical_bytes(&ConsentPayload { submission_id, manuscript_digest, role, decision }).expect("payload is canonicalizable")
}

pub fn consent_payload_digest(
    submission_id: [u8; 16],
    manuscript_digest: &Digest,
    role: ContributionRole,
    decision: ConsentDecision,
) -> Digest {
    tagged_hash(TAG_CONSENT, &[&consent_payload(submission_id, manuscript_digest, role, decision)])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsentRecord {
    #[serde(with = "hex16")]
    pub submission_id: [u8; 16],
    pub coauthor_did: Did,
    pub decision: ConsentDecision,
    pub role: ContributionRole,
    pub signed_payload_digest: Digest,
    pub signature: Signature,
    pub recorded_at: u64,
}

impl ConsentRecord {
    /// What a wallet produces when its holder decides.
    pub fn sign(
        keypair: &KeyPair,
        coauthor_did: Did,
        submission_id: [u8; 16],
        manuscript_digest: &Digest,
        role: ContributionRole,
        decision: ConsentDecision,
        recorded_at: u64,
    ) -> ConsentRecord {
        let digest = consent_payload_digest(submission_id, manuscript_digest, role, decision);
        ConsentRecord {
            submission_id,
            coauthor_did,
            decision,
            role,
            signed_payload_digest: digest,
            signature: keypair.sign(digest.as_bytes()),
            recorded_at,
        }
    }

    /// Payload digest recomputes for this manuscript and the signature
    /// verifies under `key`.
    pub fn verify_with(&self, key: &PublicKey, manuscript_digest: &Digest) -> bool {
        let expected = consent_payload_digest(self.submission_id, manuscript_digest, self.role, self.decision);
        expected == self.signed_payload_digest && key.verify(self.signed_payload_digest.as_bytes(), &self.signature)
    }

    /// Anchored value for this record.
    pub fn digest(&self) -> Digest {
        canonical_digest(TAG_CONSENT_RECORD, self).expect("record is canonicalizable")
    }
}

// ---------------------------------------------------------------------------
// Submission state
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Author {
    pub did: Did,
    pub role: ContributionRole,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alert {
    pub kind: AlertKind,
    pub subject: Did,
    pub raised_at: u64,
    pub resolved: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditorialEntry {
    pub alert_index: usize,
    pub action: EditorialAction,
    pub at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewAttestation {
    #[serde(with = "hex16")]
    pub submission_id: [u8; 16],
    pub reviewer_did_digest: Digest,
    pub review_digest: Digest,
    pub recommendation: Recommendation,
}

impl ReviewAttestation {
    pub fn digest(&self) -> Digest {
        canonical_digest(TAG_ATTESTATION, self).expect("attestation is canonicalizable")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewAssignment {
    #[serde(with = "hex16")]
    pub id: [u8; 16],
    #[serde(with = "hex16")]
    pub submission_id: [u8; 16],
    pub reviewer_did: Did,
    pub expertise_presentation_digest: Digest,
    pub coi_status: CoiStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coi_outcome: Option<CoiOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub review_digest: Option<Digest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recommendation: Option<Recommendation>,
}

impl ReviewAssignment {
    pub fn id_hex(&self) -> String {
        hex::encode(self.id)
    }
}

pub fn assignment_id(submission_id: [u8; 16], reviewer: &Did) -> [u8; 16] {
    let d = tagged_hash(TAG_ASSIGNMENT, &[&submission_id, reviewer.to_string().as_bytes()]);
    d.0[..16].try_into().expect("16 bytes")
}

/// Challenge an author's presentation must answer at submission.
pub fn submission_challenge(submission_id: [u8; 16], manuscript_digest: &Digest) -> [u8; 32] {
    tagged_hash(TAG_SUBMIT_CHALLENGE, &[&submission_id, manuscript_digest.as_bytes()]).0
}

/// Challenge a reviewer's expertise presentation must answer.
pub fn review_challenge(submission_id: [u8; 16], reviewer: &Did) -> [u8; 32] {
    tagged_hash(TAG_REVIEW_CHALLENGE, &[&submission_id, reviewer.to_string().as_bytes()]).0
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    #[serde(with = "hex16")]
    pub id: [u8; 16],
    pub manuscript_digest: Digest,
    pub corresponding_author: Author,
    pub coauthors: Vec<Author>,
    pub state: WorkflowState,
    pub created_at: u64,
    pub consent_deadline: u64,
    /// Effective consent records, at most one per author.
    pub consents: Vec<ConsentRecord>,
    pub alerts: Vec<Alert>,
    pub editorial_log: Vec<EditorialEntry>,
    /// Normalized affiliations disclosed by authors at submission.
    pub declared_affiliations: Vec<String>,
    pub reviewers: Vec<ReviewAssignment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<Decision>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoauthorEntry {
    pub did: Did,
    pub role: ContributionRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affiliation_presentation: Option<Presentation>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubmissionRequest {
    #[serde(with = "hex16")]
    pub id: [u8; 16],
    pub manuscript_digest: Digest,
    pub corresponding_author: Did,
    pub author_role: ContributionRole,
    /// Must answer [`submission_challenge`] and disclose `affiliation`.
    pub author_presentation: Presentation,
    /// The corresponding author's own signed Grant.
    pub author_consent: ConsentRecord,
    pub coauthors: Vec<CoauthorEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consent_deadline: Option<u64>,
}

#[derive(Serialize)]
struct WorkflowEvent<'a> {
    #[serde(with = "hex16")]
    submission_id: [u8; 16],
    from: WorkflowState,
    to: WorkflowState,
    reason: &'a str,
    at: u64,
}

fn event_entry(id: [u8; 16], from: WorkflowState, to: WorkflowState, reason: &str, at: u64) -> LedgerEntry {
    let digest = canonical_digest(TAG_EVENT, &WorkflowEvent { submission_id: id, from, to, reason, at })
        .expect("event is canonicalizable");
    LedgerEntry::new(EntryKind::WorkflowEvent, hex::encode(id), digest, at)
}

fn affiliation_of(
    registry: &TrustRegistry,
    p: &Presentation,
    subject: &Did,
    challenge: &[u8; 32],
    now: u64,
) -> Result<String, String> {
    if p.subject_did != *subject {
        return Err(format!("presentation subject {} is not {}", p.subject_did, subject));
    }
    let claims = verify_presentation(registry, p, challenge, now).map_err(|e: CredentialError| e.to_string())?;
    let affiliation = claims.get("affiliation").ok_or_else(|| "affiliation is not disclosed".to_string())?;
    crate::coi::normalize(affiliation).map_err(|e| e.to_string())
}

fn resolve_key(registry: &TrustRegistry, did: &Did) -> Option<PublicKey> {
    resolve_did(registry, did).ok().map(|d| d.verification_key)
}

/// Validates a submission request and anchors the corresponding author's
/// consent. With no co-authors the submission is immediately ConsentComplete.
pub fn submit(registry: &mut TrustRegistry, request: SubmissionRequest, now: u64, deadline_days: u64) -> Result<(Submission, LedgerReceipt), WorkflowError> {
    let challenge = submission_challenge(request.id, &request.manuscript_digest);
    let author_affiliation =
        affiliation_of(registry, &request.author_presentation, &request.corresponding_author, &challenge, now)
            .map_err(WorkflowError::InvalidAuthorCredential)?;

    let mut seen = std::collections::BTreeSet::from([request.corresponding_author.clone()]);
    let mut affiliations = vec![author_affiliation];
    for c in &request.coauthors {
        if !seen.insert(c.did.clone()) {
            return Err(WorkflowError::DuplicateCoauthor(c.did.clone()));
        }
        if resolve_did(registry, &c.did).is_err() {
            return Err(WorkflowError::UnresolvableCoauthor(c.did.clone()));
        }
        if let Some(p) = &c.affiliation_presentation {
            let a = affiliation_of(registry, p, &c.did, &challenge, now).map_err(WorkflowError::InvalidCoauthorCredential)?;
            if !affiliations.contains(&a) {
                affiliations.push(a);
            }
        }
    }

    let consent = &request.author_consent;
    let author_key = resolve_key(registry, &request.corresponding_author)
        .ok_or_else(|| WorkflowError::InvalidAuthorCredential("corresponding author does not resolve".into()))?;
    if consent.coauthor_did != request.corresponding_author
        || consent.submission_id != request.id
        || consent.decision != ConsentDecision::Grant
        || consent.role != request.author_role
        || !consent.verify_with(&author_key, &request.manuscript_digest)
    {
        return Err(WorkflowError::BadConsentSignature);
    }

    let entry = LedgerEntry::new(EntryKind::ConsentRecord, hex::encode(request.id), consent.digest(), now);
    let receipt = registry.ledger.append_one(entry, now)?;

    let state = if request.coauthors.is_empty() { WorkflowState::ConsentComplete } else { WorkflowState::AwaitingConsent };
    let submission = Submission {
        id: request.id,
        manuscript_digest: request.manuscript_digest,
        corresponding_author: Author { did: request.corresponding_author, role: request.author_role },
        coauthors: request.coauthors.into_iter().map(|c| Author { did: c.did, role: c.role }).collect(),
        state,
        created_at: now,
        consent_deadline: request.consent_deadline.unwrap_or(now + deadline_days * 86_400),
        consents: vec![request.author_consent],
        alerts: Vec::new(),
        editorial_log: Vec::new(),
        declared_affiliations: affiliations,
        reviewers: Vec::new(),
        decision: None,
    };
    Ok((submission, receipt))
}

impl Submission {
    pub fn id_hex(&self) -> String {
        hex::encode(self.id)
    }

    /// Corresponding author first, then co-authors in listed order.
    pub fn authors(&self) -> impl Iterator<Item = &Author> {
        std::iter::once(&self.corresponding_author).chain(self.coauthors.iter())
    }

    pub fn is_author(&self, did: &Did) -> bool {
        self.authors().any(|a| a.did == *did)
    }

    pub fn consent_of(&self, did: &Did) -> Option<&ConsentRecord> {
        self.consents.iter().find(|c| c.coauthor_did == *did)
    }

    /// Co-authors with no effective decision yet.
    pub fn pending_coauthors(&self) -> Vec<&Did> {
        self.coauthors.iter().filter(|a| self.consent_of(&a.did).is_none()).map(|a| &a.did).collect()
    }

    pub fn all_granted(&self) -> bool {
        self.authors()
            .all(|a| self.consent_of(&a.did).map(|c| c.decision == ConsentDecision::Grant).unwrap_or(false))
    }

    pub fn reviewer(&self, did: &Did) -> Option<&ReviewAssignment> {
        self.reviewers.iter().find(|r| r.reviewer_did == *did)
    }

    pub fn assignment_by_id(&self, id: &[u8; 16]) -> Option<&ReviewAssignment> {
        self.reviewers.iter().find(|r| r.id == *id)
    }

    fn require_state(&self, allowed: &[WorkflowState]) -> Result<(), WorkflowError> {
        if allowed.contains(&self.state) {
            Ok(())
        } else {
            Err(WorkflowError::WrongState(self.state))
        }
    }

    fn raise(&mut self, kind: AlertKind, subject: Did, at: u64) {
        self.alerts.push(Alert { kind, subject, raised_at: at, resolved: false });
    }

    fn has_open_alert(&self, kind: AlertKind, subject: &Did) -> bool {
        self.alerts.iter().any(|a| a.kind == kind && a.subject == *subject && !a.resolved)
    }

    /// Raises a ConsentTimeout alert for each pending co-author once the
    /// deadline has passed. Returns how many were raised.
    pub fn check_deadline(&mut self, now: u64) -> usize {
        if self.state != WorkflowState::AwaitingConsent || now <= self.consent_deadline {
            return 0;
        }
        let late: Vec<Did> = self
            .pending_coauthors()
            .into_iter()
            .filter(|d| !self.has_open_alert(AlertKind::ConsentTimeout, d))
            .cloned()
            .collect();
        for d in &late {
            self.raise(AlertKind::ConsentTimeout, d.clone(), now);
        }
        late.len()
    }

    pub fn record_consent(&mut self, registry: &mut TrustRegistry, record: ConsentRecord, now: u64) -> Result<LedgerReceipt, WorkflowError> {
        self.require_state(&[WorkflowState::AwaitingConsent])?;
        let author = self
            .coauthors
            .iter()
            .find(|a| a.did == record.coauthor_did)
            .ok_or_else(|| WorkflowError::NotACoauthor(record.coauthor_did.clone()))?;
        if self.consent_of(&record.coauthor_did).is_some() {
            return Err(WorkflowError::ConsentAlreadyRecorded(record.coauthor_did.clone()));
        }
        let key = resolve_key(registry, &record.coauthor_did).ok_or(WorkflowError::BadConsentSignature)?;
        if record.submission_id != self.id || record.role != author.role || !record.verify_with(&key, &self.manuscript_digest) {
            return Err(WorkflowError::BadConsentSignature);
        }
        if now > self.consent_deadline {
            if !self.has_open_alert(AlertKind::ConsentTimeout, &record.coauthor_did) {
                self.raise(AlertKind::ConsentTimeout, record.coauthor_did.clone(), now);
            }
            return Err(WorkflowError::PastDeadline);
        }

        let entry = LedgerEntry::new(EntryKind::ConsentRecord, self.id_hex(), record.digest(), now);
        let receipt = registry.ledger.append_one(entry, now)?;
        let decision = record.decision;
        let did = record.coauthor_did.clone();
        self.consents.push(record);
        match decision {
            ConsentDecision::Deny => {
                self.state = WorkflowState::ConsentRejected;
                self.raise(AlertKind::ConsentDenied, did, now);
            }
            ConsentDecision::Grant => {
                if self.pending_coauthors().is_empty() && self.all_granted() {
                    self.state = WorkflowState::ConsentComplete;
                }
            }
        }
        Ok(receipt)
    }

    /// Where the consent phase stands once the current decisions are counted.
    fn consent_phase_state(&self) -> WorkflowState {
        let any_deny = self.consents.iter().any(|c| c.decision == ConsentDecision::Deny);
        if any_deny {
            WorkflowState::ConsentRejected
        } else if self.pending_coauthors().is_empty() {
            WorkflowState::ConsentComplete
        } else {
            WorkflowState::AwaitingConsent
        }
    }

    pub fn resolve_alert(
        &mut self,
        registry: &mut TrustRegistry,
        alert_index: usize,
        action: EditorialAction,
        now: u64,
    ) -> Result<LedgerReceipt, WorkflowError> {
        let alert = self.alerts.get(alert_index).ok_or(WorkflowError::AlertNotFound(alert_index))?.clone();
        if alert.resolved {
            return Err(WorkflowError::AlreadyResolved);
        }
        let mut next = self.clone();
        match alert.kind {
            AlertKind::ConsentDenied | AlertKind::ConsentTimeout => {
                next.require_state(&[WorkflowState::AwaitingConsent, WorkflowState::ConsentRejected])?;
                match action {
                    EditorialAction::RemoveCoauthor => {
                        if !next.coauthors.iter().any(|a| a.did == alert.subject) {
                            return Err(WorkflowError::NotACoauthor(alert.subject.clone()));
                        }
                        next.coauthors.retain(|a| a.did != alert.subject);
                        next.consents.retain(|c| c.coauthor_did != alert.subject);
                        for a in next.alerts.iter_mut().filter(|a| a.subject == alert.subject && a.kind != AlertKind::CoiConflict) {
                            a.resolved = true;
                        }
                    }
                    EditorialAction::Reinstate => {
                        if alert.kind == AlertKind::ConsentDenied {
                            // the denier may decide again
                            next.consents.retain(|c| c.coauthor_did != alert.subject);
                        } else {
                            next.consent_deadline = now + (self.consent_deadline - self.created_at).max(86_400);
                        }
                    }
                }
            }
            AlertKind::CoiConflict => {}
        }
        next.alerts[alert_index].resolved = true;
        next.editorial_log.push(EditorialEntry { alert_index, action, at: now });

        let from = self.state;
        if matches!(from, WorkflowState::AwaitingConsent | WorkflowState::ConsentRejected)
            && alert.kind != AlertKind::CoiConflict
        {
            let target = next.consent_phase_state();
            // ConsentRejected may only leave through AwaitingConsent.
            next.state = match (from, target) {
                (WorkflowState::ConsentRejected, WorkflowState::ConsentComplete) => {
                    debug_assert!(WorkflowState::ConsentRejected.can_transition(WorkflowState::AwaitingConsent));
                    WorkflowState::ConsentComplete
                }
                (_, t) => t,
            };
            if next.state == WorkflowState::ConsentComplete && !next.all_granted() {
                next.state = WorkflowState::AwaitingConsent;
            }
        }
        let reason = format!("resolve {} {}", alert.kind, action);
        let entry = event_entry(self.id, from, next.state, &reason, now);
        let receipt = registry.ledger.append_one(entry, now)?;
        *self = next;
        Ok(receipt)
    }

    pub fn assign_reviewer(
        &mut self,
        registry: &mut TrustRegistry,
        reviewer_did: &Did,
        expertise_presentation: &Presentation,
        now: u64,
    ) -> Result<(ReviewAssignment, Option<LedgerReceipt>), WorkflowError> {
        self.require_state(&[WorkflowState::ConsentComplete, WorkflowState::UnderReview])?;
        if !self.all_granted() {
            return Err(WorkflowError::WrongState(self.state));
        }
        if self.is_author(reviewer_did) {
            return Err(WorkflowError::ReviewerIsAuthor(reviewer_did.clone()));
        }
        if self.reviewer(reviewer_did).is_some() {
            return Err(WorkflowError::DuplicateReviewer(reviewer_did.clone()));
        }
        if expertise_presentation.subject_did != *reviewer_did {
            return Err(WorkflowError::InvalidReviewerCredential("presentation subject is not the reviewer".into()));
        }
        let challenge = review_challenge(self.id, reviewer_did);
        let claims = verify_presentation(registry, expertise_presentation, &challenge, now)
            .map_err(|e| WorkflowError::InvalidReviewerCredential(e.to_string()))?;
        if !claims.contains_key("expertise") {
            return Err(WorkflowError::MissingExpertiseClaim);
        }
        let assignment = ReviewAssignment {
            id: assignment_id(self.id, reviewer_did),
            submission_id: self.id,
            reviewer_did: reviewer_did.clone(),
            expertise_presentation_digest: expertise_presentation.digest(),
            coi_status: CoiStatus::Pending,
            coi_outcome: None,
            review_digest: None,
            recommendation: None,
        };
        let receipt = if self.state == WorkflowState::ConsentComplete {
            let entry = event_entry(self.id, self.state, WorkflowState::UnderReview, "first reviewer assigned", now);
            let r = registry.ledger.append_one(entry, now)?;
            self.state = WorkflowState::UnderReview;
            Some(r)
        } else {
            None
        };
        self.reviewers.push(assignment.clone());
        Ok((assignment, receipt))
    }

    pub fn record_coi_outcome(
        &mut self,
        registry: &mut TrustRegistry,
        reviewer_did: &Did,
        transcript: &CoiTranscript,
        journal_secret_commitment: &Commitment,
        now: u64,
    ) -> Result<LedgerReceipt, WorkflowError> {
        self.require_state(&[WorkflowState::UnderReview])?;
        let pos = self
            .reviewers
            .iter()
            .position(|r| r.reviewer_did == *reviewer_did)
            .ok_or_else(|| WorkflowError::UnknownReviewer(reviewer_did.clone()))?;
        if self.reviewers[pos].coi_status != CoiStatus::Pending {
            return Err(WorkflowError::WrongState(self.state));
        }
        if !verify_transcript(transcript, journal_secret_commitment).unwrap_or(false) {
            return Err(WorkflowError::TranscriptInvalid);
        }
        let outcome = transcript.outcome;
        let key = self.reviewers[pos].id_hex();
        let entry = LedgerEntry::new(EntryKind::CoiOutcome, key, outcome.transcript_digest, now);
        let receipt = registry.ledger.append_one(entry, now)?;
        let assignment = &mut self.reviewers[pos];
        assignment.coi_outcome = Some(outcome);
        assignment.coi_status = if outcome.clear { CoiStatus::Clear } else { CoiStatus::Conflict };
        if !outcome.clear {
            self.raise(AlertKind::CoiConflict, reviewer_did.clone(), now);
        }
        Ok(receipt)
    }

    pub fn record_review(
        &mut self,
        registry: &mut TrustRegistry,
        reviewer_did: &Did,
        review_digest: Digest,
        recommendation: Recommendation,
        now: u64,
    ) -> Result<LedgerReceipt, WorkflowError> {
        self.require_state(&[WorkflowState::UnderReview])?;
        let pos = self
            .reviewers
            .iter()
            .position(|r| r.reviewer_did == *reviewer_did)
            .ok_or_else(|| WorkflowError::UnknownReviewer(reviewer_did.clone()))?;
        if self.reviewers[pos].coi_status != CoiStatus::Clear {
            return Err(WorkflowError::CoiNotClear);
        }
        if self.reviewers[pos].review_digest.is_some() {
            return Err(WorkflowError::ReviewAlreadyRecorded);
        }
        let attestation = ReviewAttestation {
            submission_id: self.id,
            reviewer_did_digest: hash(reviewer_did.to_string().as_bytes()),
            review_digest,
            recommendation,
        };
        let entry = LedgerEntry::new(EntryKind::ReviewAttestation, self.id_hex(), attestation.digest(), now);
        let receipt = registry.ledger.append_one(entry, now)?;
        self.reviewers[pos].review_digest = Some(review_digest);
        self.reviewers[pos].recommendation = Some(recommendation);
        Ok(receipt)
    }

    pub fn review_attestations(&self) -> Vec<ReviewAttestation> {
        self.reviewers
            .iter()
            .filter_map(|r| {
                Some(ReviewAttestation {
                    submission_id: self.id,
                    reviewer_did_digest: hash(r.reviewer_did.to_string().as_bytes()),
                    review_digest: r.review_digest?,
                    recommendation: r.recommendation?,
                })
            })
            .collect()
    }

    pub fn decide(&mut self, registry: &mut TrustRegistry, decision: Decision, now: u64) -> Result<LedgerReceipt, WorkflowError> {
        self.require_state(&[WorkflowState::UnderReview])?;
        if self.reviewers.iter().all(|r| r.review_digest.is_none()) {
            return Err(WorkflowError::NoReviews);
        }
        let to = match decision {
            Decision::Accept => WorkflowState::Accepted,
            Decision::Reject => WorkflowState::Rejected,
        };
        let receipt = registry.ledger.append_one(event_entry(self.id, self.state, to, decision.as_str(), now), now)?;
        self.state = to;
        self.decision = Some(decision);
        Ok(receipt)
    }

    /// Accepted → Published, once the publication anchor is on the ledger.
    pub fn mark_published(&mut self) -> Result<(), WorkflowError> {
        self.require_state(&[WorkflowState::Accepted])?;
        self.state = WorkflowState::Published;
        Ok(())
    }
}
