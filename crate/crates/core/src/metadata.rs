//! Publication metadata: built from an accepted submission, canonicalized,
//! anchored, and shipped as a sidecar document that any reader can check
//! against block headers alone.
//!
//! The anchor value is plain SHA-256 over the canonical JSON of
//! [`PublicationMetadata`], so it can be recomputed by any JSON implementation
//! that follows the canonical profile in [`crate::canonical`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::{hex16, to_canonical_bytes};
use crate::crypto::{hash, Digest};
use crate::identity::{registration_receipt, resolve_did, Did, DidDocument};
use crate::registry::{
    check_headers, BlockHeader, EntryKind, InclusionProof, LedgerEntry, LedgerReceipt, RegistryError, TrustRegistry,
};
use crate::workflow::{ConsentDecision, ConsentRecord, ContributionRole, Submission, WorkflowState};

#[derive(Debug, Error)]
pub enum MetadataError {
    #[error("submission is {0}, not Accepted")]
    NotAccepted(WorkflowState),
    #[error("no anchored consent record for {0}")]
    MissingConsentRef(Did),
    #[error("review attestation is not on the ledger")]
    MissingAttestationRef,
    #[error("conflict-of-interest outcome is not on the ledger")]
    MissingCoiRef,
    #[error("author {0} does not resolve")]
    UnresolvableAuthor(Did),
    #[error("metadata already anchored")]
    DuplicateAnchor,
    #[error("metadata document does not parse: {0}")]
    ParseFailure(String),
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

/// A ledger entry plus the Merkle path placing it in its block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryRef {
    pub block_index: u64,
    pub entry: LedgerEntry,
    pub proof: InclusionProof,
}

impl From<LedgerReceipt> for EntryRef {
    fn from(r: LedgerReceipt) -> EntryRef {
        EntryRef { block_index: r.block_index, entry: r.entry, proof: r.proof }
    }
}

impl EntryRef {
    /// Entry hashes to the proven leaf and the path folds to the Merkle root
    /// of the named header. Chain linkage is checked separately.
    pub fn verifies(&self, headers: &[BlockHeader]) -> bool {
        self.proof.block_index == self.block_index
            && self.proof.entry_digest == self.entry.digest()
            && headers
                .get(self.block_index as usize)
                .map(|h| h.index == self.block_index && self.proof.verify_against_root(&h.merkle_root))
                .unwrap_or(false)
    }

    fn anchors(&self, headers: &[BlockHeader], kind: EntryKind, key: &str, payload: &Digest) -> bool {
        self.entry.kind == kind && self.entry.key == key && self.entry.payload_digest == *payload && self.verifies(headers)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublishedAuthor {
    pub did: Did,
    pub role: ContributionRole,
    pub did_document: DidDocument,
    pub did_registration_ref: EntryRef,
    pub consent: ConsentRecord,
    pub consent_ref: EntryRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicationMetadata {
    #[serde(with = "hex16")]
    pub submission_id: [u8; 16],
    pub manuscript_digest: Digest,
    /// Corresponding author first, then co-authors in submission order.
    pub authors: Vec<PublishedAuthor>,
    pub review_attestation_refs: Vec<EntryRef>,
    pub coi_outcome_refs: Vec<EntryRef>,
    pub journal_did: Did,
    pub published_at: u64,
    pub ledger_head_at_publication: Digest,
}

/// UTF-8 canonical JSON.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalBytes(pub Vec<u8>);

impl CanonicalBytes {
    pub fn digest(&self) -> Digest {
        hash(&self.0)
    }
}

pub fn canonicalize(m: &PublicationMetadata) -> CanonicalBytes {
    CanonicalBytes(to_canonical_bytes(m).expect("metadata is canonicalizable"))
}

impl PublicationMetadata {
    pub fn id_hex(&self) -> String {
        hex::encode(self.submission_id)
    }

    /// The publication anchor value.
    pub fn digest(&self) -> Digest {
        canonicalize(self).digest()
    }
}

/// The sidecar distributed next to the article as `<id>.authcred.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicationDocument {
    pub metadata: PublicationMetadata,
    pub anchor: EntryRef,
}

impl PublicationDocument {
    pub fn file_name(&self) -> String {
        format!("{}.authcred.json", self.metadata.id_hex())
    }

    pub fn to_bytes(&self) -> CanonicalBytes {
        CanonicalBytes(to_canonical_bytes(self).expect("sidecar is canonicalizable"))
    }
}

pub(crate) fn sidecar_path(submission_id: &[u8; 16]) -> String {
    format!("publications/{}.authcred.json", hex::encode(submission_id))
}

fn find_ref(registry: &TrustRegistry, kind: EntryKind, key: &str, payload: &Digest) -> Option<EntryRef> {
    let (entry, block) = registry.ledger.query(kind, key).into_iter().find(|(e, _)| e.payload_digest == *payload)?;
    registry.ledger.receipt_for(block, &entry.digest()).ok().map(EntryRef::from)
}

pub fn build(
    submission: &Submission,
    registry: &TrustRegistry,
    journal_did: &Did,
    published_at: u64,
) -> Result<PublicationMetadata, MetadataError> {
    if submission.state != WorkflowState::Accepted {
        return Err(MetadataError::NotAccepted(submission.state));
    }
    let key = submission.id_hex();
    let mut authors = Vec::new();
    for author in submission.authors() {
        let missing = || MetadataError::MissingConsentRef(author.did.clone());
        let consent = submission.consent_of(&author.did).ok_or_else(missing)?;
        if consent.decision != ConsentDecision::Grant {
            return Err(missing());
        }
        let consent_ref = find_ref(registry, EntryKind::ConsentRecord, &key, &consent.digest()).ok_or_else(missing)?;
        let unresolvable = |_| MetadataError::UnresolvableAuthor(author.did.clone());
        let did_document = resolve_did(registry, &author.did).map_err(unresolvable)?;
        let did_registration_ref = registration_receipt(registry, &author.did).map_err(unresolvable)?.into();
        authors.push(PublishedAuthor {
            did: author.did.clone(),
            role: author.role,
            did_document,
            did_registration_ref,
            consent: consent.clone(),
            consent_ref,
        });
    }
    let review_attestation_refs = submission
        .review_attestations()
        .iter()
        .map(|a| find_ref(registry, EntryKind::ReviewAttestation, &key, &a.digest()).ok_or(MetadataError::MissingAttestationRef))
        .collect::<Result<Vec<_>, _>>()?;
    let coi_outcome_refs = submission
        .reviewers
        .iter()
        .filter_map(|r| r.coi_outcome.map(|o| (r.id_hex(), o.transcript_digest)))
        .map(|(k, d)| find_ref(registry, EntryKind::CoiOutcome, &k, &d).ok_or(MetadataError::MissingCoiRef))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PublicationMetadata {
        submission_id: submission.id,
        manuscript_digest: submission.manuscript_digest,
        authors,
        review_attestation_refs,
        coi_outcome_refs,
        journal_did: journal_did.clone(),
        published_at,
        ledger_head_at_publication: registry.ledger.head_hash(),
    })
}

/// Appends the `PublicationAnchor` entry keyed by the metadata digest.
pub fn anchor(registry: &mut TrustRegistry, m: &PublicationMetadata) -> Result<LedgerReceipt, MetadataError> {
    let digest = m.digest();
    let key = digest.to_hex();
    if !registry.ledger.query(EntryKind::PublicationAnchor, &key).is_empty() {
        return Err(MetadataError::DuplicateAnchor);
    }
    let entry = LedgerEntry::new(EntryKind::PublicationAnchor, key, digest, m.published_at);
    Ok(registry.ledger.append_one(entry, m.published_at)?)
}

/// Anchors `m`, stores its sidecar and returns it.
pub fn publish(registry: &mut TrustRegistry, m: PublicationMetadata) -> Result<PublicationDocument, MetadataError> {
    let receipt = anchor(registry, &m)?;
    let doc = PublicationDocument { metadata: m, anchor: receipt.into() };
    registry.documents.put(&sidecar_path(&doc.metadata.submission_id), doc.to_bytes().0)?;
    Ok(doc)
}

pub fn stored_sidecar<'a>(registry: &'a TrustRegistry, submission_id: &[u8; 16]) -> Option<&'a [u8]> {
    registry.documents.get(&sidecar_path(submission_id))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicationReport {
    pub anchored: bool,
    pub chain_valid: bool,
    pub every_consent_ref_verifies: bool,
    pub every_author_did_resolvable: bool,
    pub consent_signatures_valid: bool,
    /// Review attestation and COI outcome refs all verify.
    pub attestation_refs_verify: bool,
    pub passed: bool,
}

impl PublicationReport {
    /// The individual checks by name, in report order.
    pub fn checks(&self) -> [(&'static str, bool); 6] {
        [
            ("anchored", self.anchored),
            ("chain_valid", self.chain_valid),
            ("every_consent_ref_verifies", self.every_consent_ref_verifies),
            ("every_author_did_resolvable", self.every_author_did_resolvable),
            ("consent_signatures_valid", self.consent_signatures_valid),
            ("attestation_refs_verify", self.attestation_refs_verify),
        ]
    }
}

/// Reader-side verification from block headers and the sidecar bytes alone.
pub fn verify_publication(headers: &[BlockHeader], document: &[u8]) -> Result<PublicationReport, MetadataError> {
    let doc: PublicationDocument =
        serde_json::from_slice(document).map_err(|e| MetadataError::ParseFailure(e.to_string()))?;
    let m = &doc.metadata;
    let key = m.id_hex();

    let digest = m.digest();
    let anchored = doc.anchor.anchors(headers, EntryKind::PublicationAnchor, &digest.to_hex(), &digest);

    let chain_valid = check_headers(headers).is_ok()
        && headers.iter().any(|h| h.block_hash == m.ledger_head_at_publication);

    let every_consent_ref_verifies = !m.authors.is_empty()
        && m.authors.iter().all(|a| {
            a.consent.coauthor_did == a.did
                && a.consent.submission_id == m.submission_id
                && a.consent.role == a.role
                && a.consent.decision == ConsentDecision::Grant
                && a.consent_ref.anchors(headers, EntryKind::ConsentRecord, &key, &a.consent.digest())
        })
        && distinct(m.authors.iter().map(|a| a.consent_ref.entry.digest()));

    let every_author_did_resolvable = distinct(m.authors.iter().map(|a| a.did.clone()))
        && m.authors.iter().all(|a| {
            a.did_document.did == a.did
                && a.did_document.is_consistent()
                && a.did_registration_ref.anchors(headers, EntryKind::DidRegistration, &a.did.to_string(), &a.did_document.digest())
        });

    let consent_signatures_valid =
        m.authors.iter().all(|a| a.consent.verify_with(&a.did_document.verification_key, &m.manuscript_digest));

    let attestation_refs_verify = m
        .review_attestation_refs
        .iter()
        .all(|r| r.entry.kind == EntryKind::ReviewAttestation && r.entry.key == key && r.verifies(headers))
        && m.coi_outcome_refs.iter().all(|r| r.entry.kind == EntryKind::CoiOutcome && r.verifies(headers));

    let passed = anchored
        && chain_valid
        && every_consent_ref_verifies
        && every_author_did_resolvable
        && consent_signatures_valid
        && attestation_refs_verify;
    Ok(PublicationReport {
        anchored,
        chain_valid,
        every_consent_ref_verifies,
        every_author_did_resolvable,
        consent_signatures_valid,
        attestation_refs_verify,
        passed,
    })
}

fn distinct<T: Ord>(items: impl Iterator<Item = T>) -> bool {
    let v: Vec<T> = items.collect();
    let n = v.len();
    v.into_iter().collect::<std::collections::BTreeSet<_>>().len() == n
}
