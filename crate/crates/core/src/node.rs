//! One trust registry with the issuer, journal, wallet and reader roles on
//! top. The HTTP service and the CLI both drive this type, so a scenario run
//! over HTTP and one run in process append identical ledger entries.
//!
//! With a seed the node is fully deterministic: key material and salts come
//! from a seeded ChaCha20 stream and timestamps from a logical clock that
//! advances by one second per write.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::hex16;
use crate::coi::{run_dh_session, CoiError, CoiTranscript, CoiVariant, ConflictSet, SaltRegistry};
use crate::credentials::{
    anchor_credential, issue_credential, verify_credential, CredentialError, Presentation, Validity, VerifiableCredential,
    VerificationReport, DEFAULT_VALIDITY_DAYS,
};
use crate::crypto::{tagged_hash, Digest};
use crate::identity::{register_did, resolve_did, Did, DidDocument, IdentityError};
use crate::metadata::{self, MetadataError, PublicationDocument, PublicationReport};
use crate::registry::{verify_chain_bytes, BlockHeader, ChainReport, LedgerBlock, LedgerReceipt, RegistryError, TrustRegistry};
use crate::wallet::{WalletError, WalletStore, DEFAULT_KDF_ROUNDS};
use crate::workflow::{
    review_challenge, submission_challenge, ConsentDecision, ConsentRecord, ContributionRole, Decision, EditorialAction,
    Recommendation, ReviewAssignment, Submission, SubmissionRequest, WorkflowError, WorkflowState,
    DEFAULT_CONSENT_DEADLINE_DAYS,
};

/// First logical timestamp of a seeded node.
pub const LOGICAL_EPOCH: u64 = 1_700_000_000;

const JOURNAL_DID_PATH: &str = "node/journal-did";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roles {
    pub issuer: bool,
    pub journal: bool,
    pub wallet: bool,
    pub reader: bool,
}

impl Default for Roles {
    fn default() -> Self {
        Roles { issuer: true, journal: true, wallet: true, reader: true }
    }
}

impl Roles {
    pub fn any(&self) -> bool {
        self.issuer || self.journal || self.wallet || self.reader
    }
}

#[derive(Debug, Clone)]
pub struct NodeConfig {
    /// `None` keeps everything in memory.
    pub data_dir: Option<PathBuf>,
    pub roles: Roles,
    pub consent_deadline_days: u64,
    pub credential_validity_days: u64,
    pub coi_variant: CoiVariant,
    pub seed: Option<u64>,
    pub wallet_passphrase: String,
    pub kdf_rounds: u32,
}

impl Default for NodeConfig {
    fn default() -> Self {
        NodeConfig {
            data_dir: None,
            roles: Roles::default(),
            consent_deadline_days: DEFAULT_CONSENT_DEADLINE_DAYS,
            credential_validity_days: DEFAULT_VALIDITY_DAYS,
            coi_variant: CoiVariant::DhBlinded,
            seed: None,
            wallet_passphrase: "authcred".to_string(),
            kdf_rounds: DEFAULT_KDF_ROUNDS,
        }
    }
}

impl NodeConfig {
    pub fn seeded(seed: u64) -> Self {
        NodeConfig { seed: Some(seed), ..NodeConfig::default() }
    }

    pub fn validate(&self) -> Result<(), NodeError> {
        if !self.roles.any() {
            return Err(NodeError::InvalidConfig("at least one role must be enabled".into()));
        }
        if self.consent_deadline_days == 0 || self.credential_validity_days == 0 {
            return Err(NodeError::InvalidConfig("deadlines must be positive".into()));
        }
        if let Some(dir) = &self.data_dir {
            std::fs::create_dir_all(dir).map_err(|e| NodeError::InvalidConfig(format!("{}: {e}", dir.display())))?;
            let probe = dir.join(".write-probe");
            std::fs::write(&probe, b"")
                .and_then(|_| std::fs::remove_file(&probe))
                .map_err(|e| NodeError::InvalidConfig(format!("{} is not writable: {e}", dir.display())))?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum NodeError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("the {0} role is disabled on this node")]
    RoleDisabled(&'static str),
    #[error("ledger failed verification at block {index}: {reason}")]
    CorruptLedgerAtStartup { index: u64, reason: String },
    #[error("{0} not found")]
    NotFound(String),
    #[error("{0}")]
    BadRequest(String),
    #[error(transparent)]
    Identity(#[from] IdentityError),
    #[error(transparent)]
    Credential(#[from] CredentialError),
    #[error(transparent)]
    Workflow(#[from] WorkflowError),
    #[error(transparent)]
    Metadata(#[from] MetadataError),
    #[error(transparent)]
    Coi(#[from] CoiError),
    #[error(transparent)]
    Wallet(#[from] WalletError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

/// Leading identifier of a `Debug` rendering, i.e. the variant name.
fn variant_name<T: std::fmt::Debug>(value: &T) -> String {
    format!("{value:?}").chars().take_while(|c| c.is_ascii_alphanumeric() || *c == '_').collect()
}

impl NodeError {
    /// Machine-readable error code: the innermost variant name.
    pub fn code(&self) -> String {
        match self {
            NodeError::Identity(IdentityError::Registry(e))
            | NodeError::Credential(CredentialError::Registry(e))
            | NodeError::Metadata(MetadataError::Registry(e))
            | NodeError::Registry(e) => variant_name(e),
            NodeError::Workflow(e) => e.code().to_string(),
            NodeError::Identity(e) => variant_name(e),
            NodeError::Credential(e) => variant_name(e),
            NodeError::Metadata(e) => variant_name(e),
            NodeError::Coi(e) => variant_name(e),
            NodeError::Wallet(WalletError::Credential(e)) => variant_name(e),
            NodeError::Wallet(e) => variant_name(e),
            other => variant_name(other),
        }
    }

    /// HTTP status class for this error.
    pub fn status(&self) -> u16 {
        let code = self.code();
        match code.as_str() {
            "NotFound" | "UnknownDid" | "AlertNotFound" | "UnknownReviewer" | "EntryNotFound" => 404,
            "RoleDisabled" => 403,
            "BadConsentSignature" | "InvalidSignature" | "InvalidHolderSignature" | "TranscriptInvalid"
            | "ChallengeMismatch" | "CommitmentOpenFailure" => 422,
            "DuplicateDid" | "DuplicateAnchor" | "DuplicateCoauthor" | "DuplicateReviewer" | "ConsentAlreadyRecorded"
            | "ReviewAlreadyRecorded" | "AlreadyResolved" | "WrongState" | "NotAccepted" | "SaltReuse"
            | "UniquenessViolation" | "PastDeadline" | "CoiNotClear" => 409,
            "CorruptLedgerAtStartup" | "Io" | "Corrupt" | "InvalidConfig" => 500,
            _ => 400,
        }
    }
}

pub fn parse_id(text: &str) -> Result<[u8; 16], NodeError> {
    let mut out = [0u8; 16];
    hex::decode_to_slice(text, &mut out).map_err(|_| NodeError::BadRequest(format!("{text:?} is not a 32-digit hex id")))?;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Request and response bodies
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityCreated {
    pub did: Did,
    pub document: DidDocument,
    pub receipt: LedgerReceipt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimInput {
    pub name: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueRequest {
    pub issuer_did: Did,
    pub subject_did: Did,
    pub claims: Vec<ClaimInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validity_days: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssuedCredential {
    pub credential: VerifiableCredential,
    pub receipt: LedgerReceipt,
    /// Whether the subject's key lives in this node's wallet and the
    /// credential was stored there.
    pub delivered: bool,
}

/// Which challenge a presentation answers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChallengeSpec {
    Raw {
        challenge: Digest,
    },
    Submission {
        #[serde(with = "hex16")]
        submission_id: [u8; 16],
        manuscript_digest: Digest,
    },
    Review {
        #[serde(with = "hex16")]
        submission_id: [u8; 16],
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresentRequest {
    pub disclose: Vec<String>,
    pub challenge: ChallengeSpec,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignConsentRequest {
    #[serde(with = "hex16")]
    pub submission_id: [u8; 16],
    pub decision: ConsentDecision,
    /// Needed only before the submission exists (the corresponding author's
    /// own consent); otherwise taken from the submission.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manuscript_digest: Option<Digest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<ContributionRole>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssignRequest {
    pub reviewer_did: Did,
    pub expertise_presentation: Presentation,
    /// The reviewer's private conflict set: affiliations, collaborator DIDs.
    pub conflict_set: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentCreated {
    pub assignment: ReviewAssignment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receipt: Option<LedgerReceipt>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoiRun {
    pub assignment: ReviewAssignment,
    pub transcript: CoiTranscript,
    pub receipt: LedgerReceipt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewRequest {
    pub reviewer_did: Did,
    pub review_digest: Digest,
    pub recommendation: Recommendation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRequest {
    pub decision: Decision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolveRequest {
    pub action: EditorialAction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmissionUpdate {
    pub submission: Submission,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receipt: Option<LedgerReceipt>,
}

// ---------------------------------------------------------------------------
// The node
// ---------------------------------------------------------------------------

pub struct Node {
    config: NodeConfig,
    registry: TrustRegistry,
    wallet: WalletStore,
    submissions: BTreeMap<[u8; 16], Submission>,
    reviewer_sets: BTreeMap<[u8; 16], Vec<String>>,
    salts: SaltRegistry,
    rng: ChaCha20Rng,
    logical_clock: Option<u64>,
    journal_did: Option<Did>,
}

impl std::fmt::Debug for Node {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Node").field("head", &self.registry.ledger.head_hash()).finish_non_exhaustive()
    }
}

fn submission_path(id: &[u8; 16]) -> String {
    format!("submissions/{}.json", hex::encode(id))
}

fn reviewer_set_path(assignment: &[u8; 16]) -> String {
    format!("private/reviewer-sets/{}.json", hex::encode(assignment))
}

fn system_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(1)
}

impl Node {
    /// Opens (or initializes) a node. An existing ledger must verify.
    pub fn open(config: NodeConfig) -> Result<Node, NodeError> {
        config.validate()?;
        let mut rng = match config.seed {
            Some(seed) => ChaCha20Rng::seed_from_u64(seed),
            None => ChaCha20Rng::from_entropy(),
        };
        let genesis_ts = if config.seed.is_some() { LOGICAL_EPOCH } else { system_now() };
        let registry = match &config.data_dir {
            Some(dir) => TrustRegistry::open(&dir.join("registry"), genesis_ts).map_err(|e| match e {
                RegistryError::Corrupt { index, reason } => NodeError::CorruptLedgerAtStartup { index, reason },
                other => NodeError::Registry(other),
            })?,
            None => TrustRegistry::in_memory(genesis_ts),
        };
        if let Some(seed) = config.seed {
            // a reopened seeded node must not replay the key stream it already used
            if !registry.ledger.is_empty() {
                let mix = tagged_hash("authcred/node-rng/v1", &[&seed.to_be_bytes(), registry.ledger.head_hash().as_bytes()]);
                rng = ChaCha20Rng::from_seed(mix.0);
            }
        }
        let wallet = match &config.data_dir {
            Some(dir) => WalletStore::open(&dir.join("wallet.json"), &config.wallet_passphrase, config.kdf_rounds, &mut rng)?,
            None => WalletStore::in_memory(),
        };
        let logical_clock = config.seed.map(|_| registry.ledger.head().timestamp.max(LOGICAL_EPOCH));

        let mut node = Node {
            config,
            registry,
            wallet,
            submissions: BTreeMap::new(),
            reviewer_sets: BTreeMap::new(),
            salts: SaltRegistry::new(),
            rng,
            logical_clock,
            journal_did: None,
        };
        node.load_state()?;
        if node.config.roles.journal && node.journal_did.is_none() {
            let created = node.create_identity_unchecked()?;
            node.registry.documents.put(JOURNAL_DID_PATH, created.did.to_string().into_bytes())?;
            node.journal_did = Some(created.did);
        }
        Ok(node)
    }

    fn load_state(&mut self) -> Result<(), NodeError> {
        let docs = &self.registry.documents;
        let corrupt = |path: &str| NodeError::Registry(RegistryError::Corrupt { index: 0, reason: format!("unreadable {path}") });
        for path in docs.paths_with_prefix("submissions/") {
            let sub: Submission = serde_json::from_slice(docs.get(path).unwrap_or_default()).map_err(|_| corrupt(path))?;
            self.submissions.insert(sub.id, sub);
        }
        for path in docs.paths_with_prefix("private/reviewer-sets/") {
            let name = path.trim_start_matches("private/reviewer-sets/").trim_end_matches(".json");
            let id = parse_id(name).map_err(|_| corrupt(path))?;
            let set: Vec<String> = serde_json::from_slice(docs.get(path).unwrap_or_default()).map_err(|_| corrupt(path))?;
            self.reviewer_sets.insert(id, set);
        }
        for path in docs.paths_with_prefix("coi/") {
            let t: CoiTranscript = serde_json::from_slice(docs.get(path).unwrap_or_default()).map_err(|_| corrupt(path))?;
            if let (CoiVariant::SaltedHash, Some(o)) = (t.variant, &t.journal_opening) {
                if let Ok(salt) = o.value.as_slice().try_into() {
                    self.salts.remember(salt);
                }
            }
        }
        if let Some(bytes) = docs.get(JOURNAL_DID_PATH) {
            let text = std::str::from_utf8(bytes).map_err(|_| corrupt(JOURNAL_DID_PATH))?;
            self.journal_did = Some(text.parse()?);
        }
        Ok(())
    }

    pub fn config(&self) -> &NodeConfig {
        &self.config
    }

    pub fn registry(&self) -> &TrustRegistry {
        &self.registry
    }

    pub fn wallet(&self) -> &WalletStore {
        &self.wallet
    }

    pub fn journal_did(&self) -> Option<&Did> {
        self.journal_did.as_ref()
    }

    pub fn data_dir(&self) -> Option<&Path> {
        self.config.data_dir.as_deref()
    }

    /// Current time without advancing the logical clock.
    pub fn peek_now(&self) -> u64 {
        self.logical_clock.unwrap_or_else(system_now)
    }

    /// Timestamp for a write; advances the logical clock.
    fn tick(&mut self) -> u64 {
        match &mut self.logical_clock {
            Some(t) => {
                *t += 1;
                *t
            }
            None => system_now(),
        }
    }

    fn require(&self, enabled: bool, role: &'static str) -> Result<(), NodeError> {
        if enabled {
            Ok(())
        } else {
            Err(NodeError::RoleDisabled(role))
        }
    }

    // -- identities -----------------------------------------------------------

    fn create_identity_unchecked(&mut self) -> Result<IdentityCreated, NodeError> {
        let now = self.tick();
        let document = self.wallet.create_identity(now, &mut self.rng)?;
        let receipt = register_did(&mut self.registry, &document, now)?;
        Ok(IdentityCreated { did: document.did.clone(), document, receipt })
    }

    /// Wallet generates a key pair; its DID is registered.
    pub fn create_identity(&mut self) -> Result<IdentityCreated, NodeError> {
        self.require(self.config.roles.wallet, "wallet")?;
        self.create_identity_unchecked()
    }

    pub fn register_did(&mut self, document: &DidDocument) -> Result<LedgerReceipt, NodeError> {
        let now = self.tick();
        Ok(register_did(&mut self.registry, document, now)?)
    }

    pub fn resolve_did(&self, did: &Did) -> Result<DidDocument, NodeError> {
        Ok(resolve_did(&self.registry, did)?)
    }

    pub fn wallet_document(&self, did: &Did) -> Result<DidDocument, NodeError> {
        self.require(self.config.roles.wallet, "wallet")?;
        Ok(self.wallet.document(did)?)
    }

    // -- credentials ----------------------------------------------------------

    /// Issues with a key held in this node's wallet, anchors the credential
    /// and delivers it to the subject if the subject's wallet is local.
    pub fn issue_credential(&mut self, req: &IssueRequest) -> Result<IssuedCredential, NodeError> {
        self.require(self.config.roles.issuer, "issuer")?;
        let now = self.tick();
        let days = req.validity_days.unwrap_or(self.config.credential_validity_days);
        let claims: Vec<(String, String)> = req.claims.iter().map(|c| (c.name.clone(), c.value.clone())).collect();
        let (registry, rng) = (&self.registry, &mut self.rng);
        let credential = self.wallet.with_key(&req.issuer_did, |kp| {
            issue_credential(registry, kp, &req.issuer_did, &req.subject_did, &claims, Validity::days_from(now, days), rng)
        })??;
        let receipt = anchor_credential(&mut self.registry, &credential, now)?;
        let delivered = self.wallet.holds(&credential.subject_did);
        if delivered {
            self.wallet.add_credential(credential.clone(), &mut self.rng)?;
        }
        Ok(IssuedCredential { credential, receipt, delivered })
    }

    pub fn verify_credential(&self, vc: &VerifiableCredential) -> VerificationReport {
        verify_credential(&self.registry, vc, self.peek_now())
    }

    pub fn held_credentials(&self, did: &Did) -> Result<Vec<VerifiableCredential>, NodeError> {
        self.require(self.config.roles.wallet, "wallet")?;
        Ok(self.wallet.credentials(did)?.to_vec())
    }

    pub fn present(&self, did: &Did, req: &PresentRequest) -> Result<Presentation, NodeError> {
        self.require(self.config.roles.wallet, "wallet")?;
        let challenge = match &req.challenge {
            ChallengeSpec::Raw { challenge } => challenge.0,
            ChallengeSpec::Submission { submission_id, manuscript_digest } => submission_challenge(*submission_id, manuscript_digest),
            ChallengeSpec::Review { submission_id } => review_challenge(*submission_id, did),
        };
        Ok(self.wallet.present(did, &req.disclose, challenge)?)
    }

    pub fn sign_consent(&self, did: &Did, req: &SignConsentRequest) -> Result<ConsentRecord, NodeError> {
        self.require(self.config.roles.wallet, "wallet")?;
        let (digest, role) = match self.submissions.get(&req.submission_id) {
            Some(sub) => {
                let author = sub
                    .authors()
                    .find(|a| a.did == *did)
                    .ok_or_else(|| WorkflowError::NotACoauthor(did.clone()))?;
                (sub.manuscript_digest, author.role)
            }
            None => match (req.manuscript_digest, req.role) {
                (Some(d), Some(r)) => (d, r),
                _ => return Err(NodeError::NotFound(format!("submission {}", hex::encode(req.submission_id)))),
            },
        };
        Ok(self.wallet.sign_consent(did, req.submission_id, &digest, role, req.decision, self.peek_now())?)
    }

    // -- journal --------------------------------------------------------------

    fn persist(&mut self, id: &[u8; 16]) -> Result<(), NodeError> {
        let sub = &self.submissions[id];
        let bytes = serde_json::to_vec(sub).expect("submissions serialize");
        self.registry.documents.put(&submission_path(id), bytes)?;
        Ok(())
    }

    /// Runs `f` on a stored submission and persists the result, including
    /// any alert raised on the way to an error.
    fn with_submission<T>(
        &mut self,
        id: &[u8; 16],
        now: u64,
        f: impl FnOnce(&mut Submission, &mut TrustRegistry, u64) -> Result<T, WorkflowError>,
    ) -> Result<T, NodeError> {
        self.require(self.config.roles.journal, "journal")?;
        let sub = self
            .submissions
            .get_mut(id)
            .ok_or_else(|| NodeError::NotFound(format!("submission {}", hex::encode(id))))?;
        let before = sub.clone();
        let raised = sub.check_deadline(now);
        let out = f(sub, &mut self.registry, now);
        if raised > 0 || *sub != before {
            self.persist(id)?;
        }
        Ok(out?)
    }

    pub fn submit(&mut self, req: SubmissionRequest) -> Result<SubmissionUpdate, NodeError> {
        self.require(self.config.roles.journal, "journal")?;
        if self.submissions.contains_key(&req.id) {
            return Err(NodeError::BadRequest(format!("submission {} already exists", hex::encode(req.id))));
        }
        let now = self.tick();
        let (submission, receipt) = crate::workflow::submit(&mut self.registry, req, now, self.config.consent_deadline_days)?;
        let id = submission.id;
        self.submissions.insert(id, submission.clone());
        self.persist(&id)?;
        Ok(SubmissionUpdate { submission, receipt: Some(receipt) })
    }

    pub fn submission(&self, id: &[u8; 16]) -> Result<Submission, NodeError> {
        self.submissions.get(id).cloned().ok_or_else(|| NodeError::NotFound(format!("submission {}", hex::encode(id))))
    }

    /// All submissions, or only those awaiting a decision from `pending_for`.
    pub fn submissions(&self, pending_for: Option<&Did>) -> Vec<Submission> {
        self.submissions
            .values()
            .filter(|s| match pending_for {
                None => true,
                Some(d) => s.state == WorkflowState::AwaitingConsent && s.pending_coauthors().contains(&d),
            })
            .cloned()
            .collect()
    }

    pub fn record_consent(&mut self, id: &[u8; 16], record: ConsentRecord) -> Result<SubmissionUpdate, NodeError> {
        let now = self.tick();
        let receipt = self.with_submission(id, now, |s, r, now| s.record_consent(r, record, now))?;
        Ok(SubmissionUpdate { submission: self.submission(id)?, receipt: Some(receipt) })
    }

    pub fn resolve_alert(&mut self, id: &[u8; 16], alert_index: usize, action: EditorialAction) -> Result<SubmissionUpdate, NodeError> {
        let now = self.tick();
        let receipt = self.with_submission(id, now, |s, r, now| s.resolve_alert(r, alert_index, action, now))?;
        Ok(SubmissionUpdate { submission: self.submission(id)?, receipt: Some(receipt) })
    }

    pub fn assign_reviewer(&mut self, id: &[u8; 16], req: &AssignRequest) -> Result<AssignmentCreated, NodeError> {
        ConflictSet::new(req.conflict_set.iter())?;
        let now = self.tick();
        let (assignment, receipt) =
            self.with_submission(id, now, |s, r, now| s.assign_reviewer(r, &req.reviewer_did, &req.expertise_presentation, now))?;
        let bytes = serde_json::to_vec(&req.conflict_set).expect("strings serialize");
        self.registry.documents.put(&reviewer_set_path(&assignment.id), bytes)?;
        self.reviewer_sets.insert(assignment.id, req.conflict_set.clone());
        Ok(AssignmentCreated { assignment, receipt })
    }

    fn find_assignment(&self, assignment: &[u8; 16]) -> Result<(&Submission, &ReviewAssignment), NodeError> {
        self.submissions
            .values()
            .find_map(|s| s.assignment_by_id(assignment).map(|a| (s, a)))
            .ok_or_else(|| NodeError::NotFound(format!("assignment {}", hex::encode(assignment))))
    }

    /// Journal conflict set: declared author affiliations plus author DIDs.
    pub fn journal_conflict_set(sub: &Submission) -> Vec<String> {
        sub.declared_affiliations.iter().cloned().chain(sub.authors().map(|a| a.did.to_string())).collect()
    }

    /// Runs the private COI check for one assignment and records the outcome.
    pub fn run_coi(&mut self, assignment: &[u8; 16]) -> Result<CoiRun, NodeError> {
        self.require(self.config.roles.journal, "journal")?;
        let (sub, _) = self.find_assignment(assignment)?;
        let (sub_id, journal_raw) = (sub.id, Node::journal_conflict_set(sub));
        let reviewer_raw = self
            .reviewer_sets
            .get(assignment)
            .cloned()
            .ok_or_else(|| NodeError::NotFound(format!("conflict set for assignment {}", hex::encode(assignment))))?;
        let journal_set = ConflictSet::new(journal_raw.iter())?;
        let reviewer_set = ConflictSet::new(reviewer_raw.iter())?;
        let now = self.tick();
        let mut session_id = [0u8; 16];
        self.rng.fill_bytes(&mut session_id);
        let transcript = match self.config.coi_variant {
            CoiVariant::DhBlinded => run_dh_session(&journal_set, &reviewer_set, session_id, &mut self.rng)?,
            CoiVariant::SaltedHash => {
                let mut salt = [0u8; 32];
                self.rng.fill_bytes(&mut salt);
                self.salts.salted_hash_check(&journal_set, &reviewer_set, salt, session_id, &mut self.rng)?
            }
        };
        let reviewer_did = self.find_assignment(assignment)?.1.reviewer_did.clone();
        let commitment = transcript.journal_commitment;
        let receipt =
            self.with_submission(&sub_id, now, |s, r, now| s.record_coi_outcome(r, &reviewer_did, &transcript, &commitment, now))?;
        let bytes = serde_json::to_vec(&transcript).expect("transcripts serialize");
        self.registry.documents.put(&transcript.storage_path(), bytes)?;
        let assignment = self.find_assignment(assignment)?.1.clone();
        Ok(CoiRun { assignment, transcript, receipt })
    }

    pub fn coi_transcript(&self, session_id: &[u8; 16]) -> Result<CoiTranscript, NodeError> {
        let path = format!("coi/{}.json", hex::encode(session_id));
        let bytes = self.registry.documents.get(&path).ok_or_else(|| NodeError::NotFound(format!("COI session {}", hex::encode(session_id))))?;
        serde_json::from_slice(bytes).map_err(|e| NodeError::BadRequest(e.to_string()))
    }

    pub fn record_review(&mut self, id: &[u8; 16], req: &ReviewRequest) -> Result<SubmissionUpdate, NodeError> {
        let now = self.tick();
        let receipt =
            self.with_submission(id, now, |s, r, now| s.record_review(r, &req.reviewer_did, req.review_digest, req.recommendation, now))?;
        Ok(SubmissionUpdate { submission: self.submission(id)?, receipt: Some(receipt) })
    }

    pub fn decide(&mut self, id: &[u8; 16], decision: Decision) -> Result<SubmissionUpdate, NodeError> {
        let now = self.tick();
        let receipt = self.with_submission(id, now, |s, r, now| s.decide(r, decision, now))?;
        Ok(SubmissionUpdate { submission: self.submission(id)?, receipt: Some(receipt) })
    }

    /// Builds, anchors and stores the publication sidecar, then marks the
    /// submission Published.
    pub fn publish(&mut self, id: &[u8; 16]) -> Result<PublicationDocument, NodeError> {
        self.require(self.config.roles.journal, "journal")?;
        let journal = self.journal_did.clone().ok_or(NodeError::RoleDisabled("journal"))?;
        let sub = self.submission(id)?;
        let now = self.tick();
        let m = metadata::build(&sub, &self.registry, &journal, now)?;
        let doc = metadata::publish(&mut self.registry, m)?;
        self.with_submission(id, now, |s, _, _| s.mark_published())?;
        Ok(doc)
    }

    pub fn publication_document(&self, id: &[u8; 16]) -> Result<Vec<u8>, NodeError> {
        metadata::stored_sidecar(&self.registry, id)
            .map(<[u8]>::to_vec)
            .ok_or_else(|| NodeError::NotFound(format!("publication {}", hex::encode(id))))
    }

    /// Reader check of a stored sidecar against this node's headers.
    pub fn verify_publication(&self, id: &[u8; 16]) -> Result<PublicationReport, NodeError> {
        self.require(self.config.roles.reader, "reader")?;
        let bytes = self.publication_document(id)?;
        Ok(metadata::verify_publication(&self.registry.ledger.headers(), &bytes)?)
    }

    // -- ledger ---------------------------------------------------------------

    pub fn head(&self) -> BlockHeader {
        self.registry.ledger.head()
    }

    pub fn headers(&self) -> Vec<BlockHeader> {
        self.registry.ledger.headers()
    }

    pub fn block(&self, index: u64) -> Result<LedgerBlock, NodeError> {
        self.registry.ledger.block(index).cloned().ok_or_else(|| NodeError::NotFound(format!("block {index}")))
    }

    /// Re-verifies the ledger; the persisted file when there is one.
    pub fn audit(&self) -> Result<ChainReport, NodeError> {
        match &self.config.data_dir {
            Some(dir) => {
                let bytes = std::fs::read(dir.join("registry").join("ledger.bin")).map_err(RegistryError::from)?;
                Ok(verify_chain_bytes(&bytes))
            }
            None => Ok(self.registry.ledger.verify_chain()),
        }
    }
}

/// Path of the ledger file inside a node data directory.
pub fn ledger_file(data_dir: &Path) -> PathBuf {
    data_dir.join("registry").join("ledger.bin")
}
