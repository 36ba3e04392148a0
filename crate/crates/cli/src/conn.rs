//! Where commands go: an HTTP node, or a node opened in-process on the data
//! directory. A local wallet file, when given, signs and presents for the
//! identities it holds so their keys never reach the node.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use authcred::coi::CoiTranscript;
use authcred::credentials::{Presentation, VerifiableCredential, VerificationReport};
use authcred::identity::{Did, DidDocument};
use authcred::metadata::{PublicationDocument, PublicationReport};
use authcred::node::{
    ledger_file, AssignRequest, AssignmentCreated, ChallengeSpec, CoiRun, IdentityCreated, IssueRequest, IssuedCredential, Node,
    PresentRequest, ReviewRequest, SignConsentRequest, SubmissionUpdate,
};
use authcred::registry::{verify_chain_bytes, BlockHeader, ChainReport, LedgerReceipt};
use authcred::scenario::{ApiError, Backend};
use authcred::wallet::{WalletStore, DEFAULT_KDF_ROUNDS};
use authcred::workflow::{
    review_challenge, submission_challenge, ConsentRecord, Decision, EditorialAction, Submission, SubmissionRequest,
};
use authcred_node::client::HttpBackend;
use authcred_node::NodeArgs;
use rand::rngs::OsRng;

pub fn api(code: &str, message: impl Into<String>) -> ApiError {
    ApiError { code: code.into(), message: message.into() }
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn open_wallet(path: &Path, passphrase: &str) -> Result<WalletStore, ApiError> {
    WalletStore::open(path, passphrase, DEFAULT_KDF_ROUNDS, &mut OsRng).map_err(|e| api("Wallet", e.to_string()))
}

pub enum Target {
    Local(Box<Node>),
    Remote(HttpBackend),
}

pub struct Conn {
    target: Target,
    wallet: Option<WalletStore>,
}

impl Conn {
    pub fn open(node_url: Option<&str>, args: &NodeArgs, wallet: Option<&PathBuf>) -> Result<Conn, ApiError> {
        let target = match node_url {
            Some(url) => Target::Remote(HttpBackend::new(url)),
            None => Target::Local(Box::new(Node::open(args.to_config())?)),
        };
        let wallet = wallet.map(|p| open_wallet(p, &args.passphrase)).transpose()?;
        Ok(Conn { target, wallet })
    }

    pub fn from_target(target: Target) -> Conn {
        Conn { target, wallet: None }
    }

    fn inner(&mut self) -> &mut dyn Backend {
        match &mut self.target {
            Target::Local(n) => n.as_mut(),
            Target::Remote(h) => h,
        }
    }

    fn local_holder(&self, did: &Did) -> Option<&WalletStore> {
        self.wallet.as_ref().filter(|w| w.holds(did))
    }

    pub fn register_did(&mut self, doc: &DidDocument) -> Result<LedgerReceipt, ApiError> {
        match &mut self.target {
            Target::Local(n) => Ok(n.register_did(doc)?),
            Target::Remote(h) => h.post("/dids", Some(doc)),
        }
    }

    pub fn resolve_did(&mut self, did: &Did) -> Result<DidDocument, ApiError> {
        match &mut self.target {
            Target::Local(n) => Ok(n.resolve_did(did)?),
            Target::Remote(h) => h.get(&format!("/dids/{did}")),
        }
    }

    pub fn verify_credential(&mut self, vc: &VerifiableCredential) -> Result<VerificationReport, ApiError> {
        match &mut self.target {
            Target::Local(n) => Ok(n.verify_credential(vc)),
            Target::Remote(h) => h.post("/reader/credentials/verify", Some(vc)),
        }
    }

    pub fn held_credentials(&mut self, did: &Did) -> Result<Vec<VerifiableCredential>, ApiError> {
        if let Some(w) = self.local_holder(did) {
            return w.credentials(did).map(|c| c.to_vec()).map_err(|e| api("Wallet", e.to_string()));
        }
        match &mut self.target {
            Target::Local(n) => Ok(n.held_credentials(did)?),
            Target::Remote(h) => h.get(&format!("/wallet/{did}/credentials")),
        }
    }

    pub fn submissions(&mut self, pending_for: Option<&Did>) -> Result<Vec<Submission>, ApiError> {
        match &mut self.target {
            Target::Local(n) => Ok(n.submissions(pending_for)),
            Target::Remote(h) => match pending_for {
                Some(d) => h.get(&format!("/journal/submissions?pending_for={d}")),
                None => h.get("/journal/submissions"),
            },
        }
    }

    pub fn coi_transcript(&mut self, session: &[u8; 16]) -> Result<CoiTranscript, ApiError> {
        match &mut self.target {
            Target::Local(n) => Ok(n.coi_transcript(session)?),
            Target::Remote(h) => h.get(&format!("/journal/coi/{}", hex::encode(session))),
        }
    }

    pub fn publication_document(&mut self, id: &[u8; 16]) -> Result<Vec<u8>, ApiError> {
        match &mut self.target {
            Target::Local(n) => Ok(n.publication_document(id)?),
            Target::Remote(h) => h.raw("GET", &format!("/reader/publications/{}", hex::encode(id)), None),
        }
    }

    pub fn headers(&mut self) -> Result<Vec<BlockHeader>, ApiError> {
        match &mut self.target {
            Target::Local(n) => Ok(n.headers()),
            Target::Remote(h) => h.get("/ledger/headers"),
        }
    }

    pub fn audit(&mut self) -> Result<ChainReport, ApiError> {
        match &mut self.target {
            Target::Local(n) => Ok(n.audit()?),
            Target::Remote(h) => h.get("/ledger/audit"),
        }
    }

    /// Stores a freshly issued credential in the local wallet when it holds
    /// the subject. Returns whether it did.
    pub fn keep_credential(&mut self, vc: &VerifiableCredential) -> Result<bool, ApiError> {
        match self.wallet.as_mut().filter(|w| w.holds(&vc.subject_did)) {
            Some(w) => {
                w.add_credential(vc.clone(), &mut OsRng).map_err(|e| api("Wallet", e.to_string()))?;
                Ok(true)
            }
            None => Ok(false),
        }
    }
}

/// Audits the persisted ledger without opening the node, so a corrupted
/// file is reported rather than refused.
pub fn audit_data_dir(dir: &Path) -> Result<ChainReport, ApiError> {
    let path = ledger_file(dir);
    let bytes = std::fs::read(&path).map_err(|e| api("NotFound", format!("{}: {e}", path.display())))?;
    Ok(verify_chain_bytes(&bytes))
}

impl Backend for Conn {
    fn create_identity(&mut self) -> Result<IdentityCreated, ApiError> {
        self.inner().create_identity()
    }
    fn issue_credential(&mut self, req: &IssueRequest) -> Result<IssuedCredential, ApiError> {
        self.inner().issue_credential(req)
    }
    fn present(&mut self, did: &Did, req: &PresentRequest) -> Result<Presentation, ApiError> {
        let Some(w) = self.local_holder(did) else {
            return self.inner().present(did, req);
        };
        let challenge = match &req.challenge {
            ChallengeSpec::Raw { challenge } => challenge.0,
            ChallengeSpec::Submission { submission_id, manuscript_digest } => submission_challenge(*submission_id, manuscript_digest),
            ChallengeSpec::Review { submission_id } => review_challenge(*submission_id, did),
        };
        w.present(did, &req.disclose, challenge).map_err(|e| api("Wallet", e.to_string()))
    }
    fn sign_consent(&mut self, did: &Did, req: &SignConsentRequest) -> Result<ConsentRecord, ApiError> {
        if self.local_holder(did).is_none() {
            return self.inner().sign_consent(did, req);
        }
        let (digest, role) = match (req.manuscript_digest, req.role) {
            (Some(d), Some(r)) => (d, r),
            _ => {
                let sub = self.inner().submission(&req.submission_id)?;
                let author = sub.authors().find(|a| a.did == *did).ok_or_else(|| api("NotACoauthor", did.to_string()))?;
                (sub.manuscript_digest, author.role)
            }
        };
        let w = self.local_holder(did).expect("checked above");
        w.sign_consent(did, req.submission_id, &digest, role, req.decision, unix_now()).map_err(|e| api("Wallet", e.to_string()))
    }
    fn submit(&mut self, req: &SubmissionRequest) -> Result<SubmissionUpdate, ApiError> {
        self.inner().submit(req)
    }
    fn submission(&mut self, id: &[u8; 16]) -> Result<Submission, ApiError> {
        self.inner().submission(id)
    }
    fn record_consent(&mut self, id: &[u8; 16], record: &ConsentRecord) -> Result<SubmissionUpdate, ApiError> {
        self.inner().record_consent(id, record)
    }
    fn resolve_alert(&mut self, id: &[u8; 16], alert: usize, action: EditorialAction) -> Result<SubmissionUpdate, ApiError> {
        self.inner().resolve_alert(id, alert, action)
    }
    fn assign_reviewer(&mut self, id: &[u8; 16], req: &AssignRequest) -> Result<AssignmentCreated, ApiError> {
        self.inner().assign_reviewer(id, req)
    }
    fn run_coi(&mut self, assignment: &[u8; 16]) -> Result<CoiRun, ApiError> {
        self.inner().run_coi(assignment)
    }
    fn record_review(&mut self, id: &[u8; 16], req: &ReviewRequest) -> Result<SubmissionUpdate, ApiError> {
        self.inner().record_review(id, req)
    }
    fn decide(&mut self, id: &[u8; 16], decision: Decision) -> Result<SubmissionUpdate, ApiError> {
        self.inner().decide(id, decision)
    }
    fn publish(&mut self, id: &[u8; 16]) -> Result<PublicationDocument, ApiError> {
        self.inner().publish(id)
    }
    fn verify_publication(&mut self, id: &[u8; 16]) -> Result<PublicationReport, ApiError> {
        self.inner().verify_publication(id)
    }
    fn head(&mut self) -> Result<BlockHeader, ApiError> {
        self.inner().head()
    }
}
