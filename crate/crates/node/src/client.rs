//! Blocking JSON client for a node.

use std::time::Duration;

use authcred::credentials::Presentation;
use authcred::identity::Did;
use authcred::metadata::{PublicationDocument, PublicationReport};
use authcred::node::{
    AssignRequest, AssignmentCreated, CoiRun, DecisionRequest, IdentityCreated, IssueRequest, IssuedCredential, PresentRequest,
    ResolveRequest, ReviewRequest, SignConsentRequest, SubmissionUpdate,
};
use authcred::registry::BlockHeader;
use authcred::scenario::{ApiError, Backend};
use authcred::workflow::{ConsentRecord, Decision, EditorialAction, Submission, SubmissionRequest};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub struct HttpBackend {
    base: String,
    agent: ureq::Agent,
    capture: Option<Vec<Vec<u8>>>,
}

fn transport(e: impl std::fmt::Display) -> ApiError {
    ApiError { code: "Unreachable".into(), message: e.to_string() }
}

impl HttpBackend {
    pub fn new(base: &str) -> HttpBackend {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .into();
        HttpBackend { base: base.trim_end_matches('/').to_string(), agent, capture: None }
    }

    /// Keeps a copy of every request and response body.
    pub fn capturing(mut self) -> HttpBackend {
        self.capture = Some(Vec::new());
        self
    }

    pub fn captured(&self) -> &[Vec<u8>] {
        self.capture.as_deref().unwrap_or_default()
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    /// Raw exchange; non-2xx responses become the server's `ApiError`.
    pub fn raw(&mut self, method: &str, path: &str, body: Option<Vec<u8>>) -> Result<Vec<u8>, ApiError> {
        let url = format!("{}{}", self.base, path);
        let response = match (method, &body) {
            ("GET", _) => self.agent.get(&url).call(),
            (_, Some(b)) => self.agent.post(&url).header("content-type", "application/json").send(&b[..]),
            (_, None) => self.agent.post(&url).send_empty(),
        };
        let mut response = response.map_err(transport)?;
        let status = response.status().as_u16();
        let bytes = response.body_mut().with_config().limit(64 * 1024 * 1024).read_to_vec().map_err(transport)?;
        if let Some(c) = &mut self.capture {
            c.extend(body);
            c.push(bytes.clone());
        }
        if (200..300).contains(&status) {
            Ok(bytes)
        } else {
            Err(serde_json::from_slice(&bytes)
                .unwrap_or_else(|_| ApiError { code: format!("Http{status}"), message: String::from_utf8_lossy(&bytes).into() }))
        }
    }

    pub fn get<T: DeserializeOwned>(&mut self, path: &str) -> Result<T, ApiError> {
        let bytes = self.raw("GET", path, None)?;
        serde_json::from_slice(&bytes).map_err(|e| ApiError { code: "MalformedResponse".into(), message: e.to_string() })
    }

    pub fn post<B: Serialize + ?Sized, T: DeserializeOwned>(&mut self, path: &str, body: Option<&B>) -> Result<T, ApiError> {
        let body = body.map(|b| serde_json::to_vec(b).expect("request bodies serialize"));
        let bytes = self.raw("POST", path, body)?;
        serde_json::from_slice(&bytes).map_err(|e| ApiError { code: "MalformedResponse".into(), message: e.to_string() })
    }
}

const NO_BODY: Option<&()> = None;

impl Backend for HttpBackend {
    fn create_identity(&mut self) -> Result<IdentityCreated, ApiError> {
        self.post("/wallet/identities", NO_BODY)
    }
    fn issue_credential(&mut self, req: &IssueRequest) -> Result<IssuedCredential, ApiError> {
        self.post("/issuer/credentials", Some(req))
    }
    fn present(&mut self, did: &Did, req: &PresentRequest) -> Result<Presentation, ApiError> {
        self.post(&format!("/wallet/{did}/present"), Some(req))
    }
    fn sign_consent(&mut self, did: &Did, req: &SignConsentRequest) -> Result<ConsentRecord, ApiError> {
        self.post(&format!("/wallet/{did}/sign-consent"), Some(req))
    }
    fn submit(&mut self, req: &SubmissionRequest) -> Result<SubmissionUpdate, ApiError> {
        self.post("/journal/submissions", Some(req))
    }
    fn submission(&mut self, id: &[u8; 16]) -> Result<Submission, ApiError> {
        self.get(&format!("/journal/submissions/{}", hex::encode(id)))
    }
    fn record_consent(&mut self, id: &[u8; 16], record: &ConsentRecord) -> Result<SubmissionUpdate, ApiError> {
        self.post(&format!("/journal/submissions/{}/consents", hex::encode(id)), Some(record))
    }
    fn resolve_alert(&mut self, id: &[u8; 16], alert: usize, action: EditorialAction) -> Result<SubmissionUpdate, ApiError> {
        self.post(&format!("/journal/submissions/{}/alerts/{alert}/resolve", hex::encode(id)), Some(&ResolveRequest { action }))
    }
    fn assign_reviewer(&mut self, id: &[u8; 16], req: &AssignRequest) -> Result<AssignmentCreated, ApiError> {
        self.post(&format!("/journal/submissions/{}/reviewers", hex::encode(id)), Some(req))
    }
    fn run_coi(&mut self, assignment: &[u8; 16]) -> Result<CoiRun, ApiError> {
        self.post(&format!("/journal/coi/{}/run", hex::encode(assignment)), NO_BODY)
    }
    fn record_review(&mut self, id: &[u8; 16], req: &ReviewRequest) -> Result<SubmissionUpdate, ApiError> {
        self.post(&format!("/journal/submissions/{}/reviews", hex::encode(id)), Some(req))
    }
    fn decide(&mut self, id: &[u8; 16], decision: Decision) -> Result<SubmissionUpdate, ApiError> {
        self.post(&format!("/journal/submissions/{}/decision", hex::encode(id)), Some(&DecisionRequest { decision }))
    }
    fn publish(&mut self, id: &[u8; 16]) -> Result<PublicationDocument, ApiError> {
        self.post(&format!("/journal/submissions/{}/publish", hex::encode(id)), NO_BODY)
    }
    fn verify_publication(&mut self, id: &[u8; 16]) -> Result<PublicationReport, ApiError> {
        self.get(&format!("/reader/publications/{}/verify", hex::encode(id)))
    }
    fn head(&mut self) -> Result<BlockHeader, ApiError> {
        self.get("/ledger/head")
    }
}
