//! HTTP surface of a node: issuer, journal, wallet and reader endpoints over
//! one trust registry, plus a blocking client implementing the scenario
//! [`Backend`](authcred::scenario::Backend).
//!
//! All bodies are JSON. Errors carry `{"code": ..., "message": ...}` where
//! `code` is the name of the failing check, e.g. `BadConsentSignature`.

mod args;
pub mod client;

pub use args::NodeArgs;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex, MutexGuard};

use authcred::credentials::VerifiableCredential;
use authcred::identity::{Did, DidDocument};
use authcred::node::{
    parse_id, AssignRequest, DecisionRequest, IssueRequest, Node, NodeConfig, NodeError, PresentRequest, ResolveRequest,
    ReviewRequest, SignConsentRequest,
};
use authcred::scenario::ApiError;
use authcred::workflow::{ConsentRecord, SubmissionRequest};
use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;
use tokio::net::TcpListener;

/// Logs to stderr, `info` unless `RUST_LOG` says otherwise.
pub fn init_tracing() {
    let filter = tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into());
    let _ = tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).try_init();
}

pub type SharedNode = Arc<Mutex<Node>>;

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Node(#[from] NodeError),
    #[error("address {0} is already in use")]
    PortInUse(SocketAddr),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub node: NodeConfig,
    pub listen: SocketAddr,
}

pub struct AppError {
    status: StatusCode,
    body: ApiError,
}

impl From<NodeError> for AppError {
    fn from(e: NodeError) -> Self {
        let status = StatusCode::from_u16(e.status()).unwrap_or(StatusCode::BAD_REQUEST);
        AppError { status, body: e.into() }
    }
}

impl IntoResponse for AppError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

fn bad_request(code: &str, message: impl Into<String>) -> AppError {
    AppError { status: StatusCode::BAD_REQUEST, body: ApiError { code: code.into(), message: message.into() } }
}

fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, AppError> {
    serde_json::from_slice(body).map_err(|e| bad_request("MalformedBody", e.to_string()))
}

fn did(text: &str) -> Result<Did, AppError> {
    text.parse().map_err(|e: authcred::identity::IdentityError| bad_request("MalformedDid", e.to_string()))
}

fn id(text: &str) -> Result<[u8; 16], AppError> {
    Ok(parse_id(text)?)
}

fn lock(state: &SharedNode) -> MutexGuard<'_, Node> {
    state.lock().unwrap_or_else(|p| p.into_inner())
}

type Reply<T> = Result<Json<T>, AppError>;
type Created<T> = Result<(StatusCode, Json<T>), AppError>;

fn created<T: Serialize>(value: T) -> Created<T> {
    Ok((StatusCode::CREATED, Json(value)))
}

async fn post_did(State(s): State<SharedNode>, body: Bytes) -> Created<authcred::LedgerReceipt> {
    let doc: DidDocument = parse(&body)?;
    created(lock(&s).register_did(&doc)?)
}

async fn get_did(State(s): State<SharedNode>, Path(d): Path<String>) -> Reply<DidDocument> {
    Ok(Json(lock(&s).resolve_did(&did(&d)?)?))
}

async fn issue(State(s): State<SharedNode>, body: Bytes) -> Created<authcred::node::IssuedCredential> {
    let req: IssueRequest = parse(&body)?;
    created(lock(&s).issue_credential(&req)?)
}

async fn verify_vc(State(s): State<SharedNode>, body: Bytes) -> Reply<authcred::credentials::VerificationReport> {
    let vc: VerifiableCredential = parse(&body)?;
    Ok(Json(lock(&s).verify_credential(&vc)))
}

async fn wallet_identity(State(s): State<SharedNode>) -> Created<authcred::node::IdentityCreated> {
    created(lock(&s).create_identity()?)
}

async fn wallet_document(State(s): State<SharedNode>, Path(d): Path<String>) -> Reply<DidDocument> {
    Ok(Json(lock(&s).wallet_document(&did(&d)?)?))
}

async fn wallet_credentials(State(s): State<SharedNode>, Path(d): Path<String>) -> Reply<Vec<VerifiableCredential>> {
    Ok(Json(lock(&s).held_credentials(&did(&d)?)?))
}

async fn sign_consent(State(s): State<SharedNode>, Path(d): Path<String>, body: Bytes) -> Reply<ConsentRecord> {
    let req: SignConsentRequest = parse(&body)?;
    Ok(Json(lock(&s).sign_consent(&did(&d)?, &req)?))
}

async fn present(State(s): State<SharedNode>, Path(d): Path<String>, body: Bytes) -> Reply<authcred::credentials::Presentation> {
    let req: PresentRequest = parse(&body)?;
    Ok(Json(lock(&s).present(&did(&d)?, &req)?))
}

async fn submit(State(s): State<SharedNode>, body: Bytes) -> Created<authcred::node::SubmissionUpdate> {
    let req: SubmissionRequest = parse(&body)?;
    created(lock(&s).submit(req)?)
}

async fn list_submissions(
    State(s): State<SharedNode>,
    Query(q): Query<HashMap<String, String>>,
) -> Reply<Vec<authcred::workflow::Submission>> {
    let pending_for = q.get("pending_for").map(|d| did(d)).transpose()?;
    Ok(Json(lock(&s).submissions(pending_for.as_ref())))
}

async fn get_submission(State(s): State<SharedNode>, Path(i): Path<String>) -> Reply<authcred::workflow::Submission> {
    Ok(Json(lock(&s).submission(&id(&i)?)?))
}

async fn consent(State(s): State<SharedNode>, Path(i): Path<String>, body: Bytes) -> Reply<authcred::node::SubmissionUpdate> {
    let rec: ConsentRecord = parse(&body)?;
    Ok(Json(lock(&s).record_consent(&id(&i)?, rec)?))
}

async fn resolve(
    State(s): State<SharedNode>,
    Path((i, alert)): Path<(String, usize)>,
    body: Bytes,
) -> Reply<authcred::node::SubmissionUpdate> {
    let req: ResolveRequest = parse(&body)?;
    Ok(Json(lock(&s).resolve_alert(&id(&i)?, alert, req.action)?))
}

async fn assign(State(s): State<SharedNode>, Path(i): Path<String>, body: Bytes) -> Created<authcred::node::AssignmentCreated> {
    let req: AssignRequest = parse(&body)?;
    created(lock(&s).assign_reviewer(&id(&i)?, &req)?)
}

async fn run_coi(State(s): State<SharedNode>, Path(a): Path<String>) -> Reply<authcred::node::CoiRun> {
    Ok(Json(lock(&s).run_coi(&id(&a)?)?))
}

async fn coi_transcript(State(s): State<SharedNode>, Path(session): Path<String>) -> Reply<authcred::coi::CoiTranscript> {
    Ok(Json(lock(&s).coi_transcript(&id(&session)?)?))
}

async fn review(State(s): State<SharedNode>, Path(i): Path<String>, body: Bytes) -> Reply<authcred::node::SubmissionUpdate> {
    let req: ReviewRequest = parse(&body)?;
    Ok(Json(lock(&s).record_review(&id(&i)?, &req)?))
}

async fn decide(State(s): State<SharedNode>, Path(i): Path<String>, body: Bytes) -> Reply<authcred::node::SubmissionUpdate> {
    let req: DecisionRequest = parse(&body)?;
    Ok(Json(lock(&s).decide(&id(&i)?, req.decision)?))
}

async fn publish(State(s): State<SharedNode>, Path(i): Path<String>) -> Created<authcred::metadata::PublicationDocument> {
    created(lock(&s).publish(&id(&i)?)?)
}

async fn publication(State(s): State<SharedNode>, Path(i): Path<String>) -> Result<Response, AppError> {
    let bytes = lock(&s).publication_document(&id(&i)?)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], bytes).into_response())
}

async fn verify_publication(State(s): State<SharedNode>, Path(i): Path<String>) -> Reply<authcred::metadata::PublicationReport> {
    Ok(Json(lock(&s).verify_publication(&id(&i)?)?))
}

async fn head(State(s): State<SharedNode>) -> Json<authcred::registry::BlockHeader> {
    Json(lock(&s).head())
}

async fn headers(State(s): State<SharedNode>) -> Json<Vec<authcred::registry::BlockHeader>> {
    Json(lock(&s).headers())
}

async fn block(State(s): State<SharedNode>, Path(i): Path<u64>) -> Reply<authcred::registry::LedgerBlock> {
    Ok(Json(lock(&s).block(i)?))
}

async fn audit(State(s): State<SharedNode>) -> Reply<authcred::registry::ChainReport> {
    Ok(Json(lock(&s).audit()?))
}

async fn not_found() -> AppError {
    AppError { status: StatusCode::NOT_FOUND, body: ApiError { code: "NoSuchEndpoint".into(), message: "no such endpoint".into() } }
}

pub fn router(node: SharedNode) -> Router {
    Router::new()
        .route("/dids", post(post_did))
        .route("/dids/{did}", get(get_did))
        .route("/issuer/credentials", post(issue))
        .route("/wallet/identities", post(wallet_identity))
        .route("/wallet/{did}/document", get(wallet_document))
        .route("/wallet/{did}/credentials", get(wallet_credentials))
        .route("/wallet/{did}/sign-consent", post(sign_consent))
        .route("/wallet/{did}/present", post(present))
        .route("/journal/submissions", post(submit).get(list_submissions))
        .route("/journal/submissions/{id}", get(get_submission))
        .route("/journal/submissions/{id}/consents", post(consent))
        .route("/journal/submissions/{id}/alerts/{alert}/resolve", post(resolve))
        .route("/journal/submissions/{id}/reviewers", post(assign))
        .route("/journal/submissions/{id}/reviews", post(review))
        .route("/journal/submissions/{id}/decision", post(decide))
        .route("/journal/submissions/{id}/publish", post(publish))
        .route("/journal/coi/{id}/run", post(run_coi))
        .route("/journal/coi/{id}", get(coi_transcript))
        .route("/reader/credentials/verify", post(verify_vc))
        .route("/reader/publications/{id}", get(publication))
        .route("/reader/publications/{id}/verify", get(verify_publication))
        .route("/ledger/head", get(head))
        .route("/ledger/headers", get(headers))
        .route("/ledger/blocks/{index}", get(block))
        .route("/ledger/audit", get(audit))
        .fallback(not_found)
        .with_state(node)
}

/// Opens the node (verifying its ledger) and binds the listener.
pub async fn bind(config: ServeConfig) -> Result<(TcpListener, SharedNode), ServeError> {
    let node = tokio::task::spawn_blocking(move || Node::open(config.node)).await.expect("open task panicked")?;
    let listener = TcpListener::bind(config.listen).await.map_err(|e| match e.kind() {
        std::io::ErrorKind::AddrInUse => ServeError::PortInUse(config.listen),
        _ => ServeError::Io(e),
    })?;
    let head = node.head();
    tracing::info!(index = head.index, head = %head.block_hash, addr = %listener.local_addr()?, "node ready");
    Ok((listener, Arc::new(Mutex::new(node))))
}

pub async fn serve(config: ServeConfig) -> Result<(), ServeError> {
    let (listener, node) = bind(config).await?;
    axum::serve(listener, router(node))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

/// [`serve`] on a fresh multi-threaded runtime.
pub fn serve_blocking(config: ServeConfig) -> Result<(), ServeError> {
    tokio::runtime::Runtime::new()?.block_on(serve(config))
}

/// A node serving on a background thread, stopped on drop.
pub struct BackgroundNode {
    pub addr: SocketAddr,
    pub node: SharedNode,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl BackgroundNode {
    pub fn start(config: ServeConfig) -> Result<BackgroundNode, ServeError> {
        let runtime = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build()?;
        let (listener, node) = runtime.block_on(bind(config))?;
        let addr = listener.local_addr()?;
        let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
        let app = router(node.clone());
        let thread = std::thread::spawn(move || {
            runtime.block_on(async move {
                let _ = axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = stopped.await;
                    })
                    .await;
            });
        });
        Ok(BackgroundNode { addr, node, stop: Some(stop), thread: Some(thread) })
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for BackgroundNode {
    fn drop(&mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
