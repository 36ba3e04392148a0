//! `authcred`: drives every workflow phase against a node, either over HTTP
//! (`--node URL`) or in-process on `--data-dir`.

mod conn;

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use authcred::canonical::to_canonical_bytes;
use authcred::coi::verify_transcript;
use authcred::credentials::VerifiableCredential;
use authcred::crypto::hash;
use authcred::identity::{Did, DidDocument};
use authcred::metadata::verify_publication;
use authcred::node::{
    AssignRequest, ChallengeSpec, ClaimInput, IssueRequest, Node, NodeConfig, PresentRequest, ReviewRequest, SignConsentRequest,
};
use authcred::registry::record_offsets;
use authcred::scenario::{prepare_submission, run_demo, run_local_demo, ApiError, Backend, DemoOutcome};
use authcred::workflow::{ConsentDecision, ContributionRole, Decision, EditorialAction, Recommendation, Submission};
use authcred::Digest;
use authcred_node::client::HttpBackend;
use authcred_node::{serve_blocking, NodeArgs, ServeConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use conn::{api, audit_data_dir, open_wallet, unix_now, Conn, Target};

#[derive(Parser)]
#[command(name = "authcred", version, about = "Authorship credentials, consent and publication checks")]
struct Cli {
    /// Node base URL. Without it commands run in-process on --data-dir.
    #[arg(long, env = "AUTHCRED_NODE", global = true)]
    node: Option<String>,
    /// Local encrypted wallet. Identities held here sign and present
    /// locally; their keys are never sent to the node.
    #[arg(long, global = true)]
    wallet: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Output::Text, global = true)]
    output: Output,
    #[command(flatten)]
    local: NodeArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a key pair into the local wallet (requires --wallet).
    Keygen,
    /// Create, register and resolve DIDs.
    #[command(subcommand)]
    Did(DidCmd),
    /// Issue, verify and present credentials.
    #[command(subcommand)]
    Vc(VcCmd),
    /// Submit a manuscript with its co-author list.
    Submit(SubmitArgs),
    /// Sign and record a co-author's consent decision.
    Consent {
        decision: ConsentDecision,
        #[arg(long)]
        did: Did,
        #[arg(long, value_parser = parse_id)]
        submission: [u8; 16],
    },
    /// Inspect submissions.
    #[command(subcommand)]
    Journal(JournalCmd),
    /// Resolve editorial alerts.
    #[command(subcommand)]
    Alert(AlertCmd),
    /// Assign reviewers.
    #[command(subcommand)]
    Reviewer(ReviewerCmd),
    /// Run and replay private conflict-of-interest checks.
    #[command(subcommand)]
    Coi(CoiCmd),
    /// Record a review for a conflict-free reviewer.
    Review(ReviewArgs),
    /// Record the editorial decision.
    Decide {
        #[arg(long, value_parser = parse_id)]
        submission: [u8; 16],
        #[arg(long)]
        decision: Decision,
    },
    /// Build, anchor and store the publication metadata.
    Publish {
        #[arg(long, value_parser = parse_id)]
        submission: [u8; 16],
        /// Also write the sidecar document here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify a publication document against the node's ledger headers.
    VerifyPublication {
        #[arg(long, value_parser = parse_id, required_unless_present = "file")]
        submission: Option<[u8; 16]>,
        /// A sidecar document obtained elsewhere.
        #[arg(long, conflicts_with = "submission")]
        file: Option<PathBuf>,
    },
    /// Inspect and audit the registry ledger.
    #[command(subcommand)]
    Ledger(LedgerCmd),
    /// Run the three-author, two-reviewer scenario end to end.
    Demo {
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Run the demo into a fresh --data-dir, flip one byte of a block and
    /// audit the file.
    TamperDemo {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Block to corrupt; defaults to the middle of the chain.
        #[arg(long)]
        block: Option<usize>,
    },
    /// Serve the HTTP API on --data-dir.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8470")]
        listen: SocketAddr,
    },
}

#[derive(Subcommand)]
enum DidCmd {
    /// Create an identity and register its DID document. The key is kept in
    /// --wallet when given, otherwise in the node's wallet.
    Create,
    /// Register a DID document from a file or from the local wallet.
    Register {
        #[arg(long, required_unless_present = "did")]
        document: Option<PathBuf>,
        #[arg(long, conflicts_with = "document")]
        did: Option<Did>,
    },
    Resolve { did: Did },
}

#[derive(Subcommand)]
enum VcCmd {
    /// Issue and anchor a credential.
    Issue {
        #[arg(long)]
        issuer: Did,
        #[arg(long)]
        subject: Did,
        /// `name=value`, repeatable.
        #[arg(long = "claim", required = true, value_parser = parse_claim)]
        claims: Vec<ClaimInput>,
        #[arg(long)]
        validity_days: Option<u64>,
    },
    /// Verify a credential file (`-` for stdin).
    Verify { file: PathBuf },
    /// Build a selective-disclosure presentation.
    Present {
        #[arg(long)]
        did: Did,
        /// Comma-separated claim names.
        #[arg(long, value_delimiter = ',', required = true)]
        disclose: Vec<String>,
        /// Raw 32-byte challenge in hex.
        #[arg(long, value_parser = parse_digest, required_unless_present_any = ["submission", "review"])]
        challenge: Option<Digest>,
        /// Answer the submission challenge of this submission.
        #[arg(long, value_parser = parse_id, conflicts_with_all = ["challenge", "review"])]
        submission: Option<[u8; 16]>,
        /// Answer the reviewer challenge of this submission.
        #[arg(long, value_parser = parse_id, conflicts_with = "challenge")]
        review: Option<[u8; 16]>,
    },
    /// List credentials held for a DID.
    List {
        #[arg(long)]
        did: Did,
    },
}

#[derive(Args)]
struct SubmitArgs {
    #[arg(long)]
    author: Did,
    #[arg(long)]
    role: ContributionRole,
    #[command(flatten)]
    manuscript: ManuscriptArg,
    /// `DID=role`, repeatable.
    #[arg(long = "coauthor", value_parser = parse_coauthor)]
    coauthors: Vec<(Did, ContributionRole)>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ManuscriptArg {
    /// Manuscript file; its SHA-256 is submitted.
    #[arg(long)]
    manuscript: Option<PathBuf>,
    #[arg(long, value_parser = parse_digest)]
    manuscript_digest: Option<Digest>,
}

#[derive(Subcommand)]
enum JournalCmd {
    /// List or fetch submissions.
    #[command(subcommand)]
    Submissions(SubmissionsCmd),
}

#[derive(Subcommand)]
enum SubmissionsCmd {
    Get {
        #[arg(value_parser = parse_id)]
        id: [u8; 16],
    },
    List {
        /// Only submissions awaiting this co-author's consent.
        #[arg(long)]
        pending_for: Option<Did>,
    },
}

#[derive(Subcommand)]
enum AlertCmd {
    Resolve {
        #[arg(long, value_parser = parse_id)]
        submission: [u8; 16],
        #[arg(long)]
        alert: usize,
        #[arg(long)]
        action: EditorialAction,
    },
}

#[derive(Subcommand)]
enum ReviewerCmd {
    /// Assign a reviewer, who presents an expertise credential and supplies
    /// a private conflict set.
    Assign {
        #[arg(long, value_parser = parse_id)]
        submission: [u8; 16],
        #[arg(long)]
        reviewer: Did,
        /// Affiliation or collaborator DID, repeatable.
        #[arg(long = "conflict")]
        conflicts: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "expertise")]
        disclose: Vec<String>,
    },
}

#[derive(Subcommand)]
enum CoiCmd {
    Run {
        #[arg(long, value_parser = parse_id)]
        assignment: [u8; 16],
    },
    /// Replay a stored transcript.
    Verify {
        #[arg(long, value_parser = parse_id)]
        session: [u8; 16],
    },
}

#[derive(Args)]
struct ReviewArgs {
    #[arg(long, value_parser = parse_id)]
    submission: [u8; 16],
    #[arg(long)]
    reviewer: Did,
    #[arg(long)]
    recommendation: Recommendation,
    #[command(flatten)]
    review: ReviewBody,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ReviewBody {
    /// Review file; only its SHA-256 leaves this machine.
    #[arg(long)]
    review: Option<PathBuf>,
    #[arg(long, value_parser = parse_digest)]
    review_digest: Option<Digest>,
}

#[derive(Subcommand)]
enum LedgerCmd {
    Head,
    /// Verify the whole chain. Without --node the file is read directly.
    Audit,
    Block { index: u64 },
}

fn parse_id(s: &str) -> Result<[u8; 16], String> {
    let bytes = hex::decode(s).map_err(|e| e.to_string())?;
    bytes.try_into().map_err(|_| "expected 32 hex characters".to_string())
}

fn parse_digest(s: &str) -> Result<Digest, String> {
    Digest::from_hex(s).ok_or_else(|| "expected 64 hex characters".to_string())
}

fn parse_claim(s: &str) -> Result<ClaimInput, String> {
    let (name, value) = s.split_once('=').ok_or("expected name=value")?;
    Ok(ClaimInput { name: name.into(), value: value.into() })
}

fn parse_coauthor(s: &str) -> Result<(Did, ContributionRole), String> {
    let (did, role) = s.rsplit_once('=').ok_or("expected DID=role")?;
    Ok((did.parse().map_err(|e| format!("{e}"))?, role.parse()?))
}

/// A command's result: the JSON value, a text rendering, and whether the
/// checked property held.
struct Done {
    value: Value,
    text: String,
    ok: bool,
}

impl Done {
    fn new<T: Serialize>(value: &T, text: impl Into<String>) -> Done {
        Done { value: serde_json::to_value(value).expect("results serialize"), text: text.into(), ok: true }
    }

    fn failing_unless(mut self, ok: bool) -> Done {
        self.ok = ok;
        self
    }
}

fn read_input(path: &Path) -> Result<Vec<u8>, ApiError> {
    if path == Path::new("-") {
        let mut buf = Vec::new();
        std::io::Read::read_to_end(&mut std::io::stdin(), &mut buf).map_err(|e| api("Io", e.to_string()))?;
        return Ok(buf);
    }
    std::fs::read(path).map_err(|e| api("Io", format!("{}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| api("MalformedBody", e.to_string()))
}

fn file_digest(file: &Option<PathBuf>, digest: Option<Digest>) -> Result<Digest, ApiError> {
    match (file, digest) {
        (Some(p), _) => Ok(hash(&read_input(p)?)),
        (None, Some(d)) => Ok(d),
        (None, None) => unreachable!("clap requires one of the group"),
    }
}

fn submission_text(s: &Submission) -> String {
    let open = s.alerts.iter().filter(|a| !a.resolved).count();
    let mut out = format!("{} {} ({} open alert{})", s.id_hex(), s.state, open, if open == 1 { "" } else { "s" });
    for r in &s.reviewers {
        out.push_str(&format!("\n  reviewer {} assignment {} coi {}", r.reviewer_did, r.id_hex(), r.coi_status));
    }
    out
}

fn demo_text(d: &DemoOutcome) -> String {
    let mut out = d.log.join("\n");
    out.push_str(&format!("\nhead {}", d.head.block_hash));
    out
}

fn run(cli: Cli) -> Result<Done, ApiError> {
    let local = &cli.local;
    let connect = || Conn::open(cli.node.as_deref(), local, cli.wallet.as_ref());
    Ok(match cli.command {
        Command::Keygen => {
            let path = cli.wallet.as_ref().ok_or_else(|| api("Usage", "keygen needs --wallet"))?;
            let mut wallet = open_wallet(path, &local.passphrase)?;
            let doc = wallet.create_identity(unix_now(), &mut rand::rngs::OsRng).map_err(|e| api("Wallet", e.to_string()))?;
            Done::new(&doc, doc.did.to_string())
        }
        Command::Did(DidCmd::Create) => {
            let mut conn = connect()?;
            match &cli.wallet {
                Some(path) => {
                    drop(conn);
                    let mut wallet = open_wallet(path, &local.passphrase)?;
                    let doc =
                        wallet.create_identity(unix_now(), &mut rand::rngs::OsRng).map_err(|e| api("Wallet", e.to_string()))?;
                    let receipt = connect()?.register_did(&doc)?;
                    Done::new(&json!({ "did": doc.did, "document": doc, "receipt": receipt }), doc.did.to_string())
                }
                None => {
                    let created = conn.create_identity()?;
                    Done::new(&created, created.did.to_string())
                }
            }
        }
        Command::Did(DidCmd::Register { document, did }) => {
            let doc: DidDocument = match (document, did) {
                (Some(p), _) => parse_json(&read_input(&p)?)?,
                (None, Some(did)) => {
                    let path = cli.wallet.as_ref().ok_or_else(|| api("Usage", "--did needs --wallet"))?;
                    open_wallet(path, &local.passphrase)?.document(&did).map_err(|e| api("Wallet", e.to_string()))?
                }
                (None, None) => unreachable!("clap requires one"),
            };
            let receipt = connect()?.register_did(&doc)?;
            Done::new(&receipt, format!("{} anchored in block {}", doc.did, receipt.block_index))
        }
        Command::Did(DidCmd::Resolve { did }) => {
            let doc = connect()?.resolve_did(&did)?;
            Done::new(&doc, format!("{} key {}", doc.did, hex::encode(doc.verification_key.as_bytes())))
        }
        Command::Vc(VcCmd::Issue { issuer, subject, claims, validity_days }) => {
            let mut conn = connect()?;
            let issued = conn.issue_credential(&IssueRequest { issuer_did: issuer, subject_did: subject, claims, validity_days })?;
            let kept = conn.keep_credential(&issued.credential)?;
            let text = format!("credential {} anchored in block {}", issued.credential.digest(), issued.receipt.block_index);
            Done::new(&json!({ "issued": issued, "stored_locally": kept }), text)
        }
        Command::Vc(VcCmd::Verify { file }) => {
            let vc: VerifiableCredential = parse_json(&read_input(&file)?)?;
            let report = connect()?.verify_credential(&vc)?;
            Done::new(&report, if report.passed { "credential valid".into() } else { format!("credential INVALID: {report:?}") })
                .failing_unless(report.passed)
        }
        Command::Vc(VcCmd::Present { did, disclose, challenge, submission, review }) => {
            let mut conn = connect()?;
            let challenge = match (challenge, submission, review) {
                (Some(c), _, _) => ChallengeSpec::Raw { challenge: c },
                (_, Some(id), _) => {
                    let manuscript_digest = conn.submission(&id)?.manuscript_digest;
                    ChallengeSpec::Submission { submission_id: id, manuscript_digest }
                }
                (_, _, Some(id)) => ChallengeSpec::Review { submission_id: id },
                _ => unreachable!("clap requires one"),
            };
            let p = conn.present(&did, &PresentRequest { disclose, challenge })?;
            let shown: Vec<String> = p.disclosed.iter().map(|c| format!("{}={}", c.name, c.value)).collect();
            Done::new(&p, shown.join("\n"))
        }
        Command::Vc(VcCmd::List { did }) => {
            let held = connect()?.held_credentials(&did)?;
            let text = held.iter().map(|vc| format!("{} from {}", vc.digest(), vc.issuer_did)).collect::<Vec<_>>().join("\n");
            Done::new(&held, text)
        }
        Command::Submit(a) => {
            let mut conn = connect()?;
            let ms = file_digest(&a.manuscript.manuscript, a.manuscript.manuscript_digest)?;
            let req = prepare_submission(&mut conn, ms, &a.author, a.role, &a.coauthors)?;
            let update = conn.submit(&req)?;
            Done::new(&update, submission_text(&update.submission))
        }
        Command::Consent { decision, did, submission } => {
            let mut conn = connect()?;
            let rec = conn.sign_consent(&did, &SignConsentRequest { submission_id: submission, decision, manuscript_digest: None, role: None })?;
            let update = conn.record_consent(&submission, &rec)?;
            Done::new(&update, submission_text(&update.submission))
        }
        Command::Journal(JournalCmd::Submissions(SubmissionsCmd::Get { id })) => {
            let s = connect()?.submission(&id)?;
            Done::new(&s, submission_text(&s))
        }
        Command::Journal(JournalCmd::Submissions(SubmissionsCmd::List { pending_for })) => {
            let list = connect()?.submissions(pending_for.as_ref())?;
            Done::new(&list, list.iter().map(submission_text).collect::<Vec<_>>().join("\n"))
        }
        Command::Alert(AlertCmd::Resolve { submission, alert, action }) => {
            let update = connect()?.resolve_alert(&submission, alert, action)?;
            Done::new(&update, submission_text(&update.submission))
        }
        Command::Reviewer(ReviewerCmd::Assign { submission, reviewer, conflicts, disclose }) => {
            let mut conn = connect()?;
            let p = conn.present(&reviewer, &PresentRequest { disclose, challenge: ChallengeSpec::Review { submission_id: submission } })?;
            let created = conn.assign_reviewer(
                &submission,
                &AssignRequest { reviewer_did: reviewer, expertise_presentation: p, conflict_set: conflicts },
            )?;
            Done::new(&created, format!("assignment {}", created.assignment.id_hex()))
        }
        Command::Coi(CoiCmd::Run { assignment }) => {
            let run = connect()?.run_coi(&assignment)?;
            let text = format!(
                "{} (|∩| = {}) session {}",
                run.assignment.coi_status,
                run.transcript.outcome.intersection_cardinality,
                hex::encode(run.transcript.session_id)
            );
            Done::new(&run, text)
        }
        Command::Coi(CoiCmd::Verify { session }) => {
            let t = connect()?.coi_transcript(&session)?;
            let replay_valid = verify_transcript(&t, &t.journal_commitment).unwrap_or(false);
            let digest_matches = t.compute_digest() == t.outcome.transcript_digest;
            let passed = replay_valid && digest_matches;
            let value = json!({
                "session_id": hex::encode(session),
                "replay_valid": replay_valid,
                "digest_matches": digest_matches,
                "clear": t.outcome.clear,
                "intersection_cardinality": t.outcome.intersection_cardinality,
                "passed": passed,
            });
            let text = format!("replay {} digest {} clear {}", replay_valid, digest_matches, t.outcome.clear);
            Done::new(&value, text).failing_unless(passed)
        }
        Command::Review(a) => {
            let review_digest = file_digest(&a.review.review, a.review.review_digest)?;
            let update = connect()?.record_review(
                &a.submission,
                &ReviewRequest { reviewer_did: a.reviewer, review_digest, recommendation: a.recommendation },
            )?;
            Done::new(&update, submission_text(&update.submission))
        }
        Command::Decide { submission, decision } => {
            let update = connect()?.decide(&submission, decision)?;
            Done::new(&update, submission_text(&update.submission))
        }
        Command::Publish { submission, out } => {
            let doc = connect()?.publish(&submission)?;
            if let Some(path) = out {
                std::fs::write(&path, &doc.to_bytes().0).map_err(|e| api("Io", format!("{}: {e}", path.display())))?;
            }
            Done::new(&doc, format!("{} metadata digest {}", doc.file_name(), doc.metadata.digest()))
        }
        Command::VerifyPublication { submission, file } => {
            let mut conn = connect()?;
            let bytes = match (file, submission) {
                (Some(p), _) => read_input(&p)?,
                (None, Some(id)) => conn.publication_document(&id)?,
                (None, None) => unreachable!("clap requires one"),
            };
            let headers = conn.headers()?;
            let report = verify_publication(&headers, &bytes).map_err(|e| api("ParseFailure", e.to_string()))?;
            let text = report.checks().iter().map(|(name, ok)| format!("{name:<28} {}", if *ok { "ok" } else { "FAIL" })).collect::<Vec<_>>();
            Done::new(&report, text.join("\n")).failing_unless(report.passed)
        }
        Command::Ledger(LedgerCmd::Head) => {
            let head = connect()?.head()?;
            Done::new(&head, format!("#{} {}", head.index, head.block_hash))
        }
        Command::Ledger(LedgerCmd::Audit) => {
            let report = match &cli.node {
                Some(_) => connect()?.audit()?,
                None => audit_data_dir(&local.data_dir)?,
            };
            let text = match (report.first_bad_block, &report.reason) {
                (Some(i), reason) => format!("ledger corrupt at block {i}: {}", reason.as_deref().unwrap_or("")),
                (None, _) => format!("ledger valid ({} blocks)", report.blocks_checked),
            };
            Done::new(&report, text).failing_unless(report.valid)
        }
        Command::Ledger(LedgerCmd::Block { index }) => {
            let block = match &cli.node {
                Some(url) => HttpBackend::new(url).get(&format!("/ledger/blocks/{index}"))?,
                None => serde_json::to_value(Node::open(local.to_config())?.block(index)?).expect("blocks serialize"),
            };
            let text = serde_json::to_string_pretty(&block).expect("json");
            Done { value: block, text, ok: true }
        }
        Command::Demo { seed } => {
            let outcome = match &cli.node {
                Some(url) => run_demo(&mut Conn::from_target(Target::Remote(HttpBackend::new(url))), seed)?,
                None => run_local_demo(seed)?.1,
            };
            let passed = outcome.report.passed;
            Done::new(&outcome, demo_text(&outcome)).failing_unless(passed)
        }
        Command::TamperDemo { seed, block } => tamper_demo(&local.data_dir, seed, block)?,
        Command::Serve { listen } => {
            authcred_node::init_tracing();
            serve_blocking(ServeConfig { node: local.to_config(), listen }).map_err(|e| api("Serve", e.to_string()))?;
            Done::new(&Value::Null, "stopped")
        }
    })
}

fn tamper_demo(dir: &Path, seed: u64, block: Option<usize>) -> Result<Done, ApiError> {
    let path = authcred::node::ledger_file(dir);
    if path.exists() {
        return Err(api("Refused", format!("{} already exists; tamper-demo needs a fresh --data-dir", path.display())));
    }
    let config = NodeConfig { data_dir: Some(dir.to_path_buf()), ..NodeConfig::seeded(seed) };
    let outcome = run_demo(&mut Node::open(config)?, seed)?;
    let mut bytes = std::fs::read(&path).map_err(|e| api("Io", e.to_string()))?;
    let offsets = record_offsets(&bytes);
    let target = block.unwrap_or(offsets.len() / 2);
    let start = *offsets.get(target).ok_or_else(|| api("NotFound", format!("block {target} of {}", offsets.len())))?;
    let end = offsets.get(target + 1).copied().unwrap_or(bytes.len());
    let at = start + 4 + (end - start - 4) / 2;
    bytes[at] ^= 0x01;
    std::fs::write(&path, &bytes).map_err(|e| api("Io", e.to_string()))?;
    let report = audit_data_dir(dir)?;
    let detected = report.first_bad_block.is_some_and(|b| b <= target as u64);
    let value = json!({ "head_before": outcome.head.block_hash, "corrupted_block": target, "byte_offset": at, "audit": report });
    let text = format!(
        "flipped byte {at} in block {target}; audit reports block {}",
        report.first_bad_block.map(|b| b.to_string()).unwrap_or_else(|| "none".into())
    );
    Ok(Done::new(&value, text).failing_unless(detected))
}

fn print(line: &[u8]) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line).and_then(|_| out.write_all(b"\n"));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let output = cli.output;
    match run(cli) {
        Ok(done) => {
            match output {
                Output::Json => print(&to_canonical_bytes(&done.value).expect("command output is canonical JSON")),
                Output::Text => print(done.text.as_bytes()),
            }
            if done.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) if e.code == "Usage" => {
            eprintln!("error: {}", e.message);
            ExitCode::from(2)
        }
        Err(e) => {
            match output {
                Output::Json => eprintln!("{}", serde_json::to_string(&e).expect("json")),
                Output::Text => eprintln!("error: {e}"),
            }
            ExitCode::from(1)
        }
    }
}
