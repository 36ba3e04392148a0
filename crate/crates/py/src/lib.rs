//! Python bindings. Structured results cross the boundary as plain
//! dicts and lists built from their canonical JSON form.

use std::path::PathBuf;

use authcred::canonical::{canonicalize_value, to_canonical_bytes};
use authcred::coi::{run_dh_session, ConflictSet};
use authcred::credentials::VerifiableCredential;
use authcred::crypto::{self, tagged_hash};
use authcred::identity::DID_METHOD;
use authcred::metadata;
use authcred::node::{parse_id, ClaimInput, IssueRequest, Node, NodeConfig};
use authcred::registry::{verify_chain_bytes, BlockHeader};
use authcred::scenario::run_local_demo;
use authcred::Did;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyBytes;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

create_exception!(authcred_py, AuthcredError, PyException);

fn fail(e: impl std::fmt::Display) -> PyErr {
    AuthcredError::new_err(e.to_string())
}

fn node_fail(e: authcred::node::NodeError) -> PyErr {
    AuthcredError::new_err(format!("{}: {e}", e.code()))
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let bytes = to_canonical_bytes(value).map_err(fail)?;
    let text = String::from_utf8(bytes).map_err(fail)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn from_py<T: serde::de::DeserializeOwned>(py: Python<'_>, value: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = py.import("json")?.call_method1("dumps", (value,))?.extract()?;
    serde_json::from_str(&text).map_err(fail)
}

fn did(text: &str) -> PyResult<Did> {
    text.parse().map_err(fail)
}

/// An Ed25519 signing key.
#[pyclass(name = "KeyPair")]
struct PyKeyPair(crypto::KeyPair);

#[pymethods]
impl PyKeyPair {
    /// A fresh key, or one derived from `seed` when given.
    #[new]
    #[pyo3(signature = (seed=None))]
    fn new(seed: Option<Vec<u8>>) -> PyResult<Self> {
        crypto::KeyPair::generate(seed.as_deref()).map(PyKeyPair).map_err(fail)
    }

    #[getter]
    fn public_key<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.0.public_key().as_bytes())
    }

    #[getter]
    fn did(&self) -> String {
        Did::from_public_key(DID_METHOD, &self.0.public_key()).to_string()
    }

    fn sign<'py>(&self, py: Python<'py>, message: &[u8]) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.0.sign(message).as_bytes())
    }
}

#[pyfunction]
fn verify(public_key: &[u8], message: &[u8], signature: &[u8]) -> PyResult<bool> {
    crypto::verify(public_key, message, signature).map_err(fail)
}

#[pyfunction]
fn did_for_key(public_key: &[u8]) -> PyResult<String> {
    let key = crypto::PublicKey::from_bytes(public_key).map_err(fail)?;
    Ok(Did::from_public_key(DID_METHOD, &key).to_string())
}

#[pyfunction(name = "tagged_hash")]
fn py_tagged_hash<'py>(py: Python<'py>, tag: &str, parts: Vec<Vec<u8>>) -> Bound<'py, PyBytes> {
    let parts: Vec<&[u8]> = parts.iter().map(Vec::as_slice).collect();
    PyBytes::new(py, tagged_hash(tag, &parts).as_bytes())
}

/// Canonical JSON bytes of any JSON-compatible value.
#[pyfunction]
fn canonical_json<'py>(py: Python<'py>, value: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyBytes>> {
    let value: serde_json::Value = from_py(py, value)?;
    Ok(PyBytes::new(py, &canonicalize_value(&value).map_err(fail)?))
}

/// Audits a persisted ledger file's bytes.
#[pyfunction]
fn verify_chain(py: Python<'_>, data: &[u8]) -> PyResult<Py<PyAny>> {
    to_py(py, &verify_chain_bytes(data))
}

/// Checks a publication sidecar against a list of block headers.
#[pyfunction]
fn verify_publication(py: Python<'_>, headers: &Bound<'_, PyAny>, document: &[u8]) -> PyResult<Py<PyAny>> {
    let headers: Vec<BlockHeader> = from_py(py, headers)?;
    to_py(py, &metadata::verify_publication(&headers, document).map_err(fail)?)
}

/// Size of the intersection of two conflict sets, computed with the
/// blinded two-party protocol.
#[pyfunction]
#[pyo3(signature = (journal, reviewer, seed=0))]
fn coi_intersection(journal: Vec<String>, reviewer: Vec<String>, seed: u64) -> PyResult<u64> {
    let j = ConflictSet::new(&journal).map_err(fail)?;
    let r = ConflictSet::new(&reviewer).map_err(fail)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let session = run_dh_session(&j, &r, [0; 16], &mut rng).map_err(fail)?;
    Ok(session.outcome.intersection_cardinality)
}

/// A node holding a registry and wallet, in memory or on disk.
#[pyclass(name = "Node", unsendable)]
struct PyNode(Node);

#[pymethods]
impl PyNode {
    #[new]
    #[pyo3(signature = (seed=None, data_dir=None, passphrase=None))]
    fn new(seed: Option<u64>, data_dir: Option<PathBuf>, passphrase: Option<String>) -> PyResult<Self> {
        let mut config = NodeConfig { seed, data_dir, ..NodeConfig::default() };
        if let Some(p) = passphrase {
            config.wallet_passphrase = p;
        }
        Node::open(config).map(PyNode).map_err(node_fail)
    }

    /// Runs the end-to-end scenario on a fresh seeded node and returns the
    /// node with the outcome.
    #[staticmethod]
    fn demo(py: Python<'_>, seed: u64) -> PyResult<(PyNode, Py<PyAny>)> {
        let (node, outcome) = run_local_demo(seed).map_err(|e| fail(format!("{}: {}", e.code, e.message)))?;
        Ok((PyNode(node), to_py(py, &outcome)?))
    }

    fn create_identity(&mut self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.0.create_identity().map_err(node_fail)?)
    }

    fn resolve_did(&self, py: Python<'_>, subject: &str) -> PyResult<Py<PyAny>> {
        to_py(py, &self.0.resolve_did(&did(subject)?).map_err(node_fail)?)
    }

    #[pyo3(signature = (issuer, subject, claims, validity_days=None))]
    fn issue_credential(
        &mut self,
        py: Python<'_>,
        issuer: &str,
        subject: &str,
        claims: Vec<(String, String)>,
        validity_days: Option<u64>,
    ) -> PyResult<Py<PyAny>> {
        let req = IssueRequest {
            issuer_did: did(issuer)?,
            subject_did: did(subject)?,
            claims: claims.into_iter().map(|(name, value)| ClaimInput { name, value }).collect(),
            validity_days,
        };
        to_py(py, &self.0.issue_credential(&req).map_err(node_fail)?)
    }

    fn verify_credential(&self, py: Python<'_>, credential: &Bound<'_, PyAny>) -> PyResult<Py<PyAny>> {
        let vc: VerifiableCredential = from_py(py, credential)?;
        to_py(py, &self.0.verify_credential(&vc))
    }

    fn submissions(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.0.submissions(None))
    }

    fn publication_document<'py>(&self, py: Python<'py>, submission_id: &str) -> PyResult<Bound<'py, PyBytes>> {
        let id = parse_id(submission_id).map_err(node_fail)?;
        Ok(PyBytes::new(py, &self.0.publication_document(&id).map_err(node_fail)?))
    }

    fn head(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.0.head())
    }

    fn headers(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.0.headers())
    }

    fn audit(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.0.audit().map_err(node_fail)?)
    }
}

#[pymodule]
fn authcred_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("AuthcredError", m.py().get_type::<AuthcredError>())?;
    m.add_class::<PyKeyPair>()?;
    m.add_class::<PyNode>()?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(did_for_key, m)?)?;
    m.add_function(wrap_pyfunction!(py_tagged_hash, m)?)?;
    m.add_function(wrap_pyfunction!(canonical_json, m)?)?;
    m.add_function(wrap_pyfunction!(verify_chain, m)?)?;
    m.add_function(wrap_pyfunction!(verify_publication, m)?)?;
    m.add_function(wrap_pyfunction!(coi_intersection, m)?)?;
    Ok(())
}
