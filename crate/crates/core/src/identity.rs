//! Decentralized identifiers: creation, registration on the trust registry,
//! and anchored resolution.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::canonical::{canonical_digest, to_canonical_bytes};
use crate::crypto::{tagged_hash, Digest, KeyPair, PublicKey};
use crate::registry::{EntryKind, LedgerEntry, LedgerReceipt, RegistryError, TrustRegistry};

pub const DID_METHOD: &str = "authcred";

const TAG_DID: &str = "authcred/did/v1";
const TAG_DID_DOCUMENT: &str = "authcred/did-document/v1";

#[derive(Debug, Error)]
pub enum IdentityError {
    #[error("malformed DID {0:?}")]
    MalformedDid(String),
    #[error("{0} is already registered")]
    DuplicateDid(Did),
    #[error("document for {0} is inconsistent with its verification key")]
    InconsistentDocument(Did),
    #[error("{0} is not registered")]
    NotFound(Did),
    #[error("stored document for {0} no longer matches its ledger anchor")]
    AnchorMismatch(Did),
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

/// `did:<method>:<id>` where `id` is base58 of the first 16 bytes of the
/// tagged SHA-256 of the controller's public key.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Did {
    method: String,
    id: String,
}

impl Did {
    pub fn from_public_key(method: &str, key: &PublicKey) -> Did {
        Did { method: method.to_string(), id: derive_did_id(key) }
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn is_controlled_by(&self, key: &PublicKey) -> bool {
        self.id == derive_did_id(key)
    }
}

pub fn derive_did_id(key: &PublicKey) -> String {
    let digest = tagged_hash(TAG_DID, &[key.as_bytes()]);
    bs58::encode(&digest.as_bytes()[..16]).into_string()
}

impl fmt::Display for Did {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "did:{}:{}", self.method, self.id)
    }
}

impl fmt::Debug for Did {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Did({self})")
    }
}

impl FromStr for Did {
    type Err = IdentityError;

    fn from_str(s: &str) -> Result<Did, IdentityError> {
        let bad = || IdentityError::MalformedDid(s.to_string());
        let rest = s.strip_prefix("did:").ok_or_else(bad)?;
        let (method, id) = rest.split_once(':').ok_or_else(bad)?;
        let method_ok = !method.is_empty() && method.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit());
        let id_ok = !id.is_empty() && bs58::decode(id).into_vec().is_ok();
        if !method_ok || !id_ok {
            return Err(bad());
        }
        Ok(Did { method: method.to_string(), id: id.to_string() })
    }
}

impl Serialize for Did {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Did {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Did, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DidDocument {
    pub did: Did,
    pub verification_key: PublicKey,
    pub created_at: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub service_endpoint: Option<String>,
}

impl DidDocument {
    pub fn is_consistent(&self) -> bool {
        self.did.is_controlled_by(&self.verification_key) && self.created_at > 0
    }

    /// The value anchored on the ledger for this document.
    pub fn digest(&self) -> Digest {
        canonical_digest(TAG_DID_DOCUMENT, self).expect("documents are canonicalizable")
    }
}

pub(crate) fn document_path(did: &Did) -> String {
    format!("dids/{}.json", did.id())
}

pub fn create_did(keypair: &KeyPair, method: &str, created_at: u64) -> (Did, DidDocument) {
    let did = Did::from_public_key(method, &keypair.public_key());
    let doc = DidDocument {
        did: did.clone(),
        verification_key: keypair.public_key(),
        created_at: created_at.max(1),
        service_endpoint: None,
    };
    (did, doc)
}

/// Anchors the document digest on the ledger and keeps the full document in
/// the node-local store.
pub fn register_did(registry: &mut TrustRegistry, doc: &DidDocument, now: u64) -> Result<LedgerReceipt, IdentityError> {
    if !doc.is_consistent() {
        return Err(IdentityError::InconsistentDocument(doc.did.clone()));
    }
    let key = doc.did.to_string();
    if !registry.ledger.query(EntryKind::DidRegistration, &key).is_empty() {
        return Err(IdentityError::DuplicateDid(doc.did.clone()));
    }
    let entry = LedgerEntry::new(EntryKind::DidRegistration, key, doc.digest(), now);
    let receipt = registry.ledger.append_one(entry, now)?;
    let bytes = to_canonical_bytes(doc).expect("documents are canonicalizable");
    registry.documents.put(&document_path(&doc.did), bytes)?;
    Ok(receipt)
}

pub fn resolve_did(registry: &TrustRegistry, did: &Did) -> Result<DidDocument, IdentityError> {
    let anchored = registry.ledger.query(EntryKind::DidRegistration, &did.to_string());
    let (entry, _) = anchored.first().ok_or_else(|| IdentityError::NotFound(did.clone()))?;
    let mismatch = || IdentityError::AnchorMismatch(did.clone());
    let bytes = registry.documents.get(&document_path(did)).ok_or_else(mismatch)?;
    let doc: DidDocument = serde_json::from_slice(bytes).map_err(|_| mismatch())?;
    if doc.digest() != entry.payload_digest || doc.did != *did || !doc.is_consistent() {
        return Err(mismatch());
    }
    Ok(doc)
}

/// Ledger receipt of a DID's registration entry.
pub fn registration_receipt(registry: &TrustRegistry, did: &Did) -> Result<LedgerReceipt, IdentityError> {
    let anchored = registry.ledger.query(EntryKind::DidRegistration, &did.to_string());
    let (entry, block) = anchored.first().ok_or_else(|| IdentityError::NotFound(did.clone()))?;
    Ok(registry.ledger.receipt_for(*block, &entry.digest())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn keypair(b: u8) -> KeyPair {
        KeyPair::generate(Some(&[b; 32])).unwrap()
    }

    #[test]
    fn did_is_deterministic_and_parses() {
        let (a, _) = create_did(&keypair(1), DID_METHOD, 5);
        let (b, _) = create_did(&keypair(1), DID_METHOD, 9);
        assert_eq!(a, b);
        assert!(a.to_string().starts_with("did:authcred:"));
        assert_eq!(a.to_string().parse::<Did>().unwrap(), a);
        let (c, _) = create_did(&keypair(2), DID_METHOD, 5);
        assert_ne!(a, c);
    }

    #[test]
    fn malformed_dids_rejected() {
        for bad in ["", "did:", "did:authcred", "did:authcred:", "did:Auth:abc", "did:authcred:0OIl", "x:authcred:abc"] {
            assert!(bad.parse::<Did>().is_err(), "{bad}");
        }
    }

    #[test]
    fn register_then_resolve() {
        let mut reg = TrustRegistry::in_memory(1);
        let (did, doc) = create_did(&keypair(1), DID_METHOD, 5);
        let r1 = register_did(&mut reg, &doc, 10).unwrap();
        assert_eq!(resolve_did(&reg, &did).unwrap(), doc);
        let (_, doc2) = create_did(&keypair(2), DID_METHOD, 5);
        let r2 = register_did(&mut reg, &doc2, 11).unwrap();
        assert!(r2.block_index > r1.block_index);
        assert!(matches!(register_did(&mut reg, &doc, 12), Err(IdentityError::DuplicateDid(_))));
        assert_eq!(registration_receipt(&reg, &did).unwrap(), r1);
    }

    #[test]
    fn inconsistent_document_rejected() {
        let mut reg = TrustRegistry::in_memory(1);
        let (_, mut doc) = create_did(&keypair(1), DID_METHOD, 5);
        doc.verification_key = keypair(2).public_key();
        assert!(matches!(register_did(&mut reg, &doc, 10), Err(IdentityError::InconsistentDocument(_))));
    }

    #[test]
    fn unknown_did_not_found() {
        let reg = TrustRegistry::in_memory(1);
        let (did, _) = create_did(&keypair(1), DID_METHOD, 5);
        assert!(matches!(resolve_did(&reg, &did), Err(IdentityError::NotFound(_))));
    }

    #[test]
    fn tampered_store_detected_for_every_byte() {
        let mut reg = TrustRegistry::in_memory(1);
        let (did, doc) = create_did(&keypair(3), DID_METHOD, 5);
        register_did(&mut reg, &doc, 10).unwrap();
        let path = document_path(&did);
        let len = reg.documents.get(&path).unwrap().len();
        for i in 0..len {
            reg.documents.get_mut(&path).unwrap()[i] ^= 0x20;
            assert!(matches!(resolve_did(&reg, &did), Err(IdentityError::AnchorMismatch(_))), "byte {i}");
            reg.documents.get_mut(&path).unwrap()[i] ^= 0x20;
        }
        assert!(resolve_did(&reg, &did).is_ok());
    }

    #[test]
    fn ledger_never_holds_private_keys() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(11);
        let mut reg = TrustRegistry::in_memory(1);
        let mut secrets = Vec::new();
        for i in 0..100u8 {
            let kp = KeyPair::from_rng(&mut rng);
            let (_, doc) = create_did(&kp, DID_METHOD, 5);
            if register_did(&mut reg, &doc, 10 + i as u64).is_ok() {
                secrets.push(kp.secret_bytes());
            }
        }
        let ledger = reg.ledger.to_bytes();
        let docs: Vec<u8> = reg.documents.paths_with_prefix("").flat_map(|p| reg.documents.get(p).unwrap().to_vec()).collect();
        for s in &secrets {
            assert!(!ledger.windows(32).any(|w| w == s));
            assert!(!docs.windows(32).any(|w| w == s));
            let b64 = base64::Engine::encode(&base64::engine::general_purpose::STANDARD, s);
            let needle = &b64.as_bytes()[..40];
            assert!(!ledger.windows(needle.len()).any(|w| w == needle));
        }
    }
}
