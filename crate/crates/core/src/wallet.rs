//! Holder wallet: private keys and held credentials, encrypted at rest.
//!
//! Keys never leave the wallet. Callers ask it to sign consent or build a
//! presentation and get back only the signed artifact.
//!
//! File layout (JSON): `{"version":1,"kdf_rounds":N,"salt":b64,"nonce":b64,"ciphertext":b64}`,
//! where the plaintext is the JSON list of entries and the key is
//! PBKDF2-HMAC-SHA256(passphrase, salt, N) used with ChaCha20-Poly1305.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use chacha20poly1305::aead::{Aead, KeyInit};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use thiserror::Error;

use crate::canonical::{b64, b64_array};
use crate::credentials::{create_presentation, CredentialError, Presentation, VerifiableCredential};
use crate::crypto::{Digest, KeyPair, SEED_LEN};
use crate::identity::{create_did, Did, DidDocument, DID_METHOD};
use crate::workflow::{ConsentDecision, ConsentRecord, ContributionRole};

pub const DEFAULT_KDF_ROUNDS: u32 = 100_000;

#[derive(Debug, Error)]
pub enum WalletError {
    #[error("wallet holds no key for {0}")]
    UnknownDid(Did),
    #[error("wrong passphrase or damaged wallet file")]
    WrongPassphrase,
    #[error("wallet file is malformed: {0}")]
    Malformed(String),
    #[error("no held credential discloses all of {0:?}")]
    NoMatchingCredential(Vec<String>),
    #[error("credential subject {0} is not held here")]
    NotHolder(Did),
    #[error(transparent)]
    Credential(#[from] CredentialError),
    #[error("wallet io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Serialize, Deserialize)]
struct Entry {
    did: Did,
    #[serde(with = "b64_array")]
    secret: [u8; SEED_LEN],
    created_at: u64,
    credentials: Vec<VerifiableCredential>,
}

#[derive(Serialize, Deserialize)]
struct Sealed {
    version: u32,
    kdf_rounds: u32,
    #[serde(with = "b64")]
    salt: Vec<u8>,
    #[serde(with = "b64")]
    nonce: Vec<u8>,
    #[serde(with = "b64")]
    ciphertext: Vec<u8>,
}

struct Held {
    keypair: KeyPair,
    created_at: u64,
    credentials: Vec<VerifiableCredential>,
}

struct Backing {
    path: PathBuf,
    salt: [u8; 16],
    rounds: u32,
    key: [u8; 32],
}

pub struct WalletStore {
    held: BTreeMap<Did, Held>,
    backing: Option<Backing>,
}

impl std::fmt::Debug for WalletStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WalletStore").field("dids", &self.held.keys().collect::<Vec<_>>()).finish_non_exhaustive()
    }
}

fn derive_key(passphrase: &str, salt: &[u8], rounds: u32) -> [u8; 32] {
    let mut key = [0u8; 32];
    pbkdf2::pbkdf2_hmac::<Sha256>(passphrase.as_bytes(), salt, rounds, &mut key);
    key
}

impl WalletStore {
    pub fn in_memory() -> WalletStore {
        WalletStore { held: BTreeMap::new(), backing: None }
    }

    /// Opens the wallet at `path`, creating an empty one if absent.
    pub fn open<R: RngCore + CryptoRng>(
        path: &Path,
        passphrase: &str,
        rounds: u32,
        rng: &mut R,
    ) -> Result<WalletStore, WalletError> {
        if !path.exists() {
            let mut salt = [0u8; 16];
            rng.fill_bytes(&mut salt);
            let key = derive_key(passphrase, &salt, rounds);
            let wallet = WalletStore {
                held: BTreeMap::new(),
                backing: Some(Backing { path: path.to_path_buf(), salt, rounds, key }),
            };
            wallet.save(rng)?;
            return Ok(wallet);
        }
        let sealed: Sealed =
            serde_json::from_slice(&fs::read(path)?).map_err(|e| WalletError::Malformed(e.to_string()))?;
        let salt: [u8; 16] = sealed.salt.as_slice().try_into().map_err(|_| WalletError::Malformed("salt".into()))?;
        if sealed.nonce.len() != 12 {
            return Err(WalletError::Malformed("nonce".into()));
        }
        let key = derive_key(passphrase, &salt, sealed.kdf_rounds);
        let cipher = ChaCha20Poly1305::new(Key::from_slice(&key));
        let plain = cipher
            .decrypt(Nonce::from_slice(&sealed.nonce), sealed.ciphertext.as_slice())
            .map_err(|_| WalletError::WrongPassphrase)?;
        let entries: Vec<Entry> = serde_json::from_slice(&plain).map_err(|e| WalletError::Malformed(e.to_string()))?;
        let held = entries
            .into_iter()
            .map(|e| {
                let h = Held { keypair: KeyPair::from_secret(&e.secret), created_at: e.created_at, credentials: e.credentials };
                (e.did, h)
            })
            .collect();
        Ok(WalletStore {
            held,
            backing: Some(Backing { path: path.to_path_buf(), salt, rounds: sealed.kdf_rounds, key }),
        })
    }

    fn save<R: RngCore + CryptoRng>(&self, rng: &mut R) -> Result<(), WalletError> {
        let Some(b) = &self.backing else { return Ok(()) };
        let entries: Vec<Entry> = self
            .held
            .iter()
            .map(|(did, h)| Entry {
                did: did.clone(),
                secret: h.keypair.secret_bytes(),
                created_at: h.created_at,
                credentials: h.credentials.clone(),
            })
            .collect();
        let plain = serde_json::to_vec(&entries).expect("entries serialize");
        let mut nonce = [0u8; 12];
        rng.fill_bytes(&mut nonce);
        let cipher = ChaCha20Poly1305::new(Key::from_slice(&b.key));
        let ciphertext = cipher.encrypt(Nonce::from_slice(&nonce), plain.as_slice()).expect("encryption cannot fail");
        let sealed = Sealed { version: 1, kdf_rounds: b.rounds, salt: b.salt.to_vec(), nonce: nonce.to_vec(), ciphertext };
        let tmp = b.path.with_extension("tmp");
        fs::write(&tmp, serde_json::to_vec(&sealed).expect("sealed serializes"))?;
        fs::rename(&tmp, &b.path)?;
        Ok(())
    }

    /// Generates a key pair and returns its DID document. The caller
    /// registers the document.
    pub fn create_identity<R: RngCore + CryptoRng>(&mut self, now: u64, rng: &mut R) -> Result<DidDocument, WalletError> {
        let keypair = KeyPair::from_rng(rng);
        let (did, doc) = create_did(&keypair, DID_METHOD, now);
        self.held.insert(did, Held { keypair, created_at: doc.created_at, credentials: Vec::new() });
        self.save(rng)?;
        Ok(doc)
    }

    pub fn dids(&self) -> impl Iterator<Item = &Did> {
        self.held.keys()
    }

    pub fn holds(&self, did: &Did) -> bool {
        self.held.contains_key(did)
    }

    fn get(&self, did: &Did) -> Result<&Held, WalletError> {
        self.held.get(did).ok_or_else(|| WalletError::UnknownDid(did.clone()))
    }

    pub fn document(&self, did: &Did) -> Result<DidDocument, WalletError> {
        let h = self.get(did)?;
        let (_, doc) = create_did(&h.keypair, did.method(), h.created_at);
        Ok(doc)
    }

    /// Runs `f` with the signing key for `did`. Crate-internal so keys stay
    /// inside the library.
    pub(crate) fn with_key<T>(&self, did: &Did, f: impl FnOnce(&KeyPair) -> T) -> Result<T, WalletError> {
        Ok(f(&self.get(did)?.keypair))
    }

    pub fn add_credential<R: RngCore + CryptoRng>(&mut self, vc: VerifiableCredential, rng: &mut R) -> Result<(), WalletError> {
        let h = self.held.get_mut(&vc.subject_did).ok_or_else(|| WalletError::NotHolder(vc.subject_did.clone()))?;
        if !h.credentials.contains(&vc) {
            h.credentials.push(vc);
        }
        self.save(rng)
    }

    pub fn credentials(&self, did: &Did) -> Result<&[VerifiableCredential], WalletError> {
        Ok(&self.get(did)?.credentials)
    }

    pub fn sign_consent(
        &self,
        did: &Did,
        submission_id: [u8; 16],
        manuscript_digest: &Digest,
        role: ContributionRole,
        decision: ConsentDecision,
        now: u64,
    ) -> Result<ConsentRecord, WalletError> {
        self.with_key(did, |kp| ConsentRecord::sign(kp, did.clone(), submission_id, manuscript_digest, role, decision, now))
    }

    /// Presents the most recently added credential that carries every
    /// requested claim.
    pub fn present<S: AsRef<str>>(&self, did: &Did, disclose: &[S], challenge: [u8; 32]) -> Result<Presentation, WalletError> {
        let h = self.get(did)?;
        let vc = h
            .credentials
            .iter()
            .rev()
            .find(|vc| disclose.iter().all(|n| vc.claim(n.as_ref()).is_some()))
            .ok_or_else(|| WalletError::NoMatchingCredential(disclose.iter().map(|s| s.as_ref().to_string()).collect()))?;
        Ok(create_presentation(vc, disclose, &h.keypair, challenge)?)
    }

    /// Whether any held secret key appears in `haystack` as raw bytes, hex or
    /// base64. For leak audits; the secrets themselves are not exposed.
    pub fn secret_appears_in(&self, haystack: &[u8]) -> bool {
        self.held.values().any(|h| {
            let s = h.keypair.secret_bytes();
            let hex = hex::encode(s);
            let b64 = STANDARD.encode(s);
            contains(haystack, &s) || contains(haystack, hex.as_bytes()) || contains(haystack, &b64.as_bytes()[..40])
        })
    }
}

fn contains(haystack: &[u8], needle: &[u8]) -> bool {
    haystack.windows(needle.len()).any(|w| w == needle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn reopen_with_passphrase() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("wallet.json");
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let mut w = WalletStore::open(&path, "hunter2", 1_000, &mut rng).unwrap();
        let doc = w.create_identity(5, &mut rng).unwrap();
        let on_disk = fs::read(&path).unwrap();
        assert!(w.secret_appears_in(&w.with_key(&doc.did, |k| k.secret_bytes()).unwrap()));
        assert!(!w.secret_appears_in(&on_disk));

        let again = WalletStore::open(&path, "hunter2", 1_000, &mut rng).unwrap();
        assert_eq!(again.document(&doc.did).unwrap(), doc);
        assert!(matches!(WalletStore::open(&path, "hunter3", 1_000, &mut rng), Err(WalletError::WrongPassphrase)));
    }

    #[test]
    fn unknown_did_and_missing_credential() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let mut w = WalletStore::in_memory();
        let doc = w.create_identity(5, &mut rng).unwrap();
        let other = KeyPair::generate(Some(&[9; 32])).unwrap();
        let (stranger, _) = create_did(&other, DID_METHOD, 1);
        assert!(matches!(w.document(&stranger), Err(WalletError::UnknownDid(_))));
        assert!(matches!(w.present(&doc.did, &["affiliation"], [0; 32]), Err(WalletError::NoMatchingCredential(_))));
    }

    #[test]
    fn consent_signed_inside_wallet_verifies() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let mut w = WalletStore::in_memory();
        let doc = w.create_identity(5, &mut rng).unwrap();
        let ms = Digest([7; 32]);
        let rec = w.sign_consent(&doc.did, [1; 16], &ms, ContributionRole::Software, ConsentDecision::Grant, 9).unwrap();
        assert!(rec.verify_with(&doc.verification_key, &ms));
    }
}
