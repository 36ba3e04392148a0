//! Verifiable credentials with per-claim salted commitments.
//!
//! The issuer signs the commitment vector, never the raw claim values, so a
//! holder can later open any subset of commitments to a verifier. A holder
//! signature over a verifier-chosen challenge binds each presentation to one
//! verification session.

use std::collections::{BTreeMap, BTreeSet};

use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::{b64_array, canonical_digest, to_canonical_bytes};
use crate::crypto::{commit, open_commitment, random_salt, Commitment, Digest, KeyPair, Signature, SALT_LEN};
use crate::identity::{resolve_did, Did, DidDocument};
use crate::registry::{EntryKind, LedgerEntry, LedgerReceipt, RegistryError, TrustRegistry};

const TAG_ISSUER_SIG: &str = "authcred/vc-issuer/v1";
const TAG_HOLDER_SIG: &str = "authcred/vc-holder/v1";
const TAG_CREDENTIAL: &str = "authcred/credential/v1";

pub const SECONDS_PER_DAY: u64 = 86_400;
pub const DEFAULT_VALIDITY_DAYS: u64 = 365;

/// Claims a journal asks for by default.
pub const DEFAULT_CLAIM_PROFILE: [&str; 3] = ["affiliation", "role", "expertise"];

#[derive(Debug, Error)]
pub enum CredentialError {
    #[error("issuer {0} is not registered")]
    UnknownIssuerDid(Did),
    #[error("subject {0} is not registered")]
    UnknownSubjectDid(Did),
    #[error("issuer key does not control {0}")]
    IssuerKeyMismatch(Did),
    #[error("duplicate claim name {0:?}")]
    DuplicateClaimName(String),
    #[error("credential has no claims")]
    EmptyClaims,
    #[error("invalid claim name {0:?}")]
    InvalidClaimName(String),
    #[error("credential must expire after it is issued")]
    InvalidValidity,
    #[error("issuer signature does not verify")]
    InvalidSignature,
    #[error("holder signature does not verify")]
    InvalidHolderSignature,
    #[error("credential already anchored")]
    DuplicateAnchor,
    #[error("credential has no claim named {0:?}")]
    UnknownClaimName(String),
    #[error("presentation was made for a different challenge")]
    ChallengeMismatch,
    #[error("disclosed claim at index {0} does not open its commitment")]
    CommitmentOpenFailure(usize),
    #[error("credential is outside its validity window")]
    StaleCredential,
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

fn resolve_issuer(registry: &TrustRegistry, did: &Did) -> Result<DidDocument, CredentialError> {
    resolve_did(registry, did).map_err(|_| CredentialError::UnknownIssuerDid(did.clone()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Validity {
    pub issued_at: u64,
    pub expires_at: u64,
}

impl Validity {
    pub fn days_from(issued_at: u64, days: u64) -> Validity {
        Validity { issued_at, expires_at: issued_at + days * SECONDS_PER_DAY }
    }

    pub fn contains(&self, now: u64) -> bool {
        self.issued_at <= now && now <= self.expires_at
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub name: String,
    pub value: String,
    #[serde(with = "b64_array")]
    pub salt: [u8; SALT_LEN],
}

/// Bytes a claim commitment opens to: `u32 BE name length ‖ name ‖ value`.
/// Binding the name stops a holder relabelling a disclosed value.
fn claim_bytes(name: &str, value: &str) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + name.len() + value.len());
    out.extend_from_slice(&(name.len() as u32).to_be_bytes());
    out.extend_from_slice(name.as_bytes());
    out.extend_from_slice(value.as_bytes());
    out
}

impl Claim {
    pub fn commitment(&self) -> Commitment {
        commit(&claim_bytes(&self.name, &self.value), &self.salt).expect("salt is fixed length")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifiableCredential {
    pub issuer_did: Did,
    pub subject_did: Did,
    pub claims: Vec<Claim>,
    pub claim_commitments: Vec<Commitment>,
    pub issued_at: u64,
    pub expires_at: u64,
    pub issuer_signature: Signature,
}

/// The part of a credential the issuer signs.
#[derive(Serialize)]
struct SignedSkeleton<'a> {
    issuer_did: &'a Did,
    subject_did: &'a Did,
    claim_commitments: &'a [Commitment],
    issued_at: u64,
    expires_at: u64,
}

fn issuer_message(issuer: &Did, subject: &Did, commitments: &[Commitment], validity: Validity) -> Vec<u8> {
    let skeleton = SignedSkeleton {
        issuer_did: issuer,
        subject_did: subject,
        claim_commitments: commitments,
        issued_at: validity.issued_at,
        expires_at: validity.expires_at,
    };
    let mut msg = TAG_ISSUER_SIG.as_bytes().to_vec();
    msg.extend(to_canonical_bytes(&skeleton).expect("skeleton is canonicalizable"));
    msg
}

impl VerifiableCredential {
    pub fn validity(&self) -> Validity {
        Validity { issued_at: self.issued_at, expires_at: self.expires_at }
    }

    /// Anchored value: tagged hash of the canonical credential.
    pub fn digest(&self) -> Digest {
        canonical_digest(TAG_CREDENTIAL, self).expect("credentials are canonicalizable")
    }

    pub fn anchor_key(&self) -> String {
        self.digest().to_hex()
    }

    fn signed_message(&self) -> Vec<u8> {
        issuer_message(&self.issuer_did, &self.subject_did, &self.claim_commitments, self.validity())
    }

    pub fn claim(&self, name: &str) -> Option<&Claim> {
        self.claims.iter().find(|c| c.name == name)
    }

    pub fn claims_match_commitments(&self) -> bool {
        self.claims.len() == self.claim_commitments.len()
            && self.claims.iter().zip(&self.claim_commitments).all(|(c, com)| c.commitment() == *com)
    }
}

fn valid_claim_name(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= 64
        && name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_' || b == b'.')
}

pub fn issue_credential<R: RngCore + CryptoRng>(
    registry: &TrustRegistry,
    issuer_keypair: &KeyPair,
    issuer_did: &Did,
    subject_did: &Did,
    claims: &[(String, String)],
    validity: Validity,
    rng: &mut R,
) -> Result<VerifiableCredential, CredentialError> {
    if claims.is_empty() {
        return Err(CredentialError::EmptyClaims);
    }
    let mut seen = BTreeSet::new();
    for (name, _) in claims {
        if !valid_claim_name(name) {
            return Err(CredentialError::InvalidClaimName(name.clone()));
        }
        if !seen.insert(name.as_str()) {
            return Err(CredentialError::DuplicateClaimName(name.clone()));
        }
    }
    if validity.expires_at <= validity.issued_at {
        return Err(CredentialError::InvalidValidity);
    }
    let issuer_doc = resolve_issuer(registry, issuer_did)?;
    if issuer_doc.verification_key != issuer_keypair.public_key() {
        return Err(CredentialError::IssuerKeyMismatch(issuer_did.clone()));
    }
    let claims: Vec<Claim> = claims
        .iter()
        .map(|(name, value)| Claim { name: name.clone(), value: value.clone(), salt: random_salt(rng) })
        .collect();
    let claim_commitments: Vec<Commitment> = claims.iter().map(Claim::commitment).collect();
    let message = issuer_message(issuer_did, subject_did, &claim_commitments, validity);
    Ok(VerifiableCredential {
        issuer_did: issuer_did.clone(),
        subject_did: subject_did.clone(),
        claims,
        claim_commitments,
        issued_at: validity.issued_at,
        expires_at: validity.expires_at,
        issuer_signature: issuer_keypair.sign(&message),
    })
}

fn issuer_signature_valid(registry: &TrustRegistry, issuer: &Did, message: &[u8], sig: &Signature) -> Result<bool, CredentialError> {
    let doc = resolve_issuer(registry, issuer)?;
    Ok(doc.verification_key.verify(message, sig))
}

pub fn anchor_credential(registry: &mut TrustRegistry, vc: &VerifiableCredential, now: u64) -> Result<LedgerReceipt, CredentialError> {
    if !issuer_signature_valid(registry, &vc.issuer_did, &vc.signed_message(), &vc.issuer_signature)? {
        return Err(CredentialError::InvalidSignature);
    }
    let key = vc.anchor_key();
    if !registry.ledger.query(EntryKind::CredentialAnchor, &key).is_empty() {
        return Err(CredentialError::DuplicateAnchor);
    }
    let entry = LedgerEntry::new(EntryKind::CredentialAnchor, key, vc.digest(), now);
    Ok(registry.ledger.append_one(entry, now)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub issuer_resolvable: bool,
    pub signature_valid: bool,
    pub anchored: bool,
    pub within_validity: bool,
    pub claims_match_commitments: bool,
    pub passed: bool,
}

pub fn verify_credential(registry: &TrustRegistry, vc: &VerifiableCredential, now: u64) -> VerificationReport {
    let issuer = resolve_did(registry, &vc.issuer_did).ok();
    let issuer_resolvable = issuer.is_some();
    let signature_valid = issuer
        .map(|doc| doc.verification_key.verify(&vc.signed_message(), &vc.issuer_signature))
        .unwrap_or(false);
    let digest = vc.digest();
    let anchored = registry
        .ledger
        .query(EntryKind::CredentialAnchor, &digest.to_hex())
        .iter()
        .any(|(e, _)| e.payload_digest == digest);
    let within_validity = vc.validity().contains(now) && vc.expires_at > vc.issued_at;
    let claims_match_commitments = vc.claims_match_commitments();
    VerificationReport {
        issuer_resolvable,
        signature_valid,
        anchored,
        within_validity,
        claims_match_commitments,
        passed: issuer_resolvable && signature_valid && anchored && within_validity && claims_match_commitments,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisclosedClaim {
    pub index: usize,
    pub name: String,
    pub value: String,
    #[serde(with = "b64_array")]
    pub salt: [u8; SALT_LEN],
}

/// A holder-built selective disclosure of one credential.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Presentation {
    pub issuer_did: Did,
    pub subject_did: Did,
    pub claim_commitments: Vec<Commitment>,
    pub issued_at: u64,
    pub expires_at: u64,
    pub issuer_signature: Signature,
    pub disclosed: Vec<DisclosedClaim>,
    #[serde(with = "b64_array")]
    pub challenge: [u8; 32],
    pub holder_signature: Signature,
}

#[derive(Serialize)]
struct HolderSigned<'a> {
    issuer_did: &'a Did,
    subject_did: &'a Did,
    claim_commitments: &'a [Commitment],
    issued_at: u64,
    expires_at: u64,
    issuer_signature: &'a Signature,
    disclosed: &'a [DisclosedClaim],
    #[serde(with = "b64_array")]
    challenge: [u8; 32],
}

impl Presentation {
    fn holder_message(&self) -> Vec<u8> {
        let body = HolderSigned {
            issuer_did: &self.issuer_did,
            subject_did: &self.subject_did,
            claim_commitments: &self.claim_commitments,
            issued_at: self.issued_at,
            expires_at: self.expires_at,
            issuer_signature: &self.issuer_signature,
            disclosed: &self.disclosed,
            challenge: self.challenge,
        };
        let mut msg = TAG_HOLDER_SIG.as_bytes().to_vec();
        msg.extend(to_canonical_bytes(&body).expect("presentation is canonicalizable"));
        msg
    }

    fn validity(&self) -> Validity {
        Validity { issued_at: self.issued_at, expires_at: self.expires_at }
    }

    pub fn digest(&self) -> Digest {
        canonical_digest("authcred/presentation/v1", self).expect("presentation is canonicalizable")
    }
}

pub fn create_presentation<S: AsRef<str>>(
    vc: &VerifiableCredential,
    disclose: &[S],
    holder_keypair: &KeyPair,
    challenge: [u8; 32],
) -> Result<Presentation, CredentialError> {
    let mut indices = BTreeSet::new();
    for name in disclose {
        let name = name.as_ref();
        let index = vc
            .claims
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| CredentialError::UnknownClaimName(name.to_string()))?;
        indices.insert(index);
    }
    let disclosed = indices
        .into_iter()
        .map(|i| {
            let c = &vc.claims[i];
            DisclosedClaim { index: i, name: c.name.clone(), value: c.value.clone(), salt: c.salt }
        })
        .collect();
    let mut p = Presentation {
        issuer_did: vc.issuer_did.clone(),
        subject_did: vc.subject_did.clone(),
        claim_commitments: vc.claim_commitments.clone(),
        issued_at: vc.issued_at,
        expires_at: vc.expires_at,
        issuer_signature: vc.issuer_signature,
        disclosed,
        challenge,
        holder_signature: crate::crypto::Signature([0u8; 64]),
    };
    p.holder_signature = holder_keypair.sign(&p.holder_message());
    Ok(p)
}

/// Name → value of every disclosed claim.
pub type DisclosedClaims = BTreeMap<String, String>;

pub fn verify_presentation(
    registry: &TrustRegistry,
    p: &Presentation,
    challenge: &[u8; 32],
    now: u64,
) -> Result<DisclosedClaims, CredentialError> {
    if p.challenge != *challenge {
        return Err(CredentialError::ChallengeMismatch);
    }
    if !p.validity().contains(now) {
        return Err(CredentialError::StaleCredential);
    }
    let issuer_msg = issuer_message(&p.issuer_did, &p.subject_did, &p.claim_commitments, p.validity());
    if !issuer_signature_valid(registry, &p.issuer_did, &issuer_msg, &p.issuer_signature)? {
        return Err(CredentialError::InvalidSignature);
    }
    let holder =
        resolve_did(registry, &p.subject_did).map_err(|_| CredentialError::UnknownSubjectDid(p.subject_did.clone()))?;
    if !holder.verification_key.verify(&p.holder_message(), &p.holder_signature) {
        return Err(CredentialError::InvalidHolderSignature);
    }
    let mut out = DisclosedClaims::new();
    let mut seen = BTreeSet::new();
    for d in &p.disclosed {
        let commitment = p.claim_commitments.get(d.index).ok_or(CredentialError::CommitmentOpenFailure(d.index))?;
        if !seen.insert(d.index) || !open_commitment(commitment, &claim_bytes(&d.name, &d.value), &d.salt) {
            return Err(CredentialError::CommitmentOpenFailure(d.index));
        }
        if out.insert(d.name.clone(), d.value.clone()).is_some() {
            return Err(CredentialError::DuplicateClaimName(d.name.clone()));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identity::{create_did, register_did, DID_METHOD};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    struct Fixture {
        reg: TrustRegistry,
        issuer: KeyPair,
        issuer_did: Did,
        holder: KeyPair,
        holder_did: Did,
        rng: ChaCha20Rng,
    }

    fn fixture() -> Fixture {
        let mut reg = TrustRegistry::in_memory(1);
        let issuer = KeyPair::generate(Some(&[1; 32])).unwrap();
        let holder = KeyPair::generate(Some(&[2; 32])).unwrap();
        let (issuer_did, d1) = create_did(&issuer, DID_METHOD, 1);
        let (holder_did, d2) = create_did(&holder, DID_METHOD, 1);
        register_did(&mut reg, &d1, 2).unwrap();
        register_did(&mut reg, &d2, 2).unwrap();
        Fixture { reg, issuer, issuer_did, holder, holder_did, rng: ChaCha20Rng::seed_from_u64(3) }
    }

    fn claims(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    fn issue(f: &mut Fixture, pairs: &[(&str, &str)]) -> VerifiableCredential {
        issue_credential(
            &f.reg,
            &f.issuer,
            &f.issuer_did,
            &f.holder_did,
            &claims(pairs),
            Validity::days_from(100, 365),
            &mut f.rng,
        )
        .unwrap()
    }

    #[test]
    fn issue_and_verify() {
        let mut f = fixture();
        let vc = issue(&mut f, &[("affiliation", "MIT"), ("role", "professor"), ("expertise", "crypto")]);
        assert_eq!(vc.claim_commitments.len(), 3);
        assert!(vc.claims_match_commitments());
        anchor_credential(&mut f.reg, &vc, 101).unwrap();
        let report = verify_credential(&f.reg, &vc, 200);
        assert!(report.passed, "{report:?}");
        assert!(matches!(anchor_credential(&mut f.reg, &vc, 102), Err(CredentialError::DuplicateAnchor)));
    }

    #[test]
    fn issuance_preconditions() {
        let mut f = fixture();
        let v = Validity::days_from(100, 1);
        let dup = claims(&[("a", "1"), ("a", "2")]);
        assert!(matches!(
            issue_credential(&f.reg, &f.issuer, &f.issuer_did, &f.holder_did, &dup, v, &mut f.rng),
            Err(CredentialError::DuplicateClaimName(_))
        ));
        assert!(matches!(
            issue_credential(&f.reg, &f.issuer, &f.issuer_did, &f.holder_did, &[], v, &mut f.rng),
            Err(CredentialError::EmptyClaims)
        ));
        let stranger = KeyPair::generate(Some(&[9; 32])).unwrap();
        let (stranger_did, _) = create_did(&stranger, DID_METHOD, 1);
        assert!(matches!(
            issue_credential(&f.reg, &stranger, &stranger_did, &f.holder_did, &claims(&[("a", "1")]), v, &mut f.rng),
            Err(CredentialError::UnknownIssuerDid(_))
        ));
        assert!(matches!(
            issue_credential(&f.reg, &f.holder, &f.issuer_did, &f.holder_did, &claims(&[("a", "1")]), v, &mut f.rng),
            Err(CredentialError::IssuerKeyMismatch(_))
        ));
    }

    #[test]
    fn expired_credential_fails_only_validity() {
        let mut f = fixture();
        let vc = issue(&mut f, &[("affiliation", "MIT")]);
        anchor_credential(&mut f.reg, &vc, 101).unwrap();
        let r = verify_credential(&f.reg, &vc, vc.expires_at + 1);
        assert!(r.issuer_resolvable && r.signature_valid && r.anchored && r.claims_match_commitments);
        assert!(!r.within_validity && !r.passed);
    }

    #[test]
    fn mutated_commitment_breaks_signature_and_anchor() {
        let mut f = fixture();
        let vc = issue(&mut f, &[("affiliation", "MIT"), ("role", "x")]);
        anchor_credential(&mut f.reg, &vc, 101).unwrap();
        for i in 0..32 {
            let mut bad = vc.clone();
            bad.claim_commitments[1].digest.0[i] ^= 0x01;
            let r = verify_credential(&f.reg, &bad, 200);
            assert!(!r.signature_valid && !r.anchored);
            assert!(matches!(anchor_credential(&mut f.reg, &bad, 102), Err(CredentialError::InvalidSignature)));
        }
    }

    #[test]
    fn selective_disclosure_reveals_only_the_subset() {
        let mut f = fixture();
        let vc = issue(&mut f, &[("affiliation", "MIT"), ("orcid", "0000-0001"), ("expertise", "crypto")]);
        let challenge = [7u8; 32];
        let p = create_presentation(&vc, &["affiliation"], &f.holder, challenge).unwrap();
        let got = verify_presentation(&f.reg, &p, &challenge, 200).unwrap();
        assert_eq!(got.into_iter().collect::<Vec<_>>(), vec![("affiliation".to_string(), "MIT".to_string())]);
        let bytes = serde_json::to_vec(&p).unwrap();
        for hidden in ["0000-0001", "crypto", "orcid", "expertise"] {
            assert!(!bytes.windows(hidden.len()).any(|w| w == hidden.as_bytes()));
        }
    }

    #[test]
    fn presentation_failures() {
        let mut f = fixture();
        let vc = issue(&mut f, &[("affiliation", "MIT"), ("expertise", "crypto")]);
        let challenge = [7u8; 32];
        assert!(matches!(
            create_presentation(&vc, &["salary"], &f.holder, challenge),
            Err(CredentialError::UnknownClaimName(_))
        ));
        let p = create_presentation(&vc, &["affiliation"], &f.holder, challenge).unwrap();
        assert!(matches!(verify_presentation(&f.reg, &p, &[8u8; 32], 200), Err(CredentialError::ChallengeMismatch)));
        assert!(matches!(
            verify_presentation(&f.reg, &p, &challenge, vc.expires_at + 1),
            Err(CredentialError::StaleCredential)
        ));

        let mut bad = p.clone();
        bad.disclosed[0].value = "Harvard".into();
        assert!(matches!(verify_presentation(&f.reg, &bad, &challenge, 200), Err(CredentialError::InvalidHolderSignature)));

        // a forger who re-signs as the holder still cannot open the commitment
        let mut forged = vc.clone();
        forged.claims[0].value = "Harvard".into();
        let bad = create_presentation(&forged, &["affiliation"], &f.holder, challenge).unwrap();
        assert!(matches!(verify_presentation(&f.reg, &bad, &challenge, 200), Err(CredentialError::CommitmentOpenFailure(0))));

        // relabelling a disclosed value under a different name fails to open
        let mut relabel = vc.clone();
        relabel.claims[1].name = "affiliation2".into();
        let bad = create_presentation(&relabel, &["affiliation2"], &f.holder, challenge).unwrap();
        assert!(matches!(verify_presentation(&f.reg, &bad, &challenge, 200), Err(CredentialError::CommitmentOpenFailure(1))));

        let mut bad = p.clone();
        bad.issuer_signature.0[0] ^= 1;
        assert!(matches!(verify_presentation(&f.reg, &bad, &challenge, 200), Err(CredentialError::InvalidSignature)));

        let mut bad = p.clone();
        bad.holder_signature.0[5] ^= 1;
        assert!(matches!(verify_presentation(&f.reg, &bad, &challenge, 200), Err(CredentialError::InvalidHolderSignature)));

        let mut bad = p.clone();
        bad.claim_commitments[1].digest.0[0] ^= 1;
        assert!(matches!(verify_presentation(&f.reg, &bad, &challenge, 200), Err(CredentialError::InvalidSignature)));

        let mut bad = p;
        bad.challenge = [8u8; 32];
        assert!(matches!(verify_presentation(&f.reg, &bad, &[8u8; 32], 200), Err(CredentialError::InvalidHolderSignature)));
    }

    #[test]
    fn every_subset_of_four_claims_round_trips() {
        let mut f = fixture();
        let names = ["affiliation", "role", "expertise", "orcid"];
        let vc = issue(&mut f, &[("affiliation", "a"), ("role", "b"), ("expertise", "c"), ("orcid", "d")]);
        let challenge = [1u8; 32];
        for mask in 0u32..16 {
            let subset: Vec<&str> = names.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, n)| *n).collect();
            let p = create_presentation(&vc, &subset, &f.holder, challenge).unwrap();
            let got = verify_presentation(&f.reg, &p, &challenge, 200).unwrap();
            let keys: BTreeSet<&str> = got.keys().map(String::as_str).collect();
            assert_eq!(keys, subset.iter().copied().collect());
        }
    }
}
