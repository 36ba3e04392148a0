//! Cryptographic primitives shared by every other module: Ed25519 signatures,
//! SHA-256 digests, salted hash commitments and the Ristretto255 group used to
//! blind conflict-of-interest set elements.
//!
//! All hashing outside of the bare [`hash`] function goes through
//! [`tagged_hash`], which prepends an ASCII domain tag.

use std::fmt;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint};
use ed25519_dalek::{Signer, Verifier};
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Sha256, Sha512};
use thiserror::Error;

pub const DIGEST_LEN: usize = 32;
pub const SIGNATURE_LEN: usize = 64;
pub const PUBLIC_KEY_LEN: usize = 32;
pub const SEED_LEN: usize = 32;
pub const SALT_LEN: usize = 32;

pub(crate) const TAG_COMMIT: &str = "authcred/commit/v1";
const TAG_HASH_TO_GROUP: &str = "authcred/h2g/v1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("seed must be {SEED_LEN} bytes, got {0}")]
    BadSeedLength(usize),
    #[error("salt must be {SALT_LEN} bytes, got {0}")]
    BadSaltLength(usize),
    #[error("malformed public key")]
    MalformedKey,
    #[error("signature must be {SIGNATURE_LEN} bytes, got {0}")]
    MalformedSignature(usize),
    #[error("scalar must be nonzero")]
    ZeroScalar,
    #[error("scalar encoding is not canonical")]
    NonCanonicalScalar,
    #[error("bytes do not encode a group element")]
    MalformedElementEncoding,
}

/// A 32-byte SHA-256 output.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Digest(pub [u8; DIGEST_LEN]);

impl Digest {
    pub const ZERO: Digest = Digest([0u8; DIGEST_LEN]);

    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(text: &str) -> Option<Digest> {
        let mut out = [0u8; DIGEST_LEN];
        hex::decode_to_slice(text, &mut out).ok()?;
        Some(Digest(out))
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Plain SHA-256.
pub fn hash(input: &[u8]) -> Digest {
    use sha2::Digest as _;
    Digest(Sha256::digest(input).into())
}

/// SHA-256 over `tag ‖ parts[0] ‖ parts[1] ‖ …`.
pub fn tagged_hash(tag: &str, parts: &[&[u8]]) -> Digest {
    use sha2::Digest as _;
    let mut hasher = Sha256::new();
    hasher.update(tag.as_bytes());
    for part in parts {
        hasher.update(part);
    }
    Digest(hasher.finalize().into())
}

/// An Ed25519 verification key.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PublicKey([u8; PUBLIC_KEY_LEN]);

impl PublicKey {
    pub fn from_bytes(bytes: &[u8]) -> Result<PublicKey, CryptoError> {
        let raw: [u8; PUBLIC_KEY_LEN] = bytes.try_into().map_err(|_| CryptoError::MalformedKey)?;
        ed25519_dalek::VerifyingKey::from_bytes(&raw).map_err(|_| CryptoError::MalformedKey)?;
        Ok(PublicKey(raw))
    }

    pub fn as_bytes(&self) -> &[u8; PUBLIC_KEY_LEN] {
        &self.0
    }

    /// Strict verification; any malformed input is simply `false` here.
    pub fn verify(&self, message: &[u8], signature: &Signature) -> bool {
        let Ok(key) = ed25519_dalek::VerifyingKey::from_bytes(&self.0) else {
            return false;
        };
        let sig = ed25519_dalek::Signature::from_bytes(&signature.0);
        key.verify(message, &sig).is_ok()
    }
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({})", hex::encode(self.0))
    }
}

/// A 64-byte Ed25519 signature.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Signature(pub [u8; SIGNATURE_LEN]);

impl Signature {
    pub fn from_bytes(bytes: &[u8]) -> Result<Signature, CryptoError> {
        let raw: [u8; SIGNATURE_LEN] =
            bytes.try_into().map_err(|_| CryptoError::MalformedSignature(bytes.len()))?;
        Ok(Signature(raw))
    }

    pub fn as_bytes(&self) -> &[u8; SIGNATURE_LEN] {
        &self.0
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({}…)", hex::encode(&self.0[..8]))
    }
}

/// Signing key plus its verification key.
///
/// Deliberately not `Serialize`: the only way to get the secret out is
/// [`KeyPair::secret_bytes`], which the wallet uses for encrypted storage.
#[derive(Clone)]
pub struct KeyPair {
    signing: ed25519_dalek::SigningKey,
}

impl KeyPair {
    /// Deterministic when `seed` is given, fresh OS entropy otherwise.
    pub fn generate(seed: Option<&[u8]>) -> Result<KeyPair, CryptoError> {
        match seed {
            Some(seed) => {
                let raw: [u8; SEED_LEN] =
                    seed.try_into().map_err(|_| CryptoError::BadSeedLength(seed.len()))?;
                Ok(KeyPair::from_secret(&raw))
            }
            None => Ok(KeyPair::from_rng(&mut rand::rngs::OsRng)),
        }
    }

    pub fn from_rng<R: RngCore + CryptoRng>(rng: &mut R) -> KeyPair {
        let mut seed = [0u8; SEED_LEN];
        rng.fill_bytes(&mut seed);
        KeyPair::from_secret(&seed)
    }

    pub fn from_secret(secret: &[u8; SEED_LEN]) -> KeyPair {
        KeyPair { signing: ed25519_dalek::SigningKey::from_bytes(secret) }
    }

    pub fn public_key(&self) -> PublicKey {
        PublicKey(self.signing.verifying_key().to_bytes())
    }

    pub fn secret_bytes(&self) -> [u8; SEED_LEN] {
        self.signing.to_bytes()
    }

    pub fn sign(&self, message: &[u8]) -> Signature {
        Signature(self.signing.sign(message).to_bytes())
    }
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair").field("public_key", &self.public_key()).finish_non_exhaustive()
    }
}

/// Signs with a raw 32-byte secret key.
pub fn sign(private_key: &[u8], message: &[u8]) -> Result<Signature, CryptoError> {
    Ok(KeyPair::generate(Some(private_key))?.sign(message))
}

/// Byte-level verification. Length or encoding problems are errors, a
/// well-formed but wrong signature is `Ok(false)`.
pub fn verify(public_key: &[u8], message: &[u8], signature: &[u8]) -> Result<bool, CryptoError> {
    let key = PublicKey::from_bytes(public_key)?;
    let sig = Signature::from_bytes(signature)?;
    Ok(key.verify(message, &sig))
}

/// A salted hash commitment: `tagged_hash("authcred/commit/v1", salt ‖ value)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Commitment {
    pub digest: Digest,
}

pub fn commit(value: &[u8], salt: &[u8]) -> Result<Commitment, CryptoError> {
    if salt.len() != SALT_LEN {
        return Err(CryptoError::BadSaltLength(salt.len()));
    }
    Ok(Commitment { digest: tagged_hash(TAG_COMMIT, &[salt, value]) })
}

pub fn open_commitment(commitment: &Commitment, value: &[u8], salt: &[u8]) -> bool {
    match commit(value, salt) {
        Ok(c) => c == *commitment,
        Err(_) => false,
    }
}

pub fn random_salt<R: RngCore + CryptoRng>(rng: &mut R) -> [u8; SALT_LEN] {
    let mut salt = [0u8; SALT_LEN];
    rng.fill_bytes(&mut salt);
    salt
}

/// A point in the Ristretto255 prime-order group.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct GroupElement(RistrettoPoint);

impl GroupElement {
    pub fn to_bytes(&self) -> [u8; 32] {
        self.0.compress().to_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<GroupElement, CryptoError> {
        let compressed =
            CompressedRistretto::from_slice(bytes).map_err(|_| CryptoError::MalformedElementEncoding)?;
        compressed.decompress().map(GroupElement).ok_or(CryptoError::MalformedElementEncoding)
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupElement({})", hex::encode(self.to_bytes()))
    }
}

/// A nonzero scalar modulo the group order.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Scalar(curve25519_dalek::Scalar);

impl Scalar {
    pub fn from_bytes(bytes: &[u8; 32]) -> Result<Scalar, CryptoError> {
        let s: Option<curve25519_dalek::Scalar> =
            curve25519_dalek::Scalar::from_canonical_bytes(*bytes).into();
        let s = s.ok_or(CryptoError::NonCanonicalScalar)?;
        if s == curve25519_dalek::Scalar::ZERO {
            return Err(CryptoError::ZeroScalar);
        }
        Ok(Scalar(s))
    }

    pub fn to_bytes(&self) -> [u8; 32] {
        self.0.to_bytes()
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Scalar(..)")
    }
}

pub fn random_scalar<R: RngCore + CryptoRng>(rng: &mut R) -> Scalar {
    loop {
        let s = curve25519_dalek::Scalar::random(rng);
        if s != curve25519_dalek::Scalar::ZERO {
            return Scalar(s);
        }
    }
}

pub fn hash_to_group(input: &[u8]) -> GroupElement {
    let mut buf = Vec::with_capacity(TAG_HASH_TO_GROUP.len() + input.len());
    buf.extend_from_slice(TAG_HASH_TO_GROUP.as_bytes());
    buf.extend_from_slice(input);
    GroupElement(RistrettoPoint::hash_from_bytes::<Sha512>(&buf))
}

pub fn scalar_mul(point: &GroupElement, k: &Scalar) -> GroupElement {
    GroupElement(point.0 * k.0)
}

macro_rules! base64_serde {
    ($ty:ty, $len:expr, $ctor:expr, $bytes:expr) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                let bytes: &[u8] = &$bytes(self);
                s.serialize_str(&STANDARD.encode(bytes))
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let text = String::deserialize(d)?;
                let raw = STANDARD.decode(text.as_bytes()).map_err(serde::de::Error::custom)?;
                if raw.len() != $len {
                    return Err(serde::de::Error::invalid_length(raw.len(), &stringify!($len)));
                }
                $ctor(&raw).map_err(serde::de::Error::custom)
            }
        }
    };
}

base64_serde!(Digest, DIGEST_LEN, |raw: &[u8]| -> Result<Digest, CryptoError> {
    Ok(Digest(raw.try_into().expect("length checked")))
}, |d: &Digest| d.0);
base64_serde!(PublicKey, PUBLIC_KEY_LEN, PublicKey::from_bytes, |k: &PublicKey| k.0);
base64_serde!(Signature, SIGNATURE_LEN, Signature::from_bytes, |s: &Signature| s.0);
base64_serde!(GroupElement, 32, GroupElement::from_bytes, |g: &GroupElement| g.to_bytes());
