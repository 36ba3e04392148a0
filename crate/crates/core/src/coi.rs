//! Private conflict-of-interest check.
//!
//! Journal and reviewer learn only how many elements their conflict sets
//! share (affiliations, collaborator DIDs). The main variant is a two-party
//! Diffie–Hellman style private set intersection cardinality protocol over
//! Ristretto255:
//!
//! 1. journal → reviewer: `H(e)^j` for each journal element, shuffled
//! 2. reviewer → journal: `(H(e)^j)^r` shuffled, plus `H(f)^r` for each
//!    reviewer element, shuffled
//! 3. journal computes `(H(f)^r)^j` and counts the multiset overlap
//!
//! The journal commits to `j` before round 1 and reveals the opening in the
//! transcript, so any third party can replay step 3 and check the recorded
//! outcome. Security model is semi-honest.
//!
//! A weaker salted-hash variant is kept as a fallback: both sides exchange
//! `H(salt ‖ element)`, which is only as private as the elements are hard to
//! guess.

use std::collections::{BTreeSet, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::canonical::{b64, b64_array, b64_list32, canonical_digest, hex16};
use crate::crypto::{
    commit, hash_to_group, open_commitment, random_salt, random_scalar, scalar_mul, tagged_hash, Commitment,
    CryptoError, Digest, GroupElement, Scalar,
};

pub const MAX_SET_SIZE: usize = 512;

const TAG_SALTED: &str = "authcred/coi-salted/v1";
const TAG_TRANSCRIPT: &str = "authcred/coi-transcript/v1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoiError {
    #[error("conflict-set element is empty after normalization")]
    EmptyElement,
    #[error("conflict set has {0} elements, limit is {MAX_SET_SIZE}")]
    SetTooLarge(usize),
    #[error("journal conflict set is empty")]
    EmptyJournalSet,
    #[error("scalar must be nonzero")]
    ZeroScalar,
    #[error("round message does not decode to group elements")]
    MalformedElementEncoding,
    #[error("session salt was already used")]
    SaltReuse,
    #[error("transcript is missing rounds or its journal opening")]
    IncompleteTranscript,
}

impl From<CryptoError> for CoiError {
    fn from(e: CryptoError) -> Self {
        match e {
            CryptoError::ZeroScalar => CoiError::ZeroScalar,
            _ => CoiError::MalformedElementEncoding,
        }
    }
}

/// NFC, lowercase, inner whitespace runs collapsed to one space, trimmed.
pub fn normalize(raw: &str) -> Result<String, CoiError> {
    let folded: String = raw.nfc().collect::<String>().to_lowercase().nfc().collect();
    let out = folded.split_whitespace().collect::<Vec<_>>().join(" ");
    if out.is_empty() {
        Err(CoiError::EmptyElement)
    } else {
        Ok(out)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictSet {
    elements: BTreeSet<String>,
}

impl ConflictSet {
    pub fn new<I, S>(raw: I) -> Result<ConflictSet, CoiError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let elements = raw.into_iter().map(|s| normalize(s.as_ref())).collect::<Result<BTreeSet<_>, _>>()?;
        if elements.len() > MAX_SET_SIZE {
            return Err(CoiError::SetTooLarge(elements.len()));
        }
        Ok(ConflictSet { elements })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.elements.iter().map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoiVariant {
    SaltedHash,
    DhBlinded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Party {
    Journal,
    Reviewer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundMessage {
    pub sender: Party,
    pub label: String,
    #[serde(with = "b64_list32")]
    pub items: Vec<[u8; 32]>,
}

/// Post-session opening of the journal's committed secret (the blinding
/// scalar for the DH variant, the session salt for the salted variant).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecretOpening {
    #[serde(with = "b64")]
    pub value: Vec<u8>,
    #[serde(with = "b64_array")]
    pub salt: [u8; 32],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoiOutcome {
    pub intersection_cardinality: u64,
    pub clear: bool,
    pub transcript_digest: Digest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoiTranscript {
    #[serde(with = "hex16")]
    pub session_id: [u8; 16],
    pub variant: CoiVariant,
    pub journal_commitment: Commitment,
    pub rounds: Vec<RoundMessage>,
    pub journal_opening: Option<SecretOpening>,
    pub outcome: CoiOutcome,
}

#[derive(Serialize)]
struct TranscriptBody<'a> {
    #[serde(with = "hex16")]
    session_id: [u8; 16],
    variant: CoiVariant,
    journal_commitment: &'a Commitment,
    rounds: &'a [RoundMessage],
    journal_opening: &'a Option<SecretOpening>,
    intersection_cardinality: u64,
}

impl CoiTranscript {
    /// Digest over everything except the outcome's own digest field.
    pub fn compute_digest(&self) -> Digest {
        let body = TranscriptBody {
            session_id: self.session_id,
            variant: self.variant,
            journal_commitment: &self.journal_commitment,
            rounds: &self.rounds,
            journal_opening: &self.journal_opening,
            intersection_cardinality: self.outcome.intersection_cardinality,
        };
        canonical_digest(TAG_TRANSCRIPT, &body).expect("transcripts are canonicalizable")
    }

    pub fn storage_path(&self) -> String {
        format!("coi/{}.json", hex::encode(self.session_id))
    }

    fn seal(mut self) -> Self {
        self.outcome.clear = self.outcome.intersection_cardinality == 0;
        self.outcome.transcript_digest = self.compute_digest();
        self
    }
}

// ---------------------------------------------------------------------------
// DH-blinded variant
// ---------------------------------------------------------------------------

fn blind_set<R: RngCore + CryptoRng>(set: &ConflictSet, secret: &Scalar, rng: &mut R) -> Vec<GroupElement> {
    let mut out: Vec<GroupElement> = set.iter().map(|e| scalar_mul(&hash_to_group(e.as_bytes()), secret)).collect();
    out.shuffle(rng);
    out
}

/// Journal side, round 1.
pub fn dh_round1<R: RngCore + CryptoRng>(
    journal_set: &ConflictSet,
    journal_secret: &Scalar,
    rng: &mut R,
) -> Result<Vec<GroupElement>, CoiError> {
    if journal_set.is_empty() {
        return Err(CoiError::EmptyJournalSet);
    }
    Ok(blind_set(journal_set, journal_secret, rng))
}

/// Reviewer side: re-blinds the journal's elements and blinds its own.
pub fn dh_round2<R: RngCore + CryptoRng>(
    round1: &[GroupElement],
    reviewer_set: &ConflictSet,
    reviewer_secret: &Scalar,
    rng: &mut R,
) -> (Vec<GroupElement>, Vec<GroupElement>) {
    let mut double: Vec<GroupElement> = round1.iter().map(|p| scalar_mul(p, reviewer_secret)).collect();
    double.shuffle(rng);
    (double, blind_set(reviewer_set, reviewer_secret, rng))
}

/// Journal side: `|{ y^j : y ∈ reviewer_blinded } ∩ double_blinded|` as multisets.
pub fn dh_finalize(double_blinded: &[GroupElement], reviewer_blinded: &[GroupElement], journal_secret: &Scalar) -> u64 {
    let mut pool: HashMap<[u8; 32], usize> = HashMap::new();
    for p in double_blinded {
        *pool.entry(p.to_bytes()).or_default() += 1;
    }
    let mut count = 0;
    for y in reviewer_blinded {
        if let Some(n) = pool.get_mut(&scalar_mul(y, journal_secret).to_bytes()) {
            if *n > 0 {
                *n -= 1;
                count += 1;
            }
        }
    }
    count
}

fn encode(points: &[GroupElement]) -> Vec<[u8; 32]> {
    points.iter().map(GroupElement::to_bytes).collect()
}

fn decode(items: &[[u8; 32]]) -> Result<Vec<GroupElement>, CoiError> {
    items.iter().map(|b| GroupElement::from_bytes(b).map_err(CoiError::from)).collect()
}

/// Both parties in one process: commit, three rounds, finalize, seal.
pub fn run_dh_session<R: RngCore + CryptoRng>(
    journal_set: &ConflictSet,
    reviewer_set: &ConflictSet,
    session_id: [u8; 16],
    rng: &mut R,
) -> Result<CoiTranscript, CoiError> {
    let journal_secret = random_scalar(rng);
    let opening_salt = random_salt(rng);
    let journal_commitment = commit(&journal_secret.to_bytes(), &opening_salt).expect("fixed salt length");
    let round1 = dh_round1(journal_set, &journal_secret, rng)?;
    let reviewer_secret = random_scalar(rng);
    let (double, reviewer_blinded) = dh_round2(&round1, reviewer_set, &reviewer_secret, rng);
    let cardinality = dh_finalize(&double, &reviewer_blinded, &journal_secret);
    Ok(CoiTranscript {
        session_id,
        variant: CoiVariant::DhBlinded,
        journal_commitment,
        rounds: vec![
            RoundMessage { sender: Party::Journal, label: "journal_blinded".into(), items: encode(&round1) },
            RoundMessage { sender: Party::Reviewer, label: "double_blinded".into(), items: encode(&double) },
            RoundMessage { sender: Party::Reviewer, label: "reviewer_blinded".into(), items: encode(&reviewer_blinded) },
        ],
        journal_opening: Some(SecretOpening { value: journal_secret.to_bytes().to_vec(), salt: opening_salt }),
        outcome: CoiOutcome { intersection_cardinality: cardinality, clear: false, transcript_digest: Digest::ZERO },
    }
    .seal())
}

// ---------------------------------------------------------------------------
// Salted-hash variant
// ---------------------------------------------------------------------------

fn salted_items(set: &ConflictSet, salt: &[u8; 32]) -> Vec<[u8; 32]> {
    // BTreeSet iteration order is already sorted, which hides insertion order.
    let mut items: Vec<[u8; 32]> = set.iter().map(|e| tagged_hash(TAG_SALTED, &[salt, e.as_bytes()]).0).collect();
    items.sort_unstable();
    items
}

fn overlap(a: &[[u8; 32]], b: &[[u8; 32]]) -> u64 {
    let mut pool: HashMap<&[u8; 32], usize> = HashMap::new();
    for x in a {
        *pool.entry(x).or_default() += 1;
    }
    let mut count = 0;
    for y in b {
        if let Some(n) = pool.get_mut(y) {
            if *n > 0 {
                *n -= 1;
                count += 1;
            }
        }
    }
    count
}

/// Remembers every session salt the node has accepted.
#[derive(Debug, Default)]
pub struct SaltRegistry {
    seen: HashSet<[u8; 32]>,
}

impl SaltRegistry {
    pub fn new() -> Self {
        SaltRegistry::default()
    }

    /// Marks a salt as used, e.g. when reloading stored transcripts.
    pub fn remember(&mut self, salt: [u8; 32]) {
        self.seen.insert(salt);
    }

    pub fn salted_hash_check<R: RngCore + CryptoRng>(
        &mut self,
        journal_set: &ConflictSet,
        reviewer_set: &ConflictSet,
        session_salt: [u8; 32],
        session_id: [u8; 16],
        rng: &mut R,
    ) -> Result<CoiTranscript, CoiError> {
        if !self.seen.insert(session_salt) {
            return Err(CoiError::SaltReuse);
        }
        let opening_salt = random_salt(rng);
        let journal_commitment = commit(&session_salt, &opening_salt).expect("fixed salt length");
        let journal_items = salted_items(journal_set, &session_salt);
        let reviewer_items = salted_items(reviewer_set, &session_salt);
        let cardinality = overlap(&journal_items, &reviewer_items);
        Ok(CoiTranscript {
            session_id,
            variant: CoiVariant::SaltedHash,
            journal_commitment,
            rounds: vec![
                RoundMessage { sender: Party::Journal, label: "journal_hashed".into(), items: journal_items },
                RoundMessage { sender: Party::Reviewer, label: "reviewer_hashed".into(), items: reviewer_items },
            ],
            journal_opening: Some(SecretOpening { value: session_salt.to_vec(), salt: opening_salt }),
            outcome: CoiOutcome { intersection_cardinality: cardinality, clear: false, transcript_digest: Digest::ZERO },
        }
        .seal())
    }
}

// ---------------------------------------------------------------------------
// Third-party verification
// ---------------------------------------------------------------------------

fn expect_rounds<'a>(t: &'a CoiTranscript, shape: &[(Party, &str)]) -> Result<Vec<&'a [[u8; 32]]>, CoiError> {
    if t.rounds.len() != shape.len() {
        return Err(CoiError::IncompleteTranscript);
    }
    Ok(t.rounds.iter().map(|r| r.items.as_slice()).collect())
}

fn rounds_labelled(t: &CoiTranscript, shape: &[(Party, &str)]) -> bool {
    t.rounds.iter().zip(shape).all(|(r, (sender, label))| r.sender == *sender && r.label == *label)
}

/// Replays the recorded rounds. `Ok(false)` for any inconsistency; an error
/// only when the transcript is structurally incomplete.
pub fn verify_transcript(t: &CoiTranscript, journal_secret_commitment: &Commitment) -> Result<bool, CoiError> {
    let opening = t.journal_opening.as_ref().ok_or(CoiError::IncompleteTranscript)?;
    if t.journal_commitment != *journal_secret_commitment
        || !open_commitment(journal_secret_commitment, &opening.value, &opening.salt)
    {
        return Ok(false);
    }
    let recomputed = match t.variant {
        CoiVariant::DhBlinded => {
            const SHAPE: [(Party, &str); 3] = [
                (Party::Journal, "journal_blinded"),
                (Party::Reviewer, "double_blinded"),
                (Party::Reviewer, "reviewer_blinded"),
            ];
            let rounds = expect_rounds(t, &SHAPE)?;
            if !rounds_labelled(t, &SHAPE) || rounds[0].len() != rounds[1].len() {
                return Ok(false);
            }
            let Ok(secret_bytes) = <[u8; 32]>::try_from(opening.value.as_slice()) else {
                return Ok(false);
            };
            let Ok(secret) = Scalar::from_bytes(&secret_bytes) else {
                return Ok(false);
            };
            let (Ok(_), Ok(double), Ok(reviewer)) = (decode(rounds[0]), decode(rounds[1]), decode(rounds[2])) else {
                return Ok(false);
            };
            dh_finalize(&double, &reviewer, &secret)
        }
        CoiVariant::SaltedHash => {
            const SHAPE: [(Party, &str); 2] = [(Party::Journal, "journal_hashed"), (Party::Reviewer, "reviewer_hashed")];
            let rounds = expect_rounds(t, &SHAPE)?;
            if !rounds_labelled(t, &SHAPE) || opening.value.len() != 32 {
                return Ok(false);
            }
            overlap(rounds[0], rounds[1])
        }
    };
    Ok(recomputed == t.outcome.intersection_cardinality
        && t.outcome.clear == (recomputed == 0)
        && t.outcome.transcript_digest == t.compute_digest())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn set(items: &[&str]) -> ConflictSet {
        ConflictSet::new(items.iter().copied()).unwrap()
    }

    #[test]
    fn normalization_rules() {
        assert_eq!(normalize("  MIT  Media   Lab ").unwrap(), "mit media lab");
        assert_eq!(normalize("mit media lab").unwrap(), "mit media lab");
        assert_eq!(normalize("Cafe\u{301}").unwrap(), "caf\u{e9}");
        assert_eq!(normalize("a\t\nb").unwrap(), "a b");
        assert_eq!(normalize("   ").unwrap_err(), CoiError::EmptyElement);
    }

    #[test]
    fn conflict_set_dedups_after_normalization() {
        let s = set(&["MIT", " mit ", "ETH"]);
        assert_eq!(s.len(), 2);
        let too_many: Vec<String> = (0..513).map(|i| format!("e{i}")).collect();
        assert_eq!(ConflictSet::new(&too_many).unwrap_err(), CoiError::SetTooLarge(513));
    }

    #[test]
    fn dh_example_cardinalities() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let t = run_dh_session(&set(&["a", "b", "c"]), &set(&["c", "d"]), [0; 16], &mut rng).unwrap();
        assert_eq!(t.outcome.intersection_cardinality, 1);
        assert!(!t.outcome.clear);
        let t = run_dh_session(&set(&["a", "b"]), &set(&["x", "y"]), [1; 16], &mut rng).unwrap();
        assert_eq!((t.outcome.intersection_cardinality, t.outcome.clear), (0, true));
        let s = set(&["a", "b", "c", "d"]);
        let t = run_dh_session(&s, &s, [2; 16], &mut rng).unwrap();
        assert_eq!(t.outcome.intersection_cardinality, 4);
        let t = run_dh_session(&s, &ConflictSet::default(), [3; 16], &mut rng).unwrap();
        assert!(t.outcome.clear);
        assert_eq!(
            run_dh_session(&ConflictSet::default(), &s, [4; 16], &mut rng).unwrap_err(),
            CoiError::EmptyJournalSet
        );
    }

    #[test]
    fn shuffling_round_one_does_not_change_outcome() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let j = random_scalar(&mut rng);
        let r = random_scalar(&mut rng);
        let journal = set(&["a", "b", "c", "d", "e"]);
        let reviewer = set(&["b", "e", "z"]);
        let mut r1 = dh_round1(&journal, &j, &mut rng).unwrap();
        let (d, rb) = dh_round2(&r1, &reviewer, &r, &mut rng);
        let base = dh_finalize(&d, &rb, &j);
        for _ in 0..10 {
            r1.shuffle(&mut rng);
            let (d, rb) = dh_round2(&r1, &reviewer, &r, &mut rng);
            assert_eq!(dh_finalize(&d, &rb, &j), base);
        }
        assert_eq!(base, 2);
    }

    #[test]
    fn salted_variant_and_salt_reuse() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let mut salts = SaltRegistry::new();
        let t = salts.salted_hash_check(&set(&["a", "b", "c"]), &set(&["c", "d"]), [9; 32], [0; 16], &mut rng).unwrap();
        assert_eq!(t.outcome.intersection_cardinality, 1);
        assert!(verify_transcript(&t, &t.journal_commitment).unwrap());
        assert_eq!(
            salts.salted_hash_check(&set(&["a"]), &set(&["a"]), [9; 32], [1; 16], &mut rng).unwrap_err(),
            CoiError::SaltReuse
        );
        let t = salts.salted_hash_check(&set(&["a"]), &ConflictSet::default(), [8; 32], [2; 16], &mut rng).unwrap();
        assert!(t.outcome.clear);
    }

    #[test]
    fn honest_transcript_verifies_and_edits_fail() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let t = run_dh_session(&set(&["a", "b", "c"]), &set(&["c", "d"]), [5; 16], &mut rng).unwrap();
        let c = t.journal_commitment;
        assert!(verify_transcript(&t, &c).unwrap());

        let mut flipped = t.clone();
        flipped.outcome.clear = true;
        flipped.outcome.intersection_cardinality = 0;
        assert!(!verify_transcript(&flipped, &c).unwrap());
        flipped.outcome.transcript_digest = flipped.compute_digest();
        assert!(!verify_transcript(&flipped, &c).unwrap(), "replay catches a re-sealed lie");

        let other = commit(b"other", &[0; 32]).unwrap();
        assert!(!verify_transcript(&t, &other).unwrap());

        let mut short = t.clone();
        short.rounds.pop();
        assert_eq!(verify_transcript(&short, &c).unwrap_err(), CoiError::IncompleteTranscript);
        let mut no_opening = t.clone();
        no_opening.journal_opening = None;
        assert_eq!(verify_transcript(&no_opening, &c).unwrap_err(), CoiError::IncompleteTranscript);
    }

    #[test]
    fn mutated_round_bytes_fail() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let t = run_dh_session(&set(&["a", "b", "c", "q"]), &set(&["c", "d", "a"]), [6; 16], &mut rng).unwrap();
        let c = t.journal_commitment;
        for _ in 0..1000 {
            let mut bad = t.clone();
            let round = rng.gen_range(0..bad.rounds.len());
            let item = rng.gen_range(0..bad.rounds[round].items.len());
            let byte = rng.gen_range(0..32);
            let bit = rng.gen_range(0..8);
            bad.rounds[round].items[item][byte] ^= 1 << bit;
            assert!(!verify_transcript(&bad, &c).unwrap());
        }
    }

    use rand::Rng;

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC{0,24}") {
            if let Ok(once) = normalize(&s) {
                prop_assert_eq!(normalize(&once).unwrap(), once.clone());
            }
        }
    }

    #[test]
    fn normalize_idempotent_on_random_unicode() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let pool: Vec<char> = " \t\u{a0}AaZzÉéİıßẞΣσς\u{301}\u{308}\u{3000}ﬁÅ\u{212b}Ǆǅ".chars().collect();
        for _ in 0..1000 {
            let len = rng.gen_range(1..16);
            let s: String = (0..len).map(|_| pool[rng.gen_range(0..pool.len())]).collect();
            if let Ok(once) = normalize(&s) {
                assert_eq!(normalize(&once).unwrap(), once, "{s:?}");
            }
        }
    }
}
