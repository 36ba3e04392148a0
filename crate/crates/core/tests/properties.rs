use std::collections::{BTreeMap, BTreeSet};

use authcred::canonical::{canonicalize_value, to_canonical_bytes};
use authcred::coi::{run_dh_session, ConflictSet, SaltRegistry};
use authcred::credentials::{create_presentation, issue_credential, verify_presentation, Validity};
use authcred::crypto::{commit, open_commitment, KeyPair};
use authcred::identity::{create_did, register_did, DID_METHOD};
use authcred::registry::{record_offsets, verify_chain_bytes, EntryKind, Ledger, LedgerEntry, TrustRegistry};
use authcred::workflow::{
    submission_challenge, submit, CoauthorEntry, ConsentDecision, ConsentRecord, ContributionRole, SubmissionRequest,
    WorkflowState,
};
use authcred::Digest;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::Value;

const T0: u64 = 1_700_000_000;

fn json_value() -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        Just(Value::Null),
        any::<bool>().prop_map(Value::Bool),
        any::<i64>().prop_map(Value::from),
        any::<u64>().prop_map(Value::from),
        "\\PC{0,12}".prop_map(Value::String),
    ];
    leaf.prop_recursive(3, 32, 6, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..6).prop_map(Value::Array),
            prop::collection::btree_map("\\PC{0,8}", inner, 0..6).prop_map(|m| Value::Object(m.into_iter().collect())),
        ]
    })
}

/// ASCII-only reference for conflict-set normalization.
fn fold(s: &str) -> String {
    s.to_ascii_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

fn element() -> impl Strategy<Value = String> {
    (0u8..40, prop::sample::select(vec!["", " ", "  "]), any::<bool>()).prop_map(|(n, pad, upper)| {
        let base = format!("Institute {n}");
        let base = if upper { base.to_uppercase() } else { base };
        format!("{pad}{}{pad}", base.replace(' ', &format!(" {pad}")))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn canonical_encoding_round_trips_and_is_a_fixed_point(v in json_value()) {
        let bytes = canonicalize_value(&v).unwrap();
        let back: Value = serde_json::from_slice(&bytes).unwrap();
        prop_assert_eq!(&back, &v);
        prop_assert_eq!(canonicalize_value(&back).unwrap(), bytes.clone());
        prop_assert_eq!(to_canonical_bytes(&v).unwrap(), bytes.clone());
        prop_assert!(!bytes.windows(2).any(|w| w == b", " || w == b": "));
    }

    #[test]
    fn commitments_bind_value_and_salt(v in prop::collection::vec(any::<u8>(), 0..64), other in prop::collection::vec(any::<u8>(), 0..64), salt in any::<[u8; 32]>(), flip in 0usize..32) {
        let c = commit(&v, &salt).unwrap();
        prop_assert!(open_commitment(&c, &v, &salt));
        prop_assert_eq!(open_commitment(&c, &other, &salt), other == v);
        let mut bad_salt = salt;
        bad_salt[flip] ^= 1;
        prop_assert!(!open_commitment(&c, &v, &bad_salt));
    }

    #[test]
    fn signatures_reject_any_single_bit_flip(seed in any::<[u8; 32]>(), msg in prop::collection::vec(any::<u8>(), 0..128), bit in 0usize..512) {
        let key = KeyPair::from_secret(&seed);
        let mut sig = key.sign(&msg);
        prop_assert!(key.public_key().verify(&msg, &sig));
        sig.0[bit / 8] ^= 1 << (bit % 8);
        prop_assert!(!key.public_key().verify(&msg, &sig));
    }

    #[test]
    fn ledger_bytes_detect_any_flip_at_or_before_its_block(
        batches in prop::collection::vec(1usize..=5, 1..24),
        pick in any::<prop::sample::Index>(),
        mask in 1u8..=255,
    ) {
        let mut ledger = Ledger::in_memory(T0);
        for (b, n) in batches.iter().enumerate() {
            let entries = (0..*n).map(|e| LedgerEntry::new(EntryKind::WorkflowEvent, format!("{b}/{e}"), Digest([e as u8; 32]), T0)).collect();
            ledger.append(entries, T0 + b as u64).unwrap();
        }
        let bytes = ledger.to_bytes();
        prop_assert!(verify_chain_bytes(&bytes).valid);
        let pos = pick.index(bytes.len());
        let mut bad = bytes.clone();
        bad[pos] ^= mask;
        let offsets = record_offsets(&bytes);
        let block = (offsets.partition_point(|&o| o <= pos) - 1) as u64;
        let report = verify_chain_bytes(&bad);
        prop_assert!(!report.valid);
        prop_assert!(report.first_bad_block.unwrap() <= block);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn coi_cardinality_matches_reference(
        journal in prop::collection::vec(element(), 1..12),
        reviewer in prop::collection::vec(element(), 0..12),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let j: BTreeSet<String> = journal.iter().map(|s| fold(s)).collect();
        let r: BTreeSet<String> = reviewer.iter().map(|s| fold(s)).collect();
        let expected = j.intersection(&r).count() as u64;
        let js = ConflictSet::new(&journal).unwrap();
        let rs = ConflictSet::new(&reviewer).unwrap();
        let dh = run_dh_session(&js, &rs, [1; 16], &mut rng).unwrap();
        let salted = SaltRegistry::new().salted_hash_check(&js, &rs, [seed as u8; 32], [2; 16], &mut rng).unwrap();
        prop_assert_eq!(dh.outcome.intersection_cardinality, expected);
        prop_assert_eq!(salted.outcome.intersection_cardinality, expected);
        prop_assert_eq!(dh.outcome.clear, expected == 0);
    }

    #[test]
    fn presentations_reveal_exactly_the_requested_claims(
        claims in prop::collection::btree_map("[a-z]{1,10}", "[ -~]{0,16}", 1..6),
        mask in any::<u8>(),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut reg = TrustRegistry::in_memory(T0);
        let issuer = KeyPair::from_rng(&mut rng);
        let holder = KeyPair::from_rng(&mut rng);
        let (issuer_did, doc) = create_did(&issuer, DID_METHOD, T0);
        register_did(&mut reg, &doc, T0).unwrap();
        let (holder_did, doc) = create_did(&holder, DID_METHOD, T0);
        register_did(&mut reg, &doc, T0).unwrap();
        let list: Vec<(String, String)> = claims.clone().into_iter().collect();
        let vc = issue_credential(&reg, &issuer, &issuer_did, &holder_did, &list, Validity::days_from(T0, 30), &mut rng).unwrap();
        let chosen: Vec<&str> = list.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, (k, _))| k.as_str()).collect();
        let p = create_presentation(&vc, &chosen, &holder, [7; 32]).unwrap();
        let shown = verify_presentation(&reg, &p, &[7; 32], T0 + 1).unwrap();
        let expected: BTreeMap<String, String> = claims.into_iter().filter(|(k, _)| chosen.contains(&k.as_str())).collect();
        prop_assert_eq!(shown, expected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Random decision sequences for up to six co-authors, beyond the
    /// exhaustive range: a submission is ConsentComplete exactly when every
    /// co-author's recorded decision is Grant.
    #[test]
    fn consent_complete_iff_everyone_granted(
        n in 1usize..=6,
        events in prop::collection::vec((0usize..6, any::<bool>()), 0..16),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut reg = TrustRegistry::in_memory(T0);
        let mut people = Vec::new();
        for _ in 0..=n + 1 {
            let k = KeyPair::from_rng(&mut rng);
            let (did, doc) = create_did(&k, DID_METHOD, T0);
            register_did(&mut reg, &doc, T0).unwrap();
            people.push((k, did));
        }
        let (issuer, issuer_did) = &people[n + 1];
        let (author, author_did) = &people[0];
        let vc = issue_credential(&reg, issuer, issuer_did, author_did, &[("affiliation".into(), "Lund".into())], Validity::days_from(T0, 30), &mut rng).unwrap();
        authcred::credentials::anchor_credential(&mut reg, &vc, T0).unwrap();
        let (id, ms) = ([9; 16], Digest([9; 32]));
        let req = SubmissionRequest {
            id,
            manuscript_digest: ms,
            corresponding_author: author_did.clone(),
            author_role: ContributionRole::Software,
            author_presentation: create_presentation(&vc, &["affiliation"], author, submission_challenge(id, &ms)).unwrap(),
            author_consent: ConsentRecord::sign(author, author_did.clone(), id, &ms, ContributionRole::Software, ConsentDecision::Grant, T0),
            coauthors: people[1..=n].iter().map(|(_, d)| CoauthorEntry { did: d.clone(), role: ContributionRole::Validation, affiliation_presentation: None }).collect(),
            consent_deadline: None,
        };
        let (mut sub, _) = submit(&mut reg, req, T0, 14).unwrap();
        let mut decided: BTreeMap<usize, ConsentDecision> = BTreeMap::new();
        for (who, grant) in events {
            let who = who % n + 1;
            let decision = if grant { ConsentDecision::Grant } else { ConsentDecision::Deny };
            let (k, did) = &people[who];
            let rec = ConsentRecord::sign(k, did.clone(), id, &ms, ContributionRole::Validation, decision, T0 + 1);
            let before = sub.alerts.len();
            if sub.record_consent(&mut reg, rec, T0 + 1).is_ok() {
                decided.insert(who, decision);
                prop_assert_eq!(sub.alerts.len() - before, usize::from(decision == ConsentDecision::Deny));
            }
            let all = decided.len() == n && decided.values().all(|d| *d == ConsentDecision::Grant);
            prop_assert_eq!(sub.state == WorkflowState::ConsentComplete, all);
        }
    }
}
