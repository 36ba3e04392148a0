//! Decentralized authorship validation.
//!
//! Self-sovereign identities and verifiable credentials for authors and
//! reviewers, an explicit co-author consent workflow, a private
//! conflict-of-interest check, and publication metadata anchored on a
//! tamper-evident registry that any reader can verify with block headers
//! alone.

pub mod canonical;
pub mod coi;
pub mod credentials;
pub mod crypto;
pub mod identity;
pub mod metadata;
pub mod node;
pub mod registry;
pub mod scenario;
pub mod wallet;
pub mod workflow;

pub use crypto::{Digest, KeyPair, PublicKey, Signature};
pub use identity::{Did, DidDocument};
pub use registry::{Ledger, LedgerReceipt, TrustRegistry};
