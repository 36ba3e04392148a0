//! Tamper-evident append-only trust registry.
//!
//! A single-writer hash chain of blocks. Each block commits to up to
//! [`MAX_BATCH`] entries through a Merkle root, and the block hash chains the
//! header fields to the previous block. Anyone holding the head hash plus the
//! block headers can check an [`InclusionProof`] without seeing any other
//! entry.
//!
//! On disk the ledger is a sequence of `u32 (big endian) length ‖ canonical
//! JSON block` records, written once and never rewritten.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::{canonical_digest, to_canonical_bytes};
use crate::crypto::{tagged_hash, Digest};

pub const MAX_BATCH: usize = 64;

const TAG_ENTRY: &str = "authcred/entry/v1";
const TAG_BLOCK: &str = "authcred/block/v1";
const TAG_LEAF: &str = "authcred/merkle/leaf/v1";
const TAG_NODE: &str = "authcred/merkle/node/v1";
const TAG_EMPTY: &str = "authcred/merkle/empty/v1";

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("batch of {0} entries exceeds the limit of {MAX_BATCH}")]
    BatchTooLarge(usize),
    #[error("{kind:?} entry for key {key:?} already recorded")]
    UniquenessViolation { kind: EntryKind, key: String },
    #[error("entry not found in block {0}")]
    EntryNotFound(u64),
    #[error("ledger is corrupt at block {index}: {reason}")]
    Corrupt { index: u64, reason: String },
    #[error("ledger I/O: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    DidRegistration,
    CredentialAnchor,
    ConsentRecord,
    ReviewAttestation,
    CoiOutcome,
    PublicationAnchor,
    /// Workflow transitions not covered by a more specific kind
    /// (alert resolutions, review-phase entry, editorial decisions).
    WorkflowEvent,
}

impl EntryKind {
    pub fn is_unique(self) -> bool {
        matches!(self, EntryKind::DidRegistration | EntryKind::PublicationAnchor)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub kind: EntryKind,
    pub key: String,
    pub payload_digest: Digest,
    pub recorded_at: u64,
}

impl LedgerEntry {
    pub fn new(kind: EntryKind, key: impl Into<String>, payload_digest: Digest, recorded_at: u64) -> Self {
        LedgerEntry { kind, key: key.into(), payload_digest, recorded_at }
    }

    pub fn digest(&self) -> Digest {
        canonical_digest(TAG_ENTRY, self).expect("ledger entries are always canonicalizable")
    }
}

/// Everything a reader needs from a block to check proofs and chaining.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockHeader {
    pub index: u64,
    pub prev_hash: Digest,
    pub merkle_root: Digest,
    pub timestamp: u64,
    pub block_hash: Digest,
}

impl BlockHeader {
    pub fn compute_hash(index: u64, prev_hash: &Digest, merkle_root: &Digest, timestamp: u64) -> Digest {
        tagged_hash(
            TAG_BLOCK,
            &[&index.to_be_bytes(), prev_hash.as_bytes(), merkle_root.as_bytes(), &timestamp.to_be_bytes()],
        )
    }

    pub fn hash_recomputes(&self) -> bool {
        Self::compute_hash(self.index, &self.prev_hash, &self.merkle_root, self.timestamp) == self.block_hash
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerBlock {
    pub index: u64,
    pub prev_hash: Digest,
    pub timestamp: u64,
    pub merkle_root: Digest,
    pub block_hash: Digest,
    pub entries: Vec<LedgerEntry>,
}

impl LedgerBlock {
    fn seal(index: u64, prev_hash: Digest, timestamp: u64, entries: Vec<LedgerEntry>) -> LedgerBlock {
        let leaves: Vec<Digest> = entries.iter().map(LedgerEntry::digest).collect();
        let merkle_root = merkle_root(&leaves);
        let block_hash = BlockHeader::compute_hash(index, &prev_hash, &merkle_root, timestamp);
        LedgerBlock { index, prev_hash, timestamp, merkle_root, block_hash, entries }
    }

    pub fn header(&self) -> BlockHeader {
        BlockHeader {
            index: self.index,
            prev_hash: self.prev_hash,
            merkle_root: self.merkle_root,
            timestamp: self.timestamp,
            block_hash: self.block_hash,
        }
    }

    pub fn entry_digests(&self) -> Vec<Digest> {
        self.entries.iter().map(LedgerEntry::digest).collect()
    }

    /// The length-prefixed on-disk record for this block.
    pub fn to_record(&self) -> Vec<u8> {
        let body = to_canonical_bytes(self).expect("blocks are always canonicalizable");
        let mut out = Vec::with_capacity(body.len() + 4);
        out.extend_from_slice(&(body.len() as u32).to_be_bytes());
        out.extend_from_slice(&body);
        out
    }
}

// ---------------------------------------------------------------------------
// Merkle tree
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// One step of an inclusion path: the sibling digest and which side it sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathStep {
    pub sibling: Digest,
    pub side: Side,
}

fn leaf_hash(entry_digest: &Digest) -> Digest {
    tagged_hash(TAG_LEAF, &[entry_digest.as_bytes()])
}

fn node_hash(left: &Digest, right: &Digest) -> Digest {
    tagged_hash(TAG_NODE, &[left.as_bytes(), right.as_bytes()])
}

/// Root over entry digests. Odd nodes are promoted to the next level unchanged.
pub fn merkle_root(entry_digests: &[Digest]) -> Digest {
    if entry_digests.is_empty() {
        return tagged_hash(TAG_EMPTY, &[]);
    }
    let mut level: Vec<Digest> = entry_digests.iter().map(leaf_hash).collect();
    while level.len() > 1 {
        level = level
            .chunks(2)
            .map(|pair| match pair {
                [l, r] => node_hash(l, r),
                [only] => *only,
                _ => unreachable!(),
            })
            .collect();
    }
    level[0]
}

fn merkle_path(entry_digests: &[Digest], mut position: usize) -> Vec<PathStep> {
    let mut level: Vec<Digest> = entry_digests.iter().map(leaf_hash).collect();
    let mut path = Vec::new();
    while level.len() > 1 {
        let sibling = position ^ 1;
        if sibling < level.len() {
            let side = if sibling < position { Side::Left } else { Side::Right };
            path.push(PathStep { sibling: level[sibling], side });
        }
        level = level
            .chunks(2)
            .map(|pair| match pair {
                [l, r] => node_hash(l, r),
                [only] => *only,
                _ => unreachable!(),
            })
            .collect();
        position /= 2;
    }
    path
}

/// Folds an inclusion path from an entry digest up to a root.
pub fn fold_path(entry_digest: &Digest, path: &[PathStep]) -> Digest {
    path.iter().fold(leaf_hash(entry_digest), |acc, step| match step.side {
        Side::Left => node_hash(&step.sibling, &acc),
        Side::Right => node_hash(&acc, &step.sibling),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InclusionProof {
    pub block_index: u64,
    pub entry_digest: Digest,
    pub sibling_path: Vec<PathStep>,
}

impl InclusionProof {
    pub fn verify_against_root(&self, merkle_root: &Digest) -> bool {
        fold_path(&self.entry_digest, &self.sibling_path) == *merkle_root
    }
}

/// Checks that `headers` form a valid chain from genesis (each hash
/// recomputes, each `prev_hash` links, indices are dense, timestamps never go
/// backwards). Returns the index of the first bad header.
pub fn check_headers(headers: &[BlockHeader]) -> Result<(), u64> {
    let mut prev: Option<&BlockHeader> = None;
    for (i, h) in headers.iter().enumerate() {
        let i = i as u64;
        let linked = match prev {
            None => h.prev_hash == Digest::ZERO,
            Some(p) => h.prev_hash == p.block_hash && h.timestamp >= p.timestamp,
        };
        if h.index != i || !linked || !h.hash_recomputes() {
            return Err(i);
        }
        prev = Some(h);
    }
    Ok(())
}

/// Reader-side proof check: `headers` must chain to `trusted_head_hash` and
/// the proof must fold to the root of the block it names.
pub fn verify_inclusion(proof: &InclusionProof, trusted_head_hash: &Digest, headers: &[BlockHeader]) -> bool {
    if check_headers(headers).is_err() {
        return false;
    }
    if headers.last().map(|h| &h.block_hash) != Some(trusted_head_hash) {
        return false;
    }
    match headers.get(proof.block_index as usize) {
        Some(h) => proof.verify_against_root(&h.merkle_root),
        None => false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerReceipt {
    pub block_index: u64,
    pub entry_digest: Digest,
    pub entry: LedgerEntry,
    pub proof: InclusionProof,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainReport {
    pub valid: bool,
    pub blocks_checked: u64,
    pub first_bad_block: Option<u64>,
    pub reason: Option<String>,
}

impl ChainReport {
    fn ok(blocks_checked: u64) -> Self {
        ChainReport { valid: true, blocks_checked, first_bad_block: None, reason: None }
    }

    fn bad(index: u64, reason: impl Into<String>) -> Self {
        ChainReport { valid: false, blocks_checked: index, first_bad_block: Some(index), reason: Some(reason.into()) }
    }
}

fn check_block(block: &LedgerBlock, expected_index: u64, prev: Option<&LedgerBlock>) -> Result<(), String> {
    if block.index != expected_index {
        return Err(format!("index {} where {} expected", block.index, expected_index));
    }
    let expected_prev = prev.map(|p| p.block_hash).unwrap_or(Digest::ZERO);
    if block.prev_hash != expected_prev {
        return Err("prev_hash does not link".into());
    }
    if let Some(p) = prev {
        if block.timestamp < p.timestamp {
            return Err("timestamp goes backwards".into());
        }
        if block.entries.is_empty() || block.entries.len() > MAX_BATCH {
            return Err(format!("{} entries outside 1..={MAX_BATCH}", block.entries.len()));
        }
    } else if !block.entries.is_empty() {
        return Err("genesis block carries entries".into());
    }
    if merkle_root(&block.entry_digests()) != block.merkle_root {
        return Err("merkle_root does not recompute".into());
    }
    if !block.header().hash_recomputes() {
        return Err("block_hash does not recompute".into());
    }
    Ok(())
}

/// Verifies the raw persisted form. Besides the hash checks, every record must
/// be exactly the canonical encoding of the block it decodes to, so no byte of
/// the file can change without detection.
pub fn verify_chain_bytes(bytes: &[u8]) -> ChainReport {
    match decode_records(bytes) {
        Ok(blocks) => verify_blocks(&blocks),
        Err((index, reason)) => {
            // Blocks before the undecodable record may still be bad themselves.
            let prefix = decode_records_prefix(bytes, index);
            let report = verify_blocks(&prefix);
            if report.valid {
                ChainReport::bad(index, reason)
            } else {
                report
            }
        }
    }
}

fn verify_blocks(blocks: &[LedgerBlock]) -> ChainReport {
    if blocks.is_empty() {
        return ChainReport::bad(0, "missing genesis block");
    }
    let mut prev = None;
    for (i, block) in blocks.iter().enumerate() {
        if let Err(reason) = check_block(block, i as u64, prev) {
            return ChainReport::bad(i as u64, reason);
        }
        prev = Some(block);
    }
    ChainReport::ok(blocks.len() as u64)
}

/// Byte offsets of each record (start of its length prefix).
pub fn record_offsets(bytes: &[u8]) -> Vec<usize> {
    let mut offsets = Vec::new();
    let mut pos = 0usize;
    while pos + 4 <= bytes.len() {
        offsets.push(pos);
        let len = u32::from_be_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
        pos = pos.saturating_add(4).saturating_add(len);
    }
    offsets
}

fn decode_record(bytes: &[u8], pos: &mut usize, index: u64) -> Result<LedgerBlock, (u64, String)> {
    if *pos + 4 > bytes.len() {
        return Err((index, "truncated length prefix".into()));
    }
    let len = u32::from_be_bytes(bytes[*pos..*pos + 4].try_into().unwrap()) as usize;
    let start = *pos + 4;
    let end = start.checked_add(len).filter(|&e| e <= bytes.len()).ok_or((index, "record overruns file".to_string()))?;
    let body = &bytes[start..end];
    let block: LedgerBlock =
        serde_json::from_slice(body).map_err(|e| (index, format!("undecodable record: {e}")))?;
    let canonical = to_canonical_bytes(&block).map_err(|e| (index, e.to_string()))?;
    if canonical != body {
        return Err((index, "record is not in canonical form".into()));
    }
    *pos = end;
    Ok(block)
}

fn decode_records(bytes: &[u8]) -> Result<Vec<LedgerBlock>, (u64, String)> {
    let mut blocks = Vec::new();
    let mut pos = 0usize;
    while pos < bytes.len() {
        let block = decode_record(bytes, &mut pos, blocks.len() as u64)?;
        blocks.push(block);
    }
    Ok(blocks)
}

fn decode_records_prefix(bytes: &[u8], count: u64) -> Vec<LedgerBlock> {
    let mut blocks = Vec::new();
    let mut pos = 0usize;
    while (blocks.len() as u64) < count {
        match decode_record(bytes, &mut pos, blocks.len() as u64) {
            Ok(b) => blocks.push(b),
            Err(_) => break,
        }
    }
    blocks
}

// ---------------------------------------------------------------------------
// Ledger
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct Location {
    block: u64,
    position: usize,
}

/// The hash chain plus its rebuildable lookup index.
#[derive(Debug)]
pub struct Ledger {
    blocks: Vec<LedgerBlock>,
    by_key: HashMap<(EntryKind, String), Vec<Location>>,
    file: Option<File>,
}

impl Ledger {
    pub fn in_memory(genesis_timestamp: u64) -> Ledger {
        let mut ledger = Ledger { blocks: Vec::new(), by_key: HashMap::new(), file: None };
        ledger.push_block(LedgerBlock::seal(0, Digest::ZERO, genesis_timestamp, Vec::new()));
        ledger
    }

    /// Opens (or creates) a file-backed ledger. An existing file must pass
    /// [`verify_chain_bytes`].
    pub fn open(path: &Path, genesis_timestamp: u64) -> Result<Ledger, RegistryError> {
        if path.exists() {
            let bytes = fs::read(path)?;
            let report = verify_chain_bytes(&bytes);
            if !report.valid {
                return Err(RegistryError::Corrupt {
                    index: report.first_bad_block.unwrap_or(0),
                    reason: report.reason.unwrap_or_default(),
                });
            }
            let blocks = decode_records(&bytes).expect("verified above");
            let mut ledger = Ledger { blocks: Vec::new(), by_key: HashMap::new(), file: None };
            for b in blocks {
                ledger.push_block(b);
            }
            ledger.file = Some(OpenOptions::new().append(true).open(path)?);
            Ok(ledger)
        } else {
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir)?;
            }
            let mut file = OpenOptions::new().create_new(true).append(true).open(path)?;
            let genesis = LedgerBlock::seal(0, Digest::ZERO, genesis_timestamp, Vec::new());
            file.write_all(&genesis.to_record())?;
            file.sync_data()?;
            let mut ledger = Ledger { blocks: Vec::new(), by_key: HashMap::new(), file: Some(file) };
            ledger.push_block(genesis);
            Ok(ledger)
        }
    }

    /// Rebuilds a ledger from decoded blocks, e.g. a reader's copy.
    pub fn from_blocks(blocks: Vec<LedgerBlock>) -> Result<Ledger, RegistryError> {
        let report = verify_blocks(&blocks);
        if !report.valid {
            return Err(RegistryError::Corrupt {
                index: report.first_bad_block.unwrap_or(0),
                reason: report.reason.unwrap_or_default(),
            });
        }
        let mut ledger = Ledger { blocks: Vec::new(), by_key: HashMap::new(), file: None };
        for b in blocks {
            ledger.push_block(b);
        }
        Ok(ledger)
    }

    fn push_block(&mut self, block: LedgerBlock) {
        for (position, e) in block.entries.iter().enumerate() {
            self.by_key
                .entry((e.kind, e.key.clone()))
                .or_default()
                .push(Location { block: block.index, position });
        }
        self.blocks.push(block);
    }

    /// Seals `entries` into one new block chained to the head.
    pub fn append(&mut self, entries: Vec<LedgerEntry>, timestamp: u64) -> Result<Vec<LedgerReceipt>, RegistryError> {
        if entries.is_empty() {
            return Err(RegistryError::EmptyBatch);
        }
        if entries.len() > MAX_BATCH {
            return Err(RegistryError::BatchTooLarge(entries.len()));
        }
        let mut batch_keys = std::collections::HashSet::new();
        for e in entries.iter().filter(|e| e.kind.is_unique()) {
            if self.by_key.contains_key(&(e.kind, e.key.clone())) || !batch_keys.insert((e.kind, e.key.clone())) {
                return Err(RegistryError::UniquenessViolation { kind: e.kind, key: e.key.clone() });
            }
        }
        let head = self.head();
        let block = LedgerBlock::seal(head.index + 1, head.block_hash, timestamp.max(head.timestamp), entries);
        if let Some(file) = self.file.as_mut() {
            file.write_all(&block.to_record())?;
            file.sync_data()?;
        }
        let digests = block.entry_digests();
        let receipts = block
            .entries
            .iter()
            .enumerate()
            .map(|(pos, entry)| LedgerReceipt {
                block_index: block.index,
                entry_digest: digests[pos],
                entry: entry.clone(),
                proof: InclusionProof {
                    block_index: block.index,
                    entry_digest: digests[pos],
                    sibling_path: merkle_path(&digests, pos),
                },
            })
            .collect();
        self.push_block(block);
        Ok(receipts)
    }

    pub fn append_one(&mut self, entry: LedgerEntry, timestamp: u64) -> Result<LedgerReceipt, RegistryError> {
        Ok(self.append(vec![entry], timestamp)?.remove(0))
    }

    pub fn verify_chain(&self) -> ChainReport {
        verify_blocks(&self.blocks)
    }

    pub fn prove_inclusion(&self, block_index: u64, entry_digest: &Digest) -> Result<InclusionProof, RegistryError> {
        let block = self.blocks.get(block_index as usize).ok_or(RegistryError::EntryNotFound(block_index))?;
        let digests = block.entry_digests();
        let position = digests
            .iter()
            .position(|d| d == entry_digest)
            .ok_or(RegistryError::EntryNotFound(block_index))?;
        Ok(InclusionProof { block_index, entry_digest: *entry_digest, sibling_path: merkle_path(&digests, position) })
    }

    /// Receipt for an entry already on the ledger.
    pub fn receipt_for(&self, block_index: u64, entry_digest: &Digest) -> Result<LedgerReceipt, RegistryError> {
        let proof = self.prove_inclusion(block_index, entry_digest)?;
        let block = &self.blocks[block_index as usize];
        let entry = block
            .entries
            .iter()
            .find(|e| e.digest() == *entry_digest)
            .cloned()
            .ok_or(RegistryError::EntryNotFound(block_index))?;
        Ok(LedgerReceipt { block_index, entry_digest: *entry_digest, entry, proof })
    }

    /// All entries with this kind and key, in chain order.
    pub fn query(&self, kind: EntryKind, key: &str) -> Vec<(LedgerEntry, u64)> {
        self.by_key
            .get(&(kind, key.to_string()))
            .map(|locs| {
                locs.iter()
                    .map(|l| (self.blocks[l.block as usize].entries[l.position].clone(), l.block))
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn head(&self) -> BlockHeader {
        self.blocks.last().expect("ledger always has a genesis block").header()
    }

    pub fn head_hash(&self) -> Digest {
        self.head().block_hash
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.len() <= 1
    }

    pub fn block(&self, index: u64) -> Option<&LedgerBlock> {
        self.blocks.get(index as usize)
    }

    pub fn blocks(&self) -> &[LedgerBlock] {
        &self.blocks
    }

    pub fn headers(&self) -> Vec<BlockHeader> {
        self.blocks.iter().map(LedgerBlock::header).collect()
    }

    /// The exact bytes the file-backed form holds.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.blocks.iter().flat_map(|b| b.to_record()).collect()
    }
}

// ---------------------------------------------------------------------------
// Off-ledger documents
// ---------------------------------------------------------------------------

/// Node-local storage for full documents whose digests are anchored on the
/// ledger (DID documents, transcripts, publication sidecars).
#[derive(Debug, Default)]
pub struct DocumentStore {
    dir: Option<PathBuf>,
    docs: BTreeMap<String, Vec<u8>>,
}

impl DocumentStore {
    pub fn in_memory() -> Self {
        DocumentStore::default()
    }

    /// File-backed store rooted at `dir`; existing files are loaded eagerly.
    pub fn open(dir: &Path) -> Result<Self, RegistryError> {
        fs::create_dir_all(dir)?;
        let mut docs = BTreeMap::new();
        load_dir(dir, dir, &mut docs)?;
        Ok(DocumentStore { dir: Some(dir.to_path_buf()), docs })
    }

    pub fn put(&mut self, path: &str, bytes: Vec<u8>) -> Result<(), RegistryError> {
        if let Some(dir) = &self.dir {
            let full = dir.join(path);
            if let Some(parent) = full.parent() {
                fs::create_dir_all(parent)?;
            }
            let tmp = full.with_extension("tmp");
            fs::write(&tmp, &bytes)?;
            fs::rename(&tmp, &full)?;
        }
        self.docs.insert(path.to_string(), bytes);
        Ok(())
    }

    pub fn get(&self, path: &str) -> Option<&[u8]> {
        self.docs.get(path).map(Vec::as_slice)
    }

    /// Raw mutable access, for out-of-band tamper experiments.
    pub fn get_mut(&mut self, path: &str) -> Option<&mut Vec<u8>> {
        self.docs.get_mut(path)
    }

    pub fn paths_with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.docs.keys().filter(move |k| k.starts_with(prefix)).map(String::as_str)
    }
}

fn load_dir(root: &Path, dir: &Path, docs: &mut BTreeMap<String, Vec<u8>>) -> Result<(), RegistryError> {
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let path = entry.path();
        if path.is_dir() {
            load_dir(root, &path, docs)?;
        } else if path.extension().and_then(|e| e.to_str()) != Some("tmp") {
            let rel = path.strip_prefix(root).expect("walked from root");
            let key = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            docs.insert(key, fs::read(&path)?);
        }
    }
    Ok(())
}

/// The ledger together with the document store it anchors.
#[derive(Debug)]
pub struct TrustRegistry {
    pub ledger: Ledger,
    pub documents: DocumentStore,
}

impl TrustRegistry {
    pub fn in_memory(genesis_timestamp: u64) -> Self {
        TrustRegistry { ledger: Ledger::in_memory(genesis_timestamp), documents: DocumentStore::in_memory() }
    }

    /// `dir/ledger.bin` plus `dir/docs/`.
    pub fn open(dir: &Path, genesis_timestamp: u64) -> Result<Self, RegistryError> {
        Ok(TrustRegistry {
            ledger: Ledger::open(&dir.join("ledger.bin"), genesis_timestamp)?,
            documents: DocumentStore::open(&dir.join("docs"))?,
        })
    }
}
