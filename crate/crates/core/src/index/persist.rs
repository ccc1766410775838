//! On-disk index layout. All integers and floats little-endian.
//!
//! ```text
//! meta.json     format, version, n_t, n_c, num_docs, corpus checksum,
//!               doc table, optional encoder spec (with vocabulary), and
//!               byte length + FNV-1a 64 checksum of each binary file
//! postings.bin  "COILPOST" u32 version, u32 n_t, u32 num_lists, then per
//!               list in ascending token id:
//!                 u32 token_id, u32 count, count × u32 ordinal,
//!                 count × n_t × f32 (occurrence-major)
//! cls.bin       "COILCLS\0" u32 version, u32 n_c, u32 num_docs,
//!               num_docs × n_c × f32 (document-major)
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CoilIndex, InvertedList, INDEX_VERSION};
use crate::encoding::EncoderSpec;
use crate::error::{Error, Result};
use crate::hash::fnv1a64;
use crate::model::{validate_unique_ids, TokenId};

pub const META_FILE: &str = "meta.json";
pub const POSTINGS_FILE: &str = "postings.bin";
pub const CLS_FILE: &str = "cls.bin";

const POSTINGS_MAGIC: &[u8; 8] = b"COILPOST";
const CLS_MAGIC: &[u8; 8] = b"COILCLS\0";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub bytes: u64,
    /// Hex-encoded FNV-1a 64 of the whole file.
    pub fnv1a64: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexMeta {
    pub format: String,
    pub version: u32,
    pub n_t: usize,
    pub n_c: usize,
    pub num_docs: usize,
    pub corpus_checksum: String,
    pub doc_table: Vec<String>,
    pub encoder: Option<EncoderSpec>,
    pub files: BTreeMap<String, FileEntry>,
}

impl IndexMeta {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let meta: IndexMeta = serde_json::from_slice(bytes).map_err(|e| Error::Corrupt(format!("{META_FILE}: {e}")))?;
        if meta.format != "coil-index" {
            return Err(Error::Corrupt(format!(
                "{META_FILE}: unexpected format `{}`",
                meta.format
            )));
        }
        if meta.version != INDEX_VERSION {
            return Err(Error::Version {
                file: META_FILE.into(),
                found: meta.version,
                expected: INDEX_VERSION,
            });
        }
        if meta.doc_table.len() != meta.num_docs {
            return Err(Error::Corrupt(format!(
                "{META_FILE}: doc_table has {} entries but num_docs is {}",
                meta.doc_table.len(),
                meta.num_docs
            )));
        }
        validate_unique_ids(meta.doc_table.iter().map(String::as_str))
            .map_err(|e| Error::Corrupt(format!("{META_FILE}: {e}")))?;
        if let Some(enc) = &meta.encoder {
            if enc.config.n_t != meta.n_t || enc.config.n_c != meta.n_c {
                return Err(Error::Corrupt(format!(
                    "{META_FILE}: encoder dimensions disagree with index dimensions"
                )));
            }
        }
        Ok(meta)
    }
}

fn hex(v: u64) -> String {
    format!("{v:016x}")
}

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn to_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::InvalidArgument(format!("{what} exceeds u32")))
}

fn encode_postings(index: &CoilIndex) -> Result<Vec<u8>> {
    let mut buf = Vec::with_capacity(20 + index.stats().bytes_on_disk as usize);
    buf.extend_from_slice(POSTINGS_MAGIC);
    put_u32(&mut buf, INDEX_VERSION);
    put_u32(&mut buf, to_u32(index.n_t, "n_t")?);
    put_u32(&mut buf, to_u32(index.lists.len(), "list count")?);
    for list in index.lists() {
        put_u32(&mut buf, list.token_id);
        put_u32(&mut buf, to_u32(list.len(), "list length")?);
        for &r in &list.doc_refs {
            put_u32(&mut buf, r);
        }
        for &v in &list.vectors {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(buf)
}

fn encode_cls(index: &CoilIndex) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    buf.extend_from_slice(CLS_MAGIC);
    put_u32(&mut buf, INDEX_VERSION);
    put_u32(&mut buf, to_u32(index.n_c, "n_c")?);
    put_u32(&mut buf, to_u32(index.num_docs(), "document count")?);
    for &v in index.cls.iter().flatten() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    Ok(buf)
}

/// Writes `meta.json`, `postings.bin` and `cls.bin` into `dir`, creating it
/// if needed.
pub fn save_index(index: &CoilIndex, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut files = BTreeMap::new();
    for (name, bytes) in [(POSTINGS_FILE, encode_postings(index)?), (CLS_FILE, encode_cls(index)?)] {
        fs::write(dir.join(name), &bytes)?;
        files.insert(
            name.to_string(),
            FileEntry {
                bytes: bytes.len() as u64,
                fnv1a64: hex(fnv1a64(&bytes)),
            },
        );
    }
    let meta = IndexMeta {
        format: "coil-index".into(),
        version: INDEX_VERSION,
        n_t: index.n_t,
        n_c: index.n_c,
        num_docs: index.num_docs(),
        corpus_checksum: hex(index.corpus_checksum),
        doc_table: index.doc_table.clone(),
        encoder: index.encoder.clone(),
        files,
    };
    let json = serde_json::to_vec_pretty(&meta).map_err(std::io::Error::from)?;
    fs::write(dir.join(META_FILE), json)?;
    Ok(())
}

struct Cursor<'a> {
    file: &'static str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Corrupt(format!("{}: truncated at byte {}", self.file, self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn magic(&mut self, want: &[u8; 8]) -> Result<()> {
        if self.take(8)? != want {
            return Err(Error::Corrupt(format!("{}: bad magic", self.file)));
        }
        Ok(())
    }

    fn version(&mut self) -> Result<()> {
        let v = self.u32()?;
        if v != INDEX_VERSION {
            return Err(Error::Version {
                file: self.file.into(),
                found: v,
                expected: INDEX_VERSION,
            });
        }
        Ok(())
    }

    /// Reads `count` items of `width` bytes, refusing counts that exceed
    /// the remaining input before allocating.
    fn array(&mut self, count: usize, width: usize) -> Result<&'a [u8]> {
        let n = count
            .checked_mul(width)
            .ok_or_else(|| Error::Corrupt(format!("{}: length overflow", self.file)))?;
        self.take(n)
    }

    fn u32s(&mut self, count: usize) -> Result<Vec<u32>> {
        Ok(self
            .array(count, 4)?
            .chunks_exact(4)
            .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect())
    }

    fn f32s(&mut self, count: usize) -> Result<Vec<f32>> {
        Ok(self
            .array(count, 4)?
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Corrupt(format!(
                "{}: {} trailing bytes",
                self.file,
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

/// Decodes `postings.bin`, returning `n_t` and the lists in token order.
/// Checks list structure but not ordinals against a document count.
pub fn decode_postings(bytes: &[u8]) -> Result<(usize, Vec<InvertedList>)> {
    let mut cur = Cursor {
        file: POSTINGS_FILE,
        bytes,
        pos: 0,
    };
    cur.magic(POSTINGS_MAGIC)?;
    cur.version()?;
    let n_t = cur.u32()? as usize;
    let num_lists = cur.u32()? as usize;
    let mut lists = Vec::new();
    let mut prev: Option<TokenId> = None;
    for _ in 0..num_lists {
        let token_id = cur.u32()?;
        if prev.is_some_and(|p| p >= token_id) {
            return Err(Error::Corrupt(format!(
                "{POSTINGS_FILE}: token ids not strictly ascending"
            )));
        }
        prev = Some(token_id);
        let count = cur.u32()? as usize;
        if count == 0 {
            return Err(Error::Corrupt(format!(
                "{POSTINGS_FILE}: empty list for token {token_id}"
            )));
        }
        let refs = cur.u32s(count)?;
        if refs.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Corrupt(format!(
                "{POSTINGS_FILE}: ordinals out of order in list {token_id}"
            )));
        }
        let total = count
            .checked_mul(n_t)
            .ok_or_else(|| Error::Corrupt(format!("{POSTINGS_FILE}: length overflow")))?;
        let vectors = cur.f32s(total)?;
        lists.push(InvertedList::from_parts(token_id, n_t, vectors, refs));
    }
    cur.finish()?;
    Ok((n_t, lists))
}

/// Decodes `cls.bin` into `(n_c, num_docs, document-major matrix)`.
pub fn decode_cls(bytes: &[u8]) -> Result<(usize, usize, Vec<f32>)> {
    let mut cur = Cursor {
        file: CLS_FILE,
        bytes,
        pos: 0,
    };
    cur.magic(CLS_MAGIC)?;
    cur.version()?;
    let n_c = cur.u32()? as usize;
    let num_docs = cur.u32()? as usize;
    let total = n_c
        .checked_mul(num_docs)
        .ok_or_else(|| Error::Corrupt(format!("{CLS_FILE}: length overflow")))?;
    let data = cur.f32s(total)?;
    cur.finish()?;
    Ok((n_c, num_docs, data))
}

fn read_checked(dir: &Path, name: &str, meta: &IndexMeta) -> Result<Vec<u8>> {
    let entry = meta
        .files
        .get(name)
        .ok_or_else(|| Error::Corrupt(format!("{META_FILE}: no entry for {name}")))?;
    let bytes = fs::read(dir.join(name))?;
    if bytes.len() as u64 != entry.bytes || hex(fnv1a64(&bytes)) != entry.fnv1a64 {
        return Err(Error::Checksum(name.to_string()));
    }
    Ok(bytes)
}

/// Loads an index written by [`save_index`], verifying checksums first and
/// then every structural invariant.
pub fn load_index(dir: &Path) -> Result<CoilIndex> {
    let meta = IndexMeta::from_json(&fs::read(dir.join(META_FILE))?)?;
    let postings = read_checked(dir, POSTINGS_FILE, &meta)?;
    let cls_bytes = read_checked(dir, CLS_FILE, &meta)?;

    let (n_t, lists) = decode_postings(&postings)?;
    if n_t != meta.n_t {
        return Err(Error::Corrupt(format!(
            "{POSTINGS_FILE} stores n_t={n_t} but {META_FILE} declares n_t={}",
            meta.n_t
        )));
    }
    let (n_c, num_docs, cls) = decode_cls(&cls_bytes)?;
    if n_c != meta.n_c || num_docs != meta.num_docs {
        return Err(Error::Corrupt(format!(
            "{CLS_FILE} stores n_c={n_c}, {num_docs} docs but {META_FILE} declares n_c={}, {} docs",
            meta.n_c, meta.num_docs
        )));
    }
    let mut tokens = HashSet::new();
    for list in &lists {
        tokens.insert(list.token_id);
        if list.doc_refs.last().is_some_and(|&r| r as usize >= meta.num_docs) {
            return Err(Error::Corrupt(format!(
                "{POSTINGS_FILE}: ordinal out of range in list {}",
                list.token_id
            )));
        }
    }
    let corpus_checksum = u64::from_str_radix(&meta.corpus_checksum, 16)
        .map_err(|_| Error::Corrupt(format!("{META_FILE}: bad corpus_checksum")))?;

    Ok(CoilIndex {
        n_t,
        n_c,
        lists: lists.into_iter().map(|l| (l.token_id, l)).collect(),
        cls: (n_c > 0).then_some(cls),
        doc_table: meta.doc_table,
        corpus_checksum,
        encoder: meta.encoder,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EncodedDocument;

    fn small_index() -> CoilIndex {
        let docs = (0..5).map(|i| EncodedDocument {
            doc_id: format!("d{i}"),
            token_ids: vec![1 + i % 3, 7, 1 + i % 2],
            token_vecs: vec![vec![i as f32, -0.5], vec![0.125, 1e-9], vec![f32::MIN_POSITIVE, 3.0]],
            cls_vec: Some(vec![i as f32 * 0.1]),
        });
        CoilIndex::build(docs, 2, 1).unwrap()
    }

    #[test]
    fn roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let idx = small_index();
        save_index(&idx, dir.path()).unwrap();
        assert_eq!(load_index(dir.path()).unwrap(), idx);
    }

    #[test]
    fn flipped_byte_fails_checksum() {
        let dir = tempfile::tempdir().unwrap();
        save_index(&small_index(), dir.path()).unwrap();
        for name in [POSTINGS_FILE, CLS_FILE] {
            let path = dir.path().join(name);
            let original = fs::read(&path).unwrap();
            let mut bytes = original.clone();
            let last = bytes.len() - 1;
            bytes[last] ^= 0x40;
            fs::write(&path, &bytes).unwrap();
            match load_index(dir.path()) {
                Err(Error::Checksum(file)) => assert_eq!(file, name),
                other => panic!("unexpected {other:?}"),
            }
            fs::write(&path, &original).unwrap();
        }
    }

    #[test]
    fn truncated_postings_detected_by_decoder() {
        let bytes = encode_postings(&small_index()).unwrap();
        for cut in [0, 7, 12, 19, 25, bytes.len() - 1] {
            assert!(
                matches!(decode_postings(&bytes[..cut]), Err(Error::Corrupt(_))),
                "cut {cut}"
            );
        }
    }

    #[test]
    fn meta_dimension_disagreement_is_structural() {
        let dir = tempfile::tempdir().unwrap();
        save_index(&small_index(), dir.path()).unwrap();
        let path = dir.path().join(META_FILE);
        let mut meta: IndexMeta = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
        meta.n_t = 3;
        fs::write(&path, serde_json::to_vec(&meta).unwrap()).unwrap();
        match load_index(dir.path()) {
            Err(Error::Corrupt(msg)) => assert!(msg.contains("n_t"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn version_mismatch() {
        let mut bytes = encode_cls(&small_index()).unwrap();
        bytes[8] = 9;
        assert!(matches!(decode_cls(&bytes), Err(Error::Version { found: 9, .. })));
    }

    #[test]
    fn huge_counts_do_not_allocate() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(POSTINGS_MAGIC);
        put_u32(&mut bytes, INDEX_VERSION);
        put_u32(&mut bytes, u32::MAX);
        put_u32(&mut bytes, 1);
        put_u32(&mut bytes, 1);
        put_u32(&mut bytes, u32::MAX);
        assert!(decode_postings(&bytes).is_err());
    }

    #[test]
    fn empty_index_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let idx = CoilIndex::build(Vec::new(), 4, 0).unwrap();
        save_index(&idx, dir.path()).unwrap();
        assert_eq!(load_index(dir.path()).unwrap(), idx);
    }
}
