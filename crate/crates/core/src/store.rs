//! Fixed-dimension embedding vectors keyed by id, plus the `OADRVEC1`
//! binary file format.
//!
//! Layout (little-endian, no padding):
//!
//! ```text
//! magic   8 bytes  "OADRVEC1"
//! dim     u32
//! count   u64
//! count × { id_len u16, id [u8; id_len] (UTF-8), vector [f32; dim] }
//! ```

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::ops::Deref;
use std::path::Path;

use indexmap::IndexMap;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::jsonl;

pub const MAGIC: &[u8; 8] = b"OADRVEC1";
const HEADER_LEN: u64 = 8 + 4 + 8;

/// A vector of finite `f32` components.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }
}

impl Deref for EmbeddingVector {
    type Target = [f32];

    fn deref(&self) -> &[f32] {
        &self.0
    }
}

impl AsRef<[f32]> for EmbeddingVector {
    fn as_ref(&self) -> &[f32] {
        &self.0
    }
}

impl TryFrom<Vec<f32>> for EmbeddingVector {
    type Error = Error;

    fn try_from(values: Vec<f32>) -> Result<Self> {
        Self::new(values)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    entries: IndexMap<String, EmbeddingVector>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("embedding dim must be positive".into()));
        }
        Ok(Self {
            dim,
            entries: IndexMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, id: impl Into<String>, vector: EmbeddingVector) -> Result<()> {
        let id = id.into();
        if vector.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: vector.dim(),
            });
        }
        if id.len() > u16::MAX as usize {
            return Err(Error::InvalidConfig(format!(
                "id of {} bytes exceeds the 65535-byte limit",
                id.len()
            )));
        }
        if self.entries.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        self.entries.insert(id, vector);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&EmbeddingVector> {
        self.entries.get(id)
    }

    pub fn require(&self, id: &str) -> Result<&EmbeddingVector> {
        self.get(id).ok_or_else(|| Error::MissingId(id.to_string()))
    }

    /// Entries in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &EmbeddingVector)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn encode(&self) -> Vec<u8> {
        let record_len: usize = self.entries.keys().map(|k| 2 + k.len() + 4 * self.dim).sum();
        let mut buf = Vec::with_capacity(HEADER_LEN as usize + record_len);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&(self.dim as u32).to_le_bytes());
        buf.extend_from_slice(&(self.entries.len() as u64).to_le_bytes());
        for (id, vector) in &self.entries {
            buf.extend_from_slice(&(id.len() as u16).to_le_bytes());
            buf.extend_from_slice(id.as_bytes());
            for v in vector.iter() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        buf
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        let magic = cur.take(8, "magic")?;
        if magic != MAGIC {
            return Err(Error::Format {
                offset: 0,
                message: format!("bad magic {:?}", String::from_utf8_lossy(magic)),
            });
        }
        let dim_offset = cur.pos;
        let dim = u32::from_le_bytes(cur.array("dim")?) as usize;
        if dim == 0 {
            return Err(Error::Format {
                offset: dim_offset as u64,
                message: "dim must be positive".into(),
            });
        }
        let count = u64::from_le_bytes(cur.array("count")?);

        let mut store = Self::new(dim)?;
        for record in 0..count {
            let record_offset = cur.pos as u64;
            let id_len = u16::from_le_bytes(cur.array("id length")?) as usize;
            let id_bytes = cur.take(id_len, "id")?;
            let id = std::str::from_utf8(id_bytes).map_err(|_| Error::Format {
                offset: record_offset + 2,
                message: format!("record {record}: id is not valid UTF-8"),
            })?;
            let vector_offset = cur.pos as u64;
            let raw = cur.take(4 * dim, "vector")?;
            let values: Vec<f32> = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            let vector = EmbeddingVector::new(values).map_err(|e| match e {
                Error::NonFinite { index } => Error::Format {
                    offset: vector_offset + 4 * index as u64,
                    message: format!("record {record}: non-finite component {index}"),
                },
                other => other,
            })?;
            if store.entries.contains_key(id) {
                return Err(Error::Format {
                    offset: record_offset,
                    message: format!("duplicate id {id:?}"),
                });
            }
            store.entries.insert(id.to_string(), vector);
        }
        if cur.pos != bytes.len() {
            return Err(Error::Format {
                offset: cur.pos as u64,
                message: format!("{} trailing bytes after {count} records", bytes.len() - cur.pos),
            });
        }
        Ok(store)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&end| end <= self.bytes.len());
        match end {
            Some(end) => {
                let slice = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(slice)
            }
            None => Err(Error::Format {
                offset: self.pos as u64,
                message: format!(
                    "truncated: {what} needs {n} bytes, {} remain",
                    self.bytes.len() - self.pos
                ),
            }),
        }
    }

    fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let slice = self.take(N, what)?;
        Ok(slice.try_into().expect("slice length checked"))
    }
}

pub fn write_store(store: &EmbeddingStore, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&store.encode()).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_store(path: impl AsRef<Path>) -> Result<EmbeddingStore> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    EmbeddingStore::decode(&bytes)
}

#[derive(Deserialize)]
struct JsonlVector {
    id: String,
    vector: Vec<f32>,
}

/// Imports `{"id": str, "vector": [floats]}` lines. The first vector fixes
/// the dimension.
pub fn read_store_jsonl(path: impl AsRef<Path>) -> Result<EmbeddingStore> {
    let records: Vec<JsonlVector> = jsonl::read_jsonl(path)?;
    let dim = records
        .first()
        .map(|r| r.vector.len())
        .ok_or(Error::Empty("embedding JSONL"))?;
    let mut store = EmbeddingStore::new(dim)?;
    for r in records {
        store.insert(r.id, EmbeddingVector::new(r.vector)?)?;
    }
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn store_ab() -> EmbeddingStore {
        let mut s = EmbeddingStore::new(2).unwrap();
        s.insert("a", EmbeddingVector::new(vec![1.0, 2.0]).unwrap()).unwrap();
        s
    }

    #[test]
    fn single_record_layout() {
        let bytes = store_ab().encode();
        let mut expected = b"OADRVEC1".to_vec();
        expected.extend_from_slice(&2u32.to_le_bytes());
        expected.extend_from_slice(&1u64.to_le_bytes());
        expected.extend_from_slice(&1u16.to_le_bytes());
        expected.push(b'a');
        expected.extend_from_slice(&1.0f32.to_le_bytes());
        expected.extend_from_slice(&2.0f32.to_le_bytes());
        assert_eq!(bytes, expected);
    }

    #[test]
    fn empty_store_is_header_only() {
        let bytes = EmbeddingStore::new(4).unwrap().encode();
        assert_eq!(bytes.len(), 20);
        assert_eq!(&bytes[8..12], &4u32.to_le_bytes());
        assert_eq!(&bytes[12..20], &0u64.to_le_bytes());
        assert_eq!(EmbeddingStore::decode(&bytes).unwrap().len(), 0);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.bin");
        let store = store_ab();
        write_store(&store, &path).unwrap();
        assert_eq!(read_store(&path).unwrap(), store);
    }

    #[test]
    fn bad_magic_rejected_at_offset_zero() {
        let mut bytes = store_ab().encode();
        bytes[0] = b'X';
        assert!(matches!(EmbeddingStore::decode(&bytes), Err(Error::Format { offset: 0, .. })));
    }

    #[test]
    fn count_beyond_payload_is_truncation() {
        let mut bytes = store_ab().encode();
        bytes[12..20].copy_from_slice(&2u64.to_le_bytes());
        match EmbeddingStore::decode(&bytes) {
            Err(Error::Format { offset, message }) => {
                assert_eq!(offset, bytes.len() as u64);
                assert!(message.contains("truncated"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        // Cut mid-vector.
        let bytes = store_ab().encode();
        match EmbeddingStore::decode(&bytes[..bytes.len() - 1]) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 23),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_dim_trailing_bytes_and_duplicates_rejected() {
        let mut bytes = EmbeddingStore::new(4).unwrap().encode();
        bytes[8..12].copy_from_slice(&0u32.to_le_bytes());
        assert!(matches!(EmbeddingStore::decode(&bytes), Err(Error::Format { offset: 8, .. })));

        let mut bytes = store_ab().encode();
        bytes.push(0);
        assert!(matches!(EmbeddingStore::decode(&bytes), Err(Error::Format { offset: 31, .. })));

        let mut bytes = store_ab().encode();
        let record = bytes[20..].to_vec();
        bytes.extend_from_slice(&record);
        bytes[12..20].copy_from_slice(&2u64.to_le_bytes());
        assert!(matches!(EmbeddingStore::decode(&bytes), Err(Error::Format { offset: 31, .. })));
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(
            EmbeddingVector::new(vec![0.0, f32::NAN]),
            Err(Error::NonFinite { index: 1 })
        ));
        let mut bytes = store_ab().encode();
        bytes[27..31].copy_from_slice(&f32::INFINITY.to_le_bytes());
        assert!(matches!(EmbeddingStore::decode(&bytes), Err(Error::Format { offset: 27, .. })));
    }

    #[test]
    fn insert_checks_dim_and_duplicates() {
        let mut s = store_ab();
        assert!(matches!(
            s.insert("b", EmbeddingVector::zeros(3)),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
        assert!(matches!(s.insert("a", EmbeddingVector::zeros(2)), Err(Error::DuplicateId(_))));
        assert!(EmbeddingStore::new(0).is_err());
    }

    #[test]
    fn jsonl_import() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.jsonl");
        std::fs::write(&path, "{\"id\":\"x\",\"vector\":[0.5,-1]}\n{\"id\":\"y\",\"vector\":[1e-3,2]}\n").unwrap();
        let s = read_store_jsonl(&path).unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.require("y").unwrap().as_slice(), &[1e-3, 2.0]);
        std::fs::write(&path, "{\"id\":\"x\",\"vector\":[0.5,-1]}\n{\"id\":\"y\",\"vector\":[2]}\n").unwrap();
        assert!(matches!(read_store_jsonl(&path), Err(Error::DimensionMismatch { .. })));
    }

    fn arb_store() -> impl Strategy<Value = EmbeddingStore> {
        (1usize..6).prop_flat_map(|dim| {
            prop::collection::vec(
                ("[a-zé:0-9]{0,12}", prop::collection::vec(any::<f32>().prop_filter("finite", |v| v.is_finite()), dim)),
                0..8,
            )
            .prop_map(move |records| {
                let mut s = EmbeddingStore::new(dim).unwrap();
                for (id, v) in records {
                    let _ = s.insert(id, EmbeddingVector::new(v).unwrap());
                }
                s
            })
        })
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(store in arb_store()) {
            let bytes = store.encode();
            let back = EmbeddingStore::decode(&bytes).unwrap();
            prop_assert_eq!(back.dim(), store.dim());
            let a: Vec<_> = store.iter().map(|(k, v)| (k.to_string(), v.iter().map(|f| f.to_bits()).collect::<Vec<_>>())).collect();
            let b: Vec<_> = back.iter().map(|(k, v)| (k.to_string(), v.iter().map(|f| f.to_bits()).collect::<Vec<_>>())).collect();
            prop_assert_eq!(a, b);
            prop_assert_eq!(back.encode(), bytes);
        }
    }
}
