//! Persistent vector cache: append-only records plus an index footer.
//!
//! Byte layout (all integers little-endian):
//!
//! ```text
//! file   := record* [index footer]
//! record := "VREC" key_len:u16 key:bytes dim:u32 values:dim*f32 check:8
//! index  := "VIDX" count:u32 (key_len:u16 key:bytes offset:u64)* check:8
//! footer := "XDIV" index_len:u64
//! ```
//!
//! `check` is the first 8 bytes of SHA-256 over the preceding bytes of
//! the record (from magic through values) or of the index entries.
//! Opening a file reads the footer to recover the index in one seek;
//! when the footer is missing or stale the records are scanned instead.
//! Writers truncate the old index, append records, and rewrite the
//! index on flush, so a crash costs only the re-scan, never data.
//! A cache hit returns the stored bytes verbatim: vectors round-trip
//! bit-identically.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

const RECORD_MAGIC: &[u8; 4] = b"VREC";
const INDEX_MAGIC: &[u8; 4] = b"VIDX";
const FOOTER_MAGIC: &[u8; 4] = b"XDIV";
const CHECK_LEN: usize = 8;
const FOOTER_LEN: u64 = 12;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("cache corruption at offset {offset}: {what}")]
    Corrupt { offset: u64, what: String },
    #[error("cache key exceeds 65535 bytes")]
    KeyTooLong,
}

pub struct VectorCache {
    file: File,
    path: PathBuf,
    index: HashMap<String, u64>,
    /// End of the record region; anything past this is index/footer.
    records_end: u64,
    /// Records were appended since the index on disk was written.
    dirty: bool,
    /// Bytes past `records_end` (an index footer or a stale index)
    /// must be truncated before the next append.
    tail_past_records: bool,
}

impl VectorCache {
    /// Opens or creates a cache file and loads its index.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, CacheError> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new()
            .read(true)
            .write(true)
            .create(true)
            .truncate(false)
            .open(&path)?;
        let len = file.seek(SeekFrom::End(0))?;
        let mut cache = Self {
            file,
            path,
            index: HashMap::new(),
            records_end: 0,
            dirty: false,
            tail_past_records: false,
        };
        if len == 0 {
            return Ok(cache);
        }
        if !cache.try_load_footer(len)? {
            cache.scan_records(len)?;
        }
        Ok(cache)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn contains(&self, key: &str) -> bool {
        self.index.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.index.keys().map(String::as_str)
    }

    /// Fetches the stored vector for `key`, verifying its checksum.
    pub fn get(&mut self, key: &str) -> Result<Option<Vec<f32>>, CacheError> {
        let Some(&offset) = self.index.get(key) else {
            return Ok(None);
        };
        self.file.seek(SeekFrom::Start(offset))?;
        let (stored_key, values) = read_record(&mut self.file, offset)?;
        if stored_key != key {
            return Err(CacheError::Corrupt {
                offset,
                what: "index points at a record with a different key".into(),
            });
        }
        Ok(Some(values))
    }

    /// Appends a record for `key` unless one already exists. Re-putting
    /// an existing key is a no-op, which keeps files append-only and
    /// makes the first stored vector authoritative.
    pub fn put(&mut self, key: &str, values: &[f32]) -> Result<(), CacheError> {
        if self.index.contains_key(key) {
            return Ok(());
        }
        if key.len() > u16::MAX as usize {
            return Err(CacheError::KeyTooLong);
        }
        if self.tail_past_records {
            self.file.set_len(self.records_end)?;
            self.tail_past_records = false;
        }
        let mut record = Vec::with_capacity(4 + 2 + key.len() + 4 + values.len() * 4 + CHECK_LEN);
        record.extend_from_slice(RECORD_MAGIC);
        record.extend_from_slice(&(key.len() as u16).to_le_bytes());
        record.extend_from_slice(key.as_bytes());
        record.extend_from_slice(&(values.len() as u32).to_le_bytes());
        for v in values {
            record.extend_from_slice(&v.to_le_bytes());
        }
        let check = checksum(&record);
        record.extend_from_slice(&check);
        self.file.seek(SeekFrom::Start(self.records_end))?;
        self.file.write_all(&record)?;
        self.index.insert(key.to_string(), self.records_end);
        self.records_end += record.len() as u64;
        self.dirty = true;
        Ok(())
    }

    /// Writes the index footer so the next open avoids a full scan.
    /// No-op when nothing changed since the last flush.
    pub fn flush_index(&mut self) -> Result<(), CacheError> {
        if !self.dirty {
            return Ok(());
        }
        let mut entries: Vec<(&String, &u64)> = self.index.iter().collect();
        entries.sort();
        let mut block = Vec::new();
        block.extend_from_slice(INDEX_MAGIC);
        block.extend_from_slice(&(entries.len() as u32).to_le_bytes());
        for (key, offset) in entries {
            block.extend_from_slice(&(key.len() as u16).to_le_bytes());
            block.extend_from_slice(key.as_bytes());
            block.extend_from_slice(&offset.to_le_bytes());
        }
        let check = checksum(&block);
        block.extend_from_slice(&check);
        let index_len = block.len() as u64;
        block.extend_from_slice(FOOTER_MAGIC);
        block.extend_from_slice(&index_len.to_le_bytes());
        self.file.set_len(self.records_end)?;
        self.file.seek(SeekFrom::Start(self.records_end))?;
        self.file.write_all(&block)?;
        self.file.flush()?;
        self.tail_past_records = true;
        self.dirty = false;
        Ok(())
    }

    fn try_load_footer(&mut self, file_len: u64) -> Result<bool, CacheError> {
        if file_len < FOOTER_LEN {
            return Ok(false);
        }
        self.file.seek(SeekFrom::Start(file_len - FOOTER_LEN))?;
        let mut footer = [0u8; FOOTER_LEN as usize];
        self.file.read_exact(&mut footer)?;
        if &footer[..4] != FOOTER_MAGIC {
            return Ok(false);
        }
        let index_len = u64::from_le_bytes(footer[4..].try_into().unwrap());
        if index_len + FOOTER_LEN > file_len {
            return Ok(false);
        }
        let index_start = file_len - FOOTER_LEN - index_len;
        self.file.seek(SeekFrom::Start(index_start))?;
        let mut block = vec![0u8; index_len as usize];
        self.file.read_exact(&mut block)?;
        if block.len() < 4 + 4 + CHECK_LEN || &block[..4] != INDEX_MAGIC {
            return Ok(false);
        }
        let (body, check) = block.split_at(block.len() - CHECK_LEN);
        if checksum(body) != check {
            return Ok(false);
        }
        let count = u32::from_le_bytes(body[4..8].try_into().unwrap());
        let mut pos = 8usize;
        let mut index = HashMap::with_capacity(count as usize);
        for _ in 0..count {
            if pos + 2 > body.len() {
                return Ok(false);
            }
            let key_len = u16::from_le_bytes(body[pos..pos + 2].try_into().unwrap()) as usize;
            pos += 2;
            if pos + key_len + 8 > body.len() {
                return Ok(false);
            }
            let key = String::from_utf8_lossy(&body[pos..pos + key_len]).into_owned();
            pos += key_len;
            let offset = u64::from_le_bytes(body[pos..pos + 8].try_into().unwrap());
            pos += 8;
            index.insert(key, offset);
        }
        self.index = index;
        self.records_end = index_start;
        self.tail_past_records = true;
        Ok(true)
    }

    /// Rebuilds the index by walking records from the start of the
    /// file. Any malformed byte is reported as corruption.
    fn scan_records(&mut self, file_len: u64) -> Result<(), CacheError> {
        self.file.seek(SeekFrom::Start(0))?;
        let mut offset = 0u64;
        let mut index = HashMap::new();
        let mut stale_tail = false;
        while offset < file_len {
            let mut magic = [0u8; 4];
            self.file.read_exact(&mut magic).map_err(|_| CacheError::Corrupt {
                offset,
                what: "truncated record".into(),
            })?;
            if &magic == FOOTER_MAGIC || &magic == INDEX_MAGIC {
                // A stale index without a readable footer; records end
                // here and the tail gets truncated on the next append.
                stale_tail = true;
                break;
            }
            if &magic != RECORD_MAGIC {
                return Err(CacheError::Corrupt {
                    offset,
                    what: "bad record magic".into(),
                });
            }
            self.file.seek(SeekFrom::Start(offset))?;
            let (key, _values) = read_record(&mut self.file, offset)?;
            let end = self.file.stream_position()?;
            index.insert(key, offset);
            offset = end;
        }
        self.index = index;
        self.records_end = offset;
        self.tail_past_records = stale_tail;
        Ok(())
    }
}

impl Drop for VectorCache {
    fn drop(&mut self) {
        let _ = self.flush_index();
    }
}

fn checksum(bytes: &[u8]) -> [u8; CHECK_LEN] {
    let digest = Sha256::digest(bytes);
    digest[..CHECK_LEN].try_into().unwrap()
}

fn read_record(file: &mut File, offset: u64) -> Result<(String, Vec<f32>), CacheError> {
    let corrupt = |what: &str| CacheError::Corrupt {
        offset,
        what: what.to_string(),
    };
    let mut head = [0u8; 6];
    file.read_exact(&mut head).map_err(|_| corrupt("truncated header"))?;
    if &head[..4] != RECORD_MAGIC {
        return Err(corrupt("bad record magic"));
    }
    let key_len = u16::from_le_bytes(head[4..6].try_into().unwrap()) as usize;
    let mut key_bytes = vec![0u8; key_len];
    file.read_exact(&mut key_bytes).map_err(|_| corrupt("truncated key"))?;
    let mut dim_bytes = [0u8; 4];
    file.read_exact(&mut dim_bytes).map_err(|_| corrupt("truncated dimension"))?;
    let dim = u32::from_le_bytes(dim_bytes) as usize;
    let mut value_bytes = vec![0u8; dim * 4];
    file.read_exact(&mut value_bytes).map_err(|_| corrupt("truncated values"))?;
    let mut check = [0u8; CHECK_LEN];
    file.read_exact(&mut check).map_err(|_| corrupt("truncated checksum"))?;

    let mut body = Vec::with_capacity(6 + key_len + 4 + value_bytes.len());
    body.extend_from_slice(&head);
    body.extend_from_slice(&key_bytes);
    body.extend_from_slice(&dim_bytes);
    body.extend_from_slice(&value_bytes);
    if checksum(&body) != check {
        return Err(corrupt("checksum mismatch"));
    }
    let key = String::from_utf8(key_bytes).map_err(|_| corrupt("key is not utf-8"))?;
    let values = value_bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((key, values))
}
