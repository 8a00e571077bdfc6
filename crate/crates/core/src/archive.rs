//! On-disk container for a compressed dataset.
//!
//! Layout (little-endian):
//!
//! ```text
//! "TAC1" | version u8 | header_len u32 | header text
//! record_count u32
//! per record: tag u8 | bound f64 | meta_len u32 | meta
//!             | payload_count u32 | (payload_len u32 | payload)* | crc32 u32
//! file crc32 u32 (over everything before it)
//! ```
//!
//! The header is `key=value` text holding the dataset geometry and an echo
//! of the compression settings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::ValueType;
use crate::io::{parse_key_values, required};
use crate::strategy::StrategyTag;
use crate::subblock::ByteReader;

pub const ARCHIVE_MAGIC: &[u8; 4] = b"TAC1";
pub const ARCHIVE_VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveHeader {
    pub num_levels: usize,
    pub finest_side: usize,
    pub unit_block_size: usize,
    pub refinement_factor: usize,
    pub value_type: ValueType,
    /// Compression settings, stored for reference only.
    pub config: BTreeMap<String, String>,
}

impl ArchiveHeader {
    /// Side of level `i` (0 = finest).
    pub fn level_side(&self, i: usize) -> usize {
        self.finest_side / self.refinement_factor.pow(i as u32)
    }

    fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "levels={}", self.num_levels);
        let _ = writeln!(s, "finest_side={}", self.finest_side);
        let _ = writeln!(s, "unit_block_size={}", self.unit_block_size);
        let _ = writeln!(s, "refinement_factor={}", self.refinement_factor);
        let _ = writeln!(s, "value_type={}", self.value_type);
        for (k, v) in &self.config {
            let _ = writeln!(s, "config.{k}={v}");
        }
        s
    }

    fn from_text(text: &str) -> Result<Self> {
        let kv = parse_key_values(text)?;
        let header = Self {
            num_levels: required(&kv, "levels")?,
            finest_side: required(&kv, "finest_side")?,
            unit_block_size: required(&kv, "unit_block_size")?,
            refinement_factor: required(&kv, "refinement_factor")?,
            value_type: required(&kv, "value_type")?,
            config: kv
                .iter()
                .filter_map(|(k, v)| k.strip_prefix("config.").map(|k| (k.to_string(), v.clone())))
                .collect(),
        };
        header.validate()?;
        Ok(header)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Format(format!("archive header: {m}")));
        if self.num_levels == 0 || self.unit_block_size == 0 || self.refinement_factor < 2 {
            return bad(format!(
                "levels {}, unit block {}, refinement factor {}",
                self.num_levels, self.unit_block_size, self.refinement_factor
            ));
        }
        let coarsest = self
            .refinement_factor
            .checked_pow(self.num_levels as u32 - 1)
            .and_then(|f| f.checked_mul(self.unit_block_size));
        match coarsest {
            Some(c) if self.finest_side % c == 0 && self.finest_side > 0 => Ok(()),
            _ => bad(format!("finest side {} does not fit the level hierarchy", self.finest_side)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelRecord {
    pub tag: StrategyTag,
    /// Resolved absolute bound the payloads were encoded with.
    pub bound: f64,
    pub metadata: Vec<u8>,
    /// Serialized codec blocks.
    pub payloads: Vec<Vec<u8>>,
}

impl LevelRecord {
    pub fn payload_bytes(&self) -> usize {
        self.payloads.iter().map(Vec::len).sum()
    }

    fn write(&self, out: &mut Vec<u8>) {
        let start = out.len();
        out.push(self.tag.byte());
        out.extend_from_slice(&self.bound.to_le_bytes());
        out.extend_from_slice(&(self.metadata.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.metadata);
        out.extend_from_slice(&(self.payloads.len() as u32).to_le_bytes());
        for p in &self.payloads {
            out.extend_from_slice(&(p.len() as u32).to_le_bytes());
            out.extend_from_slice(p);
        }
        let crc = crc32fast::hash(&out[start..]);
        out.extend_from_slice(&crc.to_le_bytes());
    }

    fn read(r: &mut ByteReader, bytes: &[u8], index: usize) -> Result<Self> {
        let start = r.position();
        let tag_byte = r.u8()?;
        let bound = r.f64()?;
        let meta_len = r.u32()? as usize;
        let metadata = r.take(meta_len)?.to_vec();
        let count = r.u32()? as usize;
        let mut payloads = Vec::with_capacity(count.min(r.remaining()));
        for _ in 0..count {
            let n = r.u32()? as usize;
            payloads.push(r.take(n)?.to_vec());
        }
        let end = r.position();
        let crc = r.u32()?;
        if crc32fast::hash(&bytes[start..end]) != crc {
            return Err(Error::Checksum(format!("level record {index}")));
        }
        let tag = StrategyTag::from_byte(tag_byte)?;
        if !(bound.is_finite() && bound >= 0.0) {
            return Err(Error::Format(format!("record {index} has bound {bound}")));
        }
        Ok(Self {
            tag,
            bound,
            metadata,
            payloads,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressedArchive {
    pub header: ArchiveHeader,
    /// One record per level, finest first, or a single 3D-baseline record.
    pub records: Vec<LevelRecord>,
}

impl CompressedArchive {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(ARCHIVE_MAGIC);
        out.push(ARCHIVE_VERSION);
        let text = self.header.to_text();
        out.extend_from_slice(&(text.len() as u32).to_le_bytes());
        out.extend_from_slice(text.as_bytes());
        out.extend_from_slice(&(self.records.len() as u32).to_le_bytes());
        for r in &self.records {
            r.write(&mut out);
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 9 || &bytes[..4] != ARCHIVE_MAGIC {
            return Err(Error::Format("not an archive (bad magic)".into()));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        if crc32fast::hash(body) != u32::from_le_bytes(tail.try_into().unwrap()) {
            return Err(Error::Checksum("archive".into()));
        }
        let mut r = ByteReader::new(body);
        r.take(4)?;
        let version = r.u8()?;
        if version != ARCHIVE_VERSION {
            return Err(Error::Format(format!("unsupported archive version {version}")));
        }
        let n = r.u32()? as usize;
        let text = std::str::from_utf8(r.take(n)?).map_err(|e| Error::Format(format!("archive header: {e}")))?;
        let header = ArchiveHeader::from_text(text)?;
        let count = r.u32()? as usize;
        let mut records = Vec::with_capacity(count.min(body.len()));
        for i in 0..count {
            records.push(LevelRecord::read(&mut r, body, i)?);
        }
        if !r.is_done() {
            return Err(Error::Format("trailing bytes after level records".into()));
        }
        let single_3d = records.len() == 1 && records[0].tag == StrategyTag::Baseline3D;
        if !single_3d && (records.len() != header.num_levels || records.iter().any(|r| r.tag == StrategyTag::Baseline3D)) {
            return Err(Error::Format(format!(
                "{} records for {} levels",
                records.len(),
                header.num_levels
            )));
        }
        Ok(Self { header, records })
    }

    pub fn size_bytes(&self) -> usize {
        self.to_bytes().len()
    }

    pub fn tags(&self) -> Vec<StrategyTag> {
        self.records.iter().map(|r| r.tag).collect()
    }

    /// Writes to a temporary sibling, then renames over `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
