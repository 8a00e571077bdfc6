//! Error-bounded codecs and the self-describing block format they emit.
//!
//! Every codec turns a [`Tensor`] plus an absolute bound into an
//! [`EncodedBlock`]. The block records which predictor produced it, so
//! [`decode_block`] needs no outside context.

pub mod huffman;
mod lorenzo;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

pub use lorenzo::LorenzoCodec;

use crate::error::{Error, Result};
use crate::grid::{min_max, Tensor, ValueType};
use crate::subblock::ByteReader;

pub const BLOCK_MAGIC: &[u8; 4] = b"TACB";
pub const BLOCK_VERSION: u8 = 1;

/// Predictor tag stored in each block header.
pub const PREDICTOR_LITERAL: u8 = 0;
pub const PREDICTOR_LORENZO: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMode {
    Absolute,
    /// Fraction of the value range of the data being compressed.
    Relative,
}

impl fmt::Display for BoundMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundMode::Absolute => "abs",
            BoundMode::Relative => "rel",
        })
    }
}

impl std::str::FromStr for BoundMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abs" | "absolute" => Ok(BoundMode::Absolute),
            "rel" | "relative" => Ok(BoundMode::Relative),
            _ => Err(Error::Unknown {
                kind: "bound mode",
                name: s.into(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBound {
    pub mode: BoundMode,
    pub magnitude: f64,
}

impl ErrorBound {
    pub fn absolute(magnitude: f64) -> Self {
        Self {
            mode: BoundMode::Absolute,
            magnitude,
        }
    }

    pub fn relative(magnitude: f64) -> Self {
        Self {
            mode: BoundMode::Relative,
            magnitude,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.magnitude.is_finite() && self.magnitude > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "error bound must be finite and positive, got {}",
                self.magnitude
            )));
        }
        Ok(())
    }

    /// Absolute bound for data spanning `range = max - min`.
    pub fn resolve(&self, range: f64) -> Result<f64> {
        self.validate()?;
        Ok(match self.mode {
            BoundMode::Absolute => self.magnitude,
            BoundMode::Relative => self.magnitude * range,
        })
    }
}

impl fmt::Display for ErrorBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.mode, self.magnitude)
    }
}

/// A codec output: header fields plus the three raw streams.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedBlock {
    pub value_type: ValueType,
    pub dims: Vec<usize>,
    pub bound: f64,
    pub predictor: u8,
    pub table: Vec<u8>,
    pub codes: Vec<u8>,
    pub outliers: Vec<u8>,
}

impl EncodedBlock {
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + self.table.len() + self.codes.len() + self.outliers.len());
        out.extend_from_slice(BLOCK_MAGIC);
        out.push(BLOCK_VERSION);
        out.push(self.value_type.tag());
        out.push(self.dims.len() as u8);
        out.push(self.predictor);
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        out.extend_from_slice(&self.bound.to_le_bytes());
        for s in [&self.table, &self.codes, &self.outliers] {
            out.extend_from_slice(&(s.len() as u32).to_le_bytes());
        }
        for s in [&self.table, &self.codes, &self.outliers] {
            out.extend_from_slice(s);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let codec_err = |e: Error| Error::Codec(format!("block header: {e}"));
        let mut r = ByteReader::new(bytes);
        if r.take(4).map_err(codec_err)? != BLOCK_MAGIC {
            return Err(Error::Codec("bad block magic".into()));
        }
        let version = r.u8().map_err(codec_err)?;
        if version != BLOCK_VERSION {
            return Err(Error::Codec(format!("unsupported block version {version}")));
        }
        let value_type = ValueType::from_tag(r.u8().map_err(codec_err)?)?;
        let rank = r.u8().map_err(codec_err)? as usize;
        if !(1..=4).contains(&rank) {
            return Err(Error::Codec(format!("block rank {rank} not in 1..=4")));
        }
        let predictor = r.u8().map_err(codec_err)?;
        let dims = (0..rank)
            .map(|_| r.u32().map(|d| d as usize))
            .collect::<Result<Vec<_>>>()
            .map_err(codec_err)?;
        let bound = r.f64().map_err(codec_err)?;
        if !(bound.is_finite() && bound >= 0.0) {
            return Err(Error::Codec(format!("bad block bound {bound}")));
        }
        let mut lens = [0usize; 3];
        for l in &mut lens {
            *l = r.u32().map_err(codec_err)? as usize;
        }
        let mut take = |n: usize| {
            r.take(n)
                .map(<[u8]>::to_vec)
                .map_err(|_| Error::Codec("truncated block payload".into()))
        };
        let table = take(lens[0])?;
        let codes = take(lens[1])?;
        let outliers = take(lens[2])?;
        if !r.is_done() {
            return Err(Error::Codec(format!("{} trailing bytes after block", r.remaining())));
        }
        Ok(Self {
            value_type,
            dims,
            bound,
            predictor,
            table,
            codes,
            outliers,
        })
    }
}

pub trait Codec: Send + Sync {
    /// Registry name.
    fn name(&self) -> &'static str;

    /// Header tag identifying blocks this codec can decode.
    fn predictor(&self) -> u8;

    /// Encodes `tensor` so every decoded value is within `bound` of the
    /// input rounded to `value_type`.
    fn encode(&self, tensor: &Tensor, bound: f64, value_type: ValueType) -> Result<EncodedBlock>;

    fn decode(&self, block: &EncodedBlock) -> Result<Tensor>;
}

pub(crate) fn check_encode_args(tensor: &Tensor, bound: f64) -> Result<()> {
    if tensor.is_empty() {
        return Err(Error::InvalidInput("cannot encode an empty array".into()));
    }
    if !(bound.is_finite() && bound >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "absolute bound must be finite and non-negative, got {bound}"
        )));
    }
    if let Some(i) = tensor.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite value at index {i}")));
    }
    Ok(())
}

/// Stores every value verbatim. Satisfies any bound.
#[derive(Debug, Clone, Copy, Default)]
pub struct LiteralCodec;

impl Codec for LiteralCodec {
    fn name(&self) -> &'static str {
        "lossless-ref"
    }

    fn predictor(&self) -> u8 {
        PREDICTOR_LITERAL
    }

    fn encode(&self, tensor: &Tensor, bound: f64, value_type: ValueType) -> Result<EncodedBlock> {
        check_encode_args(tensor, bound)?;
        let mut outliers = Vec::with_capacity(tensor.len() * value_type.byte_width());
        for &v in tensor.as_slice() {
            value_type.write_le(v, &mut outliers);
        }
        Ok(EncodedBlock {
            value_type,
            dims: tensor.dims().to_vec(),
            bound,
            predictor: PREDICTOR_LITERAL,
            table: Vec::new(),
            codes: Vec::new(),
            outliers,
        })
    }

    fn decode(&self, block: &EncodedBlock) -> Result<Tensor> {
        let w = block.value_type.byte_width();
        if !block.table.is_empty() || !block.codes.is_empty() || block.outliers.len() != block.len() * w {
            return Err(Error::Codec(format!(
                "literal block holds {} bytes for {} values",
                block.outliers.len(),
                block.len()
            )));
        }
        let data = block
            .outliers
            .chunks_exact(w)
            .map(|c| block.value_type.read_le(c))
            .collect();
        Tensor::new(block.dims.clone(), data).map_err(|e| Error::Codec(e.to_string()))
    }
}

/// Codecs by name, selectable at run time.
#[derive(Clone)]
pub struct CodecRegistry {
    codecs: BTreeMap<&'static str, Arc<dyn Codec>>,
}

impl CodecRegistry {
    pub fn empty() -> Self {
        Self { codecs: BTreeMap::new() }
    }

    pub fn register(&mut self, codec: Arc<dyn Codec>) {
        self.codecs.insert(codec.name(), codec);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Codec>> {
        self.codecs.get(name).cloned().ok_or_else(|| Error::Unknown {
            kind: "codec",
            name: name.into(),
        })
    }

    pub fn by_predictor(&self, tag: u8) -> Result<Arc<dyn Codec>> {
        self.codecs
            .values()
            .find(|c| c.predictor() == tag)
            .cloned()
            .ok_or_else(|| Error::Unknown {
                kind: "predictor tag",
                name: tag.to_string(),
            })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.codecs.keys().copied()
    }
}

impl Default for CodecRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(LorenzoCodec));
        r.register(Arc::new(LiteralCodec));
        r
    }
}

/// Encodes `tensor` with a relative bound resolved against its own range.
pub fn encode(codec: &dyn Codec, tensor: &Tensor, bound: ErrorBound, value_type: ValueType) -> Result<EncodedBlock> {
    let range = min_max(tensor.as_slice()).map_or(0.0, |(lo, hi)| hi - lo);
    codec.encode(tensor, bound.resolve(range)?, value_type)
}

/// Parses and decodes serialized block bytes with the built-in codecs.
pub fn decode_block(bytes: &[u8]) -> Result<Tensor> {
    let block = EncodedBlock::from_bytes(bytes)?;
    CodecRegistry::default().by_predictor(block.predictor)?.decode(&block)
}
