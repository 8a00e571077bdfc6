//! Per-level pre-processing strategies behind one trait, looked up by tag.
//!
//! A strategy turns a [`LevelGrid`] into structural metadata plus the dense
//! tensors handed to a codec, and rebuilds the level from the (decoded)
//! tensors and the same metadata.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::akdtree::akd_extract;
use crate::amr::LevelGrid;
use crate::error::{Error, Result};
use crate::grid::{BlockMask, Field3, Tensor};
use crate::gsp::{gsp_pad, gsp_unpad, zero_fill, GspParams, PadEntry, PaddedGrid};
use crate::opst::{nast_partition, opst_extract};
use crate::subblock::{ByteReader, SubBlockSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StrategyTag {
    OpST,
    AKDTree,
    Gsp,
    ZeroFill,
    NaST,
    Baseline1D,
    Baseline3D,
}

impl StrategyTag {
    pub const ALL: [StrategyTag; 7] = [
        StrategyTag::OpST,
        StrategyTag::AKDTree,
        StrategyTag::Gsp,
        StrategyTag::ZeroFill,
        StrategyTag::NaST,
        StrategyTag::Baseline1D,
        StrategyTag::Baseline3D,
    ];

    pub fn byte(self) -> u8 {
        self as u8
    }

    pub fn from_byte(b: u8) -> Result<Self> {
        Self::ALL.get(b as usize).copied().ok_or_else(|| Error::Unknown {
            kind: "strategy tag",
            name: b.to_string(),
        })
    }

    /// Short name used on the command line and in reports.
    pub fn name(self) -> &'static str {
        match self {
            StrategyTag::OpST => "opst",
            StrategyTag::AKDTree => "akdtree",
            StrategyTag::Gsp => "gsp",
            StrategyTag::ZeroFill => "zf",
            StrategyTag::NaST => "nast",
            StrategyTag::Baseline1D => "1d",
            StrategyTag::Baseline3D => "3d",
        }
    }
}

impl fmt::Display for StrategyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for StrategyTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| Error::Unknown {
            kind: "strategy",
            name: s.into(),
        })
    }
}

/// Geometry a level is restored into; stored in the archive header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelGeometry {
    pub side: usize,
    pub unit_block_size: usize,
}

impl LevelGeometry {
    pub fn of(level: &LevelGrid) -> Self {
        Self {
            side: level.side(),
            unit_block_size: level.unit_block_size(),
        }
    }

    pub fn block_dims(&self) -> [usize; 3] {
        [self.side / self.unit_block_size; 3]
    }
}

/// Output of [`Preprocessor::prepare`].
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub metadata: Vec<u8>,
    pub tensors: Vec<Tensor>,
}

pub trait Preprocessor: Send + Sync {
    fn tag(&self) -> StrategyTag;

    fn prepare(&self, level: &LevelGrid) -> Result<Prepared>;

    /// Rebuilds a level from `prepare` metadata and tensors of the same dims.
    fn restore(&self, geometry: LevelGeometry, metadata: &[u8], tensors: Vec<Tensor>) -> Result<LevelGrid>;
}

fn read_mask(r: &mut ByteReader, dims: [usize; 3]) -> Result<BlockMask> {
    let n = (dims[0] * dims[1] * dims[2]).div_ceil(8);
    BlockMask::from_packed(dims, r.take(n)?)
}

fn single_tensor(mut tensors: Vec<Tensor>, expect: &[usize]) -> Result<Tensor> {
    if tensors.len() != 1 || tensors[0].dims() != expect {
        return Err(Error::Structural(format!(
            "expected one payload of dims {expect:?}, got {:?}",
            tensors.iter().map(|t| t.dims().to_vec()).collect::<Vec<_>>()
        )));
    }
    Ok(tensors.pop().unwrap())
}

fn finish(r: ByteReader) -> Result<()> {
    if !r.is_done() {
        return Err(Error::Format(format!("{} trailing metadata bytes", r.remaining())));
    }
    Ok(())
}

/// Sub-block extraction: OpST, AKDTree or NaST.
pub struct SparsePreprocessor {
    tag: StrategyTag,
    extract: fn(&LevelGrid) -> SubBlockSet,
}

impl SparsePreprocessor {
    pub fn opst() -> Self {
        Self {
            tag: StrategyTag::OpST,
            extract: opst_extract,
        }
    }

    pub fn akdtree() -> Self {
        Self {
            tag: StrategyTag::AKDTree,
            extract: akd_extract,
        }
    }

    pub fn nast() -> Self {
        Self {
            tag: StrategyTag::NaST,
            extract: nast_partition,
        }
    }
}

impl Preprocessor for SparsePreprocessor {
    fn tag(&self) -> StrategyTag {
        self.tag
    }

    fn prepare(&self, level: &LevelGrid) -> Result<Prepared> {
        let set = (self.extract)(level);
        Ok(Prepared {
            metadata: set.layout_bytes()?,
            tensors: set.to_tensors(),
        })
    }

    fn restore(&self, geometry: LevelGeometry, metadata: &[u8], tensors: Vec<Tensor>) -> Result<LevelGrid> {
        let set = SubBlockSet::from_layout(metadata, tensors)?;
        if set.source_dims() != geometry.block_dims() || set.unit_block_size() != geometry.unit_block_size {
            return Err(Error::Structural(format!(
                "sub-block layout {:?}/{} does not match level geometry {:?}",
                set.source_dims(),
                set.unit_block_size(),
                geometry
            )));
        }
        set.restore()
    }
}

/// Ghost-shell padding of the whole level.
pub struct GspPreprocessor {
    pub params: GspParams,
}

impl Preprocessor for GspPreprocessor {
    fn tag(&self) -> StrategyTag {
        StrategyTag::Gsp
    }

    fn prepare(&self, level: &LevelGrid) -> Result<Prepared> {
        let padded = gsp_pad(level, self.params)?;
        let mut metadata = Vec::new();
        metadata.extend_from_slice(&(padded.params.x_layers as u16).to_le_bytes());
        metadata.extend_from_slice(&(padded.params.y_slices as u16).to_le_bytes());
        metadata.extend_from_slice(&padded.mask.to_packed());
        metadata.extend_from_slice(&(padded.pad_map.len() as u32).to_le_bytes());
        for e in &padded.pad_map {
            for c in e.block {
                metadata.extend_from_slice(&(c as u16).to_le_bytes());
            }
            metadata.push(e.dirs);
        }
        Ok(Prepared {
            metadata,
            tensors: vec![padded.values.into()],
        })
    }

    fn restore(&self, geometry: LevelGeometry, metadata: &[u8], tensors: Vec<Tensor>) -> Result<LevelGrid> {
        let mut r = ByteReader::new(metadata);
        let params = GspParams {
            x_layers: r.u16()? as usize,
            y_slices: r.u16()? as usize,
        };
        let mask = read_mask(&mut r, geometry.block_dims())?;
        let n = r.u32()? as usize;
        let mut pad_map = Vec::with_capacity(n.min(metadata.len()));
        for _ in 0..n {
            let block = [r.u16()? as usize, r.u16()? as usize, r.u16()? as usize];
            pad_map.push(PadEntry { block, dirs: r.u8()? });
        }
        finish(r)?;
        let t = single_tensor(tensors, &[geometry.side; 3])?;
        let values = Field3::from_vec([geometry.side; 3], t.into_vec())?;
        gsp_unpad(&PaddedGrid {
            values,
            mask,
            unit_block_size: geometry.unit_block_size,
            pad_map,
            params,
        })
    }
}

/// Whole level with empty blocks set to zero.
pub struct ZeroFillPreprocessor;

impl Preprocessor for ZeroFillPreprocessor {
    fn tag(&self) -> StrategyTag {
        StrategyTag::ZeroFill
    }

    fn prepare(&self, level: &LevelGrid) -> Result<Prepared> {
        Ok(Prepared {
            metadata: level.occupancy().to_packed(),
            tensors: vec![zero_fill(level).into()],
        })
    }

    fn restore(&self, geometry: LevelGeometry, metadata: &[u8], tensors: Vec<Tensor>) -> Result<LevelGrid> {
        let mut r = ByteReader::new(metadata);
        let mask = read_mask(&mut r, geometry.block_dims())?;
        finish(r)?;
        let t = single_tensor(tensors, &[geometry.side; 3])?;
        LevelGrid::new(Field3::from_vec([geometry.side; 3], t.into_vec())?, geometry.unit_block_size, mask)
    }
}

/// Defined values as one 1D array in raster order.
pub struct Linear1DPreprocessor;

impl Preprocessor for Linear1DPreprocessor {
    fn tag(&self) -> StrategyTag {
        StrategyTag::Baseline1D
    }

    fn prepare(&self, level: &LevelGrid) -> Result<Prepared> {
        let values = level.defined_values();
        let tensors = if values.is_empty() {
            Vec::new()
        } else {
            vec![Tensor::new(vec![values.len()], values)?]
        };
        Ok(Prepared {
            metadata: level.occupancy().to_packed(),
            tensors,
        })
    }

    fn restore(&self, geometry: LevelGeometry, metadata: &[u8], tensors: Vec<Tensor>) -> Result<LevelGrid> {
        let mut r = ByteReader::new(metadata);
        let mask = read_mask(&mut r, geometry.block_dims())?;
        finish(r)?;
        let values = match tensors.len() {
            0 => Vec::new(),
            1 if tensors[0].rank() == 1 => tensors.into_iter().next().unwrap().into_vec(),
            _ => return Err(Error::Structural("1D record must hold at most one rank-1 payload".into())),
        };
        LevelGrid::from_defined_values(geometry.side, geometry.unit_block_size, mask, &values)
    }
}

/// Per-level strategies by tag. The dataset-wide 3D baseline is handled by
/// the pipeline and has no entry here.
#[derive(Clone)]
pub struct StrategyRegistry {
    strategies: BTreeMap<StrategyTag, Arc<dyn Preprocessor>>,
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        Self {
            strategies: BTreeMap::new(),
        }
    }

    pub fn with_gsp_params(params: GspParams) -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(SparsePreprocessor::opst()));
        r.register(Arc::new(SparsePreprocessor::akdtree()));
        r.register(Arc::new(SparsePreprocessor::nast()));
        r.register(Arc::new(GspPreprocessor { params }));
        r.register(Arc::new(ZeroFillPreprocessor));
        r.register(Arc::new(Linear1DPreprocessor));
        r
    }

    pub fn register(&mut self, p: Arc<dyn Preprocessor>) {
        self.strategies.insert(p.tag(), p);
    }

    pub fn get(&self, tag: StrategyTag) -> Result<&dyn Preprocessor> {
        self.strategies.get(&tag).map(|p| p.as_ref()).ok_or_else(|| Error::Unknown {
            kind: "level strategy",
            name: tag.name().into(),
        })
    }

    pub fn tags(&self) -> impl Iterator<Item = StrategyTag> + '_ {
        self.strategies.keys().copied()
    }
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        Self::with_gsp_params(GspParams::default())
    }
}
