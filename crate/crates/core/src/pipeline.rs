//! End-to-end compression of an AMR dataset.
//!
//! Each level's density picks its strategy: OpST below `t1`, AKDTree up to
//! `t2`, ghost-shell padding above. When the finest level alone is dense
//! enough, the whole dataset is instead merged onto the finest grid and
//! compressed as one uniform array.

use std::collections::BTreeMap;
use std::time::Instant;

use crate::amr::{merge_to_uniform, AmrDataset, LevelGrid};
use crate::archive::{ArchiveHeader, CompressedArchive, LevelRecord};
use crate::codec::{Codec, CodecRegistry, EncodedBlock, ErrorBound};
use crate::error::{Error, Result};
use crate::grid::{BlockMask, Field3, Tensor};
use crate::gsp::GspParams;
use crate::strategy::{LevelGeometry, StrategyRegistry, StrategyTag};
use crate::subblock::ByteReader;

pub const DEFAULT_T1: f64 = 0.50;
pub const DEFAULT_T2: f64 = 0.60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyChoice {
    /// Density-driven selection with the finest-level fallback.
    Auto,
    /// The same strategy for every level (or the 3D baseline for all).
    Fixed(StrategyTag),
}

impl std::str::FromStr for StrategyChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(StrategyChoice::Auto),
            other => other.parse().map(StrategyChoice::Fixed),
        }
    }
}

impl std::fmt::Display for StrategyChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StrategyChoice::Auto => f.write_str("auto"),
            StrategyChoice::Fixed(t) => write!(f, "{t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressionConfig {
    pub t1: f64,
    pub t2: f64,
    /// Finest-level density at or above which the 3D baseline is used.
    pub finest_density_fallback: f64,
    pub base_bound: ErrorBound,
    /// Bound ratios finest to coarsest; `None` means one bound for all.
    pub level_bound_ratios: Option<Vec<f64>>,
    pub codec: String,
    pub gsp: GspParams,
    pub strategy: StrategyChoice,
}

impl Default for CompressionConfig {
    fn default() -> Self {
        Self {
            t1: DEFAULT_T1,
            t2: DEFAULT_T2,
            finest_density_fallback: DEFAULT_T2,
            base_bound: ErrorBound::relative(1e-3),
            level_bound_ratios: None,
            codec: "lorenzo".into(),
            gsp: GspParams::default(),
            strategy: StrategyChoice::Auto,
        }
    }
}

impl CompressionConfig {
    pub fn with_bound(bound: ErrorBound) -> Self {
        Self {
            base_bound: bound,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t1 > 0.0 && self.t1 <= self.t2 && self.t2 < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "thresholds must satisfy 0 < t1 <= t2 < 1, got t1={} t2={}",
                self.t1, self.t2
            )));
        }
        if !(0.0..=1.0).contains(&self.finest_density_fallback) {
            return Err(Error::InvalidParameter(format!(
                "fallback density {} not in [0, 1]",
                self.finest_density_fallback
            )));
        }
        if let Some(r) = &self.level_bound_ratios {
            if r.is_empty() || r.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::InvalidParameter(format!("bound ratios must be positive, got {r:?}")));
            }
        }
        self.base_bound.validate()
    }

    fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("t1".into(), self.t1.to_string());
        m.insert("t2".into(), self.t2.to_string());
        m.insert("fallback_density".into(), self.finest_density_fallback.to_string());
        m.insert("base_bound".into(), self.base_bound.to_string());
        if let Some(r) = &self.level_bound_ratios {
            m.insert("level_ratios".into(), r.iter().map(f64::to_string).collect::<Vec<_>>().join(":"));
        }
        m.insert("codec".into(), self.codec.clone());
        m.insert("gsp_x".into(), self.gsp.x_layers.to_string());
        m.insert("gsp_y".into(), self.gsp.y_slices.to_string());
        m.insert("strategy".into(), self.strategy.to_string());
        m
    }
}

/// Three-way density policy: `[0, t1)` OpST, `[t1, t2]` AKDTree, `(t2, 1]` GSP.
pub fn select_strategy(density: f64, config: &CompressionConfig) -> StrategyTag {
    if density < config.t1 {
        StrategyTag::OpST
    } else if density <= config.t2 {
        StrategyTag::AKDTree
    } else {
        StrategyTag::Gsp
    }
}

/// Absolute bound per level, finest first. Relative bounds resolve against
/// the value range of all defined cells of the dataset.
pub fn derive_level_bounds(base: ErrorBound, dataset: &AmrDataset, config: &CompressionConfig) -> Result<Vec<f64>> {
    let range = dataset.value_range().map_or(0.0, |(lo, hi)| hi - lo);
    let abs = base.resolve(range)?;
    match &config.level_bound_ratios {
        None => Ok(vec![abs; dataset.num_levels()]),
        Some(r) => {
            if r.len() != dataset.num_levels() {
                return Err(Error::InvalidParameter(format!(
                    "{} bound ratios for {} levels",
                    r.len(),
                    dataset.num_levels()
                )));
            }
            Ok(r.iter().map(|x| abs * x / r[0]).collect())
        }
    }
}

/// Per-level breakdown gathered while compressing.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelStats {
    pub tag: StrategyTag,
    pub density: f64,
    pub bound: f64,
    pub metadata_bytes: usize,
    pub payload_bytes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressionStats {
    pub levels: Vec<LevelStats>,
    pub preprocess_seconds: f64,
    pub encode_seconds: f64,
}

fn header_for(dataset: &AmrDataset, config: &CompressionConfig) -> ArchiveHeader {
    let mut config = config.echo();
    let densities: Vec<String> = dataset.densities().iter().map(|d| format!("{d:.6}")).collect();
    config.insert("level_densities".into(), densities.join(":"));
    ArchiveHeader {
        num_levels: dataset.num_levels(),
        finest_side: dataset.finest_side(),
        unit_block_size: dataset.unit_block_size(),
        refinement_factor: dataset.refinement_factor(),
        value_type: dataset.value_type(),
        config,
    }
}

fn encode_all(codec: &dyn Codec, tensors: &[Tensor], bound: f64, dataset: &AmrDataset) -> Result<Vec<Vec<u8>>> {
    tensors
        .iter()
        .map(|t| Ok(codec.encode(t, bound, dataset.value_type())?.to_bytes()))
        .collect()
}

fn compress_3d(
    dataset: &AmrDataset,
    codec: &dyn Codec,
    bounds: &[f64],
    header: ArchiveHeader,
) -> Result<(CompressedArchive, CompressionStats)> {
    let t0 = Instant::now();
    let uniform = merge_to_uniform(dataset)?;
    let mut metadata = Vec::new();
    for level in dataset.levels() {
        metadata.extend_from_slice(&level.occupancy().to_packed());
    }
    let tensor: Tensor = uniform.into();
    let pre = t0.elapsed().as_secs_f64();
    let bound = bounds.iter().copied().fold(f64::INFINITY, f64::min);
    let t1 = Instant::now();
    let payloads = encode_all(codec, std::slice::from_ref(&tensor), bound, dataset)?;
    let enc = t1.elapsed().as_secs_f64();
    let record = LevelRecord {
        tag: StrategyTag::Baseline3D,
        bound,
        metadata,
        payloads,
    };
    let stats = CompressionStats {
        levels: vec![LevelStats {
            tag: StrategyTag::Baseline3D,
            density: 1.0,
            bound,
            metadata_bytes: record.metadata.len(),
            payload_bytes: record.payload_bytes(),
        }],
        preprocess_seconds: pre,
        encode_seconds: enc,
    };
    Ok((
        CompressedArchive {
            header,
            records: vec![record],
        },
        stats,
    ))
}

/// Compresses `dataset`, also returning timings and per-level sizes.
pub fn compress_with_stats(dataset: &AmrDataset, config: &CompressionConfig) -> Result<(CompressedArchive, CompressionStats)> {
    config.validate()?;
    let codec = CodecRegistry::default().get(&config.codec)?;
    let bounds = derive_level_bounds(config.base_bound, dataset, config)?;
    let header = header_for(dataset, config);

    let densities = dataset.densities();
    let use_3d = match config.strategy {
        StrategyChoice::Auto => densities[0] >= config.finest_density_fallback,
        StrategyChoice::Fixed(t) => t == StrategyTag::Baseline3D,
    };
    if use_3d {
        return compress_3d(dataset, codec.as_ref(), &bounds, header);
    }

    let registry = StrategyRegistry::with_gsp_params(config.gsp);
    let mut records = Vec::with_capacity(dataset.num_levels());
    let mut levels = Vec::with_capacity(dataset.num_levels());
    let (mut pre, mut enc) = (0.0, 0.0);
    for (i, level) in dataset.levels().iter().enumerate() {
        let tag = match config.strategy {
            StrategyChoice::Auto => select_strategy(densities[i], config),
            StrategyChoice::Fixed(t) => t,
        };
        let t0 = Instant::now();
        let prepared = registry.get(tag)?.prepare(level).map_err(|e| e.at_level(i))?;
        pre += t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        let payloads = encode_all(codec.as_ref(), &prepared.tensors, bounds[i], dataset).map_err(|e| e.at_level(i))?;
        enc += t1.elapsed().as_secs_f64();
        let record = LevelRecord {
            tag,
            bound: bounds[i],
            metadata: prepared.metadata,
            payloads,
        };
        levels.push(LevelStats {
            tag,
            density: densities[i],
            bound: bounds[i],
            metadata_bytes: record.metadata.len(),
            payload_bytes: record.payload_bytes(),
        });
        records.push(record);
    }
    Ok((
        CompressedArchive { header, records },
        CompressionStats {
            levels,
            preprocess_seconds: pre,
            encode_seconds: enc,
        },
    ))
}

pub fn compress_dataset(dataset: &AmrDataset, config: &CompressionConfig) -> Result<CompressedArchive> {
    compress_with_stats(dataset, config).map(|(a, _)| a)
}

/// Every level linearized to 1D and compressed on its own.
pub fn compress_baseline_1d(dataset: &AmrDataset, bound: ErrorBound) -> Result<CompressedArchive> {
    let config = CompressionConfig {
        strategy: StrategyChoice::Fixed(StrategyTag::Baseline1D),
        ..CompressionConfig::with_bound(bound)
    };
    compress_dataset(dataset, &config)
}

fn decode_payloads(codecs: &CodecRegistry, payloads: &[Vec<u8>]) -> Result<Vec<Tensor>> {
    payloads
        .iter()
        .map(|p| {
            let block = EncodedBlock::from_bytes(p)?;
            codecs.by_predictor(block.predictor)?.decode(&block)
        })
        .collect()
}

fn decompress_3d(archive: &CompressedArchive, codecs: &CodecRegistry) -> Result<AmrDataset> {
    let h = &archive.header;
    let record = &archive.records[0];
    let mut tensors = decode_payloads(codecs, &record.payloads)?;
    let side = h.finest_side;
    if tensors.len() != 1 || tensors[0].dims() != [side; 3] {
        return Err(Error::Structural("3D record must hold one finest-grid payload".into()));
    }
    let uniform = Field3::from_vec([side; 3], tensors.pop().unwrap().into_vec())?;
    let mut r = ByteReader::new(&record.metadata);
    let mut levels = Vec::with_capacity(h.num_levels);
    for i in 0..h.num_levels {
        let f = h.refinement_factor.pow(i as u32);
        let level_side = h.level_side(i);
        let dims = [level_side / h.unit_block_size; 3];
        let mask = BlockMask::from_packed(dims, r.take((dims[0] * dims[1] * dims[2]).div_ceil(8))?)?;
        // first cell of each up-sampled footprint
        let values = Field3::from_fn([level_side; 3], |x, y, z| uniform.get(x * f, y * f, z * f));
        levels.push(LevelGrid::new(values, h.unit_block_size, mask).map_err(|e| e.at_level(i))?);
    }
    if !r.is_done() {
        return Err(Error::Format("trailing bytes in 3D mask metadata".into()));
    }
    AmrDataset::new(levels, h.refinement_factor, h.value_type)
}

pub fn decompress_dataset(archive: &CompressedArchive) -> Result<AmrDataset> {
    let codecs = CodecRegistry::default();
    if archive.records.len() == 1 && archive.records[0].tag == StrategyTag::Baseline3D {
        return decompress_3d(archive, &codecs);
    }
    let h = &archive.header;
    if archive.records.len() != h.num_levels {
        return Err(Error::Format(format!(
            "{} records for {} levels",
            archive.records.len(),
            h.num_levels
        )));
    }
    let registry = StrategyRegistry::default();
    let mut levels = Vec::with_capacity(h.num_levels);
    for (i, record) in archive.records.iter().enumerate() {
        let geometry = LevelGeometry {
            side: h.level_side(i),
            unit_block_size: h.unit_block_size,
        };
        let level = decode_payloads(&codecs, &record.payloads)
            .and_then(|t| registry.get(record.tag)?.restore(geometry, &record.metadata, t))
            .map_err(|e| e.at_level(i))?;
        levels.push(level);
    }
    AmrDataset::new(levels, h.refinement_factor, h.value_type)
}

/// Largest point-wise error per level over defined cells.
pub fn level_max_errors(original: &AmrDataset, decoded: &AmrDataset) -> Result<Vec<f64>> {
    if original.num_levels() != decoded.num_levels() {
        return Err(Error::InvalidInput("datasets differ in level count".into()));
    }
    original
        .levels()
        .iter()
        .zip(decoded.levels())
        .map(|(a, b)| {
            if a.occupancy() != b.occupancy() {
                return Err(Error::InvalidInput("occupancy masks differ".into()));
            }
            Ok(a.defined_values()
                .iter()
                .zip(b.defined_values())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max))
        })
        .collect()
}
