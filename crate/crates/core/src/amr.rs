//! Multi-level AMR data model.
//!
//! A dataset is an ordered list of levels, finest first. Every level spans the
//! whole physical domain at its own resolution and carries an occupancy mask
//! over unit blocks; a finest-resolution cell belongs to exactly one level.

use crate::error::{Error, Result};
use crate::grid::{min_max, raster, BlockMask, Field3, ValueType};

/// Largest grid (in cells) that up-sampling is allowed to produce.
pub const MAX_UPSAMPLED_CELLS: usize = 1 << 32;

pub const DEFAULT_UNIT_BLOCK: usize = 16;
pub const DEFAULT_REFINEMENT_FACTOR: usize = 2;

/// One refinement level: a cubic scalar grid plus its unit-block occupancy.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelGrid {
    side: usize,
    unit_block_size: usize,
    values: Field3,
    occupancy: BlockMask,
}

impl LevelGrid {
    /// Builds a level. Cells of empty unit blocks are reset to the 0.0
    /// sentinel, since the mask is authoritative.
    pub fn new(values: Field3, unit_block_size: usize, occupancy: BlockMask) -> Result<Self> {
        let dims = values.dims();
        let side = dims[0];
        if dims != [side; 3] {
            return Err(Error::InvalidInput(format!("level grid must be cubic, got {dims:?}")));
        }
        check_unit_block(side, unit_block_size)?;
        let nb = side / unit_block_size;
        if occupancy.dims() != [nb; 3] {
            return Err(Error::InvalidInput(format!(
                "mask dims {:?} do not match {nb}^3 unit blocks",
                occupancy.dims()
            )));
        }
        let mut level = Self {
            side,
            unit_block_size,
            values,
            occupancy,
        };
        level.clear_empty_blocks();
        Ok(level)
    }

    pub fn empty(side: usize, unit_block_size: usize) -> Result<Self> {
        check_unit_block(side, unit_block_size)?;
        let nb = side / unit_block_size;
        Ok(Self {
            side,
            unit_block_size,
            values: Field3::cube(side),
            occupancy: BlockMask::new([nb; 3], false),
        })
    }

    fn clear_empty_blocks(&mut self) {
        let u = self.unit_block_size;
        for b in raster(self.occupancy.dims()) {
            if !self.occupancy.get_at(b) {
                self.values.fill_box([b[0] * u, b[1] * u, b[2] * u], [u; 3], 0.0);
            }
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn unit_block_size(&self) -> usize {
        self.unit_block_size
    }

    /// Unit blocks per dimension.
    pub fn blocks_per_side(&self) -> usize {
        self.side / self.unit_block_size
    }

    pub fn values(&self) -> &Field3 {
        &self.values
    }

    pub fn occupancy(&self) -> &BlockMask {
        &self.occupancy
    }

    pub fn into_parts(self) -> (Field3, BlockMask) {
        (self.values, self.occupancy)
    }

    pub fn density(&self) -> f64 {
        level_density(self)
    }

    /// Number of defined cells.
    pub fn defined_count(&self) -> usize {
        self.occupancy.count() * self.unit_block_size.pow(3)
    }

    /// Defined values in cell raster order, skipping cells of empty blocks.
    pub fn defined_values(&self) -> Vec<f64> {
        let u = self.unit_block_size;
        let mut out = Vec::with_capacity(self.defined_count());
        for [x, y, z] in raster([self.side; 3]) {
            if self.occupancy.get(x / u, y / u, z / u) {
                out.push(self.values.get(x, y, z));
            }
        }
        out
    }

    /// Inverse of [`LevelGrid::defined_values`].
    pub fn from_defined_values(
        side: usize,
        unit_block_size: usize,
        occupancy: BlockMask,
        values: &[f64],
    ) -> Result<Self> {
        let mut level = Self::new(Field3::cube(side), unit_block_size, occupancy)?;
        if values.len() != level.defined_count() {
            return Err(Error::Structural(format!(
                "expected {} defined values, got {}",
                level.defined_count(),
                values.len()
            )));
        }
        let u = unit_block_size;
        let mut it = values.iter();
        for [x, y, z] in raster([side; 3]) {
            if level.occupancy.get(x / u, y / u, z / u) {
                level.values.set(x, y, z, *it.next().unwrap());
            }
        }
        Ok(level)
    }
}

fn check_unit_block(side: usize, unit: usize) -> Result<()> {
    if unit == 0 || side == 0 || side % unit != 0 {
        return Err(Error::InvalidInput(format!(
            "unit block size {unit} must divide level side {side}"
        )));
    }
    Ok(())
}

/// Fraction of non-empty unit blocks in `level`.
pub fn level_density(level: &LevelGrid) -> f64 {
    level.occupancy.density()
}

/// Nearest-neighbour replication of every cell into a `factor`^3 cube.
pub fn upsample_level(level: &LevelGrid, factor: usize) -> Result<Field3> {
    if factor == 0 {
        return Err(Error::InvalidParameter("up-sampling factor must be >= 1".into()));
    }
    let out_side = level
        .side
        .checked_mul(factor)
        .filter(|s| s.checked_pow(3).is_some_and(|n| n <= MAX_UPSAMPLED_CELLS))
        .ok_or_else(|| {
            Error::InvalidParameter(format!(
                "up-sampling side {} by {factor} exceeds {MAX_UPSAMPLED_CELLS} cells",
                level.side
            ))
        })?;
    let src = &level.values;
    let mut out = Vec::with_capacity(out_side.pow(3));
    for z in 0..out_side {
        for y in 0..out_side {
            let row = src.index(0, y / factor, z / factor);
            for x in 0..out_side {
                out.push(src.as_slice()[row + x / factor]);
            }
        }
    }
    Field3::from_vec([out_side; 3], out)
}

/// Ordered set of levels, finest first.
#[derive(Debug, Clone, PartialEq)]
pub struct AmrDataset {
    levels: Vec<LevelGrid>,
    refinement_factor: usize,
    value_type: ValueType,
}

impl AmrDataset {
    /// Validates geometry and the partition property.
    pub fn new(levels: Vec<LevelGrid>, refinement_factor: usize, value_type: ValueType) -> Result<Self> {
        let ds = Self::new_unchecked(levels, refinement_factor, value_type)?;
        ds.check_partition()?;
        Ok(ds)
    }

    /// Validates geometry only (sides, unit block sizes), not ownership.
    pub fn new_unchecked(
        levels: Vec<LevelGrid>,
        refinement_factor: usize,
        value_type: ValueType,
    ) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidInput("dataset has no levels".into()));
        }
        if refinement_factor < 1 {
            return Err(Error::InvalidInput("refinement factor must be >= 1".into()));
        }
        let u = levels[0].unit_block_size;
        for (i, pair) in levels.windows(2).enumerate() {
            if pair[1].side * refinement_factor != pair[0].side {
                return Err(Error::Structural(format!(
                    "level {} side {} times factor {refinement_factor} != level {i} side {}",
                    i + 1,
                    pair[1].side,
                    pair[0].side
                )));
            }
        }
        if levels.iter().any(|l| l.unit_block_size != u) {
            return Err(Error::Structural("levels use different unit block sizes".into()));
        }
        if value_type == ValueType::F32
            && levels
                .iter()
                .any(|l| l.values.as_slice().iter().any(|&v| v as f32 as f64 != v))
        {
            return Err(Error::InvalidInput("f32 dataset holds values not representable as f32".into()));
        }
        Ok(Self {
            levels,
            refinement_factor,
            value_type,
        })
    }

    pub fn levels(&self) -> &[LevelGrid] {
        &self.levels
    }

    pub fn into_levels(self) -> Vec<LevelGrid> {
        self.levels
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn refinement_factor(&self) -> usize {
        self.refinement_factor
    }

    pub fn value_type(&self) -> ValueType {
        self.value_type
    }

    pub fn finest_side(&self) -> usize {
        self.levels[0].side
    }

    pub fn unit_block_size(&self) -> usize {
        self.levels[0].unit_block_size
    }

    /// Side ratio between the finest level and level `i`.
    pub fn cumulative_factor(&self, i: usize) -> usize {
        self.refinement_factor.pow(i as u32)
    }

    pub fn densities(&self) -> Vec<f64> {
        self.levels.iter().map(level_density).collect()
    }

    pub fn defined_count(&self) -> usize {
        self.levels.iter().map(LevelGrid::defined_count).sum()
    }

    /// `(min, max)` over all defined values of all levels.
    pub fn value_range(&self) -> Option<(f64, f64)> {
        let mut range: Option<(f64, f64)> = None;
        for level in &self.levels {
            if let Some((lo, hi)) = min_max(&level.defined_values()) {
                range = Some(match range {
                    None => (lo, hi),
                    Some((a, b)) => (a.min(lo), b.max(hi)),
                });
            }
        }
        range
    }

    /// Checks that every finest unit block is owned by exactly one level.
    pub fn check_partition(&self) -> Result<()> {
        let fine = &self.levels[0];
        let nb = fine.blocks_per_side();
        for [x, y, z] in raster([nb; 3]) {
            let owners = self
                .levels
                .iter()
                .enumerate()
                .filter(|(i, level)| {
                    let f = self.cumulative_factor(*i);
                    level.occupancy.get(x / f, y / f, z / f)
                })
                .count();
            if owners != 1 {
                let u = fine.unit_block_size;
                let what = if owners == 0 { "hole" } else { "overlap" };
                return Err(Error::Structural(format!(
                    "partition {what} at finest cell ({}, {}, {}): {owners} owning levels",
                    x * u,
                    y * u,
                    z * u
                )));
            }
        }
        Ok(())
    }
}

/// Composites all levels onto the finest grid, up-sampling coarse levels
/// where finer levels are empty.
pub fn merge_to_uniform(dataset: &AmrDataset) -> Result<Field3> {
    dataset.check_partition()?;
    let side = dataset.finest_side();
    let u = dataset.unit_block_size();
    let mut out = Field3::cube(side);
    for (i, level) in dataset.levels.iter().enumerate() {
        let f = dataset.cumulative_factor(i);
        let span = u * f;
        for b in raster(level.occupancy.dims()) {
            if !level.occupancy.get_at(b) {
                continue;
            }
            for z in b[2] * span..(b[2] + 1) * span {
                for y in b[1] * span..(b[1] + 1) * span {
                    for x in b[0] * span..(b[0] + 1) * span {
                        out.set(x, y, z, level.values.get(x / f, y / f, z / f));
                    }
                }
            }
        }
    }
    Ok(out)
}
