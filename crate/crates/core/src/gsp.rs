//! Zero filling and ghost-shell padding of empty unit blocks.
//!
//! For dense levels the empty blocks are kept and filled rather than cut out.
//! Ghost-shell padding writes, next to each non-empty face neighbour, a few
//! layers holding the average of that neighbour's facing boundary slices, so a
//! predictor crossing into the padded block sees values close to the data.

use crate::amr::LevelGrid;
use crate::error::{Error, Result};
use crate::grid::{raster, BlockMask, Field3};

pub const DEFAULT_GSP_LAYERS: usize = 1;
pub const DEFAULT_GSP_SLICES: usize = 1;

/// Face directions; bit `i` of [`PadEntry::dirs`] refers to `DIRECTIONS[i]`.
pub const DIRECTIONS: [(usize, isize); 6] = [(0, -1), (0, 1), (1, -1), (1, 1), (2, -1), (2, 1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GspParams {
    pub x_layers: usize,
    pub y_slices: usize,
}

impl Default for GspParams {
    fn default() -> Self {
        Self {
            x_layers: DEFAULT_GSP_LAYERS,
            y_slices: DEFAULT_GSP_SLICES,
        }
    }
}

impl GspParams {
    pub fn validate(&self, unit_block_size: usize) -> Result<()> {
        let ok = |v: usize| (1..=unit_block_size).contains(&v);
        if !ok(self.x_layers) || !ok(self.y_slices) {
            return Err(Error::InvalidParameter(format!(
                "gsp layers {} and slices {} must be within 1..={unit_block_size}",
                self.x_layers, self.y_slices
            )));
        }
        Ok(())
    }
}

/// An empty block that received padding, with the neighbours it used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PadEntry {
    pub block: [usize; 3],
    pub dirs: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PaddedGrid {
    pub values: Field3,
    pub mask: BlockMask,
    pub unit_block_size: usize,
    pub pad_map: Vec<PadEntry>,
    pub params: GspParams,
}

/// Level values with every empty block set to 0.0.
pub fn zero_fill(level: &LevelGrid) -> Field3 {
    // LevelGrid already keeps empty blocks at the 0.0 sentinel.
    level.values().clone()
}

fn neighbor(b: [usize; 3], dims: [usize; 3], (axis, sign): (usize, isize)) -> Option<[usize; 3]> {
    let v = b[axis] as isize + sign;
    if v < 0 || v >= dims[axis] as isize {
        return None;
    }
    let mut n = b;
    n[axis] = v as usize;
    Some(n)
}

/// Local cell range `[lo, hi)` along `axis` of a block that touches the face
/// in direction `sign`, `depth` cells deep.
fn face_range(u: usize, sign: isize, depth: usize) -> (usize, usize) {
    if sign > 0 {
        (u - depth, u)
    } else {
        (0, depth)
    }
}

fn box_ranges(u: usize, axis: usize, range: (usize, usize)) -> [(usize, usize); 3] {
    let mut r = [(0, u); 3];
    r[axis] = range;
    r
}

/// Pads the empty blocks of `level` that have at least one non-empty face
/// neighbour. Non-empty blocks are copied unchanged.
pub fn gsp_pad(level: &LevelGrid, params: GspParams) -> Result<PaddedGrid> {
    let u = level.unit_block_size();
    params.validate(u)?;
    let mask = level.occupancy();
    let dims = mask.dims();
    let mut values = level.values().clone();
    let mut pad_map = Vec::new();

    let mut sum = vec![0.0f64; u * u * u];
    let mut hits = vec![0u32; u * u * u];
    for b in raster(dims) {
        if mask.get_at(b) {
            continue;
        }
        let mut dirs = 0u8;
        for (d, &dir) in DIRECTIONS.iter().enumerate() {
            if neighbor(b, dims, dir).is_some_and(|n| mask.get_at(n)) {
                dirs |= 1 << d;
            }
        }
        if dirs == 0 {
            continue;
        }
        sum.fill(0.0);
        hits.fill(0);
        for (d, &(axis, sign)) in DIRECTIONS.iter().enumerate() {
            if dirs >> d & 1 == 0 {
                continue;
            }
            let n = neighbor(b, dims, (axis, sign)).unwrap();
            // the neighbour's slices facing b sit on its opposite face
            let src = box_ranges(u, axis, face_range(u, -sign, params.y_slices));
            let mut acc = 0.0;
            let mut cnt = 0usize;
            for z in src[2].0..src[2].1 {
                for y in src[1].0..src[1].1 {
                    for x in src[0].0..src[0].1 {
                        acc += values.get(n[0] * u + x, n[1] * u + y, n[2] * u + z);
                        cnt += 1;
                    }
                }
            }
            let pad = acc / cnt as f64;
            let dst = box_ranges(u, axis, face_range(u, sign, params.x_layers));
            for z in dst[2].0..dst[2].1 {
                for y in dst[1].0..dst[1].1 {
                    for x in dst[0].0..dst[0].1 {
                        let i = x + u * (y + u * z);
                        sum[i] += pad;
                        hits[i] += 1;
                    }
                }
            }
        }
        // overlapping pads (edges, corners) are averaged
        let mut written = 0.0;
        let mut n_written = 0usize;
        for i in 0..sum.len() {
            if hits[i] > 0 {
                sum[i] /= hits[i] as f64;
                written += sum[i];
                n_written += 1;
            }
        }
        let interior = written / n_written as f64;
        for [x, y, z] in raster([u; 3]) {
            let i = x + u * (y + u * z);
            let v = if hits[i] > 0 { sum[i] } else { interior };
            values.set(b[0] * u + x, b[1] * u + y, b[2] * u + z, v);
        }
        pad_map.push(PadEntry { block: b, dirs });
    }

    Ok(PaddedGrid {
        values,
        mask: mask.clone(),
        unit_block_size: u,
        pad_map,
        params,
    })
}

/// Strips padding: the mask is restored exactly and empty blocks return to
/// the 0.0 sentinel.
pub fn gsp_unpad(padded: &PaddedGrid) -> Result<LevelGrid> {
    let dims = padded.mask.dims();
    for e in &padded.pad_map {
        if (0..3).any(|a| e.block[a] >= dims[a]) {
            return Err(Error::Structural(format!("pad entry {:?} out of range", e.block)));
        }
        if padded.mask.get_at(e.block) {
            return Err(Error::Structural(format!(
                "pad entry references non-empty block {:?}",
                e.block
            )));
        }
        if e.dirs == 0 || e.dirs >> 6 != 0 {
            return Err(Error::Structural(format!("pad entry {:?} has direction bits {:#x}", e.block, e.dirs)));
        }
    }
    LevelGrid::new(padded.values.clone(), padded.unit_block_size, padded.mask.clone())
}
