//! Extracted sub-blocks grouped by shape, shared by the sparse-tensor and
//! k-d tree strategies.

use std::collections::BTreeMap;

use crate::amr::LevelGrid;
use crate::error::{Error, Result};
use crate::grid::{volume, BlockMask, Field3, Tensor};

/// Axis permutation taking a sub-block to its canonical orientation:
/// canonical axis `a` is source axis `self.axes()[a]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Permutation(u8);

const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

impl Permutation {
    pub const IDENTITY: Permutation = Permutation(0);

    pub fn from_tag(tag: u8) -> Result<Self> {
        if (tag as usize) < PERMUTATIONS.len() {
            Ok(Permutation(tag))
        } else {
            Err(Error::Structural(format!("invalid axis permutation tag {tag}")))
        }
    }

    pub fn tag(self) -> u8 {
        self.0
    }

    pub fn axes(self) -> [usize; 3] {
        PERMUTATIONS[self.0 as usize]
    }

    /// Orders axes by extent, largest first; ties keep x < y < z.
    pub fn canonical_for(dims: [usize; 3]) -> Self {
        let mut axes = [0, 1, 2];
        axes.sort_by(|&a, &b| dims[b].cmp(&dims[a]));
        let tag = PERMUTATIONS.iter().position(|p| *p == axes).unwrap();
        Permutation(tag as u8)
    }

    pub fn apply(self, dims: [usize; 3]) -> [usize; 3] {
        let p = self.axes();
        [dims[p[0]], dims[p[1]], dims[p[2]]]
    }

    /// Inverse of [`Permutation::apply`].
    pub fn unapply(self, canonical: [usize; 3]) -> [usize; 3] {
        let p = self.axes();
        let mut out = [0; 3];
        for a in 0..3 {
            out[p[a]] = canonical[a];
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubBlock {
    /// Origin in unit blocks.
    pub origin: [usize; 3],
    pub perm: Permutation,
}

/// All sub-blocks sharing one canonical shape, payloads concatenated.
#[derive(Debug, Clone, PartialEq)]
pub struct SubBlockGroup {
    /// Canonical extent in unit blocks.
    pub shape: [usize; 3],
    pub blocks: Vec<SubBlock>,
    /// Cell values, one canonical-layout box per entry of `blocks`.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubBlockSet {
    source_dims: [usize; 3],
    unit_block_size: usize,
    groups: BTreeMap<[usize; 3], SubBlockGroup>,
}

impl SubBlockSet {
    pub fn new(source_dims: [usize; 3], unit_block_size: usize) -> Self {
        Self {
            source_dims,
            unit_block_size,
            groups: BTreeMap::new(),
        }
    }

    pub fn source_dims(&self) -> [usize; 3] {
        self.source_dims
    }

    pub fn unit_block_size(&self) -> usize {
        self.unit_block_size
    }

    pub fn groups(&self) -> impl Iterator<Item = &SubBlockGroup> {
        self.groups.values()
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn block_count(&self) -> usize {
        self.groups.values().map(|g| g.blocks.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Extents (in unit blocks, source orientation) of every sub-block.
    pub fn placements(&self) -> impl Iterator<Item = ([usize; 3], [usize; 3])> + '_ {
        self.groups
            .values()
            .flat_map(|g| g.blocks.iter().map(move |b| (b.origin, b.perm.unapply(g.shape))))
    }

    /// Copies the box at `origin` with extent `dims` (unit blocks) out of
    /// `level`, canonically oriented.
    pub fn push(&mut self, level: &LevelGrid, origin: [usize; 3], dims: [usize; 3]) {
        let perm = Permutation::canonical_for(dims);
        let shape = perm.apply(dims);
        let u = self.unit_block_size;
        let group = self.groups.entry(shape).or_insert_with(|| SubBlockGroup {
            shape,
            blocks: Vec::new(),
            values: Vec::new(),
        });
        let cell_origin = origin.map(|o| o * u);
        let cell_dims = dims.map(|d| d * u);
        if perm == Permutation::IDENTITY {
            level.values().copy_box(cell_origin, cell_dims, &mut group.values);
        } else {
            copy_permuted(level.values(), cell_origin, cell_dims, perm, &mut group.values);
        }
        group.blocks.push(SubBlock { origin, perm });
    }

    /// Marks every covered unit block; errors on overlap or out-of-range.
    pub fn coverage(&self) -> Result<BlockMask> {
        let mut mask = BlockMask::new(self.source_dims, false);
        for (origin, dims) in self.placements() {
            for a in 0..3 {
                if origin[a] + dims[a] > self.source_dims[a] {
                    return Err(Error::Structural(format!(
                        "sub-block at {origin:?} with extent {dims:?} exceeds {:?}",
                        self.source_dims
                    )));
                }
            }
            for z in origin[2]..origin[2] + dims[2] {
                for y in origin[1]..origin[1] + dims[1] {
                    for x in origin[0]..origin[0] + dims[0] {
                        if mask.get(x, y, z) {
                            return Err(Error::Structural(format!(
                                "sub-blocks overlap at unit block ({x}, {y}, {z})"
                            )));
                        }
                        mask.set(x, y, z, true);
                    }
                }
            }
        }
        Ok(mask)
    }

    /// Puts every sub-block back into a level grid.
    pub fn restore(&self) -> Result<LevelGrid> {
        let dims = self.source_dims;
        if dims[0] != dims[1] || dims[1] != dims[2] {
            return Err(Error::Structural(format!("source dims {dims:?} are not cubic")));
        }
        let mask = self.coverage()?;
        let u = self.unit_block_size;
        let side = dims[0] * u;
        let mut values = Field3::cube(side);
        for g in self.groups.values() {
            let box_len = volume(g.shape) * u.pow(3);
            if g.values.len() != box_len * g.blocks.len() {
                return Err(Error::Structural(format!(
                    "group {:?} holds {} values for {} blocks",
                    g.shape,
                    g.values.len(),
                    g.blocks.len()
                )));
            }
            for (b, chunk) in g.blocks.iter().zip(g.values.chunks_exact(box_len.max(1))) {
                let cell_origin = b.origin.map(|o| o * u);
                let cell_dims = b.perm.unapply(g.shape).map(|d| d * u);
                if b.perm == Permutation::IDENTITY {
                    values.paste_box(cell_origin, cell_dims, chunk);
                } else {
                    paste_permuted(&mut values, cell_origin, cell_dims, b.perm, chunk);
                }
            }
        }
        LevelGrid::new(values, u, mask)
    }

    /// One rank-4 tensor per group: canonical box dims in cells, then count.
    pub fn to_tensors(&self) -> Vec<Tensor> {
        let u = self.unit_block_size;
        self.groups
            .values()
            .map(|g| {
                let mut dims: Vec<usize> = g.shape.iter().map(|s| s * u).collect();
                dims.push(g.blocks.len());
                Tensor::new(dims, g.values.clone()).expect("group payload matches its shape")
            })
            .collect()
    }

    /// Serializes everything except the payload values.
    pub fn layout_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for d in self.source_dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        out.extend_from_slice(&(self.unit_block_size as u32).to_le_bytes());
        out.extend_from_slice(&(self.groups.len() as u32).to_le_bytes());
        for g in self.groups.values() {
            for s in g.shape {
                out.extend_from_slice(&(s as u16).to_le_bytes());
            }
            out.extend_from_slice(&(g.blocks.len() as u32).to_le_bytes());
            for b in &g.blocks {
                for o in b.origin {
                    let o = u16::try_from(o)
                        .map_err(|_| Error::InvalidInput(format!("block coordinate {o} exceeds u16")))?;
                    out.extend_from_slice(&o.to_le_bytes());
                }
                out.push(b.perm.tag());
            }
        }
        Ok(out)
    }

    /// Rebuilds a set from [`SubBlockSet::layout_bytes`] output and one
    /// tensor per group in the same order.
    pub fn from_layout(layout: &[u8], tensors: Vec<Tensor>) -> Result<Self> {
        let mut r = ByteReader::new(layout);
        let source_dims = [r.u32()? as usize, r.u32()? as usize, r.u32()? as usize];
        let unit_block_size = r.u32()? as usize;
        if unit_block_size == 0 {
            return Err(Error::Format("unit block size 0".into()));
        }
        let n_groups = r.u32()? as usize;
        if n_groups != tensors.len() {
            return Err(Error::Structural(format!(
                "layout lists {n_groups} groups but {} payloads were given",
                tensors.len()
            )));
        }
        let mut groups = BTreeMap::new();
        for tensor in tensors {
            let shape = [r.u16()? as usize, r.u16()? as usize, r.u16()? as usize];
            let count = r.u32()? as usize;
            let mut blocks = Vec::with_capacity(count.min(layout.len()));
            for _ in 0..count {
                let origin = [r.u16()? as usize, r.u16()? as usize, r.u16()? as usize];
                let perm = Permutation::from_tag(r.u8()?)?;
                blocks.push(SubBlock { origin, perm });
            }
            let mut expect: Vec<usize> = shape.iter().map(|s| s * unit_block_size).collect();
            expect.push(count);
            if tensor.dims() != expect.as_slice() {
                return Err(Error::Structural(format!(
                    "payload dims {:?} do not match group dims {expect:?}",
                    tensor.dims()
                )));
            }
            let values = tensor.into_vec();
            if groups
                .insert(shape, SubBlockGroup { shape, blocks, values })
                .is_some()
            {
                return Err(Error::Structural(format!("duplicate group shape {shape:?}")));
            }
        }
        if !r.is_done() {
            return Err(Error::Format("trailing bytes after sub-block layout".into()));
        }
        Ok(Self {
            source_dims,
            unit_block_size,
            groups,
        })
    }
}

fn copy_permuted(src: &Field3, origin: [usize; 3], dims: [usize; 3], perm: Permutation, out: &mut Vec<f64>) {
    let p = perm.axes();
    let c = perm.apply(dims);
    let mut s = [0usize; 3];
    for k in 0..c[2] {
        for j in 0..c[1] {
            for i in 0..c[0] {
                s[p[0]] = i;
                s[p[1]] = j;
                s[p[2]] = k;
                out.push(src.get(origin[0] + s[0], origin[1] + s[1], origin[2] + s[2]));
            }
        }
    }
}

fn paste_permuted(dst: &mut Field3, origin: [usize; 3], dims: [usize; 3], perm: Permutation, src: &[f64]) {
    let p = perm.axes();
    let c = perm.apply(dims);
    let mut s = [0usize; 3];
    let mut it = src.iter();
    for k in 0..c[2] {
        for j in 0..c[1] {
            for i in 0..c[0] {
                s[p[0]] = i;
                s[p[1]] = j;
                s[p[2]] = k;
                dst.set(origin[0] + s[0], origin[1] + s[1], origin[2] + s[2], *it.next().unwrap());
            }
        }
    }
}

/// Little-endian cursor over a byte slice.
pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format(format!("truncated: need {n} bytes at offset {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn position(&self) -> usize {
        self.pos
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub(crate) fn is_done(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::raster;

    #[test]
    fn canonical_orders_largest_first() {
        let p = Permutation::canonical_for([1, 2, 2]);
        assert_eq!(p.apply([1, 2, 2]), [2, 2, 1]);
        assert_eq!(p.unapply([2, 2, 1]), [1, 2, 2]);
        assert_eq!(Permutation::canonical_for([2, 1, 2]).apply([2, 1, 2]), [2, 2, 1]);
        assert_eq!(Permutation::canonical_for([3, 3, 3]), Permutation::IDENTITY);
        assert!(Permutation::from_tag(6).is_err());
    }

    #[test]
    fn permuted_push_restores() {
        let mask = BlockMask::from_fn([4; 3], |x, _, z| x < 1 && z < 2);
        let level = LevelGrid::new(
            Field3::from_fn([8; 3], |x, y, z| (x + 8 * y + 64 * z) as f64),
            2,
            mask.clone(),
        )
        .unwrap();
        let mut set = SubBlockSet::new([4; 3], 2);
        set.push(&level, [0, 0, 0], [1, 4, 2]);
        let g = set.groups().next().unwrap();
        assert_eq!(g.shape, [4, 2, 1]);
        // canonical axis 0 is the source y axis
        assert_eq!(g.values[1], level.values().get(0, 1, 0));
        assert_eq!(set.restore().unwrap(), level);
        let layout = set.layout_bytes().unwrap();
        let back = SubBlockSet::from_layout(&layout, set.to_tensors()).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn overlap_and_range_errors() {
        let level = LevelGrid::new(Field3::cube(4), 1, BlockMask::new([4; 3], true)).unwrap();
        let mut set = SubBlockSet::new([4; 3], 1);
        set.push(&level, [0, 0, 0], [2, 2, 2]);
        set.push(&level, [1, 1, 1], [1, 1, 1]);
        assert!(matches!(set.restore(), Err(Error::Structural(_))));

        let mut set = SubBlockSet::new([2; 3], 1);
        set.push(&level, [1, 1, 1], [2, 2, 2]);
        assert!(matches!(set.restore(), Err(Error::Structural(_))));
    }

    #[test]
    fn corrupted_permutation_tag_rejected() {
        let level = LevelGrid::new(Field3::cube(4), 2, BlockMask::new([2; 3], true)).unwrap();
        let mut set = SubBlockSet::new([2; 3], 2);
        set.push(&level, [0, 0, 0], [2, 1, 1]);
        let mut layout = set.layout_bytes().unwrap();
        *layout.last_mut().unwrap() = 9;
        assert!(SubBlockSet::from_layout(&layout, set.to_tensors()).is_err());
    }

    #[test]
    fn empty_set_restores_empty_level() {
        let set = SubBlockSet::new([3; 3], 2);
        let level = set.restore().unwrap();
        assert_eq!(level.side(), 6);
        assert_eq!(level.occupancy().count(), 0);
        assert!(raster([6; 3]).all(|[x, y, z]| level.values().get(x, y, z) == 0.0));
    }
}
