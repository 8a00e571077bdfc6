//! Adaptive k-d tree partitioning.
//!
//! Nodes cycle through three shapes: a cube (1:1:1) splits into two flat
//! halves (2:2:1), a flat node into two slim halves (2:1:1) and a slim node
//! into two cubes. Non-empty unit blocks are only counted at cube nodes, per
//! octant; flat and slim descendants reuse those octant counts. Splitting
//! stops once a node is empty or full.

use crate::amr::LevelGrid;
use crate::error::{Error, Result};
use crate::grid::{linear_index, raster, volume, BlockMask};
use crate::subblock::SubBlockSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X = 0,
    Y = 1,
    Z = 2,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Cube,
    /// Two long axes and one short one.
    Flat { thin: Axis },
    /// One long axis and two short ones.
    Slim { long: Axis },
}

impl Shape {
    /// Classifies `dims` by its sorted side ratios.
    pub fn of(dims: [usize; 3]) -> Result<Self> {
        let max = *dims.iter().max().unwrap();
        let min = *dims.iter().min().unwrap();
        if max == min {
            return Ok(Shape::Cube);
        }
        if max != 2 * min {
            return Err(Error::Structural(format!("extent {dims:?} is not cube, flat or slim")));
        }
        let long = dims.iter().filter(|&&d| d == max).count();
        let first = |v: usize| Axis::ALL.into_iter().find(|a| dims[a.index()] == v).unwrap();
        Ok(if long == 2 {
            Shape::Flat { thin: first(min) }
        } else {
            Shape::Slim { long: first(max) }
        })
    }

    /// Axes along which this shape may split, in priority order.
    fn split_axes(self) -> &'static [Axis] {
        use Axis::*;
        match self {
            Shape::Cube => &[X, Y, Z],
            Shape::Flat { thin: X } => &[Y, Z],
            Shape::Flat { thin: Y } => &[X, Z],
            Shape::Flat { thin: Z } => &[X, Y],
            Shape::Slim { long: X } => &[X],
            Shape::Slim { long: Y } => &[Y],
            Shape::Slim { long: Z } => &[Z],
        }
    }
}

/// Picks the split axis with the largest imbalance between the two halves.
///
/// `counts` holds the octant counts of the node: 8 values `c1..c8` for a
/// cube, 4 for a flat node and 2 for a slim node. Count `c(i+1)` belongs to the
/// cell whose bits along the node's split axes, in x < y < z order, spell `i`
/// (first split axis is the lowest bit). Ties go to the lowest axis.
pub fn choose_split(shape: Shape, counts: &[u32]) -> Axis {
    let axes = shape.split_axes();
    assert_eq!(counts.len(), 1 << axes.len(), "octant count arity does not match shape");
    let mut best = (axes[0], -1i64);
    for (bit, &axis) in axes.iter().enumerate() {
        let mut low = 0i64;
        let mut high = 0i64;
        for (i, &c) in counts.iter().enumerate() {
            if i >> bit & 1 == 0 {
                low += c as i64;
            } else {
                high += c as i64;
            }
        }
        let diff = (low - high).abs();
        if diff > best.1 {
            best = (axis, diff);
        }
    }
    best.0
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AkdNode {
    /// Origin in unit blocks.
    pub origin: [usize; 3],
    /// Extent in unit blocks.
    pub dims: [usize; 3],
    pub shape: Shape,
    /// Non-empty unit blocks inside the extent.
    pub count: u32,
    pub split_axis: Option<Axis>,
    pub children: Option<Box<(AkdNode, AkdNode)>>,
}

impl AkdNode {
    pub fn volume(&self) -> u32 {
        volume(self.dims) as u32
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    pub fn is_full(&self) -> bool {
        self.count == self.volume()
    }

    /// Leaves in depth-first, left-first order.
    pub fn leaves(&self) -> Vec<&AkdNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            match &n.children {
                None => out.push(n),
                Some(pair) => {
                    stack.push(&pair.1);
                    stack.push(&pair.0);
                }
            }
        }
        out
    }

    pub fn node_count(&self) -> usize {
        1 + self
            .children
            .as_ref()
            .map_or(0, |c| c.0.node_count() + c.1.node_count())
    }
}

/// Octant counts inherited from the nearest cube ancestor. `cell` is the
/// octant side in unit blocks; `counts` covers the node extent in an
/// x-fastest grid of `dims / cell` cells (at most 2 per axis).
#[derive(Clone, Copy)]
struct Cells {
    cell: usize,
    counts: [u32; 8],
}

/// Builds the tree for `mask`. Masks whose dims are not one equal power of
/// two are padded with empty blocks up to the next power-of-two cube.
pub fn build_akdtree(mask: &BlockMask) -> AkdNode {
    let dims = mask.dims();
    let side = dims.iter().copied().max().unwrap().next_power_of_two();
    let padded;
    let mask = if dims == [side; 3] {
        mask
    } else {
        padded = BlockMask::from_fn([side; 3], |x, y, z| {
            x < dims[0] && y < dims[1] && z < dims[2] && mask.get(x, y, z)
        });
        &padded
    };
    let total = mask.count() as u32;
    build_node(mask, [0; 3], [side; 3], total, None)
}

fn count_box(mask: &BlockMask, origin: [usize; 3], dims: [usize; 3]) -> u32 {
    let mut n = 0;
    for z in origin[2]..origin[2] + dims[2] {
        for y in origin[1]..origin[1] + dims[1] {
            let row = linear_index(mask.dims(), origin[0], y, z);
            n += mask.bits()[row..row + dims[0]].iter().filter(|&&b| b).count() as u32;
        }
    }
    n
}

fn build_node(mask: &BlockMask, origin: [usize; 3], dims: [usize; 3], count: u32, cells: Option<Cells>) -> AkdNode {
    let shape = Shape::of(dims).expect("power-of-two cycle keeps shapes closed");
    let mut node = AkdNode {
        origin,
        dims,
        shape,
        count,
        split_axis: None,
        children: None,
    };
    if count == 0 || count == node.volume() {
        return node;
    }

    let cells = match (shape, cells) {
        (Shape::Cube, _) | (_, None) => {
            let h = dims[0] / 2;
            let mut counts = [0; 8];
            for (i, o) in raster([2; 3]).enumerate() {
                counts[i] = count_box(mask, [origin[0] + o[0] * h, origin[1] + o[1] * h, origin[2] + o[2] * h], [h; 3]);
            }
            Cells { cell: h, counts }
        }
        (_, Some(c)) => c,
    };
    let cell_dims = dims.map(|d| d / cells.cell);

    let split_axes = shape.split_axes();
    let n_octants = 1 << split_axes.len();
    debug_assert_eq!(volume(cell_dims), n_octants);
    // cell_dims is 2 along split axes and 1 elsewhere, so raster order over
    // it matches the bit order choose_split expects
    let axis = choose_split(shape, &cells.counts[..n_octants]);
    let a = axis.index();

    let mut child_dims = dims;
    child_dims[a] /= 2;
    let mut right_origin = origin;
    right_origin[a] += child_dims[a];
    let child_cell_dims = child_dims.map(|d| d / cells.cell);
    let split_cells = |high: bool| -> (Cells, u32) {
        let mut counts = [0; 8];
        let mut total = 0;
        for (i, mut o) in raster(child_cell_dims).enumerate() {
            if high {
                o[a] += child_cell_dims[a];
            }
            counts[i] = cells.counts[linear_index(cell_dims, o[0], o[1], o[2])];
            total += counts[i];
        }
        (Cells { cell: cells.cell, counts }, total)
    };
    let (left_cells, left_count) = split_cells(false);
    let (right_cells, right_count) = split_cells(true);
    let left = build_node(mask, origin, child_dims, left_count, Some(left_cells));
    let right = build_node(mask, right_origin, child_dims, right_count, Some(right_cells));
    node.split_axis = Some(axis);
    node.children = Some(Box::new((left, right)));
    node
}

/// Emits every full leaf of `root` as a canonically oriented sub-block.
pub fn collect_leaves(root: &AkdNode, level: &LevelGrid) -> SubBlockSet {
    let dims = level.occupancy().dims();
    let mut set = SubBlockSet::new(dims, level.unit_block_size());
    for leaf in root.leaves() {
        if leaf.count > 0 && leaf.is_full() {
            set.push(level, leaf.origin, leaf.dims);
        }
    }
    set
}

/// Builds the tree for `level` and collects its full leaves.
pub fn akd_extract(level: &LevelGrid) -> SubBlockSet {
    let root = build_akdtree(level.occupancy());
    collect_leaves(&root, level)
}

/// Inverse of [`collect_leaves`], undoing each recorded axis permutation.
pub fn akd_restore(set: &SubBlockSet) -> Result<LevelGrid> {
    set.restore()
}
