//! Sparse-tensor extraction of non-empty unit blocks.
//!
//! [`nast_partition`] keeps every non-empty unit block as its own sub-block.
//! [`opst_extract`] instead peels off maximal full cubes found by dynamic
//! programming, which keeps sub-blocks large and reduces the share of cells
//! sitting on a sub-block boundary.
//!
//! Axes of extent 1 are treated as absent, so a `[n, m, 1]` mask behaves as
//! a 2D problem (squares instead of cubes).

use crate::amr::LevelGrid;
use crate::error::Result;
use crate::grid::{linear_index, raster, volume, BlockMask};
use crate::subblock::SubBlockSet;

/// Side of the largest full cube whose far corner sits at each unit block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BsGrid {
    dims: [usize; 3],
    bs: Vec<u32>,
    max_side: u32,
}

impl BsGrid {
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> u32 {
        self.bs[linear_index(self.dims, x, y, z)]
    }

    pub fn max_side(&self) -> u32 {
        self.max_side
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.bs
    }
}

fn active_axes(dims: [usize; 3]) -> [bool; 3] {
    dims.map(|d| d > 1)
}

/// DP value at `p` given the current mask and already-valid backward entries.
#[inline]
fn bs_value(mask: &BlockMask, bs: &[u32], dims: [usize; 3], active: [bool; 3], p: [usize; 3]) -> u32 {
    if !mask.get_at(p) {
        return 0;
    }
    if (0..3).any(|a| active[a] && p[a] == 0) {
        return 1;
    }
    let mut min = u32::MAX;
    for step in 1u8..8 {
        let mut q = p;
        let mut valid = true;
        for a in 0..3 {
            if step >> a & 1 == 1 {
                if !active[a] {
                    valid = false;
                    break;
                }
                q[a] -= 1;
            }
        }
        if valid {
            min = min.min(bs[linear_index(dims, q[0], q[1], q[2])]);
        }
    }
    // with no active axis the block is its own maximal cube
    if min == u32::MAX {
        return 1;
    }
    1 + min
}

/// Computes the maximal-cube table of `mask` in one forward raster pass.
pub fn compute_bs(mask: &BlockMask) -> BsGrid {
    let dims = mask.dims();
    let active = active_axes(dims);
    let mut bs = vec![0u32; volume(dims)];
    let mut max_side = 0;
    for p in raster(dims) {
        let v = bs_value(mask, &bs, dims, active, p);
        bs[linear_index(dims, p[0], p[1], p[2])] = v;
        max_side = max_side.max(v);
    }
    BsGrid { dims, bs, max_side }
}

/// One extracted cube in unit-block coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CubePlacement {
    pub origin: [usize; 3],
    pub extent: [usize; 3],
}

/// Greedy maximal-cube cover of the non-empty blocks of `mask`, in
/// extraction order.
///
/// The scan runs in descending raster order. Each visited block with a
/// positive table entry `s` yields the cube of side `s` ending there; the cube
/// is removed from the mask and the table is recomputed inside the box that
/// can see the removed region, which is bounded by the initial largest side.
pub fn opst_plan(mask: &BlockMask) -> Vec<CubePlacement> {
    let dims = mask.dims();
    let active = active_axes(dims);
    let mut mask = mask.clone();
    let BsGrid { mut bs, max_side, .. } = compute_bs(&mask);
    let max_side = max_side as usize;
    let mut out = Vec::new();

    for z in (0..dims[2]).rev() {
        for y in (0..dims[1]).rev() {
            for x in (0..dims[0]).rev() {
                let p = [x, y, z];
                let s = bs[linear_index(dims, x, y, z)] as usize;
                if s == 0 {
                    continue;
                }
                let extent = active.map(|a| if a { s } else { 1 });
                let origin = [0, 1, 2].map(|a| p[a] + 1 - extent[a]);
                out.push(CubePlacement { origin, extent });

                for k in origin[2]..=p[2] {
                    for j in origin[1]..=p[1] {
                        for i in origin[0]..=p[0] {
                            mask.set(i, j, k, false);
                            bs[linear_index(dims, i, j, k)] = 0;
                        }
                    }
                }

                let lo = origin;
                let hi = [0, 1, 2].map(|a| if active[a] { (p[a] + max_side).min(dims[a] - 1) } else { 0 });
                for k in lo[2]..=hi[2] {
                    for j in lo[1]..=hi[1] {
                        for i in lo[0]..=hi[0] {
                            let v = bs_value(&mask, &bs, dims, active, [i, j, k]);
                            bs[linear_index(dims, i, j, k)] = v;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Maximal-cube extraction of the non-empty unit blocks of `level`.
pub fn opst_extract(level: &LevelGrid) -> SubBlockSet {
    let mask = level.occupancy();
    let mut set = SubBlockSet::new(mask.dims(), level.unit_block_size());
    for c in opst_plan(mask) {
        set.push(level, c.origin, c.extent);
    }
    set
}

/// Inverse of [`opst_extract`] (and of [`nast_partition`]).
pub fn opst_restore(set: &SubBlockSet) -> Result<LevelGrid> {
    set.restore()
}

/// One sub-block per non-empty unit block, in raster order.
pub fn nast_partition(level: &LevelGrid) -> SubBlockSet {
    let mask = level.occupancy();
    let mut set = SubBlockSet::new(mask.dims(), level.unit_block_size());
    for b in raster(mask.dims()) {
        if mask.get_at(b) {
            set.push(level, b, [1, 1, 1]);
        }
    }
    set
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::grid::Field3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Largest full cube ending at `p`, by trying every side.
    fn brute_bs(mask: &BlockMask, p: [usize; 3]) -> u32 {
        let dims = mask.dims();
        let active = dims.map(|d| d > 1);
        let mut best = 0;
        for s in 1..=dims.iter().copied().max().unwrap() {
            let ext = active.map(|a| if a { s } else { 1 });
            if (0..3).any(|a| ext[a] > p[a] + 1) {
                break;
            }
            let full = raster(ext).all(|d| mask.get(p[0] - d[0], p[1] - d[1], p[2] - d[2]));
            if full {
                best = s as u32;
            } else {
                break;
            }
        }
        best
    }

    fn random_mask(rng: &mut ChaCha8Rng, dims: [usize; 3], density: f64) -> BlockMask {
        BlockMask::from_fn(dims, |_, _, _| rng.random_bool(density))
    }

    fn assert_exact_cover(mask: &BlockMask, plan: &[CubePlacement]) {
        let mut seen = BlockMask::new(mask.dims(), false);
        for c in plan {
            for d in raster(c.extent) {
                let q = [c.origin[0] + d[0], c.origin[1] + d[1], c.origin[2] + d[2]];
                assert!(mask.get_at(q), "cube covers empty block {q:?}");
                assert!(!seen.get_at(q), "block {q:?} covered twice");
                seen.set(q[0], q[1], q[2], true);
            }
        }
        assert_eq!(&seen, mask);
    }

    // 2D example: rows are y, columns x.
    //   0 1 1
    //   1 1 1
    //   1 1 0
    fn figure_mask() -> BlockMask {
        let rows = [[false, true, true], [true, true, true], [true, true, false]];
        BlockMask::from_fn([3, 3, 1], |x, y, _| rows[y][x])
    }

    #[test]
    fn two_dimensional_example() {
        let bs = compute_bs(&figure_mask());
        // BS[2][1]: row 2, column 1
        assert_eq!(bs.get(1, 2, 0), 2);
        assert_eq!(bs.get(1, 1, 0), 1);
        assert_eq!(bs.get(2, 1, 0), 2);
        let plan = opst_plan(&figure_mask());
        assert_eq!(plan[0], CubePlacement { origin: [0, 1, 0], extent: [2, 2, 1] });
        // after removing the 2x2 block, row 1 column 2 only reaches 1
        assert_eq!(plan[1], CubePlacement { origin: [2, 1, 0], extent: [1, 1, 1] });
        assert_eq!(plan.len(), 4);
        assert_exact_cover(&figure_mask(), &plan);
    }

    #[test]
    fn full_mask_analytic_form() {
        let mask = BlockMask::new([5; 3], true);
        let bs = compute_bs(&mask);
        for [x, y, z] in raster([5; 3]) {
            assert_eq!(bs.get(x, y, z) as usize, 1 + x.min(y).min(z));
        }
        assert_eq!(bs.max_side(), 5);
    }

    #[test]
    fn boundary_blocks_are_zero_or_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mask = random_mask(&mut rng, [6; 3], 0.8);
        let bs = compute_bs(&mask);
        for [x, y, z] in raster([6; 3]) {
            if x == 0 || y == 0 || z == 0 {
                assert!(bs.get(x, y, z) <= 1);
            }
        }
    }

    #[test]
    fn compute_bs_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for i in 0..100 {
            let mask = random_mask(&mut rng, [8; 3], 0.5 + 0.45 * (i % 3) as f64 / 2.0);
            let bs = compute_bs(&mask);
            for p in raster([8; 3]) {
                assert_eq!(bs.get(p[0], p[1], p[2]), brute_bs(&mask, p), "at {p:?}");
            }
        }
    }

    #[test]
    fn full_power_of_two_mask_single_cube() {
        let mask = BlockMask::new([4; 3], true);
        let plan = opst_plan(&mask);
        assert_eq!(plan, vec![CubePlacement { origin: [0; 3], extent: [4; 3] }]);
    }

    #[test]
    fn random_covers_are_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for i in 0..50 {
            let mask = random_mask(&mut rng, [8; 3], (i as f64 + 1.0) / 51.0);
            assert_exact_cover(&mask, &opst_plan(&mask));
        }
    }

    fn random_level(rng: &mut ChaCha8Rng, nb: usize, u: usize, density: f64) -> LevelGrid {
        let mask = random_mask(rng, [nb; 3], density);
        let values = Field3::from_fn([nb * u; 3], |_, _, _| rng.random::<f64>());
        LevelGrid::new(values, u, mask).unwrap()
    }

    #[test]
    fn extract_restore_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for i in 0..10 {
            let level = random_level(&mut rng, 6, 2, 0.1 + 0.08 * i as f64);
            let set = opst_extract(&level);
            assert_eq!(opst_restore(&set).unwrap(), level);
            let nast = nast_partition(&level);
            assert_eq!(nast.block_count(), level.occupancy().count());
            assert_eq!(opst_restore(&nast).unwrap(), level);
        }
    }

    #[test]
    fn nast_edge_cases() {
        let empty = LevelGrid::empty(8, 2).unwrap();
        assert!(nast_partition(&empty).is_empty());
        let full = LevelGrid::new(Field3::cube(4), 2, BlockMask::new([2; 3], true)).unwrap();
        let set = nast_partition(&full);
        assert_eq!(set.block_count(), 8);
        assert_eq!(set.num_groups(), 1);
        let origins: Vec<_> = set.placements().map(|(o, _)| o).collect();
        assert_eq!(origins[1], [1, 0, 0]);
    }

    #[test]
    fn restore_rejects_overlap() {
        let level = LevelGrid::new(Field3::cube(4), 1, BlockMask::new([4; 3], true)).unwrap();
        let mut set = opst_extract(&level);
        set.push(&level, [0, 0, 0], [1, 1, 1]);
        assert!(matches!(opst_restore(&set), Err(Error::Structural(_))));
    }
}
