//! Synthetic multi-level AMR datasets with controllable finest-level density.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::amr::{AmrDataset, LevelGrid, DEFAULT_REFINEMENT_FACTOR, DEFAULT_UNIT_BLOCK};
use crate::error::{Error, Result};
use crate::grid::{linear_index, raster, BlockMask, Field3, ValueType};

/// Number of Gaussian bumps seeded into every field.
pub const NUM_BUMPS: usize = 8;
const MAX_BISECTION_STEPS: usize = 50;
/// Finest-level density tolerance reported as converged.
pub const DENSITY_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub seed: u64,
    pub finest_side: usize,
    pub num_levels: usize,
    pub target_finest_density: f64,
    /// Gaussian smoothing radius in cells; 0 yields white noise.
    pub smoothness: f64,
    pub value_range: (f64, f64),
    pub unit_block_size: usize,
    pub refinement_factor: usize,
    pub value_type: ValueType,
    /// Log-normal contrast: values are `exp(contrast * z)` of a standardized
    /// field before mapping onto `value_range`.
    pub contrast: f64,
}

impl Default for GenSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            finest_side: 256,
            num_levels: 2,
            target_finest_density: 0.23,
            smoothness: 2.0,
            value_range: (0.0, 1000.0),
            unit_block_size: DEFAULT_UNIT_BLOCK,
            refinement_factor: DEFAULT_REFINEMENT_FACTOR,
            value_type: ValueType::F32,
            contrast: 1.5,
        }
    }
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.target_finest_density > 0.0 && self.target_finest_density <= 1.0) {
            return bad(format!("target density {} not in (0, 1]", self.target_finest_density));
        }
        if self.num_levels == 0 || self.refinement_factor < 2 || self.unit_block_size == 0 {
            return bad("levels, refinement factor and unit block size must be positive (factor >= 2)".into());
        }
        let granule = self.unit_block_size * self.refinement_factor.pow(self.num_levels as u32 - 1);
        if self.finest_side == 0 || self.finest_side % granule != 0 {
            return bad(format!(
                "finest side {} must be a multiple of unit block x factor^(levels-1) = {granule}",
                self.finest_side
            ));
        }
        if !(self.smoothness >= 0.0) || !self.contrast.is_finite() {
            return bad("smoothness must be >= 0 and contrast finite".into());
        }
        if !(self.value_range.0 <= self.value_range.1) {
            return bad("value range min must not exceed max".into());
        }
        Ok(())
    }
}

/// Bookkeeping of a [`refine_to_amr`] run.
#[derive(Debug, Clone, PartialEq)]
pub struct GenReport {
    /// Refinement thresholds, finest first (one per refined level).
    pub thresholds: Vec<f64>,
    /// Achieved density of every emitted level, finest first.
    pub densities: Vec<f64>,
    /// Whether the finest density landed within [`DENSITY_TOLERANCE`].
    pub converged: bool,
}

/// Smooth, positive, spatially clustered scalar field.
pub fn generate_uniform_field(spec: &GenSpec) -> Result<Field3> {
    spec.validate()?;
    let n = spec.finest_side;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut data: Vec<f64> = (0..n * n * n).map(|_| rng.sample(StandardNormal)).collect();

    let sigma_bump = spec.smoothness * n as f64 / 32.0;
    for _ in 0..NUM_BUMPS {
        let c = [
            rng.random::<f64>() * n as f64,
            rng.random::<f64>() * n as f64,
            rng.random::<f64>() * n as f64,
        ];
        let amp = rng.random_range(1.0..3.0);
        add_bump(&mut data, n, c, amp, sigma_bump);
    }

    if spec.smoothness > 0.0 {
        gaussian_smooth_periodic(&mut data, n, spec.smoothness);
    }

    let len = data.len() as f64;
    let mean = data.iter().sum::<f64>() / len;
    let std = (data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / len).sqrt();
    for v in &mut data {
        let z = if std > 0.0 { (*v - mean) / std } else { 0.0 };
        *v = (spec.contrast * z).exp();
    }
    let (lo, hi) = crate::grid::min_max(&data).unwrap_or((0.0, 0.0));
    let (a, b) = spec.value_range;
    for v in &mut data {
        let t = if hi > lo { (*v - lo) / (hi - lo) } else { 0.0 };
        *v = spec.value_type.round((a + t * (b - a)).clamp(a, b));
    }
    // rounding may step just outside the range for f32
    if spec.value_type == ValueType::F32 {
        for v in &mut data {
            while *v < a {
                *v = next_f32_up(*v);
            }
            while *v > b {
                *v = next_f32_down(*v);
            }
        }
    }
    Field3::from_vec([n; 3], data)
}

fn next_f32_up(v: f64) -> f64 {
    let f = v as f32;
    f32::from_bits(if f >= 0.0 { f.to_bits() + 1 } else { f.to_bits() - 1 }) as f64
}

fn next_f32_down(v: f64) -> f64 {
    let f = v as f32;
    f32::from_bits(if f > 0.0 { f.to_bits() - 1 } else { f.to_bits() + 1 }) as f64
}

fn periodic_delta(a: f64, b: f64, n: f64) -> f64 {
    let d = (a - b).abs() % n;
    d.min(n - d)
}

fn add_bump(data: &mut [f64], n: usize, c: [f64; 3], amp: f64, sigma: f64) {
    if sigma < 0.5 {
        let idx = |v: f64| (v.floor() as usize).min(n - 1);
        data[linear_index([n; 3], idx(c[0]), idx(c[1]), idx(c[2]))] += amp;
        return;
    }
    let nf = n as f64;
    let w = |i: usize, ci: f64| {
        let d = periodic_delta(i as f64 + 0.5, ci, nf);
        (-d * d / (2.0 * sigma * sigma)).exp()
    };
    let wx: Vec<f64> = (0..n).map(|i| w(i, c[0])).collect();
    let wy: Vec<f64> = (0..n).map(|i| w(i, c[1])).collect();
    let wz: Vec<f64> = (0..n).map(|i| w(i, c[2])).collect();
    for [x, y, z] in raster([n; 3]) {
        data[linear_index([n; 3], x, y, z)] += amp * wx[x] * wy[y] * wz[z];
    }
}

/// Separable Gaussian blur with wrap-around boundaries.
fn gaussian_smooth_periodic(data: &mut [f64], n: usize, sigma: f64) {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= total);

    let dims = [n; 3];
    let strides = [1, n, n * n];
    let mut line = vec![0.0; n];
    for axis in 0..3 {
        let stride = strides[axis];
        for [x, y, z] in raster(dims) {
            let p = [x, y, z];
            if p[axis] != 0 {
                continue;
            }
            let base = linear_index(dims, x, y, z);
            for (i, slot) in line.iter_mut().enumerate() {
                *slot = data[base + i * stride];
            }
            for i in 0..n {
                let mut acc = 0.0;
                for (k, w) in kernel.iter().enumerate() {
                    let j = (i as isize + k as isize - radius).rem_euclid(n as isize) as usize;
                    acc += w * line[j];
                }
                data[base + i * stride] = acc;
            }
        }
    }
}

/// Max over non-overlapping `block`^3 cubes.
fn max_pool(field: &Field3, block: usize) -> Field3 {
    let n = field.dims()[0] / block;
    let mut out = Field3::from_fn([n; 3], |_, _, _| f64::NEG_INFINITY);
    for [x, y, z] in raster(field.dims()) {
        let (bx, by, bz) = (x / block, y / block, z / block);
        let v = field.get(x, y, z);
        if v > out.get(bx, by, bz) {
            out.set(bx, by, bz, v);
        }
    }
    out
}

/// Mean over non-overlapping `factor`^3 cubes.
fn mean_pool(field: &Field3, factor: usize) -> Field3 {
    let n = field.dims()[0] / factor;
    let mut out = Field3::cube(n);
    for [x, y, z] in raster(field.dims()) {
        let i = out.index(x / factor, y / factor, z / factor);
        out.as_mut_slice()[i] += field.get(x, y, z);
    }
    let scale = 1.0 / factor.pow(3) as f64;
    out.as_mut_slice().iter_mut().for_each(|v| *v *= scale);
    out
}

/// Refinement decision grid for one level: regions whose maximum reaches
/// `threshold` and whose parent region (if any) was refined.
fn refine_decisions(regmax: &Field3, threshold: f64, parent: Option<(&BlockMask, usize)>) -> BlockMask {
    BlockMask::from_fn(regmax.dims(), |x, y, z| {
        regmax.get(x, y, z) >= threshold
            && parent.is_none_or(|(p, f)| p.get(x / f, y / f, z / f))
    })
}

/// Splits a uniform field into a tree-structured AMR dataset whose finest
/// level density approximates `spec.target_finest_density`.
pub fn refine_to_amr(field: &Field3, spec: &GenSpec) -> Result<(AmrDataset, GenReport)> {
    spec.validate()?;
    let n = spec.finest_side;
    if field.dims() != [n; 3] {
        return Err(Error::InvalidInput(format!(
            "field dims {:?} do not match finest side {n}",
            field.dims()
        )));
    }
    let levels = spec.num_levels;
    let f = spec.refinement_factor;
    let u = spec.unit_block_size;
    let vt = spec.value_type;

    // refine[i]: which level-(i+1) unit blocks are refined into level i
    let mut refine: Vec<BlockMask> = Vec::with_capacity(levels.saturating_sub(1));
    let mut thresholds = vec![f64::NEG_INFINITY; levels.saturating_sub(1)];
    let mut converged = true;
    if levels > 1 {
        let mut regmax = vec![max_pool(field, u * f)];
        for _ in 1..levels - 1 {
            let next = max_pool(regmax.last().unwrap(), f);
            regmax.push(next);
        }
        let mut decided: Vec<Option<BlockMask>> = vec![None; levels - 1];
        for i in (0..levels - 1).rev() {
            let exponent = (levels - 1 - i) as f64 / (levels - 1) as f64;
            let target = spec.target_finest_density.powf(exponent);
            let parent = decided.get(i + 1).and_then(|m| m.as_ref()).map(|m| (m, f));
            let (thr, mask, hit) = bisect_threshold(&regmax[i], target, parent);
            if i == 0 {
                converged = hit;
            }
            thresholds[i] = thr;
            decided[i] = Some(mask);
        }
        refine = decided.into_iter().map(Option::unwrap).collect();
    }

    let mut out_levels = Vec::with_capacity(levels);
    let mut values = field.clone();
    for i in 0..levels {
        if i > 0 {
            values = mean_pool(&values, f);
        }
        let side = n / f.pow(i as u32);
        let nb = side / u;
        let mask = BlockMask::from_fn([nb; 3], |x, y, z| {
            let parent_ok = i == levels - 1 || refine[i].get(x / f, y / f, z / f);
            let refined_further = i > 0 && refine[i - 1].get(x, y, z);
            parent_ok && !refined_further
        });
        let rounded = Field3::from_vec([side; 3], values.as_slice().iter().map(|&v| vt.round(v)).collect())?;
        out_levels.push(LevelGrid::new(rounded, u, mask)?);
    }
    if out_levels.len() > 1 && out_levels[0].density() == 1.0 {
        out_levels.truncate(1);
    }
    let densities = out_levels.iter().map(LevelGrid::density).collect();
    let dataset = AmrDataset::new(out_levels, f, vt)?;
    Ok((
        dataset,
        GenReport {
            thresholds,
            densities,
            converged,
        },
    ))
}

/// Returns `(threshold, decisions, within tolerance)` for the threshold whose
/// refined fraction is closest to `target`.
fn bisect_threshold(regmax: &Field3, target: f64, parent: Option<(&BlockMask, usize)>) -> (f64, BlockMask, bool) {
    let fraction = |m: &BlockMask| m.density();
    if target >= 1.0 {
        let m = refine_decisions(regmax, f64::NEG_INFINITY, parent);
        let hit = (fraction(&m) - target).abs() <= DENSITY_TOLERANCE;
        return (f64::NEG_INFINITY, m, hit);
    }
    let (lo_v, hi_v) = regmax.min_max().unwrap();
    let (mut lo, mut hi) = (lo_v, hi_v + 1.0 + hi_v.abs());
    let resolution = 0.5 / regmax.len() as f64;
    let mut best = (hi, refine_decisions(regmax, hi, parent));
    let mut best_err = (fraction(&best.1) - target).abs();
    for _ in 0..MAX_BISECTION_STEPS {
        if best_err <= resolution {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let m = refine_decisions(regmax, mid, parent);
        let d = fraction(&m);
        let err = (d - target).abs();
        if err < best_err {
            best_err = err;
            best = (mid, m);
        }
        if d > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (best.0, best.1, best_err <= DENSITY_TOLERANCE)
}

/// Convenience: generate the field and refine it in one call.
pub fn generate_dataset(spec: &GenSpec) -> Result<(AmrDataset, GenReport)> {
    let field = generate_uniform_field(spec)?;
    refine_to_amr(&field, spec)
}
