//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p amrpack-core --test acceptance`; pass criterion
//! numbers as arguments to run a subset. Set `ACCEPTANCE_STRICT=1` to turn
//! any FAIL into a non-zero exit.

use std::time::Instant;

use amrpack::akdtree::build_akdtree;
use amrpack::amr::{merge_to_uniform, AmrDataset, LevelGrid};
use amrpack::archive::CompressedArchive;
use amrpack::bench::sweep;
use amrpack::codec::{decode_block, Codec, ErrorBound, LiteralCodec, LorenzoCodec};
use amrpack::datagen::{generate_dataset, generate_uniform_field, GenSpec};
use amrpack::grid::{min_max, raster, BlockMask, Field3, Tensor, ValueType};
use amrpack::metrics::spectrum::fft3;
use amrpack::metrics::{halo_compare, halo_find, power_spectrum, power_spectrum_error, psnr, HaloParams};
use amrpack::opst::{compute_bs, opst_plan};
use amrpack::pipeline::{
    compress_dataset, decompress_dataset, level_max_errors, select_strategy, CompressionConfig, StrategyChoice,
};
use amrpack::strategy::{LevelGeometry, StrategyRegistry, StrategyTag};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn dataset(seed: u64, side: usize, u: usize, density: f64) -> AmrDataset {
    generate_dataset(&GenSpec {
        seed,
        finest_side: side,
        unit_block_size: u,
        target_finest_density: density,
        ..GenSpec::default()
    })
    .expect("generator")
    .0
}

// ---------------------------------------------------------------- 1

/// Largest full cube (square, segment) ending at `p`, trying every side.
fn brute_bs(mask: &BlockMask, p: [usize; 3]) -> u32 {
    let dims = mask.dims();
    let active = dims.map(|d| d > 1);
    let mut best = 0;
    for s in 1..=*dims.iter().max().unwrap() {
        let ext = active.map(|a| if a { s } else { 1 });
        if (0..3).any(|a| ext[a] > p[a] + 1) {
            break;
        }
        let full = raster(ext).all(|d| mask.get(p[0] - d[0], p[1] - d[1], p[2] - d[2]));
        if !full {
            break;
        }
        best = s as u32;
    }
    best
}

fn bs_mismatches(mask: &BlockMask) -> usize {
    let bs = compute_bs(mask);
    raster(mask.dims()).filter(|&p| bs.get(p[0], p[1], p[2]) != brute_bs(mask, p)).count()
}

fn criterion_1() -> Outcome {
    let mut masks = 0usize;
    let mut mismatches = 0usize;
    for a in 1..=4 {
        for b in 1..=4 {
            for c in 1..=4 {
                let v = a * b * c;
                if v > 16 {
                    continue;
                }
                for bits in 0u32..(1 << v) {
                    let mask = BlockMask::from_fn([a, b, c], |x, y, z| bits >> (x + a * (y + b * z)) & 1 == 1);
                    mismatches += bs_mismatches(&mask);
                    masks += 1;
                }
            }
        }
    }
    let exhaustive = masks;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20_000 {
        let d = rng.random_range(0.3..1.0);
        let mask = BlockMask::from_fn([4; 3], |_, _, _| rng.random_bool(d));
        mismatches += bs_mismatches(&mask);
        masks += 1;
    }
    let mut cover_errors = 0;
    for i in 0..200 {
        let d = 0.05 + 0.9 * i as f64 / 199.0;
        let mask = BlockMask::from_fn([8; 3], |_, _, _| rng.random_bool(d));
        mismatches += bs_mismatches(&mask);
        masks += 1;
        let mut seen = BlockMask::new([8; 3], false);
        for cube in opst_plan(&mask) {
            for off in raster(cube.extent) {
                let q = [0, 1, 2].map(|a| cube.origin[a] + off[a]);
                if !mask.get_at(q) || seen.get_at(q) {
                    cover_errors += 1;
                }
                seen.set(q[0], q[1], q[2], true);
            }
        }
        if seen != mask {
            cover_errors += 1;
        }
    }
    outcome(
        mismatches == 0 && cover_errors == 0,
        format!(
            "{masks} masks ({exhaustive} exhaustive with <=16 blocks, 20000 random 4^3, 200 random 8^3), \
             {mismatches} table mismatches, {cover_errors} cover errors"
        ),
    )
}

// ---------------------------------------------------------------- 2

fn criterion_2() -> Outcome {
    let registry = StrategyRegistry::default();
    let tags = [StrategyTag::OpST, StrategyTag::AKDTree, StrategyTag::NaST, StrategyTag::Gsp];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = Vec::new();
    for i in 0..200 {
        let nb = rng.random_range(3..=6);
        let u = rng.random_range(1..=4);
        let density = rng.random_range(0.05..=0.95);
        let mask = BlockMask::from_fn([nb; 3], |_, _, _| rng.random_bool(density));
        let values = Field3::from_fn([nb * u; 3], |_, _, _| rng.random_range(-1e3..1e3));
        let level = LevelGrid::new(values, u, mask).unwrap();
        for tag in tags {
            let p = registry.get(tag).unwrap();
            let result = p.prepare(&level).and_then(|prep| {
                let tensors = prep
                    .tensors
                    .iter()
                    .map(|t| {
                        let bytes = LiteralCodec.encode(t, 0.0, ValueType::F64)?.to_bytes();
                        decode_block(&bytes)
                    })
                    .collect::<amrpack::Result<Vec<Tensor>>>()?;
                p.restore(LevelGeometry::of(&level), &prep.metadata, tensors)
            });
            match result {
                Ok(back) if back.occupancy() == level.occupancy() && back.values() == level.values() => {}
                Ok(_) => failures.push(format!("{tag}#{i} mismatch")),
                Err(e) => failures.push(format!("{tag}#{i}: {e}")),
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("800 round trips (200 levels x 4 strategies), {} failures {:?}", failures.len(), failures.iter().take(3).collect::<Vec<_>>()),
    )
}

// ---------------------------------------------------------------- 3

fn criterion_3() -> Outcome {
    let strategies = ["auto", "opst", "akdtree", "gsp", "nast", "zf", "1d", "3d"];
    let mut runs = 0;
    let mut violations = Vec::new();
    for (seed, density) in [(31u64, 0.23), (32, 0.58)] {
        let d = dataset(seed, 64, 8, density);
        for s in strategies {
            for eb in [1e-2, 1e-3, 1e-4] {
                let config = CompressionConfig {
                    strategy: s.parse().unwrap(),
                    ..CompressionConfig::with_bound(ErrorBound::relative(eb))
                };
                let archive = compress_dataset(&d, &config).unwrap();
                let bytes = archive.to_bytes();
                let back = decompress_dataset(&CompressedArchive::from_bytes(&bytes).unwrap()).unwrap();
                let errors = level_max_errors(&d, &back).unwrap();
                for (i, err) in errors.iter().enumerate() {
                    let bound = archive.records[i.min(archive.records.len() - 1)].bound;
                    if *err > bound {
                        violations.push(format!("{s} eb={eb} level {i}: {err} > {bound}"));
                    }
                }
                runs += 1;
            }
        }
    }
    outcome(
        violations.is_empty(),
        format!("{runs} runs on 64^3 datasets, {} violations {:?}", violations.len(), violations.iter().take(3).collect::<Vec<_>>()),
    )
}

// ---------------------------------------------------------------- 4

fn criterion_4() -> Outcome {
    let c = CompressionConfig::default();
    let expect = [
        (0.23, StrategyTag::OpST),
        (0.58, StrategyTag::AKDTree),
        (0.63, StrategyTag::Gsp),
        (0.64, StrategyTag::Gsp),
        (0.77, StrategyTag::Gsp),
    ];
    let got: Vec<StrategyTag> = expect.iter().map(|&(d, _)| select_strategy(d, &c)).collect();
    let ok = expect.iter().zip(&got).all(|((_, e), g)| e == g);
    outcome(ok, format!("{:?}", got.iter().map(|t| t.name()).collect::<Vec<_>>()))
}

// ---------------------------------------------------------------- 5 and 6

/// Compresses one level on its own; returns (bits per defined value, PSNR).
fn level_rate_distortion(level: &LevelGrid, tag: StrategyTag, bound: f64, vt: ValueType) -> (f64, f64) {
    let registry = StrategyRegistry::default();
    let p = registry.get(tag).unwrap();
    let prep = p.prepare(level).unwrap();
    let mut bytes = prep.metadata.len();
    let mut decoded = Vec::new();
    for t in &prep.tensors {
        let b = LorenzoCodec.encode(t, bound, vt).unwrap().to_bytes();
        bytes += b.len();
        decoded.push(decode_block(&b).unwrap());
    }
    let back = p.restore(LevelGeometry::of(level), &prep.metadata, decoded).unwrap();
    let rate = bytes as f64 * 8.0 / level.defined_count() as f64;
    (rate, psnr(&level.defined_values(), &back.defined_values()).unwrap())
}

const SWEEP: [f64; 5] = [1e-2, 5e-3, 1e-3, 5e-4, 1e-4];

fn pairwise_sweep(level: &LevelGrid, a: StrategyTag, b: StrategyTag) -> Vec<((f64, f64), (f64, f64))> {
    let (lo, hi) = min_max(&level.defined_values()).unwrap();
    SWEEP
        .iter()
        .map(|eb| {
            let bound = eb * (hi - lo);
            (
                level_rate_distortion(level, a, bound, ValueType::F32),
                level_rate_distortion(level, b, bound, ValueType::F32),
            )
        })
        .collect()
}

fn criterion_5() -> Outcome {
    let d = dataset(10, 128, 8, 0.23);
    let level = &d.levels()[0];
    let rows = pairwise_sweep(level, StrategyTag::OpST, StrategyTag::NaST);
    let wins = rows
        .iter()
        .filter(|((ra, pa), (rb, pb))| *pa >= *pb - 0.5 && *ra <= *rb)
        .count();
    let detail: Vec<String> = rows
        .iter()
        .map(|((ra, pa), (rb, pb))| format!("opst {ra:.3}b/{pa:.2}dB nast {rb:.3}b/{pb:.2}dB"))
        .collect();
    outcome(
        wins >= 4,
        format!("density {:.3}, {wins}/5 points: {}", level.density(), detail.join("; ")),
    )
}

fn criterion_6() -> Outcome {
    let d = dataset(10, 128, 8, 0.23);
    let level = &d.levels()[1];
    let rows = pairwise_sweep(level, StrategyTag::Gsp, StrategyTag::ZeroFill);
    let wins = rows.iter().filter(|((_, pa), (_, pb))| pa >= pb).count();
    let detail: Vec<String> = rows
        .iter()
        .map(|((ra, pa), (rb, pb))| format!("gsp {ra:.3}b/{pa:.4}dB zf {rb:.3}b/{pb:.4}dB"))
        .collect();
    outcome(
        wins >= 4,
        format!("density {:.3}, {wins}/5 points: {}", level.density(), detail.join("; ")),
    )
}

// ---------------------------------------------------------------- 7

/// 32^3-block mask from a thresholded smooth field, at an exact density.
fn clustered_mask(seed: u64, density: f64) -> BlockMask {
    let field = generate_uniform_field(&GenSpec {
        seed,
        finest_side: 32,
        num_levels: 1,
        unit_block_size: 1,
        smoothness: 1.0,
        value_type: ValueType::F64,
        ..GenSpec::default()
    })
    .unwrap();
    let mut sorted = field.as_slice().to_vec();
    sorted.sort_by(f64::total_cmp);
    let keep = (density * sorted.len() as f64).round() as usize;
    let threshold = sorted[sorted.len() - keep];
    BlockMask::from_fn([32; 3], |x, y, z| field.get(x, y, z) >= threshold)
}

fn min_time(repeats: usize, mut f: impl FnMut()) -> f64 {
    (0..repeats)
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Best-of-20 build times (seconds) for OpST and AKDTree on each mask.
fn build_times(masks: &[BlockMask]) -> (Vec<f64>, Vec<f64>) {
    masks
        .iter()
        .map(|mask| {
            let opst = min_time(20, || {
                std::hint::black_box(opst_plan(std::hint::black_box(mask)));
            });
            let akd = min_time(20, || {
                std::hint::black_box(build_akdtree(std::hint::black_box(mask)));
            });
            (opst, akd)
        })
        .unzip()
}

fn spread(v: &[f64]) -> f64 {
    v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn criterion_7() -> Outcome {
    let densities = [0.1, 0.3, 0.5, 0.7, 0.9];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let random: Vec<BlockMask> = densities
        .iter()
        .map(|&d| BlockMask::from_fn([32; 3], |_, _, _| rng.random_bool(d)))
        .collect();
    let clustered: Vec<BlockMask> = densities.iter().map(|&d| clustered_mask(7, d)).collect();
    let (opst, akd) = build_times(&random);
    let (c_opst, c_akd) = build_times(&clustered);
    let ms = |v: &[f64]| v.iter().map(|t| format!("{:.2}", t * 1e3)).collect::<Vec<_>>().join("/");
    let mut pass = true;
    let mut notes = Vec::new();
    for (name, o, a) in [("random", &opst, &akd), ("clustered", &c_opst, &c_akd)] {
        let opst_ratio = o[4] / o[0];
        let akd_ratio = spread(a);
        pass &= opst_ratio >= 3.0 && akd_ratio < 2.0;
        notes.push(format!(
            "{name} masks: opst ms {} (90%/10% = {opst_ratio:.2}), akdtree ms {} (max/min = {akd_ratio:.2})",
            ms(o),
            ms(a)
        ));
    }
    outcome(pass, notes.join("; "))
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> Outcome {
    let d = dataset(8, 64, 8, 0.3);
    let strategies: Vec<StrategyChoice> = ["auto", "opst", "akdtree", "gsp", "nast", "zf", "1d", "3d"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    let bounds: Vec<ErrorBound> = [1e-2, 1e-3, 1e-4].iter().map(|&e| ErrorBound::relative(e)).collect();
    let rows = sweep(&d, &CompressionConfig::default(), &strategies, &bounds).unwrap();
    let worst = rows
        .iter()
        .map(|r| (r.bit_rate * r.compression_ratio / 32.0 - 1.0).abs())
        .fold(0.0, f64::max);
    outcome(worst <= 1e-6, format!("{} rows, worst relative deviation {worst:.2e}", rows.len()))
}

// ---------------------------------------------------------------- 9

fn criterion_9() -> Outcome {
    let n = 16;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_mode = 0.0f64;
    let mut worst_bin = 0.0f64;
    let mut worst_parseval = 0.0f64;
    // twiddles w[j] = exp(-2 pi i j / n)
    let tw: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let a = -2.0 * std::f64::consts::PI * j as f64 / n as f64;
            (a.cos(), a.sin())
        })
        .collect();
    for _ in 0..3 {
        let f = Field3::from_fn([n; 3], |_, _, _| rng.random_range(-1.0..1.0));
        let fast = fft3(&f).unwrap();
        let mut direct = vec![(0.0, 0.0); n * n * n];
        for kz in 0..n {
            for ky in 0..n {
                for kx in 0..n {
                    let (mut re, mut im) = (0.0, 0.0);
                    for [x, y, z] in raster([n; 3]) {
                        let (c, s) = tw[(kx * x + ky * y + kz * z) % n];
                        let v = f.get(x, y, z);
                        re += v * c;
                        im += v * s;
                    }
                    direct[kx + n * (ky + n * kz)] = (re, im);
                }
            }
        }
        let scale = direct.iter().map(|(r, i)| (r * r + i * i).sqrt()).fold(0.0, f64::max);
        for (a, b) in fast.iter().zip(&direct) {
            worst_mode = worst_mode.max(((a.re - b.0).powi(2) + (a.im - b.1).powi(2)).sqrt() / scale);
        }
        // independent binning of the direct transform
        let k_max = 8;
        let mut sum = vec![0.0; k_max + 1];
        let mut cnt = vec![0usize; k_max + 1];
        for [x, y, z] in raster([n; 3]) {
            let sgn = |i: usize| if i > n / 2 { i as f64 - n as f64 } else { i as f64 };
            let k = (sgn(x).powi(2) + sgn(y).powi(2) + sgn(z).powi(2)).sqrt().round() as usize;
            if (1..=k_max).contains(&k) {
                let (re, im) = direct[x + n * (y + n * z)];
                sum[k] += re * re + im * im;
                cnt[k] += 1;
            }
        }
        let ps = power_spectrum(&f, k_max).unwrap();
        for k in 1..=k_max {
            let expect = sum[k] / cnt[k] as f64;
            worst_bin = worst_bin.max((ps.get(k).unwrap() - expect).abs() / expect);
        }
        let energy: f64 = f.as_slice().iter().map(|v| v * v).sum();
        let spectral: f64 = fast.iter().map(|c| c.norm_sqr()).sum::<f64>() / (n * n * n) as f64;
        worst_parseval = worst_parseval.max((energy - spectral).abs() / energy);
    }
    outcome(
        worst_mode <= 1e-6 && worst_bin <= 1e-6 && worst_parseval <= 1e-6,
        format!(
            "16^3 x3: max mode deviation {worst_mode:.1e}, max bin deviation {worst_bin:.1e}, Parseval {worst_parseval:.1e}"
        ),
    )
}

// ---------------------------------------------------------------- 10

fn archive_size(d: &AmrDataset, base: f64, ratios: Option<Vec<f64>>) -> (usize, CompressedArchive) {
    let config = CompressionConfig {
        level_bound_ratios: ratios,
        ..CompressionConfig::with_bound(ErrorBound::relative(base))
    };
    let a = compress_dataset(d, &config).unwrap();
    (a.size_bytes(), a)
}

/// Base bound whose archive size is closest to `target`, by bisection on log(bound).
fn match_size(d: &AmrDataset, ratios: &[f64], target: usize, around: f64) -> (f64, usize, CompressedArchive) {
    let (mut lo, mut hi) = ((around / 20.0).ln(), (around * 20.0).ln());
    let mut best: Option<(f64, usize, CompressedArchive)> = None;
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let (size, archive) = archive_size(d, mid.exp(), Some(ratios.to_vec()));
        let better = best
            .as_ref()
            .is_none_or(|b| size.abs_diff(target) < b.1.abs_diff(target));
        if better {
            best = Some((mid.exp(), size, archive));
        }
        if size.abs_diff(target) * 1000 <= target {
            break;
        }
        // a larger bound gives a smaller archive
        if size > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    best.unwrap()
}

fn criterion_10() -> Outcome {
    let base = 1e-3;
    let k_max = 10;
    let mut spectrum_wins = 0;
    let mut halo_wins = 0;
    let mut notes = Vec::new();
    for seed in [101u64, 102, 103] {
        let d = dataset(seed, 128, 8, 0.23);
        let original = merge_to_uniform(&d).unwrap();
        let p0 = power_spectrum(&original, k_max).unwrap();
        let h0 = halo_find(&original, HaloParams::default()).unwrap();

        let (target, uniform) = archive_size(&d, base, None);
        let uniform_field = merge_to_uniform(&decompress_dataset(&uniform).unwrap()).unwrap();
        let e_uniform = power_spectrum_error(&p0, &power_spectrum(&uniform_field, k_max).unwrap(), k_max);
        let m_uniform = halo_compare(&h0, &halo_find(&uniform_field, HaloParams::default()).unwrap());

        let (_, size3, a3) = match_size(&d, &[3.0, 1.0], target, base);
        let f3 = merge_to_uniform(&decompress_dataset(&a3).unwrap()).unwrap();
        let e3 = power_spectrum_error(&p0, &power_spectrum(&f3, k_max).unwrap(), k_max);

        let (_, size2, a2) = match_size(&d, &[2.0, 1.0], target, base);
        let f2 = merge_to_uniform(&decompress_dataset(&a2).unwrap()).unwrap();
        let m2 = halo_compare(&h0, &halo_find(&f2, HaloParams::default()).unwrap());

        let matched = |s: usize| s.abs_diff(target) * 100 <= target;
        let spec_ok = matched(size3) && e3 <= e_uniform;
        let halo_ok = match (&m_uniform, &m2) {
            (Ok(u), Ok(r)) => matched(size2) && r.rel_mass_diff <= u.rel_mass_diff,
            _ => false,
        };
        spectrum_wins += spec_ok as usize;
        halo_wins += halo_ok as usize;
        let fmt_m = |m: &amrpack::Result<amrpack::metrics::HaloComparison>| match m {
            Ok(c) => format!("{:.2e}", c.rel_mass_diff),
            Err(_) => "n/a".into(),
        };
        notes.push(format!(
            "seed {seed}: size {target}B, ps err 1:1 {e_uniform:.3e} vs 3:1 {e3:.3e} ({size3}B), \
             halo mass diff 1:1 {} vs 2:1 {} ({size2}B, {} halos)",
            fmt_m(&m_uniform),
            fmt_m(&m2),
            h0.len()
        ));
    }
    outcome(
        spectrum_wins >= 2 && halo_wins >= 2,
        format!("spectrum {spectrum_wins}/3, halo {halo_wins}/3; {}", notes.join("; ")),
    )
}

// ---------------------------------------------------------------- 11

fn criterion_11() -> Outcome {
    let spec = GenSpec {
        seed: 11,
        finest_side: 256,
        unit_block_size: 16,
        target_finest_density: 0.23,
        ..GenSpec::default()
    };
    let field = generate_uniform_field(&spec).unwrap();
    let (d, _) = amrpack::datagen::refine_to_amr(&field, &spec).unwrap();
    let sparse = &d.levels()[0];

    // a dense 256^3 level: keep the 77% of blocks with the highest peaks
    let nb = 16;
    let mut peaks: Vec<(f64, [usize; 3])> = raster([nb; 3])
        .map(|b| {
            let mut m = f64::MIN;
            for c in raster([16; 3]) {
                m = m.max(field.get(b[0] * 16 + c[0], b[1] * 16 + c[1], b[2] * 16 + c[2]));
            }
            (m, b)
        })
        .collect();
    peaks.sort_by(|a, b| b.0.total_cmp(&a.0));
    let keep = (0.77 * peaks.len() as f64).round() as usize;
    let mut mask = BlockMask::new([nb; 3], false);
    for (_, b) in &peaks[..keep] {
        mask.set(b[0], b[1], b[2], true);
    }
    let dense = LevelGrid::new(field.clone(), 16, mask).unwrap();

    let registry = StrategyRegistry::default();
    let measure = |level: &LevelGrid, tag: StrategyTag| {
        let prep = registry.get(tag).unwrap().prepare(level).unwrap();
        let raw: usize = prep.tensors.iter().map(|t| t.len() * 4).sum();
        let (lo, hi) = min_max(&level.defined_values()).unwrap();
        let coded: usize = prep
            .tensors
            .iter()
            .map(|t| LorenzoCodec.encode(t, 1e-3 * (hi - lo), ValueType::F32).unwrap().to_bytes().len())
            .sum();
        (prep.metadata.len(), raw, coded)
    };
    let (m_opst, raw_opst, coded_opst) = measure(sparse, StrategyTag::OpST);
    let (m_gsp, raw_gsp, coded_gsp) = measure(&dense, StrategyTag::Gsp);
    let r_opst = m_opst as f64 / raw_opst as f64;
    let r_gsp = m_gsp as f64 / raw_gsp as f64;
    outcome(
        r_opst <= 0.005 && r_gsp <= 0.005,
        format!(
            "opst density {:.3}: {m_opst}B metadata = {:.4}% of {raw_opst}B level payload ({:.2}% of {coded_opst}B coded); \
             gsp density {:.3}: {m_gsp}B = {:.4}% of {raw_gsp}B ({:.2}% of {coded_gsp}B coded)",
            sparse.density(),
            100.0 * r_opst,
            100.0 * m_opst as f64 / coded_opst as f64,
            dense.density(),
            100.0 * r_gsp,
            100.0 * m_gsp as f64 / coded_gsp as f64,
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("DP table matches exhaustive oracle", criterion_1),
        ("cover and lossless round trip", criterion_2),
        ("error bound guarantee", criterion_3),
        ("strategy selection table", criterion_4),
        ("OpST vs NaST on a 23% level", criterion_5),
        ("GSP vs ZF on a 77% level", criterion_6),
        ("pre-processing time vs density", criterion_7),
        ("bit-rate x ratio identity", criterion_8),
        ("FFT against direct DFT", criterion_9),
        ("adaptive bounds at matched size", criterion_10),
        ("metadata overhead", criterion_11),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let t = Instant::now();
        let o = run();
        println!(
            "acceptance {n:>2} {}: {name} [{:.1}s] {}",
            if o.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            o.detail
        );
        failed += !o.pass as usize;
    }
    println!("acceptance summary: {failed} failed");
    // Failures are reported, not fatal, unless ACCEPTANCE_STRICT is set.
    if failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
