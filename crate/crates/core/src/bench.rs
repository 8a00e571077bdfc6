//! Rate-distortion sweeps and the CSV reports built from them.

use std::io::Write;
use std::time::Instant;

use crate::amr::AmrDataset;
use crate::archive::CompressedArchive;
use crate::codec::ErrorBound;
use crate::error::Result;
use crate::metrics::{dataset_psnr, rate_and_ratio, Halo, PowerSpectrum, RateDistortionRecord};
use crate::pipeline::{compress_with_stats, decompress_dataset, CompressionConfig, StrategyChoice};

pub const RD_HEADER: &str = "strategy,eb,bit_rate,cr,psnr_db,pre_s,enc_s,dec_s";
pub const SPECTRUM_HEADER: &str = "k,p_orig,p_decomp,rel_err";
pub const HALO_HEADER: &str = "source,rank,mass,cell_count,com_x,com_y,com_z";

/// Compresses and decompresses once, returning the record and the decoded
/// dataset.
pub fn run_case(dataset: &AmrDataset, config: &CompressionConfig) -> Result<(RateDistortionRecord, AmrDataset)> {
    let (archive, stats) = compress_with_stats(dataset, config)?;
    let bytes = archive.to_bytes();
    let t0 = Instant::now();
    let decoded = decompress_dataset(&CompressedArchive::from_bytes(&bytes)?)?;
    let dec = t0.elapsed().as_secs_f64();
    let (bit_rate, compression_ratio) = rate_and_ratio(dataset.defined_count(), dataset.value_type().bits(), bytes.len());
    let record = RateDistortionRecord {
        strategy: config.strategy.to_string(),
        bound: config.base_bound.magnitude,
        resolved_bounds: archive.records.iter().map(|r| r.bound).collect(),
        bit_rate,
        compression_ratio,
        psnr_db: dataset_psnr(dataset, &decoded)?,
        preprocess_seconds: stats.preprocess_seconds,
        encode_seconds: stats.encode_seconds,
        decode_seconds: dec,
    };
    Ok((record, decoded))
}

/// One record per (strategy, bound) pair, strategies outermost.
pub fn sweep(
    dataset: &AmrDataset,
    base: &CompressionConfig,
    strategies: &[StrategyChoice],
    bounds: &[ErrorBound],
) -> Result<Vec<RateDistortionRecord>> {
    let mut out = Vec::with_capacity(strategies.len() * bounds.len());
    for &strategy in strategies {
        for &bound in bounds {
            let config = CompressionConfig {
                strategy,
                base_bound: bound,
                ..base.clone()
            };
            out.push(run_case(dataset, &config)?.0);
        }
    }
    Ok(out)
}

/// Writes the rate-distortion CSV; `deterministic` zeroes the timing
/// columns so repeated runs produce identical files.
pub fn write_rd_csv(records: &[RateDistortionRecord], deterministic: bool, out: &mut impl Write) -> Result<()> {
    writeln!(out, "{RD_HEADER}")?;
    for r in records {
        let t = |s: f64| if deterministic { 0.0 } else { s };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.strategy,
            r.bound,
            r.bit_rate,
            r.compression_ratio,
            r.psnr_db,
            t(r.preprocess_seconds),
            t(r.encode_seconds),
            t(r.decode_seconds)
        )?;
    }
    Ok(())
}

pub fn write_spectrum_csv(original: &PowerSpectrum, decompressed: &PowerSpectrum, out: &mut impl Write) -> Result<()> {
    writeln!(out, "{SPECTRUM_HEADER}")?;
    for (i, &k) in original.k.iter().enumerate() {
        let (p, q) = (original.p[i], decompressed.p[i]);
        let rel = if p > 0.0 { (q - p).abs() / p } else { 0.0 };
        writeln!(out, "{k},{p},{q},{rel}")?;
    }
    Ok(())
}

pub fn write_halo_csv(sets: &[(&str, &[Halo])], out: &mut impl Write) -> Result<()> {
    writeln!(out, "{HALO_HEADER}")?;
    for (source, halos) in sets {
        for (rank, h) in halos.iter().enumerate() {
            let c = h.center_of_mass;
            writeln!(out, "{source},{rank},{},{},{},{},{}", h.mass, h.cell_count, c[0], c[1], c[2])?;
        }
    }
    Ok(())
}
