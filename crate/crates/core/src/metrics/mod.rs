//! Rate, distortion and post-analysis metrics.

pub mod halo;
pub mod spectrum;

pub use halo::{halo_compare, halo_find, Halo, HaloComparison, HaloParams};
pub use spectrum::{power_spectrum, power_spectrum_error, PowerSpectrum};

use crate::amr::AmrDataset;
use crate::error::{Error, Result};
use crate::grid::min_max;

/// Peak signal-to-noise ratio in dB, with the value range of `original` as
/// the peak. Identical inputs give `+inf`.
pub fn psnr(original: &[f64], decompressed: &[f64]) -> Result<f64> {
    if original.len() != decompressed.len() {
        return Err(Error::InvalidInput(format!(
            "psnr of arrays with {} and {} values",
            original.len(),
            decompressed.len()
        )));
    }
    let Some((lo, hi)) = min_max(original) else {
        return Err(Error::InvalidInput("psnr of empty arrays".into()));
    };
    let mse = original
        .iter()
        .zip(decompressed)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / original.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    let range = hi - lo;
    if range == 0.0 {
        return Err(Error::InvalidInput("psnr undefined for a constant original with nonzero error".into()));
    }
    Ok(20.0 * range.log10() - 10.0 * mse.log10())
}

/// PSNR over the defined values of all levels taken together.
pub fn dataset_psnr(original: &AmrDataset, decompressed: &AmrDataset) -> Result<f64> {
    let collect = |d: &AmrDataset| d.levels().iter().flat_map(|l| l.defined_values()).collect::<Vec<_>>();
    let (a, b) = (collect(original), collect(decompressed));
    psnr(&a, &b)
}

/// Bytes per second; `0` when no time was measured.
pub fn throughput(bytes: usize, seconds: f64) -> f64 {
    if seconds > 0.0 {
        bytes as f64 / seconds
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateDistortionRecord {
    pub strategy: String,
    /// Base bound magnitude as configured.
    pub bound: f64,
    /// Resolved absolute bound per archive record.
    pub resolved_bounds: Vec<f64>,
    /// Archive bits per original value.
    pub bit_rate: f64,
    /// Raw bytes over archive bytes.
    pub compression_ratio: f64,
    pub psnr_db: f64,
    pub preprocess_seconds: f64,
    pub encode_seconds: f64,
    pub decode_seconds: f64,
}

/// `(bit_rate, compression_ratio)` for `values` values of `word_bits` bits
/// stored in `archive_bytes`; their product is `word_bits`.
pub fn rate_and_ratio(values: usize, word_bits: usize, archive_bytes: usize) -> (f64, f64) {
    let bits = archive_bytes as f64 * 8.0;
    (bits / values as f64, (values * word_bits) as f64 / bits)
}
