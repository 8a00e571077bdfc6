//! Lorenzo prediction with linear-scaled quantization.
//!
//! Each value is predicted from its seven already-decoded backward
//! neighbors (missing neighbors read as zero), the residual is quantized to
//! bins of width `2 * bound`, and the bin indices are Huffman coded. Values
//! whose bin index leaves the code range, or whose reconstruction misses the
//! bound after rounding to the value type, are stored as literals.
//! Rank-4 tensors are coded as a sequence of independent 3D slabs.

use super::{check_encode_args, huffman, Codec, EncodedBlock, PREDICTOR_LORENZO};
use crate::error::{Error, Result};
use crate::grid::{slab_shape, Tensor, ValueType};

/// Code of a zero residual; code 0 marks a literal.
const ZERO_CODE: u32 = 1 << 15;
const MAX_INDEX: f64 = (ZERO_CODE - 1) as f64;

#[derive(Debug, Clone, Copy, Default)]
pub struct LorenzoCodec;

#[inline]
fn predict(recon: &[f64], dims: [usize; 3], x: usize, y: usize, z: usize, i: usize) -> f64 {
    let sx = 1;
    let sy = dims[0];
    let sz = dims[0] * dims[1];
    let (hx, hy, hz) = (x > 0, y > 0, z > 0);
    let g = |ok: bool, off: usize| if ok { recon[i - off] } else { 0.0 };
    g(hx, sx) + g(hy, sy) + g(hz, sz) - g(hx && hy, sx + sy) - g(hx && hz, sx + sz) - g(hy && hz, sy + sz)
        + g(hx && hy && hz, sx + sy + sz)
}

#[inline]
fn reconstruct(pred: f64, q: f64, bin: f64, vt: ValueType) -> f64 {
    vt.round(pred + bin * q)
}

/// Walks every slab in raster order, handing `(prediction, flat index)` to
/// `step`, which returns the reconstructed value.
fn scan(dims: &[usize], mut step: impl FnMut(f64, usize) -> Result<f64>) -> Result<()> {
    let (sd, count) = slab_shape(dims);
    let n = sd[0] * sd[1] * sd[2];
    let mut recon = vec![0.0; n];
    for s in 0..count {
        let base = s * n;
        let mut i = 0;
        for z in 0..sd[2] {
            for y in 0..sd[1] {
                for x in 0..sd[0] {
                    let pred = predict(&recon, sd, x, y, z, i);
                    recon[i] = step(pred, base + i)?;
                    i += 1;
                }
            }
        }
    }
    Ok(())
}

impl Codec for LorenzoCodec {
    fn name(&self) -> &'static str {
        "lorenzo"
    }

    fn predictor(&self) -> u8 {
        PREDICTOR_LORENZO
    }

    fn encode(&self, tensor: &Tensor, bound: f64, vt: ValueType) -> Result<EncodedBlock> {
        check_encode_args(tensor, bound)?;
        let bin = 2.0 * bound;
        let data = tensor.as_slice();
        let mut codes = Vec::with_capacity(data.len());
        let mut outliers = Vec::new();
        scan(tensor.dims(), |pred, i| {
            let v = vt.round(data[i]);
            if bin > 0.0 {
                let q = ((v - pred) / bin).round();
                if q.abs() <= MAX_INDEX {
                    let r = reconstruct(pred, q, bin, vt);
                    if (v - r).abs() <= bound {
                        codes.push((q as i64 + ZERO_CODE as i64) as u32);
                        return Ok(r);
                    }
                }
            } else if vt.round(pred) == v {
                codes.push(ZERO_CODE);
                return Ok(v);
            }
            codes.push(0);
            vt.write_le(v, &mut outliers);
            Ok(v)
        })?;
        let (table, codes) = huffman::encode(&codes, ZERO_CODE);
        Ok(EncodedBlock {
            value_type: vt,
            dims: tensor.dims().to_vec(),
            bound,
            predictor: PREDICTOR_LORENZO,
            table,
            codes,
            outliers,
        })
    }

    fn decode(&self, block: &EncodedBlock) -> Result<Tensor> {
        if block.predictor != PREDICTOR_LORENZO {
            return Err(Error::Codec(format!("predictor tag {} is not Lorenzo", block.predictor)));
        }
        let n = block.len();
        if n == 0 {
            return Err(Error::Codec("block declares zero values".into()));
        }
        let vt = block.value_type;
        let w = vt.byte_width();
        if block.outliers.len() % w != 0 {
            return Err(Error::Codec("outlier stream length not a multiple of the value width".into()));
        }
        let codes = huffman::decode(&block.table, &block.codes, n, ZERO_CODE)?;
        let bin = 2.0 * block.bound;
        let mut literals = block.outliers.chunks_exact(w);
        let mut out = vec![0.0; n];
        scan(&block.dims, |pred, i| {
            let v = match codes[i] {
                0 => vt.read_le(
                    literals
                        .next()
                        .ok_or_else(|| Error::Codec("outlier stream exhausted".into()))?,
                ),
                c => reconstruct(pred, c as f64 - ZERO_CODE as f64, bin, vt),
            };
            out[i] = v;
            Ok(v)
        })?;
        if literals.next().is_some() {
            return Err(Error::Codec("unused outlier values".into()));
        }
        Tensor::new(block.dims.clone(), out).map_err(|e| Error::Codec(e.to_string()))
    }
}
