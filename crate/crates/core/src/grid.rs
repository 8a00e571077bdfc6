//! Dense array containers shared by every module.
//!
//! All 3D containers use x-fastest linear ordering: `x + nx * (y + ny * z)`.

use std::fmt;

use crate::error::{Error, Result};

/// Storage precision of a dataset or an encoded block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueType {
    F32,
    F64,
}

impl ValueType {
    pub fn byte_width(self) -> usize {
        match self {
            ValueType::F32 => 4,
            ValueType::F64 => 8,
        }
    }

    pub fn bits(self) -> usize {
        self.byte_width() * 8
    }

    /// Rounds `v` to the nearest value representable in this type.
    #[inline]
    pub fn round(self, v: f64) -> f64 {
        match self {
            ValueType::F32 => v as f32 as f64,
            ValueType::F64 => v,
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            ValueType::F32 => 0,
            ValueType::F64 => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(ValueType::F32),
            1 => Ok(ValueType::F64),
            other => Err(Error::Format(format!("unknown value type tag {other}"))),
        }
    }

    pub fn write_le(self, v: f64, out: &mut Vec<u8>) {
        match self {
            ValueType::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
            ValueType::F64 => out.extend_from_slice(&v.to_le_bytes()),
        }
    }

    /// Decodes one little-endian value from the front of `bytes`.
    pub fn read_le(self, bytes: &[u8]) -> f64 {
        match self {
            ValueType::F32 => f32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
            ValueType::F64 => f64::from_le_bytes(bytes[..8].try_into().unwrap()),
        }
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueType::F32 => "f32",
            ValueType::F64 => "f64",
        })
    }
}

impl std::str::FromStr for ValueType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(ValueType::F32),
            "f64" => Ok(ValueType::F64),
            other => Err(Error::InvalidParameter(format!("value type `{other}`"))),
        }
    }
}

#[inline]
pub fn linear_index(dims: [usize; 3], x: usize, y: usize, z: usize) -> usize {
    x + dims[0] * (y + dims[1] * z)
}

#[inline]
pub fn volume(dims: [usize; 3]) -> usize {
    dims[0] * dims[1] * dims[2]
}

/// Iterates `(x, y, z)` over `dims` in raster order (x fastest).
pub fn raster(dims: [usize; 3]) -> impl Iterator<Item = [usize; 3]> {
    (0..dims[2]).flat_map(move |z| {
        (0..dims[1]).flat_map(move |y| (0..dims[0]).map(move |x| [x, y, z]))
    })
}

/// Dense 3D scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct Field3 {
    dims: [usize; 3],
    data: Vec<f64>,
}

impl Field3 {
    pub fn zeros(dims: [usize; 3]) -> Self {
        Self {
            dims,
            data: vec![0.0; volume(dims)],
        }
    }

    pub fn cube(side: usize) -> Self {
        Self::zeros([side; 3])
    }

    pub fn from_vec(dims: [usize; 3], data: Vec<f64>) -> Result<Self> {
        if data.len() != volume(dims) {
            return Err(Error::InvalidInput(format!(
                "field of dims {dims:?} needs {} values, got {}",
                volume(dims),
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn from_fn(dims: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(volume(dims));
        for [x, y, z] in raster(dims) {
            data.push(f(x, y, z));
        }
        Self { dims, data }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        linear_index(self.dims, x, y, z)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.data[self.index(x, y, z)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, v: f64) {
        let i = self.index(x, y, z);
        self.data[i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Copies the box `[origin, origin + extent)` out in x-fastest order.
    pub fn copy_box(&self, origin: [usize; 3], extent: [usize; 3], out: &mut Vec<f64>) {
        for z in origin[2]..origin[2] + extent[2] {
            for y in origin[1]..origin[1] + extent[1] {
                let start = self.index(origin[0], y, z);
                out.extend_from_slice(&self.data[start..start + extent[0]]);
            }
        }
    }

    /// Writes an x-fastest box back; inverse of [`Field3::copy_box`].
    pub fn paste_box(&mut self, origin: [usize; 3], extent: [usize; 3], src: &[f64]) {
        let mut k = 0;
        for z in origin[2]..origin[2] + extent[2] {
            for y in origin[1]..origin[1] + extent[1] {
                let start = self.index(origin[0], y, z);
                self.data[start..start + extent[0]].copy_from_slice(&src[k..k + extent[0]]);
                k += extent[0];
            }
        }
    }

    pub fn fill_box(&mut self, origin: [usize; 3], extent: [usize; 3], v: f64) {
        for z in origin[2]..origin[2] + extent[2] {
            for y in origin[1]..origin[1] + extent[1] {
                let start = self.index(origin[0], y, z);
                self.data[start..start + extent[0]].fill(v);
            }
        }
    }

    pub fn min_max(&self) -> Option<(f64, f64)> {
        min_max(&self.data)
    }
}

pub fn min_max(values: &[f64]) -> Option<(f64, f64)> {
    let mut it = values.iter().copied();
    let first = it.next()?;
    Some(it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v))))
}

/// Occupancy of unit blocks. `true` means the block holds data.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlockMask {
    dims: [usize; 3],
    bits: Vec<bool>,
}

impl BlockMask {
    pub fn new(dims: [usize; 3], fill: bool) -> Self {
        Self {
            dims,
            bits: vec![fill; volume(dims)],
        }
    }

    pub fn from_bits(dims: [usize; 3], bits: Vec<bool>) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidInput(format!("mask dims {dims:?} must be >= 1")));
        }
        if bits.len() != volume(dims) {
            return Err(Error::InvalidInput(format!(
                "mask of dims {dims:?} needs {} bits, got {}",
                volume(dims),
                bits.len()
            )));
        }
        Ok(Self { dims, bits })
    }

    pub fn from_fn(dims: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> bool) -> Self {
        let bits = raster(dims).map(|[x, y, z]| f(x, y, z)).collect();
        Self { dims, bits }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.bits[linear_index(self.dims, x, y, z)]
    }

    #[inline]
    pub fn get_at(&self, c: [usize; 3]) -> bool {
        self.get(c[0], c[1], c[2])
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, v: bool) {
        let i = linear_index(self.dims, x, y, z);
        self.bits[i] = v;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Fraction of non-empty unit blocks.
    pub fn density(&self) -> f64 {
        if self.bits.is_empty() {
            return 0.0;
        }
        self.count() as f64 / self.bits.len() as f64
    }

    /// Packs to one bit per block, LSB first.
    pub fn to_packed(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.bits.len().div_ceil(8)];
        for (i, &b) in self.bits.iter().enumerate() {
            if b {
                out[i / 8] |= 1 << (i % 8);
            }
        }
        out
    }

    pub fn from_packed(dims: [usize; 3], packed: &[u8]) -> Result<Self> {
        let n = volume(dims);
        if packed.len() != n.div_ceil(8) {
            return Err(Error::Format(format!(
                "packed mask for {dims:?} needs {} bytes, got {}",
                n.div_ceil(8),
                packed.len()
            )));
        }
        let bits = (0..n).map(|i| packed[i / 8] >> (i % 8) & 1 == 1).collect();
        Self::from_bits(dims, bits)
    }
}

/// Rank 1 to 4 array handed to codecs. Axis 0 varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.len() > 4 {
            return Err(Error::InvalidInput(format!("tensor rank {} not in 1..=4", dims.len())));
        }
        let n: usize = dims.iter().product();
        if n != data.len() {
            return Err(Error::InvalidInput(format!(
                "tensor dims {dims:?} imply {n} values, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Dimensions as `(slab dims, slab count)`: the first three axes form a
    /// 3D slab (missing axes are 1) and axis 3, if present, counts slabs.
    pub fn slab_shape(&self) -> ([usize; 3], usize) {
        slab_shape(&self.dims)
    }
}

impl From<Field3> for Tensor {
    fn from(f: Field3) -> Self {
        Tensor {
            dims: f.dims.to_vec(),
            data: f.data,
        }
    }
}

pub(crate) fn slab_shape(dims: &[usize]) -> ([usize; 3], usize) {
    let d = |i: usize| dims.get(i).copied().unwrap_or(1);
    ([d(0), d(1), d(2)], d(3))
}
