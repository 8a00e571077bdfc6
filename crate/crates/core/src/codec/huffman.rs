//! Canonical Huffman coding of quantization codes.
//!
//! Runs of the zero-residual code are folded into run tokens before
//! coding: a run of `n >= 2` becomes token `RUN_BASE + k` with
//! `k = floor(log2 n)`, followed by `k` raw bits holding `n - 2^k`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// First run token; quantization codes must stay below it.
pub const RUN_BASE: u32 = 1 << 16;
const MAX_RUN_CLASS: u32 = 40;
const MAX_CODE_LEN: u8 = 32;

struct BitWriter {
    out: Vec<u8>,
    acc: u64,
    fill: u32,
}

impl BitWriter {
    fn new() -> Self {
        Self {
            out: Vec::new(),
            acc: 0,
            fill: 0,
        }
    }

    /// Appends the low `n` bits of `value`, most significant first.
    fn write(&mut self, value: u64, n: u32) {
        debug_assert!(n <= 32);
        if n == 0 {
            return;
        }
        self.acc = (self.acc << n) | (value & ((1u64 << n) - 1));
        self.fill += n;
        while self.fill >= 8 {
            self.fill -= 8;
            self.out.push((self.acc >> self.fill) as u8);
        }
    }

    fn finish(mut self) -> Vec<u8> {
        if self.fill > 0 {
            self.out.push((self.acc << (8 - self.fill)) as u8);
        }
        self.out
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    acc: u64,
    fill: u32,
}

impl<'a> BitReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self {
            bytes,
            pos: 0,
            acc: 0,
            fill: 0,
        }
    }

    #[inline]
    fn refill(&mut self) {
        while self.fill <= 56 && self.pos < self.bytes.len() {
            self.acc = (self.acc << 8) | self.bytes[self.pos] as u64;
            self.pos += 1;
            self.fill += 8;
        }
    }

    #[inline]
    fn bit(&mut self) -> Result<u32> {
        if self.fill == 0 {
            self.refill();
            if self.fill == 0 {
                return Err(Error::Codec("entropy stream exhausted".into()));
            }
        }
        self.fill -= 1;
        Ok((self.acc >> self.fill) as u32 & 1)
    }

    fn bits(&mut self, n: u32) -> Result<u64> {
        let mut v = 0u64;
        for _ in 0..n {
            v = (v << 1) | self.bit()? as u64;
        }
        Ok(v)
    }
}

fn write_varint(mut v: u64, out: &mut Vec<u8>) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

fn read_varint(bytes: &[u8], pos: &mut usize) -> Result<u64> {
    let mut v = 0u64;
    for shift in (0..64).step_by(7) {
        let b = *bytes
            .get(*pos)
            .ok_or_else(|| Error::Codec("truncated entropy table".into()))?;
        *pos += 1;
        v |= ((b & 0x7f) as u64) << shift;
        if b & 0x80 == 0 {
            return Ok(v);
        }
    }
    Err(Error::Codec("varint overflow in entropy table".into()))
}

/// Folds runs of `zero` into run tokens; returns `(token, extra bits, n extra)`.
fn tokenize(codes: &[u32], zero: u32) -> Vec<(u32, u64, u32)> {
    let mut tokens = Vec::with_capacity(codes.len() / 4);
    let mut i = 0;
    while i < codes.len() {
        let c = codes[i];
        if c != zero {
            tokens.push((c, 0, 0));
            i += 1;
            continue;
        }
        let start = i;
        while i < codes.len() && codes[i] == zero {
            i += 1;
        }
        let mut remaining = (i - start) as u64;
        while remaining > 0 {
            if remaining == 1 {
                tokens.push((zero, 0, 0));
                break;
            }
            let k = (63 - remaining.leading_zeros()).min(MAX_RUN_CLASS - 1);
            let take = remaining.min((1u64 << (k + 1)) - 1);
            tokens.push((RUN_BASE + k, take - (1 << k), k));
            remaining -= take;
        }
    }
    tokens
}

/// Code lengths for the given `(symbol, frequency)` pairs, limited to
/// [`MAX_CODE_LEN`] by repeatedly flattening the frequencies.
fn code_lengths(freqs: &[(u32, u64)]) -> Vec<u8> {
    if freqs.len() == 1 {
        return vec![1];
    }
    let mut weights: Vec<u64> = freqs.iter().map(|&(_, f)| f).collect();
    loop {
        let lens = tree_lengths(&weights);
        if lens.iter().all(|&l| l <= MAX_CODE_LEN) {
            return lens;
        }
        weights.iter_mut().for_each(|w| *w = (*w >> 1).max(1));
    }
}

fn tree_lengths(weights: &[u64]) -> Vec<u8> {
    let n = weights.len();
    // nodes 0..n are leaves; parents appended after
    let mut parent = vec![usize::MAX; n];
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> = weights.iter().enumerate().map(|(i, &w)| Reverse((w, i))).collect();
    while heap.len() > 1 {
        let Reverse((wa, a)) = heap.pop().unwrap();
        let Reverse((wb, b)) = heap.pop().unwrap();
        let id = parent.len();
        parent.push(usize::MAX);
        parent[a] = id;
        parent[b] = id;
        heap.push(Reverse((wa + wb, id)));
    }
    let mut depth = vec![0u8; parent.len()];
    for i in (0..parent.len()).rev() {
        if parent[i] != usize::MAX {
            depth[i] = depth[parent[i]].saturating_add(1);
        }
    }
    depth.truncate(n);
    depth
}

/// Canonical code assignment: `(symbol, length)` sorted by length then symbol.
fn canonical_codes(mut entries: Vec<(u32, u8)>) -> Vec<(u32, u8, u32)> {
    entries.sort_by_key(|&(s, l)| (l, s));
    let mut out = Vec::with_capacity(entries.len());
    let mut code = 0u32;
    let mut prev_len = entries.first().map_or(0, |e| e.1);
    for (i, &(s, l)) in entries.iter().enumerate() {
        if i > 0 {
            code = (code + 1) << (l - prev_len);
        }
        prev_len = l;
        out.push((s, l, code));
    }
    out
}

/// Entropy-codes `codes`; returns `(table, bitstream)`.
pub fn encode(codes: &[u32], zero: u32) -> (Vec<u8>, Vec<u8>) {
    if codes.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let tokens = tokenize(codes, zero);
    let mut freq = std::collections::BTreeMap::new();
    for &(t, _, _) in &tokens {
        *freq.entry(t).or_insert(0u64) += 1;
    }
    let freqs: Vec<(u32, u64)> = freq.into_iter().collect();
    let lens = code_lengths(&freqs);

    let mut table = Vec::new();
    write_varint(freqs.len() as u64, &mut table);
    let mut prev = 0u32;
    for (&(s, _), &l) in freqs.iter().zip(&lens) {
        write_varint((s - prev) as u64, &mut table);
        table.push(l);
        prev = s;
    }

    let codes_by_symbol = canonical_codes(freqs.iter().map(|&(s, _)| s).zip(lens.iter().copied()).collect());
    let lookup: std::collections::HashMap<u32, (u32, u8)> =
        codes_by_symbol.iter().map(|&(s, l, c)| (s, (c, l))).collect();

    let mut w = BitWriter::new();
    for (t, extra, n_extra) in tokens {
        let (c, l) = lookup[&t];
        w.write(c as u64, l as u32);
        w.write(extra, n_extra);
    }
    (table, w.finish())
}

struct Decoder {
    /// Symbols sorted canonically.
    symbols: Vec<u32>,
    /// Per length: first canonical code, number of codes, offset into symbols.
    first: [u32; MAX_CODE_LEN as usize + 1],
    count: [u32; MAX_CODE_LEN as usize + 1],
    offset: [u32; MAX_CODE_LEN as usize + 1],
    max_len: u8,
}

impl Decoder {
    fn new(table: &[u8]) -> Result<Self> {
        let mut pos = 0;
        let n = read_varint(table, &mut pos)? as usize;
        if n == 0 || n > table.len() {
            return Err(Error::Codec(format!("bad entropy table size {n}")));
        }
        let mut entries = Vec::with_capacity(n);
        let mut sym = 0u64;
        for i in 0..n {
            let delta = read_varint(table, &mut pos)?;
            if i > 0 && delta == 0 {
                return Err(Error::Codec("duplicate symbol in entropy table".into()));
            }
            sym += delta;
            let len = *table
                .get(pos)
                .ok_or_else(|| Error::Codec("truncated entropy table".into()))?;
            pos += 1;
            if len == 0 || len > MAX_CODE_LEN || sym >= (RUN_BASE + MAX_RUN_CLASS) as u64 {
                return Err(Error::Codec(format!("bad entropy table entry ({sym}, {len})")));
            }
            entries.push((sym as u32, len));
        }
        if pos != table.len() {
            return Err(Error::Codec("trailing bytes in entropy table".into()));
        }
        // Kraft inequality keeps canonical codes within their lengths
        let kraft: f64 = entries.iter().map(|&(_, l)| 0.5f64.powi(l as i32)).sum();
        if kraft > 1.0 {
            return Err(Error::Codec("entropy table violates Kraft inequality".into()));
        }
        let canon = canonical_codes(entries);
        let mut d = Decoder {
            symbols: canon.iter().map(|e| e.0).collect(),
            first: [0; MAX_CODE_LEN as usize + 1],
            count: [0; MAX_CODE_LEN as usize + 1],
            offset: [0; MAX_CODE_LEN as usize + 1],
            max_len: canon.last().map_or(0, |e| e.1),
        };
        for (i, &(_, l, c)) in canon.iter().enumerate() {
            let l = l as usize;
            if d.count[l] == 0 {
                d.first[l] = c;
                d.offset[l] = i as u32;
            }
            d.count[l] += 1;
        }
        Ok(d)
    }

    #[inline]
    fn next(&self, r: &mut BitReader) -> Result<u32> {
        let mut code = 0u32;
        for len in 1..=self.max_len as usize {
            code = (code << 1) | r.bit()?;
            let c = self.count[len];
            if c > 0 && code >= self.first[len] && code - self.first[len] < c {
                return Ok(self.symbols[(self.offset[len] + code - self.first[len]) as usize]);
            }
        }
        Err(Error::Codec("invalid Huffman code".into()))
    }
}

/// Inverse of [`encode`]: reproduces exactly `n` codes.
pub fn decode(table: &[u8], bits: &[u8], n: usize, zero: u32) -> Result<Vec<u32>> {
    if n == 0 {
        if !table.is_empty() || !bits.is_empty() {
            return Err(Error::Codec("non-empty entropy streams for zero codes".into()));
        }
        return Ok(Vec::new());
    }
    let dec = Decoder::new(table)?;
    let mut r = BitReader::new(bits);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let t = dec.next(&mut r)?;
        if t >= RUN_BASE {
            let k = t - RUN_BASE;
            let run = (1u64 << k) + r.bits(k)?;
            if out.len() as u64 + run > n as u64 {
                return Err(Error::Codec("run exceeds declared code count".into()));
            }
            out.extend(std::iter::repeat_n(zero, run as usize));
        } else {
            out.push(t);
        }
    }
    if r.fill as usize + 8 * (bits.len() - r.pos) >= 8 {
        return Err(Error::Codec("trailing bytes after entropy stream".into()));
    }
    Ok(out)
}
