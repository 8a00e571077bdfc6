//! Radially binned power spectrum of a cubic field.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::Field3;

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    /// Wavenumber magnitudes `1..=k_max`.
    pub k: Vec<usize>,
    /// Mean squared Fourier amplitude of the modes in each bin (0 if none).
    pub p: Vec<f64>,
}

impl PowerSpectrum {
    pub fn get(&self, k: usize) -> Option<f64> {
        self.k.iter().position(|&b| b == k).map(|i| self.p[i])
    }
}

/// Unnormalized forward 3D DFT, `F(k) = sum_x f(x) exp(-2 pi i k.x / n)`.
pub fn fft3(field: &Field3) -> Result<Vec<Complex<f64>>> {
    let [n, ny, nz] = field.dims();
    if n != ny || n != nz || !n.is_power_of_two() {
        return Err(Error::InvalidInput(format!(
            "power spectrum needs a cubic power-of-two field, got {:?}",
            field.dims()
        )));
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut data: Vec<Complex<f64>> = field.as_slice().iter().map(|&v| Complex::new(v, 0.0)).collect();
    // x lines are contiguous
    fft.process(&mut data);
    let mut line = vec![Complex::new(0.0, 0.0); n];
    for stride in [n, n * n] {
        for base in 0..n * n * n {
            // visit each line once, from the cell where its coordinate is 0
            if (base / stride) % n != 0 {
                continue;
            }
            for (i, c) in line.iter_mut().enumerate() {
                *c = data[base + i * stride];
            }
            fft.process(&mut line);
            for (i, c) in line.iter().enumerate() {
                data[base + i * stride] = *c;
            }
        }
    }
    Ok(data)
}

fn signed(i: usize, n: usize) -> f64 {
    if i <= n / 2 {
        i as f64
    } else {
        i as f64 - n as f64
    }
}

/// Averages `|F(k)|^2` over modes whose `|k|` rounds to each bin `1..=k_max`.
pub fn bin_spectrum(modes: &[Complex<f64>], n: usize, k_max: usize) -> PowerSpectrum {
    let mut sum = vec![0.0; k_max + 1];
    let mut count = vec![0usize; k_max + 1];
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let (kx, ky, kz) = (signed(x, n), signed(y, n), signed(z, n));
                let bin = (kx * kx + ky * ky + kz * kz).sqrt().round() as usize;
                if (1..=k_max).contains(&bin) {
                    sum[bin] += modes[x + n * (y + n * z)].norm_sqr();
                    count[bin] += 1;
                }
            }
        }
    }
    PowerSpectrum {
        k: (1..=k_max).collect(),
        p: (1..=k_max)
            .map(|b| if count[b] > 0 { sum[b] / count[b] as f64 } else { 0.0 })
            .collect(),
    }
}

pub fn power_spectrum(field: &Field3, k_max: usize) -> Result<PowerSpectrum> {
    let modes = fft3(field)?;
    Ok(bin_spectrum(&modes, field.dims()[0], k_max))
}

/// Largest `|p'(k) - p(k)| / p(k)` over bins `k < k_max` with `p(k) > 0`.
pub fn power_spectrum_error(p: &PowerSpectrum, p_prime: &PowerSpectrum, k_max: usize) -> f64 {
    p.k.iter()
        .zip(&p.p)
        .filter(|&(&k, &v)| k < k_max && v > 0.0)
        .filter_map(|(&k, &v)| p_prime.get(k).map(|w| (w - v).abs() / v))
        .fold(0.0, f64::max)
}
