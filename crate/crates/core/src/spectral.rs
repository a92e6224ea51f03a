//! Welch power spectral density of a μ-like sequence, indexed by n as time.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{MoebiusError, Result};

pub const DEFAULT_SEGMENT_LEN: usize = 1 << 16;
pub const DEFAULT_OVERLAP: f64 = 0.5;

fn check_pow2(len: usize) -> Result<()> {
    if len < 2 || !len.is_power_of_two() {
        return Err(MoebiusError::invalid(format!(
            "length must be a power of two ≥ 2, got {len}"
        )));
    }
    Ok(())
}

fn bit_reverse_permute(buf: &mut [Complex64]) {
    let n = buf.len();
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if i < j {
            buf.swap(i, j);
        }
    }
}

fn radix2(buf: &mut [Complex64], sign: f64) {
    bit_reverse_permute(buf);
    let n = buf.len();
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let step = sign * 2.0 * PI / len as f64;
        // twiddles evaluated directly, not by repeated multiplication, to keep
        // rounding error flat for long transforms
        let twiddles: Vec<Complex64> = (0..half)
            .map(|k| Complex64::from_polar(1.0, step * k as f64))
            .collect();
        for chunk in buf.chunks_exact_mut(len) {
            let (lo, hi) = chunk.split_at_mut(half);
            for ((a, b), w) in lo.iter_mut().zip(hi.iter_mut()).zip(&twiddles) {
                let t = *b * w;
                *b = *a - t;
                *a += t;
            }
        }
        len <<= 1;
    }
}

/// In-place forward DFT, X_k = Σ x_j e^{−2πijk/N}.
pub fn fft(buf: &mut [Complex64]) -> Result<()> {
    check_pow2(buf.len())?;
    radix2(buf, -1.0);
    Ok(())
}

/// In-place inverse DFT including the 1/N factor.
pub fn ifft(buf: &mut [Complex64]) -> Result<()> {
    check_pow2(buf.len())?;
    radix2(buf, 1.0);
    let scale = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|x| *x *= scale);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Rectangular,
    Hann,
}

impl Window {
    fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; len],
            // periodic Hann
            Window::Hann => (0..len)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / len as f64).cos())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsdEstimate {
    pub segment_len: usize,
    pub overlap: f64,
    pub window: Window,
    pub n_segments: usize,
    /// Cycles per sample, k/segment_len for k = 0..=segment_len/2.
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
}

/// Averaged windowed periodogram.
///
/// Each segment has its mean removed before windowing. Power is |X_k|²/Σw²
/// without one-sided doubling, so unit-variance white noise has mean power 1
/// in every bin.
pub fn welch_psd(
    values: &[i8],
    segment_len: usize,
    overlap: f64,
    window: Window,
) -> Result<PsdEstimate> {
    check_pow2(segment_len)?;
    if !(0.0..1.0).contains(&overlap) {
        return Err(MoebiusError::invalid(format!(
            "overlap must lie in [0, 1), got {overlap}"
        )));
    }
    if values.len() < segment_len {
        return Err(MoebiusError::invalid(format!(
            "segment length {segment_len} exceeds sequence length {}",
            values.len()
        )));
    }
    let hop = ((segment_len as f64) * (1.0 - overlap)).round().max(1.0) as usize;
    let n_segments = (values.len() - segment_len) / hop + 1;
    let w = window.coefficients(segment_len);
    let norm = w.iter().map(|x| x * x).sum::<f64>();
    let bins = segment_len / 2 + 1;

    let periodograms: Vec<Vec<f64>> = (0..n_segments)
        .into_par_iter()
        .map(|s| {
            let seg = &values[s * hop..s * hop + segment_len];
            let mean = seg.iter().map(|&v| f64::from(v)).sum::<f64>() / segment_len as f64;
            let mut buf: Vec<Complex64> = seg
                .iter()
                .zip(&w)
                .map(|(&v, &wi)| Complex64::new((f64::from(v) - mean) * wi, 0.0))
                .collect();
            radix2(&mut buf, -1.0);
            buf[..bins].iter().map(|x| x.norm_sqr() / norm).collect()
        })
        .collect();

    // fixed summation order keeps the result independent of thread count
    let mut power = vec![0.0; bins];
    for p in &periodograms {
        for (acc, x) in power.iter_mut().zip(p) {
            *acc += x;
        }
    }
    power.iter_mut().for_each(|x| *x /= n_segments as f64);

    Ok(PsdEstimate {
        segment_len,
        overlap,
        window,
        n_segments,
        freqs: (0..bins).map(|k| k as f64 / segment_len as f64).collect(),
        power,
    })
}

/// max/mean of power over the non-DC bins.
pub fn peak_ratio(psd: &PsdEstimate) -> Result<f64> {
    let bins = psd.power.get(1..).unwrap_or(&[]);
    if bins.is_empty() {
        return Err(MoebiusError::invalid("no non-DC bins"));
    }
    let mean = bins.iter().sum::<f64>() / bins.len() as f64;
    if mean <= 0.0 {
        return Err(MoebiusError::invalid("all-zero spectrum has no peak ratio"));
    }
    let max = bins.iter().copied().fold(f64::MIN, f64::max);
    Ok(max / mean)
}
