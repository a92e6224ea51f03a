//! Probability model for the μ sequence treated as i.i.d. draws from its
//! squarefree-density distribution, and the empirical statistics checked
//! against it.

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{MoebiusError, Result};
use crate::mu::{MertensSeries, OmegaTable};

/// Density of squarefree integers, 6/π².
pub const SQUAREFREE_DENSITY: f64 = 6.0 / (PI * PI);

/// Smallest block length accepted by the blockwise CLT samplers.
pub const CLT_MIN_BLOCK_LEN: usize = 10_000;
/// Fewest blocks accepted by the blockwise CLT samplers.
pub const CLT_MIN_BLOCKS: usize = 30;

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionRule {
    pub support: Vec<i8>,
    pub probs: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
}

/// The theoretical law of μ(k) (`absolute = false`) or of |μ(k)|.
pub fn theoretical_distribution(absolute: bool) -> DistributionRule {
    let d = SQUAREFREE_DENSITY;
    if absolute {
        DistributionRule {
            support: vec![0, 1],
            probs: vec![1.0 - d, d],
            mean: d,
            variance: d * (1.0 - d),
        }
    } else {
        DistributionRule {
            support: vec![-1, 0, 1],
            probs: vec![d / 2.0, 1.0 - d, d / 2.0],
            mean: 0.0,
            variance: d,
        }
    }
}

/// Counts of −1, 0, +1 over one block of consecutive indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockStatsRow {
    pub block_index: usize,
    /// First n in the block.
    pub start: usize,
    pub block_len: usize,
    pub count_minus: u64,
    pub count_zero: u64,
    pub count_plus: u64,
    pub p_e_minus: f64,
    pub p_e_zero: f64,
    pub p_e_plus: f64,
}

impl BlockStatsRow {
    fn from_block(block_index: usize, start: usize, block: &[i8]) -> Self {
        let mut counts = [0u64; 3];
        for &v in block {
            counts[(v + 1) as usize] += 1;
        }
        let len = block.len() as f64;
        BlockStatsRow {
            block_index,
            start,
            block_len: block.len(),
            count_minus: counts[0],
            count_zero: counts[1],
            count_plus: counts[2],
            p_e_minus: counts[0] as f64 / len,
            p_e_zero: counts[1] as f64 / len,
            p_e_plus: counts[2] as f64 / len,
        }
    }

    /// Theoretical probabilities for (−1, 0, +1).
    pub fn p_t(&self) -> [f64; 3] {
        let rule = theoretical_distribution(false);
        [rule.probs[0], rule.probs[1], rule.probs[2]]
    }

    /// N·p_t for (−1, 0, +1).
    pub fn theoretical_counts(&self) -> [f64; 3] {
        self.p_t().map(|p| p * self.block_len as f64)
    }

    pub fn p_e(&self) -> [f64; 3] {
        [self.p_e_minus, self.p_e_zero, self.p_e_plus]
    }

    /// max over outcomes of |p_e − p_t|.
    pub fn max_deviation(&self) -> f64 {
        self.p_e()
            .iter()
            .zip(self.p_t())
            .map(|(e, t)| (e - t).abs())
            .fold(0.0, f64::max)
    }
}

/// Splits μ(1..) into consecutive disjoint blocks of `block_len` and counts
/// outcomes in each. At most `max_blocks` blocks; a trailing partial block is
/// dropped.
pub fn block_frequencies(
    values: &[i8],
    block_len: usize,
    max_blocks: usize,
) -> Result<Vec<BlockStatsRow>> {
    if block_len == 0 {
        return Err(MoebiusError::invalid("block length must be at least 1"));
    }
    let blocks = (values.len() / block_len).min(max_blocks);
    if blocks == 0 {
        return Err(MoebiusError::invalid(format!(
            "no complete block of length {block_len} in {} values",
            values.len()
        )));
    }
    Ok(values[..blocks * block_len]
        .par_chunks_exact(block_len)
        .enumerate()
        .map(|(i, block)| BlockStatsRow::from_block(i + 1, i * block_len + 1, block))
        .collect())
}

/// (Σ_{n≤x} |μ(n)| − 6x/π²)/√x.
pub fn squarefree_residual(values: &[i8], x: usize) -> Result<f64> {
    if x == 0 {
        return Err(MoebiusError::invalid("x must be at least 1"));
    }
    if x > values.len() {
        return Err(MoebiusError::invalid(format!(
            "x = {x} exceeds table length {}",
            values.len()
        )));
    }
    let count = values[..x].iter().filter(|&&v| v != 0).count() as f64;
    let x = x as f64;
    Ok((count - SQUAREFREE_DENSITY * x) / x.sqrt())
}

/// erf(z) = 2/√π · e^{−z²} · Σ 2ⁿ z^{2n+1} / (1·3·…·(2n+1)); all terms positive.
fn erf_series(z: f64) -> f64 {
    let mut term = z;
    let mut sum = z;
    let z2 = z * z;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= 2.0 * z2 / (2.0 * k + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    2.0 * FRAC_1_SQRT_PI * (-z2).exp() * sum
}

/// erfc(z) for z ≥ 3 by the Laplace continued fraction, evaluated with
/// modified Lentz.
fn erfc_continued_fraction(z: f64) -> f64 {
    // erfc(z) = e^{-z²}/√π · 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + …))))
    const TINY: f64 = 1e-300;
    let mut f = z;
    let mut c = z;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64 / 2.0;
        d = z + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = z + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    FRAC_1_SQRT_PI * (-z * z).exp() / f
}

fn erfc_nonneg(z: f64) -> f64 {
    if z < 3.0 {
        1.0 - erf_series(z)
    } else {
        erfc_continued_fraction(z)
    }
}

fn check_finite(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(MoebiusError::invalid(format!("{x} is not finite")))
    }
}

/// Standard normal CDF Φ(x), absolute error well under 1e-10.
pub fn normal_cdf(x: f64) -> Result<f64> {
    check_finite(x)?;
    let z = x.abs() / SQRT_2;
    let tail = 0.5 * erfc_nonneg(z);
    Ok(if x < 0.0 { tail } else { 1.0 - tail })
}

/// Upper tail 1 − Φ(x), computed without cancellation for large x.
pub fn normal_sf(x: f64) -> Result<f64> {
    check_finite(x)?;
    let z = x.abs() / SQRT_2;
    let tail = 0.5 * erfc_nonneg(z);
    Ok(if x > 0.0 { tail } else { 1.0 - tail })
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// K with Φ(K) = p, by safeguarded Newton iteration on [`normal_cdf`].
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(MoebiusError::invalid(format!(
            "quantile needs 0 < p < 1, got {p}"
        )));
    }
    if p > 0.5 {
        return Ok(-lower_quantile(1.0 - p));
    }
    Ok(lower_quantile(p))
}

/// Quantile for p ≤ 0.5; the root lies in [−40, 0].
fn lower_quantile(p: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    let (mut lo, mut hi) = (-40.0f64, 0.0f64);
    let mut x = -1.0;
    for _ in 0..200 {
        // arguments stay finite, so the cdf cannot fail
        let f = normal_cdf(x).unwrap() - p;
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let pdf = normal_pdf(x);
        let mut next = if pdf > 0.0 { x - f / pdf } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * x.abs().max(1e-300) || hi - lo <= f64::EPSILON * lo.abs() {
            return next;
        }
        x = next;
    }
    x
}

/// K_{α/2}: the central-(1 − α) standard normal quantile.
pub fn central_quantile(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(MoebiusError::invalid(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    normal_quantile(1.0 - alpha / 2.0)
}

/// Asymptotic probability that M(n) > C√n when M(n)/√(6n/π²) is standard normal.
pub fn mertens_type_prob(c: f64) -> Result<f64> {
    if c <= 0.0 || !c.is_finite() {
        return Err(MoebiusError::invalid(format!(
            "C must be positive, got {c}"
        )));
    }
    normal_sf(c / SQUAREFREE_DENSITY.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// σ·K_{α/2}·√n from the normal approximation.
    Clt,
    /// σ/√α·√n from the variance (Chebyshev) interval.
    Chebyshev,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub n: usize,
    pub alpha: f64,
    /// K_{α/2} for [`BoundKind::Clt`], 1/√α for [`BoundKind::Chebyshev`].
    pub k_alpha_2: f64,
    pub bound: f64,
    pub observed_m: i64,
    /// observed_m ≤ bound.
    pub holds: bool,
    /// |observed_m| ≤ bound.
    pub holds_two_sided: bool,
    /// Probability with which the bound is claimed to hold (at least 1 − α).
    pub probability: f64,
    /// ±(σ/√n)·K_{α/2}, the interval for the mean of μ (CLT only).
    pub mean_interval: Option<[f64; 2]>,
    /// M(n) recomputed as Σ (−1)^ω(k) over squarefree k ≤ n (Chebyshev only).
    pub squarefree_m: Option<i64>,
}

fn observed(series: &MertensSeries, n: usize) -> Result<i64> {
    if n == 0 {
        return Err(MoebiusError::invalid("n must be at least 1"));
    }
    series.get(n).ok_or_else(|| {
        MoebiusError::invalid(format!(
            "n = {n} exceeds Mertens series length {}",
            series.n_max()
        ))
    })
}

/// M(n) ≤ √(6/π²)·K_{α/2}·√n, holding with probability 1 − α under the model.
pub fn clt_bound(n: usize, alpha: f64, series: &MertensSeries) -> Result<BoundReport> {
    let k = central_quantile(alpha)?;
    let observed_m = observed(series, n)?;
    let sigma = SQUAREFREE_DENSITY.sqrt();
    let rn = (n as f64).sqrt();
    let bound = sigma * k * rn;
    let half_width = sigma / rn * k;
    Ok(BoundReport {
        kind: BoundKind::Clt,
        n,
        alpha,
        k_alpha_2: k,
        bound,
        observed_m,
        holds: observed_m as f64 <= bound,
        holds_two_sided: (observed_m.unsigned_abs() as f64) <= bound,
        probability: 1.0 - alpha,
        mean_interval: Some([-half_width, half_width]),
        squarefree_m: None,
    })
}

/// M(n) ≤ √(6/π²)/√α·√n with probability above 1 − α, for 0 < α ≤ 1.
///
/// Recomputes M(n) from ω over squarefree k ≤ n and fails if it disagrees
/// with `series`.
pub fn chebyshev_bound(
    n: usize,
    alpha: f64,
    series: &MertensSeries,
    omega: &OmegaTable,
) -> Result<BoundReport> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(MoebiusError::invalid(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    let observed_m = observed(series, n)?;
    if n > omega.n_max() {
        return Err(MoebiusError::invalid(format!(
            "n = {n} exceeds ω table length {}",
            omega.n_max()
        )));
    }
    let squarefree_m: i64 = omega.omegas()[..n]
        .iter()
        .zip(&omega.squarefree_flags()[..n])
        .filter(|(_, &sf)| sf)
        .map(|(&w, _)| if w % 2 == 0 { 1 } else { -1 })
        .sum();
    if squarefree_m != observed_m {
        return Err(MoebiusError::IdentityViolation {
            index: n as u64,
            detail: format!(
                "squarefree (-1)^ω sum {squarefree_m} differs from M(n) = {observed_m}"
            ),
        });
    }
    let bound = (SQUAREFREE_DENSITY / alpha).sqrt() * (n as f64).sqrt();
    Ok(BoundReport {
        kind: BoundKind::Chebyshev,
        n,
        alpha,
        k_alpha_2: 1.0 / alpha.sqrt(),
        bound,
        observed_m,
        holds: observed_m as f64 <= bound,
        holds_two_sided: (observed_m.unsigned_abs() as f64) <= bound,
        probability: 1.0 - alpha,
        mean_interval: None,
        squarefree_m: Some(squarefree_m),
    })
}

fn clt_blocks(values: &[i8], block_len: usize) -> Result<std::slice::ChunksExact<'_, i8>> {
    if block_len < CLT_MIN_BLOCK_LEN {
        return Err(MoebiusError::invalid(format!(
            "block length {block_len} is below the CLT minimum {CLT_MIN_BLOCK_LEN}"
        )));
    }
    let blocks = values.len() / block_len;
    if blocks < CLT_MIN_BLOCKS {
        return Err(MoebiusError::invalid(format!(
            "{blocks} blocks of length {block_len}; need at least {CLT_MIN_BLOCKS}"
        )));
    }
    Ok(values[..blocks * block_len].chunks_exact(block_len))
}

/// Per block, Σμ / √(6N/π²). Approximately N(0, 1) under the i.i.d. model.
pub fn normalized_mertens_samples(values: &[i8], block_len: usize) -> Result<Vec<f64>> {
    let scale = (SQUAREFREE_DENSITY * block_len as f64).sqrt();
    Ok(clt_blocks(values, block_len)?
        .map(|b| b.iter().map(|&v| i64::from(v)).sum::<i64>() as f64 / scale)
        .collect())
}

fn standardize_abs_sum(count: usize, n: usize) -> f64 {
    let d = SQUAREFREE_DENSITY;
    let n = n as f64;
    (count as f64 - d * n) / (n * d * (1.0 - d)).sqrt()
}

/// (Σ_{k≤n} |μ(k)| − 6n/π²) / √(n·(6/π²)(1 − 6/π²)).
pub fn abs_sum_stat(values: &[i8], n: usize) -> Result<f64> {
    if n == 0 {
        return Err(MoebiusError::invalid("n must be at least 1"));
    }
    if n > values.len() {
        return Err(MoebiusError::invalid(format!(
            "n = {n} exceeds table length {}",
            values.len()
        )));
    }
    let count = values[..n].iter().filter(|&&v| v != 0).count();
    Ok(standardize_abs_sum(count, n))
}

/// The same standardization applied to each disjoint block of `block_len`.
pub fn abs_sum_block_samples(values: &[i8], block_len: usize) -> Result<Vec<f64>> {
    Ok(clt_blocks(values, block_len)?
        .map(|b| standardize_abs_sum(b.iter().filter(|&&v| v != 0).count(), block_len))
        .collect())
}

/// P{Σ_{k≤n} |μ(k)| > Cn} under the normal approximation.
pub fn abs_sum_exceedance(c: f64, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(MoebiusError::invalid("n must be at least 1"));
    }
    check_finite(c)?;
    let d = SQUAREFREE_DENSITY;
    let n = n as f64;
    normal_sf((c - d) * n / (n * d * (1.0 - d)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub center: f64,
    pub density: f64,
}

/// Density histogram over `range` with equal-width bins. Samples outside the
/// range are ignored; the densities of the remaining ones integrate to 1.
pub fn histogram(
    samples: &[f64],
    bin_count: usize,
    range: (f64, f64),
) -> Result<Vec<HistogramBin>> {
    let (lo, hi) = range;
    if bin_count == 0 {
        return Err(MoebiusError::invalid("bin count must be at least 1"));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(MoebiusError::invalid(format!("empty range [{lo}, {hi}]")));
    }
    if samples.is_empty() {
        return Err(MoebiusError::invalid("no samples"));
    }
    let width = (hi - lo) / bin_count as f64;
    let mut counts = vec![0u64; bin_count];
    let mut inside = 0u64;
    for &s in samples {
        if !(lo..=hi).contains(&s) {
            continue;
        }
        let idx = (((s - lo) / width) as usize).min(bin_count - 1);
        counts[idx] += 1;
        inside += 1;
    }
    if inside == 0 {
        return Err(MoebiusError::invalid(format!(
            "no sample falls inside [{lo}, {hi}]"
        )));
    }
    Ok(counts
        .iter()
        .enumerate()
        .map(|(i, &c)| HistogramBin {
            center: lo + (i as f64 + 0.5) * width,
            density: c as f64 / (inside as f64 * width),
        })
        .collect())
}

/// Sample mean and unbiased sample variance.
pub fn mean_and_variance(samples: &[f64]) -> Option<(f64, f64)> {
    if samples.len() < 2 {
        return None;
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, var))
}
