//! μ(1..n) tables: the divisor-sum recursion, a factorization sieve and the
//! roots-of-unity sum as independent routes, plus Mertens prefix sums.

use std::f64::consts::PI;

use num_integer::Integer;

use crate::error::{try_zeroed, MoebiusError, Result};

/// Largest n accepted by [`mu_root_of_unity`].
pub const ROOTS_OF_UNITY_MAX_N: u64 = 10_000;

/// Absolute tolerance on both the rounding residual and the imaginary part of
/// the roots-of-unity sum.
pub const ROOTS_OF_UNITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Recursive,
    Sieve,
    Loaded,
}

/// μ(1..=n_max), one signed byte per entry. `values()[0]` holds μ(1).
///
/// Tables built here satisfy μ(1) = 1. Tables read from disk are only checked
/// to be trits; agreement with an oracle is the job of `verify`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MuTable {
    values: Vec<i8>,
    provenance: Provenance,
}

impl MuTable {
    pub fn from_values(values: Vec<i8>, provenance: Provenance) -> Result<Self> {
        if values.is_empty() {
            return Err(MoebiusError::invalid("a μ table needs at least one entry"));
        }
        if let Some(pos) = values.iter().position(|v| !(-1..=1).contains(v)) {
            return Err(MoebiusError::invalid(format!(
                "entry for n = {} is {}, not a trit",
                pos + 1,
                values[pos]
            )));
        }
        Ok(MuTable { values, provenance })
    }

    pub fn n_max(&self) -> usize {
        self.values.len()
    }

    /// μ(n) for 1 ≤ n ≤ n_max.
    pub fn get(&self, n: usize) -> Option<i8> {
        n.checked_sub(1).and_then(|i| self.values.get(i)).copied()
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn into_values(self) -> Vec<i8> {
        self.values
    }
}

/// ω(n), the number of distinct prime factors, together with a squarefree flag
/// per index. Both come from the factorization sieve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OmegaTable {
    omega: Vec<u8>,
    squarefree: Vec<bool>,
}

impl OmegaTable {
    pub fn n_max(&self) -> usize {
        self.omega.len()
    }

    pub fn omega(&self, n: usize) -> Option<u8> {
        n.checked_sub(1).and_then(|i| self.omega.get(i)).copied()
    }

    pub fn is_squarefree(&self, n: usize) -> Option<bool> {
        n.checked_sub(1)
            .and_then(|i| self.squarefree.get(i))
            .copied()
    }

    pub fn omegas(&self) -> &[u8] {
        &self.omega
    }

    pub fn squarefree_flags(&self) -> &[bool] {
        &self.squarefree
    }
}

/// M(n) = Σ_{k ≤ n} μ(k). `values()[0]` holds M(1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MertensSeries {
    m: Vec<i64>,
}

impl MertensSeries {
    pub fn n_max(&self) -> usize {
        self.m.len()
    }

    pub fn get(&self, n: usize) -> Option<i64> {
        n.checked_sub(1).and_then(|i| self.m.get(i)).copied()
    }

    pub fn values(&self) -> &[i64] {
        &self.m
    }
}

/// Computes μ(1..=n_max) from μ(n) = −Σ_{k | n, k < n} μ(k) alone.
///
/// Runs as a forward sweep: once μ(k) is final it is subtracted at every
/// proper multiple of k. Every proper divisor of n is smaller than n, so μ(n)
/// is final when the sweep reaches it. Work is O(n_max log n_max).
pub fn build_mu_recursive(n_max: usize) -> Result<MuTable> {
    if n_max == 0 {
        return Err(MoebiusError::invalid("n_max must be at least 1"));
    }
    let mut values: Vec<i8> = try_zeroed(n_max, "μ table")?;
    values[0] = 1;
    for k in 1..=n_max {
        let mu_k = values[k - 1];
        // Partial sums may leave i8 range for highly composite n; wrapping
        // arithmetic is exact modulo 256 and the finished value is a trit.
        if !(-1..=1).contains(&mu_k) {
            return Err(MoebiusError::IdentityViolation {
                index: k as u64,
                detail: format!("divisor recursion produced {mu_k}"),
            });
        }
        if mu_k == 0 {
            continue;
        }
        let mut m = 2 * k;
        while m <= n_max {
            values[m - 1] = values[m - 1].wrapping_sub(mu_k);
            m += k;
        }
    }
    Ok(MuTable {
        values,
        provenance: Provenance::Recursive,
    })
}

/// Evaluates the recursion for a single n by scanning every k < n for k | n.
///
/// `prefix[k - 1]` must hold μ(k) for k < n.
pub fn mu_recursive_naive(n: usize, prefix: &[i8]) -> Result<i8> {
    if n < 2 {
        return Err(MoebiusError::invalid(format!(
            "the recursion starts at n = 2, got {n}"
        )));
    }
    if prefix.len() < n - 1 {
        return Err(MoebiusError::invalid(format!(
            "prefix holds {} values, need {}",
            prefix.len(),
            n - 1
        )));
    }
    let sum: i64 = (1..n)
        .filter(|k| n.is_multiple_of(*k))
        .map(|k| i64::from(prefix[k - 1]))
        .sum();
    Ok((-sum) as i8)
}

fn smallest_prime_factors(n_max: usize) -> Result<Vec<u32>> {
    let mut spf: Vec<u32> = try_zeroed(n_max + 1, "smallest-prime-factor sieve")?;
    let mut p = 2usize;
    while p * p <= n_max {
        if spf[p] == 0 {
            let mut m = p * p;
            while m <= n_max {
                if spf[m] == 0 {
                    spf[m] = p as u32;
                }
                m += p;
            }
        }
        p += 1;
    }
    // primes keep spf = 0 until here
    for (n, f) in spf.iter_mut().enumerate().skip(2) {
        if *f == 0 {
            *f = n as u32;
        }
    }
    Ok(spf)
}

/// Independent oracle: μ and ω from smallest-prime-factor factorization.
pub fn build_mu_sieve(n_max: usize) -> Result<(MuTable, OmegaTable)> {
    if n_max == 0 {
        return Err(MoebiusError::invalid("n_max must be at least 1"));
    }
    if n_max > u32::MAX as usize {
        return Err(MoebiusError::invalid(format!(
            "sieve bound {n_max} exceeds 32-bit prime factors"
        )));
    }
    let spf = smallest_prime_factors(n_max)?;
    let mut mu: Vec<i8> = try_zeroed(n_max, "μ table")?;
    let mut omega: Vec<u8> = try_zeroed(n_max, "ω table")?;
    let mut squarefree: Vec<bool> = try_zeroed(n_max, "squarefree flags")?;
    mu[0] = 1;
    squarefree[0] = true;
    for (n, &p) in spf.iter().enumerate().skip(2) {
        let p = p as usize;
        let rest = n / p;
        let repeated = rest.is_multiple_of(p);
        let i = n - 1;
        let j = rest - 1;
        omega[i] = omega[j] + u8::from(!repeated);
        squarefree[i] = squarefree[j] && !repeated;
        mu[i] = if squarefree[i] {
            if omega[i].is_multiple_of(2) {
                1
            } else {
                -1
            }
        } else {
            0
        };
    }
    Ok((
        MuTable {
            values: mu,
            provenance: Provenance::Sieve,
        },
        OmegaTable { omega, squarefree },
    ))
}

/// The primitive n-th roots of unity summed in floating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOfUnitySum {
    pub re: f64,
    pub im: f64,
    /// Nearest integer to `re`.
    pub value: i8,
    /// |re − value|.
    pub residual: f64,
}

pub fn root_of_unity_sum(n: u64) -> Result<RootOfUnitySum> {
    if n == 0 {
        return Err(MoebiusError::invalid("n must be positive"));
    }
    let (mut re, mut im) = (0.0f64, 0.0f64);
    for k in 1..=n {
        if k.gcd(&n) == 1 {
            let theta = 2.0 * PI * (k as f64) / (n as f64);
            re += theta.cos();
            im += theta.sin();
        }
    }
    let rounded = re.round();
    Ok(RootOfUnitySum {
        re,
        im,
        value: rounded.clamp(-128.0, 127.0) as i8,
        residual: (re - rounded).abs(),
    })
}

/// μ(n) as the sum of primitive n-th roots of unity; n ≤ [`ROOTS_OF_UNITY_MAX_N`].
pub fn mu_root_of_unity(n: u64) -> Result<i8> {
    mu_root_of_unity_bounded(n, ROOTS_OF_UNITY_MAX_N)
}

pub fn mu_root_of_unity_bounded(n: u64, max_n: u64) -> Result<i8> {
    if n == 0 || n > max_n {
        return Err(MoebiusError::invalid(format!(
            "roots-of-unity route accepts 1 ≤ n ≤ {max_n}, got {n}"
        )));
    }
    let sum = root_of_unity_sum(n)?;
    if sum.residual >= ROOTS_OF_UNITY_TOLERANCE || sum.im.abs() >= ROOTS_OF_UNITY_TOLERANCE {
        return Err(MoebiusError::NumericalFailure {
            n,
            detail: format!(
                "sum = {} + {}i, rounding residual {:e}",
                sum.re, sum.im, sum.residual
            ),
        });
    }
    if !(-1..=1).contains(&sum.value) {
        return Err(MoebiusError::NumericalFailure {
            n,
            detail: format!("sum rounds to {}, outside {{-1, 0, 1}}", sum.value),
        });
    }
    Ok(sum.value)
}

pub fn mertens_prefix(values: &[i8]) -> Result<MertensSeries> {
    if values.is_empty() {
        return Err(MoebiusError::invalid("empty μ table"));
    }
    let m = values
        .iter()
        .scan(0i64, |acc, &v| {
            *acc += i64::from(v);
            Some(*acc)
        })
        .collect();
    Ok(MertensSeries { m })
}

/// M(n)/n for n = 1..=n_max.
pub fn running_mean(series: &MertensSeries) -> Vec<f64> {
    series
        .m
        .iter()
        .enumerate()
        .map(|(i, &m)| m as f64 / (i + 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Trial-division μ, sharing nothing with the sieve or the recursion.
    fn mu_by_trial_division(mut n: u64) -> i8 {
        let mut sign = 1i8;
        let mut p = 2;
        while p * p <= n {
            if n.is_multiple_of(p) {
                n /= p;
                if n.is_multiple_of(p) {
                    return 0;
                }
                sign = -sign;
            }
            p += 1;
        }
        if n > 1 {
            sign = -sign;
        }
        sign
    }

    #[test]
    fn recursive_small_tables() {
        assert_eq!(
            build_mu_recursive(6).unwrap().values(),
            &[1, -1, -1, 0, -1, 1]
        );
        assert_eq!(build_mu_recursive(1).unwrap().values(), &[1]);
        assert_eq!(build_mu_recursive(30).unwrap().get(30), Some(-1));
    }

    #[test]
    fn zero_n_max_is_rejected() {
        assert!(matches!(
            build_mu_recursive(0),
            Err(MoebiusError::InvalidArgument(_))
        ));
        assert!(matches!(
            build_mu_sieve(0),
            Err(MoebiusError::InvalidArgument(_))
        ));
    }

    #[test]
    fn oversized_request_reports_resource_error() {
        match build_mu_recursive(usize::MAX / 2) {
            Err(MoebiusError::Resource { requested, .. }) => assert_eq!(requested, usize::MAX / 2),
            other => panic!("expected resource error, got {other:?}"),
        }
    }

    #[test]
    fn naive_recursion_examples() {
        assert_eq!(mu_recursive_naive(4, &[1, -1, -1]).unwrap(), 0);
        let prefix = build_mu_recursive(11).unwrap();
        assert_eq!(mu_recursive_naive(12, prefix.values()).unwrap(), 0);
        assert_eq!(mu_recursive_naive(7, prefix.values()).unwrap(), -1);
        assert!(mu_recursive_naive(1, prefix.values()).is_err());
        assert!(mu_recursive_naive(13, &prefix.values()[..5]).is_err());
    }

    #[test]
    fn naive_recursion_matches_sweep() {
        let table = build_mu_recursive(10_000).unwrap();
        for n in 2..=10_000 {
            assert_eq!(
                mu_recursive_naive(n, table.values()).unwrap(),
                table.values()[n - 1],
                "n = {n}"
            );
        }
    }

    #[test]
    fn sieve_examples() {
        let (mu, omega) = build_mu_sieve(30).unwrap();
        assert_eq!(&mu.values()[..10], &[1, -1, -1, 0, -1, 1, -1, 0, 0, 1]);
        assert_eq!(omega.omega(12), Some(2));
        assert_eq!(omega.omega(30), Some(3));
        assert_eq!(mu.get(30), Some(-1));
        assert_eq!(omega.omega(1), Some(0));
        assert_eq!(mu.provenance(), Provenance::Sieve);
    }

    #[test]
    fn sieve_and_recursion_match_trial_division() {
        let rec = build_mu_recursive(5_000).unwrap();
        let (sieve, omega) = build_mu_sieve(5_000).unwrap();
        for n in 1..=5_000usize {
            let expected = mu_by_trial_division(n as u64);
            assert_eq!(rec.get(n), Some(expected), "recursive n = {n}");
            assert_eq!(sieve.get(n), Some(expected), "sieve n = {n}");
            if omega.is_squarefree(n).unwrap() {
                let sign = if omega.omega(n).unwrap() % 2 == 0 {
                    1
                } else {
                    -1
                };
                assert_eq!(expected, sign);
            } else {
                assert_eq!(expected, 0);
            }
        }
    }

    #[test]
    fn recursion_matches_sieve_to_one_million() {
        let rec = build_mu_recursive(1_000_000).unwrap();
        let (sieve, _) = build_mu_sieve(1_000_000).unwrap();
        assert_eq!(rec.values(), sieve.values());
    }

    #[test]
    fn prime_square_multiples_vanish() {
        let table = build_mu_recursive(100_000).unwrap();
        for p in [2usize, 3, 5, 7, 11, 13, 101] {
            for k in 1..=(100_000 / (p * p)) {
                assert_eq!(table.get(p * p * k), Some(0));
            }
        }
    }

    #[test]
    fn divisor_sums_vanish() {
        let table = build_mu_recursive(10_000).unwrap();
        for n in 1..=10_000usize {
            let s: i64 = (1..=n)
                .filter(|d| n % d == 0)
                .map(|d| i64::from(table.values()[d - 1]))
                .sum();
            assert_eq!(s, i64::from(n == 1), "n = {n}");
        }
    }

    #[test]
    fn roots_of_unity_examples() {
        assert_eq!(mu_root_of_unity(1).unwrap(), 1);
        assert_eq!(mu_root_of_unity(4).unwrap(), 0);
        assert_eq!(mu_root_of_unity(6).unwrap(), 1);
        assert!(mu_root_of_unity(0).is_err());
        assert!(mu_root_of_unity(ROOTS_OF_UNITY_MAX_N + 1).is_err());
    }

    #[test]
    fn roots_of_unity_match_sieve() {
        let (sieve, _) = build_mu_sieve(1_000).unwrap();
        for n in 1..=1_000u64 {
            assert_eq!(mu_root_of_unity(n).unwrap(), sieve.values()[n as usize - 1]);
        }
    }

    #[test]
    fn mertens_examples() {
        let m = mertens_prefix(build_mu_recursive(2).unwrap().values()).unwrap();
        assert_eq!(m.values(), &[1, 0]);
        let m = mertens_prefix(build_mu_recursive(10).unwrap().values()).unwrap();
        assert_eq!(m.get(10), Some(-1));
        assert!(mertens_prefix(&[]).is_err());
    }

    #[test]
    fn mertens_at_one_million() {
        // published value M(10^6) = 212
        let (sieve, _) = build_mu_sieve(1_000_000).unwrap();
        let m = mertens_prefix(sieve.values()).unwrap();
        assert_eq!(m.get(1_000_000), Some(212));
    }

    #[test]
    fn running_mean_examples() {
        let (sieve, _) = build_mu_sieve(500_000).unwrap();
        let m = mertens_prefix(sieve.values()).unwrap();
        let mean = running_mean(&m);
        assert_eq!(mean[0], 1.0);
        assert_eq!(mean[1], 0.0);
        assert!(mean[499_999].abs() < 0.01);
        assert!(mean.iter().all(|x| (-1.0..=1.0).contains(x)));
    }

    #[test]
    fn from_values_rejects_non_trits() {
        assert!(MuTable::from_values(vec![1, 2], Provenance::Loaded).is_err());
        assert!(MuTable::from_values(vec![], Provenance::Loaded).is_err());
        assert!(MuTable::from_values(vec![1, -1], Provenance::Loaded).is_ok());
    }
}
