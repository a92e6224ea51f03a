//! Dense exact-integer versions of the divisibility matrix U, its inverse V
//! (v_ij = μ(j/i) when i | j) and the Redheffer matrix R = S + U.
//!
//! Indices in the public API are 1-based to match the matrix definitions;
//! matrices are the leading n×n principal blocks of the infinite ones.

use num_bigint::BigInt;

use crate::error::{MoebiusError, Result};

/// Largest dimension accepted by the dense builders.
pub const DENSE_MAX_DIM: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    n: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(n: usize) -> Self {
        IntMatrix {
            n,
            data: vec![0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 1..=n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> i64) -> Self {
        let mut m = Self::zeros(n);
        for i in 1..=n {
            for j in 1..=n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Entry (i, j), 1-based.
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[(i - 1) * self.n + (j - 1)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: i64) {
        self.data[(i - 1) * self.n + (j - 1)] = v;
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.data[(i - 1) * self.n..i * self.n]
    }

    pub fn column(&self, j: usize) -> Vec<i64> {
        (1..=self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i))
    }

    /// Exact product; entries of the matrices handled here stay far below i64 range.
    pub fn mul(&self, rhs: &IntMatrix) -> IntMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        let n = self.n;
        let mut out = IntMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn is_identity(&self) -> bool {
        (1..=self.n).all(|i| (1..=self.n).all(|j| self.get(i, j) == i64::from(i == j)))
    }

    pub fn is_upper_unitriangular(&self) -> bool {
        (1..=self.n).all(|i| self.get(i, i) == 1 && (1..i).all(|j| self.get(i, j) == 0))
    }
}

macro_rules! matrix_newtype {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq, Eq)]
        pub struct $name(IntMatrix);

        impl $name {
            pub fn matrix(&self) -> &IntMatrix {
                &self.0
            }

            pub fn into_matrix(self) -> IntMatrix {
                self.0
            }
        }
    };
}

matrix_newtype!(
    /// U: u_ij = 1 iff i | j.
    DivisibilityMatrix
);
matrix_newtype!(
    /// V = U⁻¹: v_ij = μ(j/i) if i | j, else 0.
    MoebiusInverseMatrix
);
matrix_newtype!(
    /// R: r_ij = 1 iff j = 1 or i | j.
    RedhefferMatrix
);

fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > DENSE_MAX_DIM {
        return Err(MoebiusError::invalid(format!(
            "dense dimension must lie in 1..={DENSE_MAX_DIM}, got {n}"
        )));
    }
    Ok(())
}

pub fn build_divisibility(n: usize) -> Result<DivisibilityMatrix> {
    check_dim(n)?;
    Ok(DivisibilityMatrix(IntMatrix::from_fn(n, |i, j| {
        i64::from(j % i == 0)
    })))
}

/// `mu[k - 1]` must hold μ(k) for k ≤ n.
pub fn build_moebius_inverse(n: usize, mu: &[i8]) -> Result<MoebiusInverseMatrix> {
    check_dim(n)?;
    if mu.len() < n {
        return Err(MoebiusError::invalid(format!(
            "μ table holds {} values, matrix needs {n}",
            mu.len()
        )));
    }
    Ok(MoebiusInverseMatrix(IntMatrix::from_fn(n, |i, j| {
        if j % i == 0 {
            i64::from(mu[j / i - 1])
        } else {
            0
        }
    })))
}

pub fn build_redheffer(n: usize) -> Result<RedhefferMatrix> {
    check_dim(n)?;
    Ok(RedhefferMatrix(IntMatrix::from_fn(n, |i, j| {
        i64::from(j == 1 || j % i == 0)
    })))
}

/// S: s_ij = 1 iff j = 1 and i ≠ 1.
pub fn first_column_shift(n: usize) -> IntMatrix {
    IntMatrix::from_fn(n, |i, j| i64::from(j == 1 && i != 1))
}

impl RedhefferMatrix {
    /// Checks R = S + U entrywise.
    pub fn decomposes(&self, u: &DivisibilityMatrix) -> bool {
        let n = self.0.dim();
        if u.0.dim() != n {
            return false;
        }
        let s = first_column_shift(n);
        (1..=n).all(|i| (1..=n).all(|j| self.0.get(i, j) == s.get(i, j) + u.0.get(i, j)))
    }
}

/// True iff U·V and V·U are both the identity in exact arithmetic.
pub fn verify_inverse(n: usize, mu: &[i8]) -> Result<bool> {
    let u = build_divisibility(n)?;
    let v = build_moebius_inverse(n, mu)?;
    Ok(u.0.mul(&v.0).is_identity() && v.0.mul(&u.0).is_identity())
}

/// Also checks the transposed form Vᵀ·Uᵀ = I.
pub fn verify_inverse_transposed(n: usize, mu: &[i8]) -> Result<bool> {
    let u = build_divisibility(n)?;
    let v = build_moebius_inverse(n, mu)?;
    Ok(v.0.transpose().mul(&u.0.transpose()).is_identity())
}

/// Solves the first row of U⁻¹ column by column: v_1i = −Σ_{k<i} v_1k u_ki.
pub fn first_row_by_recursion(u: &DivisibilityMatrix) -> Vec<i64> {
    let n = u.0.dim();
    let mut row = vec![0i64; n];
    row[0] = 1;
    for i in 2..=n {
        let s: i64 = (1..i).map(|k| row[k - 1] * u.0.get(k, i)).sum();
        row[i - 1] = -s;
    }
    row
}

/// Exact determinant by fraction-free (Bareiss) elimination.
///
/// Runs in i128 with checked arithmetic and restarts in arbitrary precision
/// if any intermediate leaves that range.
pub fn bareiss_determinant(m: &IntMatrix) -> BigInt {
    let rows: Vec<Vec<i128>> = (1..=m.dim())
        .map(|i| m.row(i).iter().map(|&x| i128::from(x)).collect())
        .collect();
    match bareiss_i128(rows) {
        Some(d) => BigInt::from(d),
        None => {
            let rows = (1..=m.dim())
                .map(|i| m.row(i).iter().map(|&x| BigInt::from(x)).collect())
                .collect();
            bareiss_big(rows)
        }
    }
}

fn bareiss_i128(mut a: Vec<Vec<i128>>) -> Option<i128> {
    let n = a.len();
    if n == 0 {
        return Some(1);
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&r| a[r][k] != 0) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return Some(0),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = a[k][k]
                    .checked_mul(a[i][j])?
                    .checked_sub(a[i][k].checked_mul(a[k][j])?)?;
                a[i][j] = t / prev;
            }
            a[i][k] = 0;
        }
        prev = a[k][k];
    }
    a[n - 1][n - 1].checked_mul(sign)
}

fn bareiss_big(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::from(1);
    }
    let zero = BigInt::from(0);
    let mut negate = false;
    let mut prev = BigInt::from(1);
    for k in 0..n - 1 {
        if a[k][k] == zero {
            match (k + 1..n).find(|&r| a[r][k] != zero) {
                Some(r) => {
                    a.swap(k, r);
                    negate = !negate;
                }
                None => return zero,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = &a[k][k] * &a[i][j] - &a[i][k] * &a[k][j];
                a[i][j] = t / &prev;
            }
            a[i][k] = zero.clone();
        }
        prev = a[k][k].clone();
    }
    let d = a[n - 1][n - 1].clone();
    if negate {
        -d
    } else {
        d
    }
}

/// det(R_n), which equals M(n).
pub fn redheffer_determinant(n: usize) -> Result<BigInt> {
    Ok(bareiss_determinant(build_redheffer(n)?.matrix()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mu::{build_mu_sieve, mertens_prefix};

    /// Cofactor expansion along the first row; exponential, small n only.
    fn cofactor_det(m: &[Vec<i64>]) -> i64 {
        let n = m.len();
        if n == 1 {
            return m[0][0];
        }
        (0..n)
            .map(|c| {
                let minor: Vec<Vec<i64>> = m[1..]
                    .iter()
                    .map(|r| {
                        r.iter()
                            .enumerate()
                            .filter(|(j, _)| *j != c)
                            .map(|(_, &x)| x)
                            .collect()
                    })
                    .collect();
                let s = if c % 2 == 0 { 1 } else { -1 };
                s * m[0][c] * cofactor_det(&minor)
            })
            .sum()
    }

    fn rows(m: &IntMatrix) -> Vec<Vec<i64>> {
        (1..=m.dim()).map(|i| m.row(i).to_vec()).collect()
    }

    #[test]
    fn divisibility_examples() {
        assert_eq!(build_divisibility(1).unwrap().matrix().row(1), &[1]);
        let u3 = build_divisibility(3).unwrap();
        assert_eq!(
            rows(u3.matrix()),
            vec![vec![1, 1, 1], vec![0, 1, 0], vec![0, 0, 1]]
        );
        let u6 = build_divisibility(6).unwrap();
        assert_eq!(u6.matrix().row(2), &[0, 1, 0, 1, 0, 1]);
        assert!(u6.matrix().is_upper_unitriangular());
        assert!(u6.matrix().row(1).iter().all(|&x| x == 1));
    }

    #[test]
    fn dimension_guard() {
        assert!(build_divisibility(0).is_err());
        assert!(build_divisibility(DENSE_MAX_DIM + 1).is_err());
        assert!(build_redheffer(DENSE_MAX_DIM + 1).is_err());
        assert!(build_divisibility(DENSE_MAX_DIM).is_ok());
    }

    #[test]
    fn inverse_examples() {
        let (mu, _) = build_mu_sieve(64).unwrap();
        let v1 = build_moebius_inverse(1, mu.values()).unwrap();
        assert_eq!(v1.matrix().row(1), &[1]);
        let v6 = build_moebius_inverse(6, mu.values()).unwrap();
        assert_eq!(v6.matrix().row(1), &[1, -1, -1, 0, -1, 1]);
        assert_eq!(v6.matrix().get(2, 6), -1);
        assert!(v6.matrix().is_upper_unitriangular());
        assert!(build_moebius_inverse(10, &mu.values()[..5]).is_err());
    }

    #[test]
    fn inverse_identity() {
        let (mu, _) = build_mu_sieve(128).unwrap();
        assert!(verify_inverse(1, mu.values()).unwrap());
        assert!(verify_inverse(64, mu.values()).unwrap());
        assert!(verify_inverse_transposed(64, mu.values()).unwrap());
        let mut bad = mu.values()[..6].to_vec();
        bad[5] = 0;
        assert!(!verify_inverse(6, &bad).unwrap());
    }

    #[test]
    fn redheffer_examples() {
        assert_eq!(build_redheffer(1).unwrap().matrix().row(1), &[1]);
        let r6 = build_redheffer(6).unwrap();
        assert!(r6.matrix().column(1).iter().all(|&x| x == 1));
        assert_eq!(r6.matrix().row(3), &[1, 0, 1, 0, 0, 1]);
        for n in 1..=40 {
            let r = build_redheffer(n).unwrap();
            assert!(r.decomposes(&build_divisibility(n).unwrap()));
        }
    }

    #[test]
    fn small_determinants_by_cofactors() {
        assert_eq!(redheffer_determinant(1).unwrap(), BigInt::from(1));
        assert_eq!(redheffer_determinant(2).unwrap(), BigInt::from(0));
        assert_eq!(redheffer_determinant(6).unwrap(), BigInt::from(-1));
        for n in 1..=8 {
            let r = build_redheffer(n).unwrap();
            assert_eq!(
                redheffer_determinant(n).unwrap(),
                BigInt::from(cofactor_det(&rows(r.matrix()))),
                "n = {n}"
            );
        }
    }

    #[test]
    fn determinant_equals_mertens() {
        let (mu, _) = build_mu_sieve(128).unwrap();
        let m = mertens_prefix(mu.values()).unwrap();
        for n in 1..=128 {
            assert_eq!(
                redheffer_determinant(n).unwrap(),
                BigInt::from(m.get(n).unwrap())
            );
        }
    }

    #[test]
    fn bareiss_handles_pivoting_and_overflow() {
        let m = IntMatrix::from_fn(2, |i, j| [[0, 1], [1, 0]][i - 1][j - 1]);
        assert_eq!(bareiss_determinant(&m), BigInt::from(-1));
        let singular = IntMatrix::from_fn(3, |i, j| (i * j) as i64);
        assert_eq!(bareiss_determinant(&singular), BigInt::from(0));
        // diag(2^62, 2^62, 2^62): the i128 route overflows and must escalate
        let big = IntMatrix::from_fn(3, |i, j| if i == j { 1 << 62 } else { 0 });
        assert_eq!(bareiss_determinant(&big), BigInt::from(1u8) << 186);
        for n in 1..=6 {
            let m = IntMatrix::from_fn(n, |i, j| ((i * 7 + j * 3) % 5) as i64 - 2);
            assert_eq!(
                bareiss_determinant(&m),
                BigInt::from(cofactor_det(&rows(&m)))
            );
        }
    }

    #[test]
    fn first_row_recursion_reproduces_mu() {
        let (mu, _) = build_mu_sieve(128).unwrap();
        let u = build_divisibility(128).unwrap();
        let row = first_row_by_recursion(&u);
        let expected: Vec<i64> = mu.values().iter().map(|&v| i64::from(v)).collect();
        assert_eq!(row, expected);
    }
}
