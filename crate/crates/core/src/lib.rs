//! Möbius function tables computed from the divisor-sum recursion
//! μ(n) = −Σ_{d | n, d < n} μ(d), cross-checked against a factorization
//! sieve, the primitive-roots-of-unity sum and the Redheffer determinant,
//! plus the statistical and spectral analyses of the resulting sequence.

pub mod cache;
pub mod cli;
pub mod error;
pub mod matrix;
pub mod mu;
pub mod spectral;
pub mod stats;

pub use error::{MoebiusError, Result};
pub use mu::{
    build_mu_recursive, build_mu_sieve, mertens_prefix, mu_recursive_naive, mu_root_of_unity,
    running_mean, MertensSeries, MuTable, OmegaTable, Provenance,
};
