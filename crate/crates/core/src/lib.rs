//! Computer algebra over prime fields F_q, built around rank-2 Drinfeld
//! (elliptic) modules: a baby-step/giant-step engine for lifting Hasse
//! invariants modulo a squarefree polynomial, and a randomized polynomial
//! factorization algorithm driven by supersingularity splitting.
//!
//! Layering, bottom to top:
//!
//! * [`field`] — arithmetic in F_q for odd prime q < 2^62.
//! * [`poly`] — dense univariate polynomials over F_q: fast multiplication,
//!   remainder, gcd, squarefree decomposition, irreducibility, root finding,
//!   multipoint evaluation of 2×2 matrix polynomials.
//! * [`frobenius`] — the residue ring K = F_q[x]/f, modular composition, and
//!   the Frobenius-power toolkit: ξ_i = τ^i(ξ) for i ∈ ℤ, batch application,
//!   geometric ξ sequences, twisted products and sums.
//! * [`drinfeld`] — elliptic modules φ(x) = x + g_φ τ + Δ_φ τ², skew
//!   polynomials as a brute-force oracle, the Gekeler recurrence,
//!   supersingularity, and CM module construction.
//! * [`hasse`] — the fast Hasse-invariant lift: matrix recurrence A_k, the
//!   polynomial matrix ℬ, baby-step/giant-step blocks, and h̄.
//! * [`factor`] — randomized recursive factorization of squarefree
//!   polynomials by separating supersingular from ordinary factors.

pub mod drinfeld;
pub mod factor;
pub mod field;
pub mod frobenius;
pub mod hasse;
pub mod poly;

mod kpoly;
mod ntt;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
