use crate::factor::SplitAttemptLog;

/// Errors shared across the crate.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// The requested modulus is not an odd prime below 2^62.
    #[error("modulus {0} is not an odd prime below 2^62")]
    InvalidModulus(u64),

    /// Division by zero in F_q or by the zero polynomial.
    #[error("division by zero")]
    DivisionByZero,

    /// An operation that needs a nonconstant polynomial got a constant.
    #[error("polynomial is constant")]
    ConstantPolynomial,

    /// The modulus of a residue ring must be squarefree.
    #[error("modulus is not squarefree")]
    NotSquarefree,

    /// Operands belong to different residue-ring contexts.
    #[error("residue elements belong to different modulus contexts")]
    ContextMismatch,

    /// gcd(Δ_φ, f) ≠ 1, so φ does not have good reduction at every factor
    /// of f. Carries the offending gcd's ascending coefficients.
    #[error("bad reduction: gcd(Δ, f) = {}", crate::poly::coeffs_string(.gcd))]
    BadReduction { gcd: Vec<u64> },

    /// An operation that needs an irreducible polynomial got a reducible one.
    #[error("polynomial is reducible")]
    Reducible,

    /// Every attempted split was trivial. The log records each draw; this
    /// signals q too small relative to deg f (factors indistinguishable by
    /// supersingularity at any a; factoring over an extension field is out
    /// of scope here).
    #[error("split retry cap exhausted after {} draws; {}", .log.attempts.len(), .log)]
    RetryCapExhausted { log: SplitAttemptLog },

    /// A linear solve that squarefreeness guarantees solvable was singular.
    #[error("internal: Frobenius solve singular on a squarefree modulus")]
    SingularSolve,

    /// Catch-all for violated preconditions (message explains which).
    #[error("{0}")]
    InvalidInput(String),
}
