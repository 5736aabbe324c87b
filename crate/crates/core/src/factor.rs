//! Randomized factorization of squarefree polynomials by supersingular
//! separation: draw a random CM elliptic module φ, lift its Hasse
//! invariant modulo f, and split f as γ = gcd(h̄, f), the product of the
//! factors where φ is supersingular — an event of probability about 1/2
//! independently per factor, so a few draws separate any pair.

use crate::drinfeld;
use crate::field::{ElementSource, FieldCtx, FieldElem};
use crate::frobenius::ModulusCtx;
use crate::hasse;
use crate::poly::{self, Poly};
use crate::{Error, Result};
use std::fmt;

/// Fresh draws of a before a stalled split becomes an error. Each draw
/// splits a reducible f with probability at least 1/4 (empirically near
/// 1/2) whenever q is large enough relative to deg f, so 128 failures
/// indicate a genuinely degenerate instance rather than bad luck.
pub const SPLIT_RETRY_CAP: usize = 128;

/// One split attempt: the drawn point and how the gcd came out.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitAttempt {
    pub a: u64,
    pub gamma_degree: usize,
    pub cofactor_degree: usize,
    pub trivial: bool,
}

/// Diagnostic record of every draw a split made before succeeding or
/// giving up.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SplitAttemptLog {
    pub attempts: Vec<SplitAttempt>,
}

impl fmt::Display for SplitAttemptLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.attempts.is_empty() {
            return write!(f, "no attempts recorded");
        }
        const SHOWN: usize = 8;
        write!(f, "draws")?;
        for at in self.attempts.iter().take(SHOWN) {
            write!(f, " a={}→γ-deg {}", at.a, at.gamma_degree)?;
        }
        if self.attempts.len() > SHOWN {
            write!(f, " … ({} more)", self.attempts.len() - SHOWN)?;
        }
        Ok(())
    }
}

/// Complete factorization: monic irreducible factors with multiplicities,
/// sorted by degree then coefficients, plus the leading unit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorizationResult {
    pub factors: Vec<(Poly, u64)>,
    pub unit: FieldElem,
}

impl FactorizationResult {
    /// unit · ∏ factorᵐ, for round-trip checks.
    pub fn reconstruct(&self, fctx: &FieldCtx) -> Poly {
        let mut acc = Poly::constant(self.unit);
        for (p, m) in &self.factors {
            for _ in 0..*m {
                acc = acc.mul(p, fctx);
            }
        }
        acc
    }
}

/// One supersingular/ordinary split of a monic squarefree f (degree ≥ 2,
/// no linear factors, not irreducible): repeatedly draw a, build the CM
/// module at a, and compute γ = gcd(r_n, r_{n+1}, f) in one gcd chain.
/// Returns the first nontrivial (γ, f/γ); errors with the full attempt
/// log once the retry cap is spent.
pub fn split_once(
    f: &Poly,
    fctx: &FieldCtx,
    src: &mut dyn ElementSource,
) -> Result<(Poly, Poly)> {
    let f = f.monic(fctx);
    let ctx = ModulusCtx::new(&f, fctx)?;
    let n = ctx.n();
    let mut log = SplitAttemptLog::default();
    for _ in 0..SPLIT_RETRY_CAP {
        let a = src.draw(fctx);
        let phi = drinfeld::cm_module(a, &ctx)?;
        let (r_n, r_n1) = hasse::hasse_lift(&phi, &ctx)?;
        let hbar = poly::gcd(r_n.poly(), r_n1.poly(), fctx);
        let gamma = poly::gcd(&hbar, &f, fctx);
        let gamma_degree = if gamma.is_constant() { 0 } else { gamma.degree() };
        let trivial = gamma_degree == 0 || gamma_degree == n;
        log.attempts.push(SplitAttempt {
            a: a.value(),
            gamma_degree,
            cofactor_degree: n - gamma_degree,
            trivial,
        });
        if !trivial {
            let cofactor = f.div_exact(&gamma, fctx)?;
            return Ok((gamma, cofactor));
        }
    }
    Err(Error::RetryCapExhausted { log })
}

/// Irreducible factors of a monic squarefree f, sorted: emit f if
/// irreducible, strip the linear factors once up front, then split
/// recursively. Every prime divisor of a CM module's Δ is linear, so once
/// the linear factors are gone no draw of a can hit bad reduction.
pub fn factor_squarefree(
    f: &Poly,
    fctx: &FieldCtx,
    src: &mut dyn ElementSource,
) -> Result<Vec<Poly>> {
    if f.is_constant() {
        return Err(Error::ConstantPolynomial);
    }
    let f = f.monic(fctx);
    if !poly::gcd(&f, &f.derivative(fctx), fctx).is_one() {
        return Err(Error::NotSquarefree);
    }
    let mut out = Vec::new();
    if poly::is_irreducible(&f, fctx) {
        out.push(f);
        return Ok(out);
    }
    let (roots, cofactor) = poly::linear_roots(&f, fctx, src)?;
    for r in roots {
        out.push(Poly::from_coeffs(vec![fctx.neg(r), fctx.one()]));
    }
    split_rec(cofactor, fctx, src, &mut out)?;
    out.sort_by(poly::cmp_by_degree_then_coeffs);
    Ok(out)
}

fn split_rec(
    f: Poly,
    fctx: &FieldCtx,
    src: &mut dyn ElementSource,
    out: &mut Vec<Poly>,
) -> Result<()> {
    if f.is_one() {
        return Ok(());
    }
    if poly::is_irreducible(&f, fctx) {
        out.push(f);
        return Ok(());
    }
    let (gamma, cofactor) = split_once(&f, fctx, src)?;
    split_rec(gamma, fctx, src, out)?;
    split_rec(cofactor, fctx, src, out)
}

/// Full factorization of an arbitrary nonconstant f: squarefree
/// decomposition first, then the supersingular splitter on each
/// squarefree component.
pub fn factor(f: &Poly, fctx: &FieldCtx, src: &mut dyn ElementSource) -> Result<FactorizationResult> {
    if f.is_zero() {
        return Err(Error::InvalidInput("cannot factor the zero polynomial".into()));
    }
    if f.is_constant() {
        return Err(Error::ConstantPolynomial);
    }
    let unit = f.leading();
    let mut factors: Vec<(Poly, u64)> = Vec::new();
    for (component, multiplicity) in poly::squarefree_part(f, fctx)? {
        for p in factor_squarefree(&component, fctx, src)? {
            factors.push((p, multiplicity));
        }
    }
    factors.sort_by(|a, b| poly::cmp_by_degree_then_coeffs(&a.0, &b.0));
    Ok(FactorizationResult { factors, unit })
}
