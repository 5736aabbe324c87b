//! Rank-2 Drinfeld (elliptic) modules over F_q[x]: skew-polynomial
//! evaluation as a brute-force oracle, the Gekeler recurrence for the
//! Hasse invariant, supersingularity tests, and the CM construction used
//! by the factorization algorithm.

use std::sync::Arc;

use crate::field::{FieldCtx, FieldElem};
use crate::frobenius::{ModulusCtx, ResidueElem};
use crate::poly::{self, Poly};
use crate::{Error, Result};

/// Rank-2 module φ(x) = x + g·τ + Δ·τ², Δ ≠ 0. When the module came from
/// the CM construction, the chosen point a (and d = x − a) is kept as
/// provenance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EllipticModule {
    g: Poly,
    delta: Poly,
    cm: Option<(FieldElem, Poly)>,
}

impl EllipticModule {
    pub fn new(g: Poly, delta: Poly) -> Result<EllipticModule> {
        if delta.is_zero() {
            return Err(Error::InvalidInput(
                "an elliptic module needs a nonzero leading coefficient Δ".into(),
            ));
        }
        Ok(EllipticModule {
            g,
            delta,
            cm: None,
        })
    }

    pub fn g(&self) -> &Poly {
        &self.g
    }

    pub fn delta(&self) -> &Poly {
        &self.delta
    }

    /// CM provenance: the point a and d = x − a, when built by [`cm_module`].
    pub fn cm(&self) -> Option<&(FieldElem, Poly)> {
        self.cm.as_ref()
    }
}

/// Skew polynomial Σ cᵢ·τ^i over K = F_q[x]/f with τu = u^q·τ; index i
/// holds the coefficient of τ^i, trailing zeros trimmed. Quadratic-time
/// oracle machinery, not a performance path: every Frobenius twist inside
/// [`skew_mul`] is an explicit q-th powering.
#[derive(Clone, Debug)]
pub struct SkewPoly {
    coeffs: Vec<ResidueElem>,
    ctx: Arc<ModulusCtx>,
}

impl PartialEq for SkewPoly {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.ctx, &other.ctx) && self.coeffs == other.coeffs
    }
}

impl SkewPoly {
    pub fn new(coeffs: Vec<ResidueElem>) -> Result<SkewPoly> {
        let first = coeffs
            .first()
            .ok_or_else(|| Error::InvalidInput("a skew polynomial needs a coefficient".into()))?;
        let ctx = first.ctx().clone();
        for c in &coeffs {
            if !Arc::ptr_eq(c.ctx(), &ctx) {
                return Err(Error::ContextMismatch);
            }
        }
        let mut out = SkewPoly { coeffs, ctx };
        out.trim();
        Ok(out)
    }

    pub fn zero(ctx: &Arc<ModulusCtx>) -> SkewPoly {
        SkewPoly {
            coeffs: Vec::new(),
            ctx: ctx.clone(),
        }
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(ResidueElem::is_zero) {
            self.coeffs.pop();
        }
    }

    pub fn ctx(&self) -> &Arc<ModulusCtx> {
        &self.ctx
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// τ-degree; 0 for the zero polynomial.
    pub fn deg_tau(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Coefficient of τ^i, zero beyond the degree.
    pub fn coeff(&self, i: usize) -> ResidueElem {
        self.coeffs
            .get(i)
            .cloned()
            .unwrap_or_else(|| ResidueElem::from_poly(Poly::zero(), &self.ctx))
    }

    pub fn add(&self, other: &SkewPoly) -> Result<SkewPoly> {
        if !Arc::ptr_eq(&self.ctx, &other.ctx) {
            return Err(Error::ContextMismatch);
        }
        let fctx = self.ctx.fctx();
        let len = self.coeffs.len().max(other.coeffs.len());
        let zero = Poly::zero();
        let coeffs = (0..len)
            .map(|i| {
                let a = self.coeffs.get(i).map_or(&zero, |c| c.poly());
                let b = other.coeffs.get(i).map_or(&zero, |c| c.poly());
                ResidueElem::from_poly(a.add(b, fctx), &self.ctx)
            })
            .collect();
        let mut out = SkewPoly {
            coeffs,
            ctx: self.ctx.clone(),
        };
        out.trim();
        Ok(out)
    }
}

/// Product in K{τ}: (u·τ^i)(v·τ^j) = u·τ^i(v)·τ^{i+j}, extended
/// bilinearly, with τ^i(v) = v^{q^i} computed by repeated q-th powering.
pub fn skew_mul(a: &SkewPoly, b: &SkewPoly) -> Result<SkewPoly> {
    if !Arc::ptr_eq(a.ctx(), b.ctx()) {
        return Err(Error::ContextMismatch);
    }
    let ctx = a.ctx();
    let fctx = ctx.fctx();
    let f = ctx.modulus();
    let q = ctx.q();
    if a.is_zero() || b.is_zero() {
        return Ok(SkewPoly::zero(ctx));
    }
    let mut out = vec![Poly::zero(); a.coeffs.len() + b.coeffs.len() - 1];
    // twisted[j] = τ^i(v_j), advanced by one powering per row i.
    let mut twisted: Vec<Poly> = b.coeffs.iter().map(|c| c.poly().clone()).collect();
    for (i, u) in a.coeffs.iter().enumerate() {
        if i > 0 {
            for t in twisted.iter_mut() {
                *t = poly::pow_mod(t, q, f, fctx).expect("modulus is nonconstant");
            }
        }
        if u.is_zero() {
            continue;
        }
        for (j, v) in twisted.iter().enumerate() {
            let term = ctx.mul_raw(u.poly(), v);
            out[i + j] = out[i + j].add(&term, fctx);
        }
    }
    let coeffs = out
        .into_iter()
        .map(|p| ResidueElem::from_poly(p, ctx))
        .collect();
    let mut res = SkewPoly {
        coeffs,
        ctx: ctx.clone(),
    };
    res.trim();
    Ok(res)
}

/// φ_a mod f as a skew polynomial of τ-degree 2·deg a, by Horner over the
/// coefficients of a with φ_x = ξ + γτ + δτ². Requires good reduction.
pub fn phi_apply(phi: &EllipticModule, a: &Poly, ctx: &Arc<ModulusCtx>) -> Result<SkewPoly> {
    let fctx = ctx.fctx();
    let delta = ctx.reduce(phi.delta.clone());
    let g = poly::gcd(&delta, ctx.modulus(), fctx);
    if !g.is_one() {
        return Err(Error::BadReduction {
            gcd: g.coeffs_u64(),
        });
    }
    let phi_x = SkewPoly::new(vec![
        ResidueElem::from_poly(Poly::x(), ctx),
        ResidueElem::from_poly(phi.g.clone(), ctx),
        ResidueElem::from_poly(delta, ctx),
    ])?;
    let mut acc = SkewPoly::zero(ctx);
    for c in a.coeffs().iter().rev() {
        let constant = SkewPoly {
            coeffs: vec![ResidueElem::from_poly(Poly::constant(*c), ctx)],
            ctx: ctx.clone(),
        };
        acc = skew_mul(&acc, &phi_x)?.add(&constant)?;
    }
    acc.trim();
    Ok(acc)
}

/// r_{φ,k} mod f by the bare recurrence
/// ρ_k = τ^{k−1}(γ)·ρ_{k−1} − (ξ_{k−1} − ξ)·τ^{k−2}(δ)·ρ_{k−2}
/// with ρ_0 = 1, ρ_1 = γ; one Frobenius step (q-th powering) per index.
pub fn gekeler_r(phi: &EllipticModule, ctx: &Arc<ModulusCtx>, k: u64) -> ResidueElem {
    if k == 0 {
        return gekeler_pair(phi, ctx, 0).0;
    }
    gekeler_pair(phi, ctx, k - 1).1
}

/// (ρ_k, ρ_{k+1}) mod f by the same naive iteration; this is the reference
/// path the fast lift is benchmarked against.
pub fn gekeler_pair(
    phi: &EllipticModule,
    ctx: &Arc<ModulusCtx>,
    k: u64,
) -> (ResidueElem, ResidueElem) {
    let fctx = ctx.fctx();
    let f = ctx.modulus();
    let q = ctx.q();
    let tau = |p: &Poly| poly::pow_mod(p, q, f, fctx).expect("modulus is nonconstant");
    let gamma = ctx.reduce(phi.g.clone());
    let delta = ctx.reduce(phi.delta.clone());
    let xi = ctx.reduce(Poly::x());
    let mut prev = Poly::one(); // ρ_{j−1}
    let mut cur = gamma.clone(); // ρ_j, starting at j = 1
    let mut tg = gamma; // τ^{j−1}(γ), advanced before use
    let mut td = delta; // τ^{j−1}(δ), advanced after use
    let mut xj = xi.clone(); // ξ_{j−1}, advanced before use
    for _ in 1..=k {
        tg = tau(&tg);
        xj = tau(&xj);
        let t1 = ctx.mul_raw(&tg, &cur);
        let t2 = ctx.mul_raw(&ctx.mul_raw(&xj.sub(&xi, fctx), &td), &prev);
        let next = t1.sub(&t2, fctx);
        prev = cur;
        cur = next;
        td = tau(&td);
    }
    (
        ResidueElem::from_poly(prev, ctx),
        ResidueElem::from_poly(cur, ctx),
    )
}

/// Hasse invariant of φ at an irreducible f: the coefficient of τ^{deg f}
/// in φ_f mod f. Agrees with `gekeler_r(deg f)` by Deligne's congruence.
pub fn hasse_invariant_irreducible(
    phi: &EllipticModule,
    f: &Poly,
    fctx: &FieldCtx,
) -> Result<ResidueElem> {
    if !poly::is_irreducible(f, fctx) {
        return Err(Error::Reducible);
    }
    let ctx = ModulusCtx::new(f, fctx)?;
    let expansion = phi_apply(phi, f, &ctx)?;
    Ok(expansion.coeff(f.degree()))
}

/// Whether φ has supersingular reduction at the irreducible f, i.e. the
/// Hasse invariant vanishes; evaluated through the recurrence.
pub fn is_supersingular(phi: &EllipticModule, f: &Poly, fctx: &FieldCtx) -> Result<bool> {
    if !poly::is_irreducible(f, fctx) {
        return Err(Error::Reducible);
    }
    let ctx = ModulusCtx::new(f, fctx)?;
    let delta = ctx.reduce(phi.delta.clone());
    let g = poly::gcd(&delta, ctx.modulus(), fctx);
    if !g.is_one() {
        return Err(Error::BadReduction {
            gcd: g.coeffs_u64(),
        });
    }
    Ok(gekeler_r(phi, &ctx, f.degree() as u64).is_zero())
}

/// CM module at the point a: with d = x − a,
/// J = d^{(q+1)/2}·(1 + d^{(q−1)/2})^{q+1} mod f, g = J, Δ = τ(J).
/// Every prime of bad reduction for this module is linear, so for f free
/// of linear factors good reduction is automatic; it is still verified,
/// and a failure reports the offending gcd.
pub fn cm_module(a: FieldElem, ctx: &Arc<ModulusCtx>) -> Result<EllipticModule> {
    let fctx = ctx.fctx();
    let q = ctx.q();
    if q % 2 == 0 {
        return Err(Error::InvalidInput(
            "the CM construction needs odd characteristic".into(),
        ));
    }
    let d = Poly::from_coeffs(vec![fctx.neg(fctx.elem(a.value())), fctx.one()]);
    let half_up = ctx.pow_raw(&d, (q + 1) / 2);
    let half_down = ctx.pow_raw(&d, (q - 1) / 2);
    let unit = ctx.pow_raw(&Poly::one().add(&half_down, fctx), q + 1);
    let j = ctx.mul_raw(&half_up, &unit);
    let delta = ctx.pow_raw(&j, q);
    let g = poly::gcd(&delta, ctx.modulus(), fctx);
    if !g.is_one() {
        return Err(Error::BadReduction {
            gcd: g.coeffs_u64(),
        });
    }
    Ok(EllipticModule {
        g: j,
        delta,
        cm: Some((fctx.elem(a.value()), d)),
    })
}
