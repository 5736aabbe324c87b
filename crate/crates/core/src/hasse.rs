//! Hasse-invariant lifts of rank-2 elliptic modules.
//!
//! With φ_x = ξ + γτ + δτ² of good reduction modulo a squarefree f of
//! degree n, the lift coefficients obey w_{k+1} = A_k·w_k where
//! w_k = (ρ_k, ρ_{k+1}) starts at (1, γ) and
//!
//!   A_k = [[0, 1], [(ξ − ξ_{k+1})·τ^k(δ), τ^{k+1}(γ)]].
//!
//! All A_k are specializations of one degree-1 matrix polynomial 𝒜 over
//! K[Y]: A_k = τ^k(𝒜)(ξ). A block B_{u,v} = A_{v−1}⋯A_u therefore comes
//! out of a baby-steps/giant-steps scheme: build ℬ = τ^{ℓ−1}(𝒜)⋯𝒜 once,
//! evaluate it at the points ξ_{−(u+iℓ)} by fast multipoint evaluation,
//! and reassemble τ^{u+iℓ}(ℬ(ξ_{−(u+iℓ)})) with a twisted product. The
//! lift then reads (ρ_n, ρ_{n+1}) off B_{0,n}·(1, γ)ᵀ.

use std::sync::Arc;

use crate::drinfeld::EllipticModule;
use crate::frobenius::{self, ModulusCtx, ResidueElem};
use crate::kpoly::{self, KPoly};
use crate::poly::{self, Poly};
use crate::{Error, Result};

/// Default block-size exponent: ℓ = ⌈(n−u)^β⌉ with β = 1/2 balances the
/// ℓ compositions against the m = ⌊(n−u)/ℓ⌋ evaluation points.
pub const DEFAULT_BETA: f64 = 0.5;

/// Below this remaining span the block machinery degenerates (ℓ and m
/// collapse); finish with direct A_k factors instead.
const DIRECT_TAIL_SPAN: usize = 4;

/// 2×2 matrix over K = F_q[x]/f, entries row-major and reduced.
#[derive(Clone, Debug)]
pub struct Mat2 {
    e: [Poly; 4],
    ctx: Arc<ModulusCtx>,
}

impl PartialEq for Mat2 {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.ctx, &other.ctx) && self.e == other.e
    }
}

impl Eq for Mat2 {}

impl Mat2 {
    pub(crate) fn from_raw(entries: [Poly; 4], ctx: &Arc<ModulusCtx>) -> Mat2 {
        Mat2 {
            e: entries.map(|p| ctx.reduce(p)),
            ctx: ctx.clone(),
        }
    }

    pub fn new(entries: [ResidueElem; 4]) -> Result<Mat2> {
        let ctx = entries[0].ctx().clone();
        for e in &entries {
            if !Arc::ptr_eq(e.ctx(), &ctx) {
                return Err(Error::ContextMismatch);
            }
        }
        Ok(Mat2 {
            e: entries.map(|e| e.poly().clone()),
            ctx,
        })
    }

    pub fn identity(ctx: &Arc<ModulusCtx>) -> Mat2 {
        Mat2 {
            e: [Poly::one(), Poly::zero(), Poly::zero(), Poly::one()],
            ctx: ctx.clone(),
        }
    }

    pub fn zero(ctx: &Arc<ModulusCtx>) -> Mat2 {
        Mat2 {
            e: [Poly::zero(), Poly::zero(), Poly::zero(), Poly::zero()],
            ctx: ctx.clone(),
        }
    }

    pub fn ctx(&self) -> &Arc<ModulusCtx> {
        &self.ctx
    }

    pub fn is_zero(&self) -> bool {
        self.e.iter().all(|p| p.is_zero())
    }

    pub fn entry(&self, row: usize, col: usize) -> ResidueElem {
        ResidueElem::from_poly(self.e[2 * row + col].clone(), &self.ctx)
    }

    pub fn mul(&self, other: &Mat2) -> Result<Mat2> {
        if !Arc::ptr_eq(&self.ctx, &other.ctx) {
            return Err(Error::ContextMismatch);
        }
        Ok(self.mul_unchecked(other))
    }

    /// self·other without the context check (8 modular products).
    pub(crate) fn mul_unchecked(&self, other: &Mat2) -> Mat2 {
        let c = &self.ctx;
        let fctx = c.fctx();
        let a = &self.e;
        let b = &other.e;
        Mat2 {
            e: [
                c.mul_raw(&a[0], &b[0]).add(&c.mul_raw(&a[1], &b[2]), fctx),
                c.mul_raw(&a[0], &b[1]).add(&c.mul_raw(&a[1], &b[3]), fctx),
                c.mul_raw(&a[2], &b[0]).add(&c.mul_raw(&a[3], &b[2]), fctx),
                c.mul_raw(&a[2], &b[1]).add(&c.mul_raw(&a[3], &b[3]), fctx),
            ],
            ctx: c.clone(),
        }
    }

    /// Entrywise composition with ζ; applies τ^i to the whole matrix when
    /// ζ = ξ_i. Constant entries pass through for free.
    pub(crate) fn compose_entries(&self, zeta: &Poly) -> Mat2 {
        Mat2 {
            e: [
                self.ctx.compose_raw(&self.e[0], zeta),
                self.ctx.compose_raw(&self.e[1], zeta),
                self.ctx.compose_raw(&self.e[2], zeta),
                self.ctx.compose_raw(&self.e[3], zeta),
            ],
            ctx: self.ctx.clone(),
        }
    }
}

/// Polynomial over M_2(K) in a central variable Y: coefficients ascending,
/// trailing zero matrices trimmed. Entrywise it is four K[Y] polynomials,
/// which is how the heavy operations run.
#[derive(Clone, Debug)]
pub struct MatPoly {
    coeffs: Vec<Mat2>,
    ctx: Arc<ModulusCtx>,
}

impl PartialEq for MatPoly {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.ctx, &other.ctx) && self.coeffs == other.coeffs
    }
}

impl Eq for MatPoly {}

impl MatPoly {
    pub fn from_coeffs(coeffs: Vec<Mat2>) -> Result<MatPoly> {
        let first = coeffs
            .first()
            .ok_or_else(|| Error::InvalidInput("matrix polynomial needs a coefficient".into()))?;
        let ctx = first.ctx().clone();
        for c in &coeffs {
            if !Arc::ptr_eq(c.ctx(), &ctx) {
                return Err(Error::ContextMismatch);
            }
        }
        let mut coeffs = coeffs;
        while coeffs.last().is_some_and(Mat2::is_zero) {
            coeffs.pop();
        }
        Ok(MatPoly { coeffs, ctx })
    }

    fn from_entry_series(series: [KPoly; 4], ctx: &Arc<ModulusCtx>) -> MatPoly {
        let len = series.iter().map(Vec::len).max().unwrap_or(0);
        let at = |s: &KPoly, j: usize| s.get(j).cloned().unwrap_or_else(Poly::zero);
        let coeffs = (0..len)
            .map(|j| Mat2 {
                e: [
                    at(&series[0], j),
                    at(&series[1], j),
                    at(&series[2], j),
                    at(&series[3], j),
                ],
                ctx: ctx.clone(),
            })
            .collect();
        MatPoly {
            coeffs,
            ctx: ctx.clone(),
        }
    }

    pub fn ctx(&self) -> &Arc<ModulusCtx> {
        &self.ctx
    }

    /// Degree in Y; 0 for the zero polynomial.
    pub fn deg_y(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Coefficient of Y^j, zero beyond the degree.
    pub fn coeff(&self, j: usize) -> Mat2 {
        self.coeffs
            .get(j)
            .cloned()
            .unwrap_or_else(|| Mat2::zero(&self.ctx))
    }

    /// The (e/2, e%2) entry as a K[Y] polynomial.
    pub(crate) fn entry_series(&self, e: usize) -> KPoly {
        let mut v: KPoly = self.coeffs.iter().map(|m| m.e[e].clone()).collect();
        kpoly::trim(&mut v);
        v
    }

    /// Evaluation at a scalar ζ ∈ K (Y ↦ ζ·Id), entrywise Horner.
    pub fn eval_at(&self, zeta: &ResidueElem) -> Result<Mat2> {
        if !Arc::ptr_eq(zeta.ctx(), &self.ctx) {
            return Err(Error::ContextMismatch);
        }
        let e = [0, 1, 2, 3]
            .map(|i| kpoly::eval(&self.entry_series(i), zeta.poly(), &self.ctx));
        Ok(Mat2 {
            e,
            ctx: self.ctx.clone(),
        })
    }

    pub fn mul(&self, other: &MatPoly) -> Result<MatPoly> {
        if !Arc::ptr_eq(&self.ctx, &other.ctx) {
            return Err(Error::ContextMismatch);
        }
        let ctx = &*self.ctx;
        let a: Vec<KPoly> = (0..4).map(|e| self.entry_series(e)).collect();
        let b: Vec<KPoly> = (0..4).map(|e| other.entry_series(e)).collect();
        let dot = |i: usize, j: usize, k: usize, l: usize| {
            kpoly::add(
                &kpoly::mul(&a[i], &b[j], ctx),
                &kpoly::mul(&a[k], &b[l], ctx),
                ctx,
            )
        };
        let series = [dot(0, 0, 1, 2), dot(0, 1, 1, 3), dot(2, 0, 3, 2), dot(2, 1, 3, 3)];
        Ok(MatPoly::from_entry_series(series, &self.ctx))
    }
}

/// Baby-steps/giant-steps block plan for the span [u, n): ℓ = ⌈(n−u)^β⌉
/// baby steps, m = ⌊(n−u)/ℓ⌋ giant steps, stopping at v = u + mℓ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BsgsPlan {
    pub u: usize,
    pub n: usize,
    pub beta: f64,
    pub ell: usize,
    pub m: usize,
    pub v: usize,
}

impl BsgsPlan {
    pub fn new(u: usize, n: usize, beta: f64) -> Result<BsgsPlan> {
        if u >= n {
            return Err(Error::InvalidInput(
                "block start must lie strictly below the target index".into(),
            ));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidInput(
                "block exponent must lie strictly between 0 and 1".into(),
            ));
        }
        let span = n - u;
        // The epsilon keeps exact powers (e.g. 1024^0.5) from ceiling up.
        let ell = ((span as f64).powf(beta) - 1e-9).ceil().max(1.0) as usize;
        let m = span / ell;
        let v = u + m * ell;
        debug_assert!(ell >= 1 && m >= 1 && v <= n && ell <= n + 1);
        debug_assert!(((n - v) as f64) <= (span as f64).powf(beta) + 1e-9);
        Ok(BsgsPlan {
            u,
            n,
            beta,
            ell,
            m,
            v,
        })
    }
}

/// A_k with every Frobenius power computed by repeated q-th powering;
/// the slow, self-evident reference path.
#[allow(non_snake_case)]
pub fn matrix_A(
    k: u64,
    gamma: &ResidueElem,
    delta: &ResidueElem,
    ctx: &Arc<ModulusCtx>,
) -> Mat2 {
    assert!(
        Arc::ptr_eq(gamma.ctx(), ctx) && Arc::ptr_eq(delta.ctx(), ctx),
        "matrix entries come from a different modulus"
    );
    let q = ctx.q();
    let f = ctx.modulus();
    let fctx = ctx.fctx();
    let tau = |p: &Poly| poly::pow_mod(p, q, f, fctx).expect("modulus is nonconstant");
    let xi = ctx.reduce(Poly::x());
    let mut dk = delta.poly().clone();
    let mut xk = xi.clone();
    for _ in 0..k {
        dk = tau(&dk);
        xk = tau(&xk);
    }
    let xk1 = tau(&xk);
    let mut gk1 = gamma.poly().clone();
    for _ in 0..=k {
        gk1 = tau(&gk1);
    }
    let lower_left = ctx.mul_raw(&xi.sub(&xk1, fctx), &dk);
    Mat2::from_raw([Poly::zero(), Poly::one(), lower_left, gk1], ctx)
}

/// 𝒜 = [[0,1],[−τ(ξ)·δ, τ(γ)]] + [[0,0],[δ,0]]·Y, so that A_k = τ^k(𝒜)(ξ).
#[allow(non_snake_case)]
pub fn calA(gamma: &ResidueElem, delta: &ResidueElem, ctx: &Arc<ModulusCtx>) -> MatPoly {
    assert!(
        Arc::ptr_eq(gamma.ctx(), ctx) && Arc::ptr_eq(delta.ctx(), ctx),
        "matrix entries come from a different modulus"
    );
    let xi1 = ctx.xi1_raw().clone();
    let tau_gamma = ctx.compose_raw(gamma.poly(), &xi1);
    let lower_left = ctx.mul_raw(&xi1, delta.poly()).neg(ctx.fctx());
    let c0 = Mat2::from_raw([Poly::zero(), Poly::one(), lower_left, tau_gamma], ctx);
    let c1 = Mat2::from_raw(
        [Poly::zero(), Poly::zero(), delta.poly().clone(), Poly::zero()],
        ctx,
    );
    MatPoly::from_coeffs(vec![c0, c1]).expect("shared context by construction")
}

/// ℬ = τ^{ℓ−1}(𝒜)⋯τ(𝒜)·𝒜 over K[Y]: the ℓ factors come from iterated
/// entrywise composition with ξ_1 (constant entries free, so three counted
/// compositions per step) and are multiplied with a balanced binary tree,
/// keeping the higher-index factor on the left throughout.
#[allow(non_snake_case)]
pub fn calB(a: &MatPoly, ell: usize, ctx: &Arc<ModulusCtx>) -> MatPoly {
    assert!(
        Arc::ptr_eq(a.ctx(), ctx),
        "matrix polynomial comes from a different modulus"
    );
    assert!(ell >= 1, "the twisted product needs at least one factor");
    let xi1 = ctx.xi1_raw().clone();
    let mut factors = Vec::with_capacity(ell);
    factors.push(a.clone());
    for i in 1..ell {
        let prev: &MatPoly = &factors[i - 1];
        let twisted = prev
            .coeffs
            .iter()
            .map(|m| m.compose_entries(&xi1))
            .collect();
        factors.push(MatPoly {
            coeffs: twisted,
            ctx: ctx.clone(),
        });
    }
    while factors.len() > 1 {
        let mut next = Vec::with_capacity(factors.len().div_ceil(2));
        let mut it = factors.chunks_exact(2);
        for pair in &mut it {
            next.push(pair[1].mul(&pair[0]).expect("shared context"));
        }
        // An unpaired leftover holds the highest indices: keep it leftmost.
        if let [last] = it.remainder() {
            next.push(last.clone());
        }
        factors = next;
    }
    factors.pop().unwrap()
}

/// B_{u,v} for the plan derived from (u, n, beta), by baby-steps/giant-steps:
/// ℬ once, multipoint evaluation at ξ_{−(u+iℓ)}, then the twisted product
/// τ^{u+(m−1)ℓ}(β_{m−1})⋯τ^u(β_0).
pub fn hasse_block(
    gamma: &ResidueElem,
    delta: &ResidueElem,
    u: usize,
    n: usize,
    beta: f64,
    ctx: &Arc<ModulusCtx>,
) -> Result<Mat2> {
    let plan = BsgsPlan::new(u, n, beta)?;
    block_for_plan(gamma, delta, &plan, ctx)
}

fn block_for_plan(
    gamma: &ResidueElem,
    delta: &ResidueElem,
    plan: &BsgsPlan,
    ctx: &Arc<ModulusCtx>,
) -> Result<Mat2> {
    if !Arc::ptr_eq(gamma.ctx(), ctx) || !Arc::ptr_eq(delta.ctx(), ctx) {
        return Err(Error::ContextMismatch);
    }
    let a = calA(gamma, delta, ctx);
    let b = calB(&a, plan.ell, ctx);
    let points = frobenius::geometric_xi(plan.u as u64, plan.ell as u64, plan.m as u64, ctx);
    let mats = poly::multipoint_eval_mat(&b, &points)?;
    frobenius::twisted_product(&mats, plan.u as u64, plan.ell as u64, ctx)
}

/// (ρ_n, ρ_{n+1}) mod f for n = deg f, with the default block exponent.
pub fn hasse_lift(
    phi: &EllipticModule,
    ctx: &Arc<ModulusCtx>,
) -> Result<(ResidueElem, ResidueElem)> {
    hasse_lift_beta(phi, ctx, DEFAULT_BETA)
}

/// (ρ_n, ρ_{n+1}) mod f: accumulate B_{0,n} block by block (u ← v until
/// the remaining span degenerates, then direct A_k factors) and read the
/// pair off B_{0,n}·(1, γ)ᵀ. Requires deg f ≥ 2 and good reduction
/// (gcd(δ, f) = 1; the offending gcd is reported otherwise).
pub fn hasse_lift_beta(
    phi: &EllipticModule,
    ctx: &Arc<ModulusCtx>,
    beta: f64,
) -> Result<(ResidueElem, ResidueElem)> {
    let n = ctx.n();
    if n < 2 {
        return Err(Error::InvalidInput(
            "the lift needs a modulus of degree at least 2".into(),
        ));
    }
    let gamma = ResidueElem::from_poly(phi.g().clone(), ctx);
    let delta = ResidueElem::from_poly(phi.delta().clone(), ctx);
    let g = poly::gcd(delta.poly(), ctx.modulus(), ctx.fctx());
    if !g.is_one() {
        return Err(Error::BadReduction {
            gcd: g.coeffs_u64(),
        });
    }
    // Warm the τ matrix now: every ξ_1-composition below (the bulk of the
    // work) then runs as a plain matrix-vector product.
    ctx.frob_table();
    let mut acc = Mat2::identity(ctx);
    let mut u = 0usize;
    while n - u >= DIRECT_TAIL_SPAN {
        let plan = BsgsPlan::new(u, n, beta)?;
        let block = block_for_plan(&gamma, &delta, &plan, ctx)?;
        acc = block.mul_unchecked(&acc);
        u = plan.v;
    }
    for k in u..n {
        acc = tail_matrix(k as u64, &gamma, &delta, ctx)?.mul_unchecked(&acc);
    }
    let fctx = ctx.fctx();
    let rho_n = acc.e[0].add(&ctx.mul_raw(&acc.e[1], gamma.poly()), fctx);
    let rho_n1 = acc.e[2].add(&ctx.mul_raw(&acc.e[3], gamma.poly()), fctx);
    Ok((
        ResidueElem::from_poly(rho_n, ctx),
        ResidueElem::from_poly(rho_n1, ctx),
    ))
}

/// A_k through the memoized ξ chains instead of k-fold powering; used for
/// the short direct tail.
fn tail_matrix(
    k: u64,
    gamma: &ResidueElem,
    delta: &ResidueElem,
    ctx: &Arc<ModulusCtx>,
) -> Result<Mat2> {
    let xik = ctx.xi_signed(k as i64)?;
    let xik1 = ctx.xi_signed(k as i64 + 1)?;
    let tdk = ctx.compose_raw(delta.poly(), &xik);
    let tgk1 = ctx.compose_raw(gamma.poly(), &xik1);
    let xi = ctx.reduce(Poly::x());
    let lower_left = ctx.mul_raw(&xi.sub(&xik1, ctx.fctx()), &tdk);
    Ok(Mat2::from_raw(
        [Poly::zero(), Poly::one(), lower_left, tgk1],
        ctx,
    ))
}

/// h̄_{φ,f} = monic gcd(ρ_n, ρ_{n+1}) as polynomials of degree < n. The
/// caller intersects with f (gcd(h̄, f)) to extract the factor of f it
/// detects; h̄ itself is returned unintersected. Zero when both lift
/// values vanish (f irreducible and supersingular for φ).
pub fn hbar(phi: &EllipticModule, f: &Poly, fctx: &crate::field::FieldCtx) -> Result<Poly> {
    let ctx = ModulusCtx::new(f, fctx)?;
    if ctx.n() < 2 {
        return Err(Error::InvalidInput(
            "the divisor detector needs a modulus of degree at least 2".into(),
        ));
    }
    let (rho_n, rho_n1) = hasse_lift(phi, &ctx)?;
    Ok(poly::gcd(rho_n.poly(), rho_n1.poly(), fctx))
}
