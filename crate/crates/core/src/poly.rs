//! Dense univariate polynomials over F_q, ascending coefficients.
//!
//! Multiplication picks a strategy per call: schoolbook below a crossover,
//! an in-field NTT when q has enough 2-adic roots of unity, an exact
//! integer-convolution NTT (fixed primes + CRT) when coefficients fit, and
//! Karatsuba as the big-q fallback. Everything downstream only assumes
//! `mul` is exact.

use std::cmp::Ordering;
use std::sync::Arc;

use crate::field::{ElementSource, FieldCtx, FieldElem};
use crate::frobenius::{xi_power, ModulusCtx, ResidueElem};
use crate::hasse::{Mat2, MatPoly};
use crate::{kpoly, ntt, Error, Result};

const SCHOOLBOOK_CROSSOVER: usize = 32;
/// Root finding scans all of F_q below this size instead of running
/// randomized equal-degree splitting; at these sizes the scan is cheaper
/// and draw-free.
const ROOT_SCAN_MAX_Q: u64 = 512;
/// Draw cap for equal-degree splitting; each draw splits with probability
/// ≈ 1/2, so reaching this is effectively impossible.
const EDS_DRAW_CAP: usize = 4096;

/// Dense polynomial over F_q. Invariant: no trailing zero coefficients, so
/// the zero polynomial is the empty vector and degree = len − 1 otherwise.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Poly {
    coeffs: Vec<FieldElem>,
}

/// Renders ascending coefficients as decimal, e.g. `2,6,0,5`; "0" for zero.
pub fn coeffs_string(c: &[u64]) -> String {
    if c.is_empty() {
        return "0".to_string();
    }
    c.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl Poly {
    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly {
            coeffs: vec![FieldElem(1)],
        }
    }

    /// The identity polynomial x.
    pub fn x() -> Self {
        Poly {
            coeffs: vec![FieldElem(0), FieldElem(1)],
        }
    }

    pub fn constant(c: FieldElem) -> Self {
        Poly::from_coeffs(vec![c])
    }

    /// Normalizes (drops trailing zeros); coefficients must already be
    /// reduced.
    pub fn from_coeffs(coeffs: Vec<FieldElem>) -> Self {
        let mut p = Poly { coeffs };
        p.normalize();
        p
    }

    /// Reduces raw integers mod q and normalizes.
    pub fn from_u64(coeffs: &[u64], fctx: &FieldCtx) -> Self {
        Poly::from_coeffs(coeffs.iter().map(|&v| fctx.elem(v)).collect())
    }

    /// Parses comma-separated ascending decimal coefficients, reducing mod q.
    pub fn parse(s: &str, fctx: &FieldCtx) -> Result<Self> {
        let mut coeffs = Vec::new();
        for part in s.split(',') {
            let v: u64 = part
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad coefficient {part:?}")))?;
            coeffs.push(fctx.elem(v));
        }
        Ok(Poly::from_coeffs(coeffs))
    }

    pub fn to_coeff_string(&self) -> String {
        coeffs_string(&self.coeffs_u64())
    }

    pub fn coeffs_u64(&self) -> Vec<u64> {
        self.coeffs.iter().map(|c| c.0).collect()
    }

    fn normalize(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == FieldElem(1)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    /// Degree; 0 for the zero polynomial (check [`Poly::is_zero`] first when
    /// the distinction matters).
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeffs(&self) -> &[FieldElem] {
        &self.coeffs
    }

    /// Coefficient of x^i, zero beyond the degree.
    pub fn coeff(&self, i: usize) -> FieldElem {
        self.coeffs.get(i).copied().unwrap_or(FieldElem(0))
    }

    pub fn leading(&self) -> FieldElem {
        self.coeffs.last().copied().unwrap_or(FieldElem(0))
    }

    pub fn add(&self, other: &Poly, fctx: &FieldCtx) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(fctx.add(self.coeff(i), other.coeff(i)));
        }
        Poly::from_coeffs(out)
    }

    pub fn sub(&self, other: &Poly, fctx: &FieldCtx) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(fctx.sub(self.coeff(i), other.coeff(i)));
        }
        Poly::from_coeffs(out)
    }

    pub fn neg(&self, fctx: &FieldCtx) -> Poly {
        Poly::from_coeffs(self.coeffs.iter().map(|&c| fctx.neg(c)).collect())
    }

    pub fn scale(&self, c: FieldElem, fctx: &FieldCtx) -> Poly {
        Poly::from_coeffs(self.coeffs.iter().map(|&a| fctx.mul(a, c)).collect())
    }

    /// Multiplies by x^k.
    pub fn shift_up(&self, k: usize) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![FieldElem(0); k];
        coeffs.extend_from_slice(&self.coeffs);
        Poly { coeffs }
    }

    /// Exact product; picks schoolbook / in-field NTT / CRT NTT / Karatsuba.
    pub fn mul(&self, other: &Poly, fctx: &FieldCtx) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let a = self.coeffs_u64();
        let b = other.coeffs_u64();
        let out = mul_u64(&a, &b, fctx);
        Poly::from_coeffs(out.into_iter().map(FieldElem).collect())
    }

    /// Product truncated to degree < k.
    pub(crate) fn mul_trunc(&self, other: &Poly, k: usize, fctx: &FieldCtx) -> Poly {
        let mut p = self.mul(other, fctx);
        p.coeffs.truncate(k);
        p.normalize();
        p
    }

    pub(crate) fn truncated(&self, k: usize) -> Poly {
        let mut p = self.clone();
        p.coeffs.truncate(k);
        p.normalize();
        p
    }

    /// Long division; errors on a zero divisor.
    pub fn divrem(&self, b: &Poly, fctx: &FieldCtx) -> Result<(Poly, Poly)> {
        if b.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let la = self.coeffs.len();
        let lb = b.coeffs.len();
        if la < lb {
            return Ok((Poly::zero(), self.clone()));
        }
        let lead_inv = fctx.inv(b.leading())?;
        let mut rem: Vec<FieldElem> = self.coeffs.clone();
        let mut quot = vec![FieldElem(0); la - lb + 1];
        for k in (0..=la - lb).rev() {
            let c = fctx.mul(rem[k + lb - 1], lead_inv);
            if !c.is_zero() {
                quot[k] = c;
                for j in 0..lb {
                    let t = fctx.mul(c, b.coeffs[j]);
                    rem[k + j] = fctx.sub(rem[k + j], t);
                }
            }
        }
        rem.truncate(lb - 1);
        Ok((Poly::from_coeffs(quot), Poly::from_coeffs(rem)))
    }

    /// Remainder of division by f.
    pub fn rem(&self, f: &Poly, fctx: &FieldCtx) -> Result<Poly> {
        Ok(self.divrem(f, fctx)?.1)
    }

    /// Exact quotient; panics in debug builds if the division is inexact.
    pub(crate) fn div_exact(&self, b: &Poly, fctx: &FieldCtx) -> Result<Poly> {
        let (q, r) = self.divrem(b, fctx)?;
        debug_assert!(r.is_zero(), "div_exact with nonzero remainder");
        Ok(q)
    }

    pub fn monic(&self, fctx: &FieldCtx) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let lead = self.leading();
        if lead == FieldElem(1) {
            return self.clone();
        }
        // leading() is nonzero here, inv cannot fail
        self.scale(fctx.inv(lead).unwrap(), fctx)
    }

    pub fn derivative(&self, fctx: &FieldCtx) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        let mut out = Vec::with_capacity(self.coeffs.len() - 1);
        for (i, &c) in self.coeffs.iter().enumerate().skip(1) {
            out.push(fctx.mul(c, fctx.elem(i as u64)));
        }
        Poly::from_coeffs(out)
    }

    pub fn eval(&self, x: FieldElem, fctx: &FieldCtx) -> FieldElem {
        let mut acc = FieldElem(0);
        for &c in self.coeffs.iter().rev() {
            acc = fctx.add(fctx.mul(acc, x), c);
        }
        acc
    }
}

/// Monic gcd; gcd(0, 0) = 0.
pub fn gcd(a: &Poly, b: &Poly, fctx: &FieldCtx) -> Poly {
    let mut a = a.clone();
    let mut b = b.clone();
    while !b.is_zero() {
        let r = a.rem(&b, fctx).expect("nonzero divisor");
        a = b;
        b = r;
    }
    a.monic(fctx)
}

/// base^e mod modulus by square-and-multiply; modulus must be nonconstant.
pub fn pow_mod(base: &Poly, mut e: u64, modulus: &Poly, fctx: &FieldCtx) -> Result<Poly> {
    if modulus.is_constant() {
        return Err(Error::InvalidInput("pow_mod modulus is constant".into()));
    }
    let mut b = base.rem(modulus, fctx)?;
    let mut acc = Poly::one().rem(modulus, fctx)?;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc.mul(&b, fctx).rem(modulus, fctx)?;
        }
        b = b.mul(&b, fctx).rem(modulus, fctx)?;
        e >>= 1;
    }
    Ok(acc)
}

/// Inverse of f modulo x^k by Newton iteration; needs f(0) ≠ 0.
pub(crate) fn inverse_mod_xk(f: &Poly, k: usize, fctx: &FieldCtx) -> Result<Poly> {
    if f.coeff(0).is_zero() {
        return Err(Error::DivisionByZero);
    }
    let mut v = Poly::constant(fctx.inv(f.coeff(0))?);
    let mut prec = 1usize;
    while prec < k {
        prec = (prec * 2).min(k);
        let t = f.truncated(prec).mul_trunc(&v, prec, fctx);
        // v ← v·(2 − f·v) mod x^prec
        let two_minus = Poly::constant(fctx.elem(2)).sub(&t, fctx);
        v = v.mul_trunc(&two_minus, prec, fctx);
    }
    Ok(v)
}

fn mul_u64(a: &[u64], b: &[u64], fctx: &FieldCtx) -> Vec<u64> {
    let q = fctx.q();
    let out_len = a.len() + b.len() - 1;
    if a.len().min(b.len()) <= SCHOOLBOOK_CROSSOVER {
        return schoolbook_u64(a, b, q);
    }
    if ntt::supports_field_ntt(q, out_len) {
        return ntt::convolve_in_field(a, b, q);
    }
    if let Some(out) = ntt::convolve_crt(a, b, q) {
        return out;
    }
    karatsuba_u64(a, b, q)
}

fn schoolbook_u64(a: &[u64], b: &[u64], q: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    // products < q^2 ≤ 2^124; one u128 accumulator reduced per term
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            let t = (x as u128 * y as u128 + out[i + j] as u128) % q as u128;
            out[i + j] = t as u64;
        }
    }
    out
}

fn add_assign_shifted(acc: &mut Vec<u64>, src: &[u64], shift: usize, q: u64) {
    if acc.len() < src.len() + shift {
        acc.resize(src.len() + shift, 0);
    }
    for (i, &v) in src.iter().enumerate() {
        let s = acc[i + shift] + v;
        acc[i + shift] = if s >= q { s - q } else { s };
    }
}

fn sub_assign(acc: &mut [u64], src: &[u64], q: u64) {
    for (i, &v) in src.iter().enumerate() {
        acc[i] = if acc[i] >= v { acc[i] - v } else { acc[i] + q - v };
    }
}

/// Karatsuba for moduli too large for the CRT transform. Slices may be
/// unnormalized internally; output length is still la+lb−1.
fn karatsuba_u64(a: &[u64], b: &[u64], q: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    if a.len().min(b.len()) <= SCHOOLBOOK_CROSSOVER {
        return schoolbook_u64(a, b, q);
    }
    let m = a.len().max(b.len()).div_ceil(2);
    let (a0, a1) = a.split_at(m.min(a.len()));
    let (b0, b1) = b.split_at(m.min(b.len()));
    let z0 = karatsuba_u64(a0, b0, q);
    let z2 = karatsuba_u64(a1, b1, q);
    let asum = add_padded(a0, a1, q);
    let bsum = add_padded(b0, b1, q);
    let mut z1 = karatsuba_u64(&asum, &bsum, q);
    sub_assign(&mut z1[..z0.len()], &z0, q);
    if !z2.is_empty() {
        sub_assign(&mut z1[..z2.len()], &z2, q);
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    add_assign_shifted(&mut out, &z0, 0, q);
    add_assign_shifted(&mut out, &z1, m, q);
    add_assign_shifted(&mut out, &z2, 2 * m, q);
    out.truncate(a.len() + b.len() - 1);
    out
}

fn add_padded(a: &[u64], b: &[u64], q: u64) -> Vec<u64> {
    let n = a.len().max(b.len());
    let mut out = vec![0u64; n];
    for i in 0..n {
        let x = a.get(i).copied().unwrap_or(0);
        let y = b.get(i).copied().unwrap_or(0);
        let s = x + y;
        out[i] = if s >= q { s - q } else { s };
    }
    out
}

/// Orders by degree, then lexicographically on the ascending coefficient
/// vector; the deterministic order used for factor listings.
pub fn cmp_by_degree_then_coeffs(a: &Poly, b: &Poly) -> Ordering {
    a.coeffs
        .len()
        .cmp(&b.coeffs.len())
        .then_with(|| a.coeffs.cmp(&b.coeffs))
}

/// Squarefree decomposition f = ∏ gᵢ^{mᵢ} with the gᵢ squarefree, pairwise
/// coprime, and monic. Yun's algorithm adapted to characteristic p: when the
/// derivative vanishes, f = v(x^p) and the p-th root is the coefficient map
/// x^{jp} → x^j (exact over F_p since a^p = a).
pub fn squarefree_part(f: &Poly, fctx: &FieldCtx) -> Result<Vec<(Poly, u64)>> {
    if f.is_constant() {
        return Err(Error::ConstantPolynomial);
    }
    let mut out = Vec::new();
    yun_rec(f.monic(fctx), 1, &mut out, fctx)?;
    out.sort_by(|x, y| cmp_by_degree_then_coeffs(&x.0, &y.0));
    Ok(out)
}

fn yun_rec(f: Poly, scale: u64, out: &mut Vec<(Poly, u64)>, fctx: &FieldCtx) -> Result<()> {
    let fp = f.derivative(fctx);
    if fp.is_zero() {
        return yun_rec(pth_root(&f, fctx), scale * fctx.q(), out, fctx);
    }
    let mut c = gcd(&f, &fp, fctx);
    let mut w = f.div_exact(&c, fctx)?;
    let mut i: u64 = 1;
    while !w.is_one() {
        let y = gcd(&w, &c, fctx);
        let z = w.div_exact(&y, fctx)?;
        if !z.is_constant() {
            out.push((z, i * scale));
        }
        w = y;
        c = c.div_exact(&w, fctx)?;
        i += 1;
    }
    if !c.is_constant() {
        yun_rec(pth_root(&c, fctx), scale * fctx.q(), out, fctx)?;
    }
    Ok(())
}

/// p-th root of a polynomial of the form v(x^p); caller guarantees the form.
fn pth_root(f: &Poly, fctx: &FieldCtx) -> Poly {
    let p = fctx.q() as usize;
    let mut out = Vec::with_capacity(f.coeffs().len() / p + 1);
    let mut i = 0;
    while i < f.coeffs().len() {
        out.push(f.coeff(i));
        i += p;
    }
    Poly::from_coeffs(out)
}

fn prime_divisors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Rabin's test: f of degree n is irreducible iff x^{q^n} ≡ x mod f and
/// gcd(x^{q^{n/t}} − x, f) = 1 for every prime t | n. Frobenius powers run
/// through the modular-composition chains of [`crate::frobenius`].
pub fn is_irreducible(f: &Poly, fctx: &FieldCtx) -> bool {
    if f.is_constant() {
        return false;
    }
    if f.degree() == 1 {
        return true;
    }
    // non-squarefree ⇒ reducible, and the residue ring below needs
    // squarefreeness anyway
    if !gcd(&f.derivative(fctx), f, fctx).is_one() {
        return false;
    }
    let ctx = ModulusCtx::new(f, fctx).expect("squarefree checked above");
    let n = f.degree() as u64;
    let xi = ResidueElem::from_poly(Poly::x(), &ctx);
    if xi_power(n, &ctx) != xi {
        return false;
    }
    for t in prime_divisors(n) {
        let w = xi_power(n / t, &ctx).sub(&xi);
        if !gcd(w.poly(), ctx.modulus(), fctx).is_one() {
            return false;
        }
    }
    true
}

/// Roots of f in F_q plus the root-free cofactor. f must be squarefree.
/// Root isolation: g₁ = gcd(x^q − x, f), then either a full scan of F_q
/// (small q) or randomized equal-degree splitting with constants drawn from
/// `src`. Roots come back sorted.
pub fn linear_roots(
    f: &Poly,
    fctx: &FieldCtx,
    src: &mut dyn ElementSource,
) -> Result<(Vec<FieldElem>, Poly)> {
    if f.is_constant() {
        return Ok((Vec::new(), Poly::one()));
    }
    let f = f.monic(fctx);
    let xq = pow_mod(&Poly::x(), fctx.q(), &f, fctx)?;
    let g1 = gcd(&xq.sub(&Poly::x(), fctx), &f, fctx);
    if g1.is_constant() {
        return Ok((Vec::new(), f));
    }
    let cofactor = f.div_exact(&g1, fctx)?;
    let mut roots = Vec::with_capacity(g1.degree());
    if fctx.q() <= ROOT_SCAN_MAX_Q {
        for v in 0..fctx.q() {
            if g1.eval(FieldElem(v), fctx).is_zero() {
                roots.push(FieldElem(v));
            }
        }
    } else {
        eds_roots(&g1, fctx, src, &mut roots)?;
        roots.sort();
    }
    debug_assert_eq!(roots.len(), g1.degree());
    Ok((roots, cofactor))
}

/// Equal-degree splitting of a monic product of distinct linear factors:
/// gcd((x+c)^{(q−1)/2} − 1, g) captures the roots r with χ(r+c) = 1.
fn eds_roots(
    g: &Poly,
    fctx: &FieldCtx,
    src: &mut dyn ElementSource,
    roots: &mut Vec<FieldElem>,
) -> Result<()> {
    if g.is_constant() {
        return Ok(());
    }
    if g.degree() == 1 {
        roots.push(fctx.neg(g.coeff(0)));
        return Ok(());
    }
    for _ in 0..EDS_DRAW_CAP {
        let c = src.draw(fctx);
        let shifted = Poly::from_coeffs(vec![c, FieldElem(1)]);
        let h = pow_mod(&shifted, (fctx.q() - 1) / 2, g, fctx)?
            .sub(&Poly::one(), fctx);
        let d = gcd(&h, g, fctx);
        if !d.is_constant() && d.degree() < g.degree() {
            eds_roots(&d, fctx, src, roots)?;
            eds_roots(&g.div_exact(&d, fctx)?, fctx, src, roots)?;
            return Ok(());
        }
    }
    Err(Error::InvalidInput(
        "equal-degree splitting stalled; draw cap exhausted".into(),
    ))
}

/// Subproduct tree over K[Y] with leaves Y − ζᵢ; level 0 holds the leaves
/// and the last level the full product.
pub struct SubproductTree {
    ctx: Arc<ModulusCtx>,
    pub(crate) levels: Vec<Vec<kpoly::KPoly>>,
}

impl SubproductTree {
    /// Builds the tree over the shared context of `points`.
    pub fn new(points: &[ResidueElem]) -> Result<Self> {
        let ctx = shared_ctx(points)?;
        let leaves: Vec<kpoly::KPoly> = points
            .iter()
            .map(|p| vec![p.poly().neg(ctx.fctx()), Poly::one()])
            .collect();
        let mut levels = vec![leaves];
        while levels.last().unwrap().len() > 1 {
            let prev = levels.last().unwrap();
            let mut next = Vec::with_capacity(prev.len().div_ceil(2));
            for pair in prev.chunks(2) {
                next.push(match pair {
                    [a, b] => kpoly::mul(a, b, &ctx),
                    [a] => a.clone(),
                    _ => unreachable!(),
                });
            }
            levels.push(next);
        }
        Ok(SubproductTree { ctx, levels })
    }

    pub fn num_points(&self) -> usize {
        self.levels[0].len()
    }

    /// Remainders a K[Y] polynomial down the tree, returning its value at
    /// each leaf point.
    pub(crate) fn down_rem(&self, a: &kpoly::KPoly) -> Vec<Poly> {
        let mut current = vec![kpoly::rem(a, self.levels.last().unwrap().last().unwrap(), &self.ctx)];
        for level in self.levels.iter().rev().skip(1) {
            let mut next = Vec::with_capacity(level.len());
            for (i, node) in level.iter().enumerate() {
                next.push(kpoly::rem(&current[i / 2], node, &self.ctx));
            }
            current = next;
        }
        current
            .into_iter()
            .map(|r| r.first().cloned().unwrap_or_else(Poly::zero))
            .collect()
    }
}

fn shared_ctx(points: &[ResidueElem]) -> Result<Arc<ModulusCtx>> {
    let first = points
        .first()
        .ok_or_else(|| Error::InvalidInput("empty point list".into()))?;
    for p in points {
        if !Arc::ptr_eq(p.ctx(), first.ctx()) {
            return Err(Error::ContextMismatch);
        }
    }
    Ok(first.ctx().clone())
}

/// Evaluates a 2×2 matrix polynomial at many points of K at once:
/// result[i] = M(points[i]) with Y substituted by the scalar matrix
/// ζᵢ·Id, i.e. entrywise evaluation in Y. Subproduct tree + down-tree
/// remaindering, shared across the four entries.
pub fn multipoint_eval_mat(m: &MatPoly, points: &[ResidueElem]) -> Result<Vec<Mat2>> {
    let ctx = shared_ctx(points)?;
    if !Arc::ptr_eq(&ctx, m.ctx()) {
        return Err(Error::ContextMismatch);
    }
    let tree = SubproductTree::new(points)?;
    let mut per_entry: Vec<Vec<Poly>> = Vec::with_capacity(4);
    for e in 0..4 {
        let entry: kpoly::KPoly = m.entry_series(e);
        per_entry.push(tree.down_rem(&entry));
    }
    let mut out = Vec::with_capacity(points.len());
    for i in 0..points.len() {
        out.push(Mat2::from_raw(
            [
                per_entry[0][i].clone(),
                per_entry[1][i].clone(),
                per_entry[2][i].clone(),
                per_entry[3][i].clone(),
            ],
            &ctx,
        ));
    }
    Ok(out)
}
