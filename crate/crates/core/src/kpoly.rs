//! Internal arithmetic for polynomials in Y over K = F_q[x]/f.
//!
//! A K[Y] polynomial is a `Vec<Poly>` of reduced residues, ascending in Y,
//! trailing zeros trimmed. Multiplication packs the coefficients into one
//! F_q[x] polynomial with stride 2n−1 (Kronecker substitution): slot
//! products have degree ≤ 2n−2, so slots never overlap and one fast F_q
//! multiplication plus per-slot reduction gives the exact K[Y] product.

use crate::frobenius::ModulusCtx;
use crate::poly::Poly;

pub(crate) type KPoly = Vec<Poly>;

pub(crate) fn trim(v: &mut KPoly) {
    while v.last().is_some_and(|p| p.is_zero()) {
        v.pop();
    }
}

fn pack(v: &KPoly, stride: usize) -> Poly {
    let mut buf = vec![crate::field::FieldElem(0); v.len() * stride];
    for (j, p) in v.iter().enumerate() {
        for (k, &c) in p.coeffs().iter().enumerate() {
            buf[j * stride + k] = c;
        }
    }
    Poly::from_coeffs(buf)
}

pub(crate) fn mul(a: &KPoly, b: &KPoly, ctx: &ModulusCtx) -> KPoly {
    let mut a = a.clone();
    let mut b = b.clone();
    trim(&mut a);
    trim(&mut b);
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let n = ctx.n();
    let stride = (2 * n - 1).max(1);
    let big = pack(&a, stride).mul(&pack(&b, stride), ctx.fctx());
    let out_len = a.len() + b.len() - 1;
    let mut out = Vec::with_capacity(out_len);
    for j in 0..out_len {
        let base = j * stride;
        let chunk: Vec<_> = (0..stride).map(|k| big.coeff(base + k)).collect();
        out.push(ctx.reduce(Poly::from_coeffs(chunk)));
    }
    trim(&mut out);
    out
}

pub(crate) fn add(a: &KPoly, b: &KPoly, ctx: &ModulusCtx) -> KPoly {
    let len = a.len().max(b.len());
    let zero = Poly::zero();
    let mut out = Vec::with_capacity(len);
    for i in 0..len {
        let x = a.get(i).unwrap_or(&zero);
        let y = b.get(i).unwrap_or(&zero);
        out.push(x.add(y, ctx.fctx()));
    }
    trim(&mut out);
    out
}

pub(crate) fn sub(a: &KPoly, b: &KPoly, ctx: &ModulusCtx) -> KPoly {
    let len = a.len().max(b.len());
    let zero = Poly::zero();
    let mut out = Vec::with_capacity(len);
    for i in 0..len {
        let x = a.get(i).unwrap_or(&zero);
        let y = b.get(i).unwrap_or(&zero);
        out.push(x.sub(y, ctx.fctx()));
    }
    trim(&mut out);
    out
}

fn reversed_to(v: &KPoly, len: usize) -> KPoly {
    let mut out = v.clone();
    out.resize(len, Poly::zero());
    out.reverse();
    out
}

fn truncated(mut v: KPoly, k: usize) -> KPoly {
    v.truncate(k);
    trim(&mut v);
    v
}

/// Inverse of v modulo Y^k by Newton iteration; v[0] must be 1 (the only
/// case we need: reversals of monic polynomials).
fn inverse_mod_yk(v: &KPoly, k: usize, ctx: &ModulusCtx) -> KPoly {
    debug_assert!(v.first().is_some_and(|p| p.is_one()));
    let mut inv: KPoly = vec![Poly::one()];
    let mut prec = 1usize;
    let two = Poly::constant(ctx.fctx().elem(2));
    while prec < k {
        prec = (prec * 2).min(k);
        let t = truncated(mul(&truncated(v.clone(), prec), &inv, ctx), prec);
        // inv ← inv·(2 − v·inv) mod Y^prec
        let mut two_minus = sub(&vec![two.clone()], &t, ctx);
        two_minus = truncated(two_minus, prec);
        inv = truncated(mul(&inv, &two_minus, ctx), prec);
    }
    inv
}

const LONG_DIVISION_MAX_STEPS: usize = 8;

/// Division with remainder by a monic divisor: long division when the
/// quotient is short, Newton (reverse + series inverse) otherwise.
pub(crate) fn divrem_monic(a: &KPoly, b: &KPoly, ctx: &ModulusCtx) -> (KPoly, KPoly) {
    let mut a = a.clone();
    trim(&mut a);
    let mut b = b.clone();
    trim(&mut b);
    debug_assert!(b.last().is_some_and(|p| p.is_one()), "divisor must be monic");
    if a.len() < b.len() {
        return (Vec::new(), a);
    }
    let da = a.len() - 1;
    let db = b.len() - 1;
    let k = da - db + 1;
    if k <= LONG_DIVISION_MAX_STEPS || db <= 1 {
        let mut rem = a;
        let mut quot = vec![Poly::zero(); k];
        for i in (0..k).rev() {
            let lead = std::mem::replace(&mut rem[i + db], Poly::zero());
            if lead.is_zero() {
                continue;
            }
            for j in 0..db {
                let t = ctx.mul_raw(&lead, &b[j]);
                rem[i + j] = rem[i + j].sub(&t, ctx.fctx());
            }
            quot[i] = lead;
        }
        rem.truncate(db);
        trim(&mut rem);
        trim(&mut quot);
        return (quot, rem);
    }
    let ar = reversed_to(&a, da + 1);
    let br = reversed_to(&b, db + 1);
    let binv = inverse_mod_yk(&br, k, ctx);
    let qr = truncated(mul(&ar, &binv, ctx), k);
    let q = reversed_to(&qr, k);
    let bq = mul(&b, &q, ctx);
    let mut r = sub(&a, &bq, ctx);
    debug_assert!(r.len() <= db, "Newton division left a long remainder");
    r.truncate(db);
    trim(&mut r);
    (q, r)
}

pub(crate) fn rem(a: &KPoly, b: &KPoly, ctx: &ModulusCtx) -> KPoly {
    divrem_monic(a, b, ctx).1
}

/// Horner evaluation at a point of K.
pub(crate) fn eval(a: &KPoly, zeta: &Poly, ctx: &ModulusCtx) -> Poly {
    let mut acc = Poly::zero();
    for c in a.iter().rev() {
        acc = ctx.mul_raw(&acc, zeta).add(c, ctx.fctx());
    }
    acc
}
