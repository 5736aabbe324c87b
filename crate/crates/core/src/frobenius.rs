//! Modular composition and the Frobenius-power toolkit over K = F_q[x]/f.
//!
//! For squarefree f the q-th power map τ is an invertible F_q-linear map on
//! K, and ξ_i := τ^i(ξ) (ξ the residue of x) satisfies a(ξ_1) = τ(a) and
//! ξ_i(ξ_j) = ξ_{i+j} for all signed i, j. Everything here reduces to
//! modular composition: Frobenius powers of elements, geometric sequences
//! of ξ at negative indices, and the twisted (τ-interleaved) products and
//! sums used by the matrix lift.
//!
//! Cost model notes, since this layer dominates the profile:
//! - `ModulusCtx` reduction uses the precomputed Newton inverse of the
//!   reversed modulus, so a reduction is two truncated products.
//! - `compose_raw` is Brent–Kung with a single-slot cache of the baby
//!   powers and forward NTT transforms of the giant powers, keyed on the
//!   right operand; calls that repeat the same right operand (the common
//!   pattern in twisted products and incremental twisting) pay only the
//!   giant-step dot product.
//! - ξ_{−1} comes from one dense linear solve against the matrix of τ; the
//!   same matrix then doubles as a fast path for composition with ξ_1.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use crate::field::{FieldCtx, FieldElem};
use crate::hasse::Mat2;
use crate::ntt::{powmod, CrtPlan, FwdVecs};
use crate::poly::{self, Poly};
use crate::{Error, Result};

/// Lazy u64 accumulation of `terms` products of residues is exact while
/// terms·(q−1)² stays below 2^64.
fn u64_mac_ok(terms: usize, q: u64) -> bool {
    (terms as u128).saturating_mul(((q - 1) as u128).pow(2)) < (1u128 << 64)
}

/// Raw f64 accumulation during elimination stays below 2^53 (hence exact)
/// while (n+1)·(q−1)² does; see `solve_f64`.
fn f64_solve_ok(n: usize, q: u64) -> bool {
    ((n + 1) as u128).saturating_mul(((q - 1) as u128).pow(2)) < (1u128 << 53)
}

/// Residue ring K = F_q[x]/f for a squarefree modulus, with the shared
/// precomputations: Newton inverse for remaindering, cached ξ_1, the memo
/// table of ξ indices, the composition cache, and the modular-composition
/// counter used by benchmarks.
pub struct ModulusCtx {
    fctx: FieldCtx,
    f: Poly,
    n: usize,
    rev_f_inv: Poly,
    xi1: OnceLock<Poly>,
    frob_rows: OnceLock<Vec<Vec<u64>>>,
    comp_cache: Mutex<Option<CompCache>>,
    memo: Mutex<HashMap<i64, Poly>>,
    modcomps: AtomicU64,
}

impl fmt::Debug for ModulusCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModulusCtx")
            .field("q", &self.fctx.q())
            .field("f", &self.f.coeffs_u64())
            .finish_non_exhaustive()
    }
}

/// Brent–Kung working set for one fixed right operand b: baby powers
/// b^0..b^s as padded coefficient rows, giant powers (b^s)^i, and forward
/// transforms of the giants when a CRT plan covers the dot product.
struct CompCache {
    key: Vec<u64>,
    baby: Vec<Vec<u64>>,
    giants: Vec<Poly>,
    plan: Option<CrtPlan>,
    giant_fwd: Vec<FwdVecs>,
}

impl ModulusCtx {
    pub fn new(f: &Poly, fctx: &FieldCtx) -> Result<Arc<ModulusCtx>> {
        if f.is_constant() {
            return Err(Error::ConstantPolynomial);
        }
        let f = f.monic(fctx);
        if !poly::gcd(&f, &f.derivative(fctx), fctx).is_one() {
            return Err(Error::NotSquarefree);
        }
        let n = f.degree();
        let rev = reversed(&f, n + 1);
        let rev_f_inv = poly::inverse_mod_xk(&rev, n, fctx)?;
        Ok(Arc::new(ModulusCtx {
            fctx: fctx.clone(),
            f,
            n,
            rev_f_inv,
            xi1: OnceLock::new(),
            frob_rows: OnceLock::new(),
            comp_cache: Mutex::new(None),
            memo: Mutex::new(HashMap::new()),
            modcomps: AtomicU64::new(0),
        }))
    }

    pub fn fctx(&self) -> &FieldCtx {
        &self.fctx
    }

    pub fn q(&self) -> u64 {
        self.fctx.q()
    }

    pub fn modulus(&self) -> &Poly {
        &self.f
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of (non-constant) modular compositions performed through this
    /// context so far.
    pub fn modcomp_count(&self) -> u64 {
        self.modcomps.load(Ordering::Relaxed)
    }

    /// Remainder mod f via the reversal trick: for deg a ≤ 2n−1 the
    /// quotient is rev(a)·rev(f)^{−1} truncated, re-reversed; two truncated
    /// products total. Larger degrees (which no internal caller produces)
    /// fall back to long division.
    pub(crate) fn reduce(&self, a: Poly) -> Poly {
        let n = self.n;
        if a.degree() < n || a.is_zero() {
            return a;
        }
        let da = a.degree();
        if da > 2 * n - 1 {
            let (_, r) = a
                .divrem(&self.f, &self.fctx)
                .expect("modulus is nonconstant");
            return r;
        }
        let k = da - n + 1;
        let ar = reversed_prefix(&a, da, k);
        let qr = ar.mul_trunc(&self.rev_f_inv, k, &self.fctx);
        let quot = reversed(&qr, k);
        let qf = quot.mul_trunc(&self.f, n, &self.fctx);
        let mut coeffs: Vec<FieldElem> = a.coeffs()[..n].to_vec();
        for (c, &s) in coeffs.iter_mut().zip(qf.coeffs()) {
            *c = self.fctx.sub(*c, s);
        }
        Poly::from_coeffs(coeffs)
    }

    pub(crate) fn mul_raw(&self, a: &Poly, b: &Poly) -> Poly {
        self.reduce(a.mul(b, &self.fctx))
    }

    pub(crate) fn pow_raw(&self, base: &Poly, mut e: u64) -> Poly {
        let mut acc = Poly::one();
        let mut b = self.reduce(base.clone());
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_raw(&acc, &b);
            }
            b = self.mul_raw(&b, &b);
            e >>= 1;
        }
        acc
    }

    pub(crate) fn xi1_raw(&self) -> &Poly {
        self.xi1.get_or_init(|| {
            poly::pow_mod(&Poly::x(), self.fctx.q(), &self.f, &self.fctx)
                .expect("modulus is nonconstant")
        })
    }

    /// Matrix of τ in the monomial basis: row j holds the coefficients of
    /// ξ_1^j, so τ(a) = Σ_j a_j·row_j. Built once, on demand; feeds both
    /// the ξ_{−1} solve and the fast path for composition with ξ_1.
    pub(crate) fn frob_table(&self) -> &Vec<Vec<u64>> {
        self.frob_rows.get_or_init(|| {
            let xi1 = self.xi1_raw().clone();
            let mut rows = Vec::with_capacity(self.n);
            let mut cur = Poly::one();
            for _ in 0..self.n {
                rows.push(pad_coeffs(&cur, self.n));
                cur = self.mul_raw(&cur, &xi1);
            }
            rows
        })
    }

    fn frob_apply(&self, a: &Poly, rows: &[Vec<u64>]) -> Poly {
        let n = self.n;
        let q = self.fctx.q();
        if u64_mac_ok(n, q) {
            let mut acc = vec![0u64; n];
            for (j, c) in a.coeffs().iter().enumerate() {
                let cv = c.value();
                if cv == 0 {
                    continue;
                }
                for (dst, &r) in acc.iter_mut().zip(&rows[j]) {
                    *dst += cv * r;
                }
            }
            for v in acc.iter_mut() {
                *v %= q;
            }
            Poly::from_u64(&acc, &self.fctx)
        } else {
            let mut acc = vec![0u64; n];
            for (j, c) in a.coeffs().iter().enumerate() {
                let cv = c.value() as u128;
                if cv == 0 {
                    continue;
                }
                for (dst, &r) in acc.iter_mut().zip(&rows[j]) {
                    *dst = ((*dst as u128 + cv * r as u128) % q as u128) as u64;
                }
            }
            Poly::from_u64(&acc, &self.fctx)
        }
    }

    /// a(b) mod f. Composition with a constant left operand is returned
    /// directly (and not counted); everything else is one counted modular
    /// composition, served by the τ-matrix when b = ξ_1 and the matrix is
    /// already built, else by Brent–Kung.
    pub(crate) fn compose_raw(&self, a: &Poly, b: &Poly) -> Poly {
        if a.is_constant() || self.n == 1 {
            return a.clone();
        }
        debug_assert!(a.degree() < self.n && b.degree() < self.n);
        self.modcomps.fetch_add(1, Ordering::Relaxed);
        if b.degree() == 1 && b.coeff(0).is_zero() && b.coeff(1).value() == 1 {
            return a.clone();
        }
        if let Some(rows) = self.frob_rows.get() {
            if b == self.xi1_raw() {
                return self.frob_apply(a, rows);
            }
        }
        self.brent_kung(a, b)
    }

    fn brent_kung(&self, a: &Poly, b: &Poly) -> Poly {
        let n = self.n;
        let q = self.fctx.q();
        let la = a.coeffs().len();
        let mut s = 1usize;
        while s * s < n {
            s += 1;
        }
        let t = la.div_ceil(s);
        let t_max = n.div_ceil(s);

        let mut guard = self.comp_cache.lock().unwrap();
        let key = b.coeffs_u64();
        let rebuild = match guard.as_ref() {
            Some(c) => c.key != key,
            None => true,
        };
        if rebuild {
            *guard = Some(self.build_comp_cache(b, key, s, t_max));
        }
        let cache = guard.as_ref().unwrap();

        // Block phase: A_i(b) = Σ_{j<s} a_{is+j}·b^j, plain linear algebra
        // over the baby rows.
        let lazy = u64_mac_ok(s + 1, q);
        let mut blocks: Vec<Vec<u64>> = Vec::with_capacity(t);
        for i in 0..t {
            let mut acc = vec![0u64; n];
            for j in 0..s {
                let idx = i * s + j;
                if idx >= la {
                    break;
                }
                let cv = a.coeffs()[idx].value();
                if cv == 0 {
                    continue;
                }
                let row = &cache.baby[j];
                if lazy {
                    for (dst, &r) in acc.iter_mut().zip(row) {
                        *dst += cv * r;
                    }
                } else {
                    for (dst, &r) in acc.iter_mut().zip(row) {
                        *dst = ((*dst as u128 + cv as u128 * r as u128) % q as u128) as u64;
                    }
                }
            }
            if lazy {
                for v in acc.iter_mut() {
                    *v %= q;
                }
            }
            blocks.push(acc);
        }

        // Giant phase: a(b) = Σ_i A_i(b)·(b^s)^i, one fused dot product in
        // the transform domain when a plan exists, else Horner.
        if let Some(plan) = &cache.plan {
            let mut acc = plan.zero();
            for (i, blk) in blocks.iter().enumerate() {
                let fa = plan.fwd(blk);
                plan.mac(&mut acc, &fa, &cache.giant_fwd[i]);
            }
            let out = plan.finish(acc, 2 * n - 1, q);
            self.reduce(Poly::from_u64(&out, &self.fctx))
        } else {
            let bs = cache.giants[1].clone();
            let mut acc = Poly::from_u64(&blocks[t - 1], &self.fctx);
            for blk in blocks[..t - 1].iter().rev() {
                acc = self
                    .mul_raw(&acc, &bs)
                    .add(&Poly::from_u64(blk, &self.fctx), &self.fctx);
            }
            acc
        }
    }

    fn build_comp_cache(&self, b: &Poly, key: Vec<u64>, s: usize, t_max: usize) -> CompCache {
        let n = self.n;
        let q = self.fctx.q();
        let mut baby = Vec::with_capacity(s + 1);
        let mut cur = Poly::one();
        for _ in 0..s {
            baby.push(pad_coeffs(&cur, n));
            cur = self.mul_raw(&cur, b);
        }
        baby.push(pad_coeffs(&cur, n)); // b^s
        let bs = cur;
        let mut giants = Vec::with_capacity(t_max);
        giants.push(Poly::one());
        if t_max > 1 {
            giants.push(bs);
        }
        while giants.len() < t_max {
            let next = self.mul_raw(giants.last().unwrap(), &giants[1]);
            giants.push(next);
        }
        let bound = (t_max as u128)
            .saturating_mul(n as u128)
            .saturating_mul(((q - 1) as u128).pow(2));
        let plan = CrtPlan::new(2 * n - 1, bound);
        let giant_fwd = match &plan {
            Some(p) => giants
                .iter()
                .map(|g| p.fwd(&pad_coeffs(g, n)))
                .collect(),
            None => Vec::new(),
        };
        CompCache {
            key,
            baby,
            giants,
            plan,
            giant_fwd,
        }
    }

    /// ξ_i for signed i, memoized: positive indices chain from ξ_1,
    /// negative ones from ξ_{−1}, both by index-halving compositions.
    pub(crate) fn xi_signed(&self, i: i64) -> Result<Poly> {
        if i == 0 {
            return Ok(self.reduce(Poly::x()));
        }
        if let Some(p) = self.memo.lock().unwrap().get(&i) {
            return Ok(p.clone());
        }
        let val = if i == 1 {
            self.xi1_raw().clone()
        } else if i == -1 {
            self.xi_minus_one()?
        } else {
            let half = i / 2;
            let rest = i - half;
            let a = self.xi_signed(half)?;
            let b = self.xi_signed(rest)?;
            self.compose_raw(&a, &b)
        };
        self.memo.lock().unwrap().insert(i, val.clone());
        Ok(val)
    }

    /// ξ_{−1}: solve Q·v = ξ where Q is the matrix of τ. Exact f64
    /// elimination when the magnitude gate allows it, u128 modular
    /// elimination otherwise.
    fn xi_minus_one(&self) -> Result<Poly> {
        let rows = self.frob_table();
        let q = self.fctx.q();
        let rhs = pad_coeffs(&self.reduce(Poly::x()), self.n);
        let sol = if f64_solve_ok(self.n, q) {
            solve_f64(rows, &rhs, q)
        } else {
            solve_u128(rows, &rhs, q)
        };
        match sol {
            Some(v) => Ok(Poly::from_u64(&v, &self.fctx)),
            None => Err(Error::SingularSolve),
        }
    }
}

fn pad_coeffs(p: &Poly, n: usize) -> Vec<u64> {
    let mut v = p.coeffs_u64();
    v.resize(n, 0);
    v
}

/// Reversal of p as a degree-(len−1) coefficient vector.
fn reversed(p: &Poly, len: usize) -> Poly {
    let mut v = p.coeffs().to_vec();
    v.resize(len, FieldElem(0));
    v.reverse();
    Poly::from_coeffs(v)
}

/// First k coefficients of the reversal of p viewed at degree `deg`.
fn reversed_prefix(p: &Poly, deg: usize, k: usize) -> Poly {
    let coeffs: Vec<FieldElem> = (0..k).map(|j| p.coeff(deg - j)).collect();
    Poly::from_coeffs(coeffs)
}

/// Gaussian elimination where non-pivot rows accumulate raw f64 values.
/// Every stored value is an integer below (n+1)·(q−1)² < 2^53, so each
/// f64 operation is exact; rows are reduced mod q only when they become
/// pivots. Columns of the system are `cols[j]` (the matrix is used
/// transposed: row i of the system is Σ_j cols[j][i]·v_j = rhs[i]).
fn solve_f64(cols: &[Vec<u64>], rhs: &[u64], q: u64) -> Option<Vec<u64>> {
    let n = rhs.len();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| cols[j][i] as f64).collect();
            row.push(rhs[i] as f64);
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| (m[r][col] as u64) % q != 0)?;
        m.swap(col, piv);
        let lead = (m[col][col] as u64) % q;
        let lead_inv = powmod(lead, q - 2, q);
        for k in col..=n {
            let v = (m[col][k] as u64) % q;
            m[col][k] = (((v as u128 * lead_inv as u128) % q as u128) as u64) as f64;
        }
        let (pivot_row, below) = {
            let (top, bottom) = m.split_at_mut(col + 1);
            (&top[col], bottom)
        };
        for row in below.iter_mut() {
            let e = (row[col] as u64) % q;
            if e == 0 {
                continue;
            }
            let factor = (q - e) as f64;
            for k in col..=n {
                row[k] += factor * pivot_row[k];
            }
        }
    }
    // Pivot rows are reduced with unit diagonal; back-substitute mod q.
    let mut x = vec![0u64; n];
    for i in (0..n).rev() {
        let mut acc = m[i][n] as u64 % q;
        for j in i + 1..n {
            let c = m[i][j] as u64 % q;
            let t = ((c as u128 * x[j] as u128) % q as u128) as u64;
            acc = (acc + q - t) % q;
        }
        x[i] = acc;
    }
    Some(x)
}

/// Fully reduced modular elimination, used when q is too large for the
/// exact-f64 route.
fn solve_u128(cols: &[Vec<u64>], rhs: &[u64], q: u64) -> Option<Vec<u64>> {
    let n = rhs.len();
    let mut m: Vec<Vec<u64>> = (0..n)
        .map(|i| {
            let mut row: Vec<u64> = (0..n).map(|j| cols[j][i] % q).collect();
            row.push(rhs[i] % q);
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| m[r][col] != 0)?;
        m.swap(col, piv);
        let lead_inv = powmod(m[col][col], q - 2, q);
        for k in col..=n {
            m[col][k] = ((m[col][k] as u128 * lead_inv as u128) % q as u128) as u64;
        }
        let (pivot_row, below) = {
            let (top, bottom) = m.split_at_mut(col + 1);
            (&top[col], bottom)
        };
        for row in below.iter_mut() {
            let e = row[col];
            if e == 0 {
                continue;
            }
            let neg = q - e;
            for k in col..=n {
                row[k] =
                    ((row[k] as u128 + neg as u128 * pivot_row[k] as u128) % q as u128) as u64;
            }
        }
    }
    let mut x = vec![0u64; n];
    for i in (0..n).rev() {
        let mut acc = m[i][n];
        for j in i + 1..n {
            let t = ((m[i][j] as u128 * x[j] as u128) % q as u128) as u64;
            acc = (acc + q - t) % q;
        }
        x[i] = acc;
    }
    Some(x)
}

/// Element of K = F_q[x]/f: a reduced polynomial plus a handle to its
/// context. Binary operations require identical contexts.
#[derive(Clone, Debug)]
pub struct ResidueElem {
    poly: Poly,
    ctx: Arc<ModulusCtx>,
}

impl PartialEq for ResidueElem {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.ctx, &other.ctx) && self.poly == other.poly
    }
}

impl Eq for ResidueElem {}

impl ResidueElem {
    pub fn from_poly(p: Poly, ctx: &Arc<ModulusCtx>) -> ResidueElem {
        ResidueElem {
            poly: ctx.reduce(p),
            ctx: ctx.clone(),
        }
    }

    pub fn poly(&self) -> &Poly {
        &self.poly
    }

    pub fn ctx(&self) -> &Arc<ModulusCtx> {
        &self.ctx
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    fn assert_shared(&self, other: &Self) {
        assert!(
            Arc::ptr_eq(&self.ctx, &other.ctx),
            "residue operands come from different moduli"
        );
    }

    pub fn add(&self, other: &Self) -> Self {
        self.assert_shared(other);
        ResidueElem {
            poly: self.poly.add(&other.poly, self.ctx.fctx()),
            ctx: self.ctx.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.assert_shared(other);
        ResidueElem {
            poly: self.poly.sub(&other.poly, self.ctx.fctx()),
            ctx: self.ctx.clone(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.assert_shared(other);
        ResidueElem {
            poly: self.ctx.mul_raw(&self.poly, &other.poly),
            ctx: self.ctx.clone(),
        }
    }
}

fn wrap(poly: Poly, ctx: &Arc<ModulusCtx>) -> ResidueElem {
    ResidueElem {
        poly,
        ctx: ctx.clone(),
    }
}

/// ξ_1 = ξ^q, computed by repeated squaring and cached in the context.
pub fn xi_one(ctx: &Arc<ModulusCtx>) -> ResidueElem {
    wrap(ctx.xi1_raw().clone(), ctx)
}

/// a(b) mod f by Brent–Kung baby-step/giant-step.
pub fn modcomp(a: &ResidueElem, b: &ResidueElem) -> Result<ResidueElem> {
    if !Arc::ptr_eq(a.ctx(), b.ctx()) {
        return Err(Error::ContextMismatch);
    }
    Ok(wrap(a.ctx.compose_raw(&a.poly, &b.poly), a.ctx()))
}

/// ξ_r for r ≥ 0 in O(log r) compositions via ξ_i(ξ_j) = ξ_{i+j}.
pub fn xi_power(r: u64, ctx: &Arc<ModulusCtx>) -> ResidueElem {
    assert!(r <= i64::MAX as u64, "Frobenius index out of range");
    let p = ctx
        .xi_signed(r as i64)
        .expect("nonnegative Frobenius powers never require a solve");
    wrap(p, ctx)
}

/// ξ_{−i}, the inverse-Frobenius power: ξ_{−1} by a linear solve against
/// the matrix of τ, larger indices by composition chains.
pub fn xi_negative(i: u64, ctx: &Arc<ModulusCtx>) -> Result<ResidueElem> {
    assert!(i <= i64::MAX as u64, "Frobenius index out of range");
    Ok(wrap(ctx.xi_signed(-(i as i64))?, ctx))
}

/// τ^i applied to every point: result[j] = points[j](ξ_i).
pub fn batch_apply(points: &[ResidueElem], xi_i: &ResidueElem) -> Result<Vec<ResidueElem>> {
    for p in points {
        if !Arc::ptr_eq(p.ctx(), xi_i.ctx()) {
            return Err(Error::ContextMismatch);
        }
    }
    Ok(points
        .iter()
        .map(|p| wrap(xi_i.ctx.compose_raw(&p.poly, &xi_i.poly), xi_i.ctx()))
        .collect())
}

/// (ξ_{−u}, ξ_{−(u+ℓ)}, …, ξ_{−(u+(m−1)ℓ)}) by prefix doubling: each round
/// composes the known prefix with ξ_{−2^k ℓ}, then everything is shifted
/// by ξ_{−u}. The power-of-two strides land in the context memo table.
pub fn geometric_xi(u: u64, ell: u64, m: u64, ctx: &Arc<ModulusCtx>) -> Vec<ResidueElem> {
    assert!(ell >= 1 && m >= 1, "geometric sequence needs ell, m ≥ 1");
    let invertible = "Frobenius is invertible on a squarefree modulus";
    let mut xs: Vec<Poly> = vec![ctx.reduce(Poly::x())];
    let mut stride = ell as i64;
    while (xs.len() as u64) < m {
        let cur = ctx.xi_signed(-stride).expect(invertible);
        let take = xs.len().min(m as usize - xs.len());
        let mut next: Vec<Poly> = xs[..take].iter().map(|p| ctx.compose_raw(p, &cur)).collect();
        xs.append(&mut next);
        stride *= 2;
    }
    if u > 0 {
        let xu = ctx.xi_signed(-(u as i64)).expect(invertible);
        xs = xs.iter().map(|p| ctx.compose_raw(p, &xu)).collect();
    }
    xs.into_iter().map(|p| wrap(p, ctx)).collect()
}

/// τ^{u+(m−1)ℓ}(β_{m−1}) ⋯ τ^{u+ℓ}(β_1) τ^u(β_0): pad to a power of two
/// with identities, fold pairs via a_i ← a_{2i+1}(ζ)·a_{2i} with ζ = ξ_ℓ
/// doubling each level, and compose the final matrix with ξ_u.
pub fn twisted_product(mats: &[Mat2], u: u64, ell: u64, ctx: &Arc<ModulusCtx>) -> Result<Mat2> {
    if mats.is_empty() || ell == 0 {
        return Err(Error::InvalidInput(
            "twisted product needs at least one matrix and a positive stride".into(),
        ));
    }
    for m in mats {
        if !Arc::ptr_eq(m.ctx(), ctx) {
            return Err(Error::ContextMismatch);
        }
    }
    let mut work: Vec<Mat2> = mats.to_vec();
    work.resize(work.len().next_power_of_two(), Mat2::identity(ctx));
    let mut stride = ell as i64;
    while work.len() > 1 {
        let zeta = ctx.xi_signed(stride)?;
        let mut next = Vec::with_capacity(work.len() / 2);
        for pair in work.chunks(2) {
            next.push(pair[1].compose_entries(&zeta).mul_unchecked(&pair[0]));
        }
        work = next;
        stride *= 2;
    }
    let mut res = work.pop().unwrap();
    if u > 0 {
        res = res.compose_entries(&ctx.xi_signed(u as i64)?);
    }
    Ok(res)
}

/// a_0 + τ^ℓ(a_1) + ⋯ + τ^{(m−1)ℓ}(a_{m−1}), the additive variant of the
/// same halving scheme (zero padding in place of identity matrices).
pub fn twisted_sum(elems: &[ResidueElem], ell: u64, ctx: &Arc<ModulusCtx>) -> Result<ResidueElem> {
    if elems.is_empty() || ell == 0 {
        return Err(Error::InvalidInput(
            "twisted sum needs at least one element and a positive stride".into(),
        ));
    }
    for e in elems {
        if !Arc::ptr_eq(e.ctx(), ctx) {
            return Err(Error::ContextMismatch);
        }
    }
    let mut work: Vec<Poly> = elems.iter().map(|e| e.poly.clone()).collect();
    work.resize(work.len().next_power_of_two(), Poly::zero());
    let mut stride = ell as i64;
    while work.len() > 1 {
        let zeta = ctx.xi_signed(stride)?;
        let mut next = Vec::with_capacity(work.len() / 2);
        for pair in work.chunks(2) {
            next.push(ctx.compose_raw(&pair[1], &zeta).add(&pair[0], ctx.fctx()));
        }
        work = next;
        stride *= 2;
    }
    Ok(wrap(work.pop().unwrap(), ctx))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx_for(coeffs: &[u64], q: u64) -> (FieldCtx, Arc<ModulusCtx>) {
        let fctx = FieldCtx::new(q).unwrap();
        let f = Poly::from_u64(coeffs, &fctx);
        let ctx = ModulusCtx::new(&f, &fctx).unwrap();
        (fctx, ctx)
    }

    fn pseudo_poly(len: usize, fctx: &FieldCtx, mut s: u64) -> Poly {
        s |= 1;
        let v: Vec<u64> = (0..len)
            .map(|_| {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                s % fctx.q()
            })
            .collect();
        Poly::from_u64(&v, fctx)
    }

    /// Composition by Horner entirely through generic poly ops.
    fn horner_compose(a: &Poly, b: &Poly, f: &Poly, fctx: &FieldCtx) -> Poly {
        let mut acc = Poly::zero();
        for c in a.coeffs().iter().rev() {
            acc = acc
                .mul(b, fctx)
                .add(&Poly::constant(*c), fctx)
                .rem(f, fctx)
                .unwrap();
        }
        acc
    }

    fn tau_pow(p: &Poly, k: u64, f: &Poly, fctx: &FieldCtx) -> Poly {
        let mut out = p.clone();
        for _ in 0..k {
            out = poly::pow_mod(&out, fctx.q(), f, fctx).unwrap();
        }
        out
    }

    #[test]
    fn reduce_agrees_with_long_division() {
        let (fctx, ctx) = ctx_for(&[2, 0, 1, 3, 0, 0, 0, 0, 0, 0, 0, 1], 7);
        for seed in 1..6u64 {
            let a = pseudo_poly(22, &fctx, seed); // degree 2n−2
            let expect = a.rem(ctx.modulus(), &fctx).unwrap();
            assert_eq!(ctx.reduce(a), expect);
        }
        let long = pseudo_poly(40, &fctx, 99); // beyond 2n−1: fallback
        let expect = long.rem(ctx.modulus(), &fctx).unwrap();
        assert_eq!(ctx.reduce(long), expect);
    }

    #[test]
    fn xi_one_examples() {
        let (fctx, ctx) = ctx_for(&[1, 0, 1], 7); // x²+1
        assert_eq!(xi_one(&ctx).poly(), &Poly::from_u64(&[0, 6], &fctx));
        let (fctx1, ctx1) = ctx_for(&[4, 1], 7); // x+4 = x−3
        assert_eq!(xi_one(&ctx1).poly(), &Poly::from_u64(&[3], &fctx1));
    }

    #[test]
    fn modcomp_matches_horner_oracle() {
        let (fctx, ctx) = ctx_for(&[3, 1, 0, 0, 2, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1], 7);
        for seed in 1..8u64 {
            let a = ResidueElem::from_poly(pseudo_poly(16, &fctx, seed), &ctx);
            let b = ResidueElem::from_poly(pseudo_poly(16, &fctx, seed + 100), &ctx);
            let got = modcomp(&a, &b).unwrap();
            let expect = horner_compose(a.poly(), b.poly(), ctx.modulus(), &fctx);
            assert_eq!(got.poly(), &expect, "seed {seed}");
        }
    }

    #[test]
    fn modcomp_huge_field_takes_fallback_paths() {
        let q = (1u64 << 61) - 1;
        let (fctx, ctx) = ctx_for(&[1, 1, 0, 0, 0, 1], q);
        let a = ResidueElem::from_poly(pseudo_poly(5, &fctx, 2), &ctx);
        let b = ResidueElem::from_poly(pseudo_poly(5, &fctx, 3), &ctx);
        let got = modcomp(&a, &b).unwrap();
        let expect = horner_compose(a.poly(), b.poly(), ctx.modulus(), &fctx);
        assert_eq!(got.poly(), &expect);
    }

    #[test]
    fn modcomp_identity_operands() {
        let (fctx, ctx) = ctx_for(&[1, 2, 0, 0, 1], 7);
        let x = ResidueElem::from_poly(Poly::x(), &ctx);
        let a = ResidueElem::from_poly(pseudo_poly(4, &fctx, 5), &ctx);
        assert_eq!(modcomp(&x, &a).unwrap(), a);
        assert_eq!(modcomp(&a, &x).unwrap(), a);
    }

    #[test]
    fn modcomp_rejects_context_mismatch() {
        let (_, ctx1) = ctx_for(&[1, 2, 0, 0, 1], 7);
        let (_, ctx2) = ctx_for(&[1, 2, 0, 0, 1], 7);
        let a = ResidueElem::from_poly(Poly::x(), &ctx1);
        let b = ResidueElem::from_poly(Poly::x(), &ctx2);
        assert!(matches!(modcomp(&a, &b), Err(Error::ContextMismatch)));
    }

    #[test]
    fn xi_index_relations() {
        // Random-ish squarefree degree-12 modulus over F_5.
        let (_, ctx) = ctx_for(&[2, 4, 1, 0, 3, 0, 0, 1, 0, 0, 0, 0, 1], 5);
        let xi = ResidueElem::from_poly(Poly::x(), &ctx);
        for i in 0..=8u64 {
            for j in 0..=8u64 {
                let lhs = modcomp(&xi_power(i, &ctx), &xi_power(j, &ctx)).unwrap();
                assert_eq!(lhs, xi_power(i + j, &ctx), "i={i} j={j}");
            }
        }
        for i in 0..=8u64 {
            let neg = xi_negative(i, &ctx).unwrap();
            assert_eq!(modcomp(&neg, &xi_power(i, &ctx)).unwrap(), xi);
            assert_eq!(modcomp(&xi_power(i, &ctx), &neg).unwrap(), xi);
        }
    }

    #[test]
    fn xi_examples_on_involutive_modulus() {
        // On F_7[x]/(x²+1), τ is an involution: every odd index gives 6x.
        let (fctx, ctx) = ctx_for(&[1, 0, 1], 7);
        let minus_x = Poly::from_u64(&[0, 6], &fctx);
        assert_eq!(xi_power(5, &ctx).poly(), &minus_x);
        assert_eq!(xi_negative(1, &ctx).unwrap().poly(), &minus_x);
        assert_eq!(xi_negative(0, &ctx).unwrap().poly(), &Poly::x());
    }

    #[test]
    fn xi_power_cycles_on_irreducible_modulus() {
        // Degree-6 irreducible over F_7: τ has order 6 on K.
        let (_, ctx) = ctx_for(&[2, 5, 6, 3, 6, 6, 1], 7);
        let xi = ResidueElem::from_poly(Poly::x(), &ctx);
        assert_eq!(xi_power(6, &ctx), xi);
        assert_ne!(xi_power(3, &ctx), xi);
    }

    #[test]
    fn frobenius_table_path_matches_brent_kung() {
        let (fctx, ctx) = ctx_for(
            &[5, 1, 0, 2, 0, 0, 1, 0, 0, 3, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1],
            7,
        );
        let a = pseudo_poly(20, &fctx, 17);
        let via_bk = ctx.brent_kung(&a, &ctx.xi1_raw().clone());
        ctx.frob_table(); // build the τ matrix; compose now takes the MAC path
        let via_table = ctx.compose_raw(&a, &ctx.xi1_raw().clone());
        let oracle = poly::pow_mod(&a, 7, ctx.modulus(), &fctx).unwrap();
        assert_eq!(via_bk, oracle);
        assert_eq!(via_table, oracle);
    }

    #[test]
    fn solver_paths_agree() {
        let (_, ctx) = ctx_for(&[2, 4, 1, 0, 3, 0, 0, 1, 0, 0, 0, 0, 1], 5);
        let rows = ctx.frob_table();
        let rhs = pad_coeffs(&Poly::x(), ctx.n());
        let a = solve_f64(rows, &rhs, 5).unwrap();
        let b = solve_u128(rows, &rhs, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn batch_apply_matches_per_element_composition() {
        let (fctx, ctx) = ctx_for(&[2, 0, 1, 0, 0, 3, 0, 0, 0, 0, 1], 7);
        let pts: Vec<ResidueElem> = (0..4)
            .map(|k| ResidueElem::from_poly(pseudo_poly(10, &fctx, 31 + k), &ctx))
            .collect();
        let xi = ResidueElem::from_poly(Poly::x(), &ctx);
        assert_eq!(batch_apply(&pts, &xi).unwrap(), pts);
        let x3 = xi_power(3, &ctx);
        let got = batch_apply(&pts, &x3).unwrap();
        for (g, p) in got.iter().zip(&pts) {
            assert_eq!(g, &modcomp(p, &x3).unwrap());
        }
        assert_eq!(
            batch_apply(&pts[..1], &x3).unwrap()[0],
            modcomp(&pts[0], &x3).unwrap()
        );
    }

    #[test]
    fn geometric_xi_matches_per_index_oracle() {
        let (_, ctx) = ctx_for(&[2, 0, 1, 0, 0, 3, 0, 0, 0, 0, 1], 7);
        let xi = ResidueElem::from_poly(Poly::x(), &ctx);
        assert_eq!(geometric_xi(0, 1, 1, &ctx), vec![xi.clone()]);
        let got = geometric_xi(0, 1, 3, &ctx);
        for (j, g) in got.iter().enumerate() {
            assert_eq!(g, &xi_negative(j as u64, &ctx).unwrap(), "index {j}");
        }
        // u=2, ℓ=3, m=4 on a degree-14 squarefree modulus.
        let (_, ctx14) = ctx_for(&[1, 3, 0, 1, 0, 0, 2, 0, 0, 0, 0, 4, 0, 0, 1], 5);
        let got = geometric_xi(2, 3, 4, &ctx14);
        for (j, g) in got.iter().enumerate() {
            let idx = 2 + 3 * j as u64;
            assert_eq!(g, &xi_negative(idx, &ctx14).unwrap(), "index −{idx}");
        }
    }

    #[test]
    fn twisted_product_matches_naive_oracle() {
        let (fctx, ctx) = ctx_for(&[3, 1, 0, 0, 2, 0, 0, 0, 1], 7);
        let f = ctx.modulus().clone();
        let rand_mat = |seed: u64| {
            Mat2::new([
                ResidueElem::from_poly(pseudo_poly(8, &fctx, seed), &ctx),
                ResidueElem::from_poly(pseudo_poly(8, &fctx, seed + 1), &ctx),
                ResidueElem::from_poly(pseudo_poly(8, &fctx, seed + 2), &ctx),
                ResidueElem::from_poly(pseudo_poly(8, &fctx, seed + 3), &ctx),
            ])
            .unwrap()
        };
        let mats = [rand_mat(10), rand_mat(20), rand_mat(30)];
        let (u, ell) = (1u64, 2u64);
        let got = twisted_product(&mats, u, ell, &ctx).unwrap();
        // Naive: τ^{u+iℓ} entrywise by repeated q-th powering, multiply
        // left-to-right with plain polynomial arithmetic.
        let twist = |m: &Mat2, k: u64| -> Vec<Poly> {
            (0..4)
                .map(|e| tau_pow(m.entry(e / 2, e % 2).poly(), k, &f, &fctx))
                .collect()
        };
        let mm = |a: &[Poly], b: &[Poly]| -> Vec<Poly> {
            let mul = |x: &Poly, y: &Poly| x.mul(y, &fctx).rem(&f, &fctx).unwrap();
            vec![
                mul(&a[0], &b[0]).add(&mul(&a[1], &b[2]), &fctx),
                mul(&a[0], &b[1]).add(&mul(&a[1], &b[3]), &fctx),
                mul(&a[2], &b[0]).add(&mul(&a[3], &b[2]), &fctx),
                mul(&a[2], &b[1]).add(&mul(&a[3], &b[3]), &fctx),
            ]
        };
        let expect = mm(
            &twist(&mats[2], u + 2 * ell),
            &mm(&twist(&mats[1], u + ell), &twist(&mats[0], u)),
        );
        for e in 0..4 {
            assert_eq!(got.entry(e / 2, e % 2).poly(), &expect[e], "entry {e}");
        }
    }

    #[test]
    fn twisted_product_trivial_cases() {
        let (fctx, ctx) = ctx_for(&[3, 1, 0, 0, 2, 0, 0, 0, 1], 7);
        let b0 = Mat2::new([
            ResidueElem::from_poly(pseudo_poly(8, &fctx, 4), &ctx),
            ResidueElem::from_poly(pseudo_poly(8, &fctx, 5), &ctx),
            ResidueElem::from_poly(pseudo_poly(8, &fctx, 6), &ctx),
            ResidueElem::from_poly(pseudo_poly(8, &fctx, 7), &ctx),
        ])
        .unwrap();
        let got = twisted_product(std::slice::from_ref(&b0), 0, 3, &ctx).unwrap();
        for e in 0..4 {
            assert_eq!(got.entry(e / 2, e % 2), b0.entry(e / 2, e % 2));
        }
        let ids = vec![Mat2::identity(&ctx); 3];
        let got = twisted_product(&ids, 2, 2, &ctx).unwrap();
        for e in 0..4 {
            assert_eq!(
                got.entry(e / 2, e % 2),
                Mat2::identity(&ctx).entry(e / 2, e % 2)
            );
        }
    }

    #[test]
    fn twisted_sum_matches_naive_oracle() {
        let (fctx, ctx) = ctx_for(&[3, 1, 0, 0, 2, 0, 0, 0, 1], 7);
        let f = ctx.modulus().clone();
        let elems: Vec<ResidueElem> = (0..5)
            .map(|k| ResidueElem::from_poly(pseudo_poly(8, &fctx, 40 + k), &ctx))
            .collect();
        let ell = 2u64;
        let got = twisted_sum(&elems, ell, &ctx).unwrap();
        let mut expect = Poly::zero();
        for (i, e) in elems.iter().enumerate() {
            expect = expect.add(&tau_pow(e.poly(), ell * i as u64, &f, &fctx), &fctx);
        }
        assert_eq!(got.poly(), &expect);
        assert_eq!(twisted_sum(&elems[..1], 5, &ctx).unwrap(), elems[0]);
        let zeros = vec![ResidueElem::from_poly(Poly::zero(), &ctx); 4];
        assert!(twisted_sum(&zeros, 1, &ctx).unwrap().is_zero());
    }

    #[test]
    fn modcomp_counter_tracks_compositions() {
        let (fctx, ctx) = ctx_for(&[1, 2, 0, 0, 1], 7);
        assert_eq!(ctx.modcomp_count(), 0);
        let a = ResidueElem::from_poly(pseudo_poly(4, &fctx, 9), &ctx);
        let b = ResidueElem::from_poly(pseudo_poly(4, &fctx, 11), &ctx);
        modcomp(&a, &b).unwrap();
        assert_eq!(ctx.modcomp_count(), 1);
        let c = ResidueElem::from_poly(Poly::constant(fctx.elem(3)), &ctx);
        modcomp(&c, &b).unwrap(); // constant left operand is free
        assert_eq!(ctx.modcomp_count(), 1);
    }
}
