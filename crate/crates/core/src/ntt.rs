//! Number-theoretic transforms backing dense polynomial multiplication.
//!
//! Two regimes:
//! - in-field NTT when q − 1 has enough 2-adic factors for the output length;
//! - otherwise the coefficient sequences are convolved as nonnegative
//!   integers with NTTs modulo one to three fixed primes and recombined by
//!   CRT, choosing the prime count from an explicit per-coefficient bound.
//!
//! `CrtPlan` exposes the integer-convolution machinery at the transform
//! level (forward transform, pointwise multiply-accumulate, inverse), so
//! callers that repeatedly multiply against a fixed operand set can cache
//! forward transforms instead of redoing them per product.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

pub(crate) const P1: u64 = 998_244_353; // 119·2^23 + 1, generator 3
pub(crate) const P2: u64 = 469_762_049; // 7·2^26 + 1, generator 3
pub(crate) const P3: u64 = 167_772_161; // 5·2^25 + 1, generator 3
const CRT_PRIMES: [u64; 3] = [P1, P2, P3];

/// Hard length ceiling, set by the 2-adicity of P1.
pub(crate) const MAX_NTT_LEN: usize = 1 << 23;

pub(crate) fn powmod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = ((acc as u128 * b as u128) % m as u128) as u64;
        }
        b = ((b as u128 * b as u128) % m as u128) as u64;
        e >>= 1;
    }
    acc
}

fn bit_reverse_permute(a: &mut [u64]) {
    let n = a.len();
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            a.swap(i, j);
        }
    }
}

/// Staged twiddle factors for one (prime, length) pair: the slice
/// `w[half..2·half]` holds the powers of the order-2·half root, so one flat
/// vector serves every butterfly level.
struct NttTables {
    fwd: Vec<u64>,
    inv: Vec<u64>,
    inv_len: u64,
}

fn build_tables(p: u64, len: usize) -> NttTables {
    debug_assert!(len.is_power_of_two() && len <= MAX_NTT_LEN);
    let root = powmod(3, (p - 1) / len as u64, p);
    let root_inv = powmod(root, p - 2, p);
    let stage = |r: u64| {
        let mut w = vec![0u64; len.max(2)];
        let mut half = 1usize;
        while half < len {
            let base = powmod(r, (len / (2 * half)) as u64, p);
            let mut cur = 1u64;
            for j in 0..half {
                w[half + j] = cur;
                cur = ((cur as u128 * base as u128) % p as u128) as u64;
            }
            half *= 2;
        }
        w[..2].fill(1);
        w
    };
    NttTables {
        fwd: stage(root),
        inv: stage(root_inv),
        inv_len: powmod(len as u64, p - 2, p),
    }
}

fn tables_for(p: u64, len: usize) -> Arc<NttTables> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, usize), Arc<NttTables>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry((p, len))
        .or_insert_with(|| Arc::new(build_tables(p, len)))
        .clone()
}

/// Iterative Cooley–Tukey over a compile-time prime so the reductions
/// lower to multiply-high sequences instead of hardware division.
fn ntt_in_place<const P: u64>(a: &mut [u64], tab: &[u64]) {
    let n = a.len();
    bit_reverse_permute(a);
    let mut half = 1usize;
    while half < n {
        let tw = &tab[half..2 * half];
        let mut start = 0usize;
        while start < n {
            for j in 0..half {
                let u = a[start + j];
                let t = ((a[start + j + half] as u128 * tw[j] as u128) % P as u128) as u64;
                let mut s = u + t;
                if s >= P {
                    s -= P;
                }
                a[start + j] = s;
                a[start + j + half] = u + P - t - if u >= t { P } else { 0 };
            }
            start += 2 * half;
        }
        half *= 2;
    }
}

fn ntt_dispatch(p: u64, a: &mut [u64], tab: &[u64]) {
    match p {
        P1 => ntt_in_place::<P1>(a, tab),
        P2 => ntt_in_place::<P2>(a, tab),
        P3 => ntt_in_place::<P3>(a, tab),
        _ => unreachable!("unknown CRT prime"),
    }
}

/// Fixed-prime convolution plan: output length rounded to a power of two,
/// prime count chosen so the true integer coefficients (bounded by the
/// caller) are recovered exactly.
pub(crate) struct CrtPlan {
    pub(crate) len: usize,
    nprimes: usize,
}

/// Forward transforms of one operand under every prime of a plan.
pub(crate) struct FwdVecs {
    vecs: Vec<Vec<u64>>,
}

impl CrtPlan {
    pub(crate) fn new(out_len: usize, coeff_bound: u128) -> Option<CrtPlan> {
        let len = out_len.next_power_of_two();
        if len > MAX_NTT_LEN {
            return None;
        }
        let p12 = P1 as u128 * P2 as u128;
        let p123 = p12.checked_mul(P3 as u128)?;
        let nprimes = if coeff_bound < P1 as u128 {
            1
        } else if coeff_bound < p12 {
            2
        } else if coeff_bound < p123 {
            3
        } else {
            return None;
        };
        Some(CrtPlan { len, nprimes })
    }

    pub(crate) fn fwd(&self, coeffs: &[u64]) -> FwdVecs {
        debug_assert!(coeffs.len() <= self.len);
        let vecs = CRT_PRIMES[..self.nprimes]
            .iter()
            .map(|&p| {
                let mut v = vec![0u64; self.len];
                for (dst, &c) in v.iter_mut().zip(coeffs) {
                    *dst = c % p;
                }
                let tab = tables_for(p, self.len);
                ntt_dispatch(p, &mut v, &tab.fwd);
                v
            })
            .collect();
        FwdVecs { vecs }
    }

    pub(crate) fn zero(&self) -> FwdVecs {
        FwdVecs {
            vecs: vec![vec![0u64; self.len]; self.nprimes],
        }
    }

    pub(crate) fn mac(&self, acc: &mut FwdVecs, a: &FwdVecs, b: &FwdVecs) {
        for (i, &p) in CRT_PRIMES[..self.nprimes].iter().enumerate() {
            let (av, bv, accv) = (&a.vecs[i], &b.vecs[i], &mut acc.vecs[i]);
            for j in 0..self.len {
                let t = (av[j] as u128 * bv[j] as u128 + accv[j] as u128) % p as u128;
                accv[j] = t as u64;
            }
        }
    }

    /// Inverse transforms, CRT recombination, reduction mod q.
    pub(crate) fn finish(&self, mut acc: FwdVecs, out_len: usize, q: u64) -> Vec<u64> {
        for (i, &p) in CRT_PRIMES[..self.nprimes].iter().enumerate() {
            let tab = tables_for(p, self.len);
            ntt_dispatch(p, &mut acc.vecs[i], &tab.inv);
            for x in acc.vecs[i].iter_mut() {
                *x = ((*x as u128 * tab.inv_len as u128) % p as u128) as u64;
            }
        }
        let mut out = vec![0u64; out_len];
        match self.nprimes {
            1 => {
                for (o, &x) in out.iter_mut().zip(&acc.vecs[0]) {
                    *o = x % q;
                }
            }
            2 => {
                let inv_p1 = powmod(P1 % P2, P2 - 2, P2);
                for j in 0..out_len {
                    let (x1, x2) = (acc.vecs[0][j], acc.vecs[1][j]);
                    let d = (x2 + P2 - x1 % P2) % P2;
                    let t = ((d as u128 * inv_p1 as u128) % P2 as u128) as u64;
                    let v = x1 as u128 + P1 as u128 * t as u128; // < P1·P2
                    out[j] = (v % q as u128) as u64;
                }
            }
            3 => {
                let inv_p1 = powmod(P1 % P2, P2 - 2, P2);
                let p12 = P1 as u128 * P2 as u128;
                let inv_p12 = powmod((p12 % P3 as u128) as u64, P3 - 2, P3);
                for j in 0..out_len {
                    let (x1, x2, x3) = (acc.vecs[0][j], acc.vecs[1][j], acc.vecs[2][j]);
                    let d = (x2 + P2 - x1 % P2) % P2;
                    let t = ((d as u128 * inv_p1 as u128) % P2 as u128) as u64;
                    let y = x1 as u128 + P1 as u128 * t as u128; // < P1·P2
                    let d3 = (x3 + P3 - (y % P3 as u128) as u64) % P3;
                    let t3 = ((d3 as u128 * inv_p12 as u128) % P3 as u128) as u64;
                    let v = y + p12 * t3 as u128; // < P1·P2·P3 < 2^87
                    out[j] = (v % q as u128) as u64;
                }
            }
            _ => unreachable!(),
        }
        out
    }
}

/// Integer convolution of coefficient vectors over F_q via fixed CRT primes.
/// Returns None when no prime subset can bound the exact coefficients.
pub(crate) fn convolve_crt(a: &[u64], b: &[u64], q: u64) -> Option<Vec<u64>> {
    debug_assert!(!a.is_empty() && !b.is_empty());
    let out_len = a.len() + b.len() - 1;
    let bound = (a.len().min(b.len()) as u128).saturating_mul(((q - 1) as u128).pow(2));
    let plan = CrtPlan::new(out_len, bound)?;
    let fa = plan.fwd(a);
    let fb = plan.fwd(b);
    let mut acc = plan.zero();
    plan.mac(&mut acc, &fa, &fb);
    Some(plan.finish(acc, out_len, q))
}

pub(crate) fn two_adicity(mut v: u64) -> u32 {
    if v == 0 {
        return 64;
    }
    let mut k = 0;
    while v & 1 == 0 {
        v >>= 1;
        k += 1;
    }
    k
}

/// True when F_q itself contains a root of unity of order ≥ the transform
/// length needed for `out_len` outputs.
pub(crate) fn supports_field_ntt(q: u64, out_len: usize) -> bool {
    let len = out_len.next_power_of_two();
    len <= MAX_NTT_LEN && (1u64 << two_adicity(q - 1).min(62)) >= len as u64
}

fn root_of_order_pow2(q: u64, len: u64) -> u64 {
    // Any non-residue c gives an element c^((q−1)/len) of exact order len
    // once (q−1)/len is odd times the cofactor; scan small candidates and
    // verify the order directly.
    debug_assert!(len.is_power_of_two() && (q - 1) % len == 0);
    for cand in 2..q {
        let w = powmod(cand, (q - 1) / len, q);
        if len == 1 || powmod(w, len / 2, q) != 1 {
            return w;
        }
    }
    unreachable!("no generator found below q");
}

fn ntt_runtime(a: &mut [u64], q: u64, root: u64) {
    let n = a.len() as u64;
    bit_reverse_permute(a);
    let mut half = 1u64;
    while half < n {
        let wbase = powmod(root, n / (2 * half), q);
        let mut start = 0u64;
        while start < n {
            let mut w = 1u64;
            for j in 0..half {
                let i0 = (start + j) as usize;
                let i1 = (start + j + half) as usize;
                let u = a[i0];
                let t = ((a[i1] as u128 * w as u128) % q as u128) as u64;
                a[i0] = if u + t >= q { u + t - q } else { u + t };
                a[i1] = if u >= t { u - t } else { u + q - t };
                w = ((w as u128 * wbase as u128) % q as u128) as u64;
            }
            start += 2 * half;
        }
        half *= 2;
    }
}

/// Convolution entirely inside F_q when the field has the required roots.
pub(crate) fn convolve_in_field(a: &[u64], b: &[u64], q: u64) -> Vec<u64> {
    let out_len = a.len() + b.len() - 1;
    let len = out_len.next_power_of_two();
    debug_assert!(supports_field_ntt(q, out_len));
    let root = root_of_order_pow2(q, len as u64);
    let root_inv = powmod(root, q - 2, q);
    let mut fa = vec![0u64; len];
    fa[..a.len()].copy_from_slice(a);
    let mut fb = vec![0u64; len];
    fb[..b.len()].copy_from_slice(b);
    ntt_runtime(&mut fa, q, root);
    ntt_runtime(&mut fb, q, root);
    for (x, &y) in fa.iter_mut().zip(&fb) {
        *x = ((*x as u128 * y as u128) % q as u128) as u64;
    }
    ntt_runtime(&mut fa, q, root_inv);
    let inv_len = powmod(len as u64, q - 2, q);
    fa.truncate(out_len);
    for x in fa.iter_mut() {
        *x = ((*x as u128 * inv_len as u128) % q as u128) as u64;
    }
    fa
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schoolbook(a: &[u64], b: &[u64], q: u64) -> Vec<u64> {
        let mut out = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = ((out[i + j] as u128 + x as u128 * y as u128) % q as u128) as u64;
            }
        }
        out
    }

    fn pseudo(len: usize, q: u64, mut s: u64) -> Vec<u64> {
        s |= 1;
        (0..len)
            .map(|_| {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                s % q
            })
            .collect()
    }

    #[test]
    fn crt_convolution_matches_schoolbook() {
        // q = 3 and 7 take one prime, 10007 two, 4294967291 three.
        for q in [3u64, 7, 10007, 4_294_967_291] {
            let a = pseudo(130, q, 5);
            let b = pseudo(77, q, 9);
            assert_eq!(
                convolve_crt(&a, &b, q).unwrap(),
                schoolbook(&a, &b, q),
                "q={q}"
            );
        }
    }

    #[test]
    fn three_prime_branch_at_length_512() {
        let q = 4_294_967_291; // bound 512·(q−1)² needs all three primes
        let bound = 512u128 * ((q - 1) as u128).pow(2);
        assert!(bound > P1 as u128 * P2 as u128);
        let a = pseudo(512, q, 31);
        let b = pseudo(512, q, 47);
        assert_eq!(convolve_crt(&a, &b, q).unwrap(), schoolbook(&a, &b, q));
    }

    #[test]
    fn oversized_bound_is_rejected() {
        // min_len·(q−1)² beyond P1·P2·P3 must refuse rather than wrap.
        let q = (1u64 << 61) - 1;
        assert!(convolve_crt(&pseudo(64, q, 3), &pseudo(64, q, 4), q).is_none());
    }

    #[test]
    fn plan_mac_accumulates_two_products() {
        let q = 10007u64;
        let (a, b) = (pseudo(40, q, 1), pseudo(33, q, 2));
        let (c, d) = (pseudo(21, q, 3), pseudo(52, q, 4));
        let out_len = 40 + 52 - 1;
        let bound = 2u128 * 52 * ((q - 1) as u128).pow(2);
        let plan = CrtPlan::new(out_len, bound).unwrap();
        let mut acc = plan.zero();
        plan.mac(&mut acc, &plan.fwd(&a), &plan.fwd(&b));
        plan.mac(&mut acc, &plan.fwd(&c), &plan.fwd(&d));
        let got = plan.finish(acc, out_len, q);
        let mut expect = vec![0u64; out_len];
        for (i, &x) in schoolbook(&a, &b, q).iter().enumerate() {
            expect[i] = (expect[i] + x) % q;
        }
        for (i, &x) in schoolbook(&c, &d, q).iter().enumerate() {
            expect[i] = (expect[i] + x) % q;
        }
        assert_eq!(got, expect);
    }

    #[test]
    fn in_field_path_round_trips() {
        let q = 786_433; // 3·2^18 + 1
        assert!(supports_field_ntt(q, 4096));
        let a = pseudo(1500, q, 77);
        let b = pseudo(1201, q, 78);
        assert_eq!(convolve_in_field(&a, &b, q), schoolbook(&a, &b, q));
    }

    #[test]
    fn field_ntt_support_is_detected() {
        assert!(!supports_field_ntt(7, 64)); // 7−1 = 2·3: only length 2
        assert!(supports_field_ntt(7, 2));
        assert!(!supports_field_ntt(10007, 16)); // 10006 = 2·5003
    }
}
