//! Arithmetic in the prime field F_q for odd prime q < 2^62.
//!
//! [`FieldCtx`] is the scalar layer under everything else: it owns the
//! modulus and performs all reductions, so a [`FieldElem`] is just a value
//! known to lie in [0, q).

use crate::{Error, Result};

/// A residue in F_q, always reduced into [0, q).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct FieldElem(pub u64);

impl FieldElem {
    pub fn value(self) -> u64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

/// The prime field F_q. Immutable after construction; operations are pure.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct FieldCtx {
    q: u64,
}

impl FieldCtx {
    /// Builds the field, rejecting any q that is not an odd prime < 2^62.
    pub fn new(q: u64) -> Result<Self> {
        if q < 3 || q % 2 == 0 || q >= (1 << 62) || !is_prime_u64(q) {
            return Err(Error::InvalidModulus(q));
        }
        Ok(FieldCtx { q })
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    /// Characteristic equals q here: the field layer is prime fields only.
    pub fn characteristic(&self) -> u64 {
        self.q
    }

    /// Reduces an arbitrary integer into the field.
    pub fn elem(&self, v: u64) -> FieldElem {
        FieldElem(v % self.q)
    }

    /// Reduces a signed integer into the field.
    pub fn elem_i64(&self, v: i64) -> FieldElem {
        FieldElem(v.rem_euclid(self.q as i64) as u64)
    }

    pub fn zero(&self) -> FieldElem {
        FieldElem(0)
    }

    pub fn one(&self) -> FieldElem {
        FieldElem(1)
    }

    pub fn add(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        let s = a.0 + b.0; // no overflow: q < 2^62
        FieldElem(if s >= self.q { s - self.q } else { s })
    }

    pub fn sub(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        FieldElem(if a.0 >= b.0 { a.0 - b.0 } else { a.0 + self.q - b.0 })
    }

    pub fn neg(&self, a: FieldElem) -> FieldElem {
        FieldElem(if a.0 == 0 { 0 } else { self.q - a.0 })
    }

    pub fn mul(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        FieldElem((a.0 as u128 * b.0 as u128 % self.q as u128) as u64)
    }

    /// a^e by square-and-multiply; pow(0, 0) = 1 by convention.
    pub fn pow(&self, a: FieldElem, mut e: u64) -> FieldElem {
        let mut base = a;
        let mut acc = FieldElem(1);
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat: a^(q-2).
    pub fn inv(&self, a: FieldElem) -> Result<FieldElem> {
        if a.0 == 0 {
            return Err(Error::DivisionByZero);
        }
        Ok(self.pow(a, self.q - 2))
    }

    /// Legendre symbol of a nonzero element: +1 for squares, q-1 (i.e. -1)
    /// for nonsquares, 0 for zero.
    pub fn legendre(&self, a: FieldElem) -> FieldElem {
        self.pow(a, (self.q - 1) / 2)
    }
}

fn mulmod_u64(a: u64, b: u64, m: u64) -> u64 {
    (a as u128 * b as u128 % m as u128) as u64
}

fn powmod_u64(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod_u64(acc, a, m);
        }
        a = mulmod_u64(a, a, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin; the fixed base set decides primality for all
/// inputs below 3.3·10^24, far above the 2^62 cap enforced upstream.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mulmod_u64(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Source of uniformly random field elements. Algorithms that need
/// randomness take this instead of a concrete RNG so tests can inject a
/// scripted sequence of draws.
pub trait ElementSource {
    fn draw(&mut self, ctx: &FieldCtx) -> FieldElem;
}

impl<R: rand::RngCore> ElementSource for R {
    fn draw(&mut self, ctx: &FieldCtx) -> FieldElem {
        use rand::Rng;
        FieldElem(self.gen_range(0..ctx.q()))
    }
}

/// Replays a fixed sequence of draws; panics if exhausted. Test machinery
/// for reproducing specific runs exactly.
#[derive(Debug, Clone)]
pub struct ScriptedSource {
    values: Vec<u64>,
    next: usize,
}

impl ScriptedSource {
    pub fn new(values: Vec<u64>) -> Self {
        ScriptedSource { values, next: 0 }
    }

    /// How many scripted values were consumed so far.
    pub fn consumed(&self) -> usize {
        self.next
    }
}

impl ElementSource for ScriptedSource {
    fn draw(&mut self, ctx: &FieldCtx) -> FieldElem {
        let v = *self
            .values
            .get(self.next)
            .expect("scripted draw sequence exhausted");
        self.next += 1;
        assert!(v < ctx.q(), "scripted draw {v} out of range for q={}", ctx.q());
        FieldElem(v)
    }
}
