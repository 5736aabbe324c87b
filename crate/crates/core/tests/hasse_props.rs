//! Property tests for the blocked Hasse-invariant lift. Two oracles are
//! reimplemented here on plain polynomials — the scalar recurrence and the
//! 2×2 matrix recurrence — and the lift must agree with both, for every
//! block-splitting exponent β.


use drinfeld_core::drinfeld::EllipticModule;
use drinfeld_core::field::FieldCtx;
use drinfeld_core::frobenius::{ModulusCtx, ResidueElem};
use drinfeld_core::hasse::{self, BsgsPlan, Mat2, MatPoly};
use drinfeld_core::poly::{self, multipoint_eval_mat, Poly};
use drinfeld_core::Error;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Scalar route: the recurrence itself.
fn scalar_pair(g_phi: &Poly, delta: &Poly, f: &Poly, fctx: &FieldCtx) -> (Poly, Poly) {
    let q = fctx.q();
    let n = f.degree();
    let xi = Poly::x().rem(f, fctx).unwrap();
    let mut prev = Poly::one();
    let mut cur = g_phi.rem(f, fctx).unwrap();
    let mut tg = cur.clone();
    let mut td = delta.rem(f, fctx).unwrap();
    let mut xj = xi.clone();
    for _k in 2..=(n as u64 + 1) {
        tg = poly::pow_mod(&tg, q, f, fctx).unwrap();
        xj = poly::pow_mod(&xj, q, f, fctx).unwrap();
        let t1 = tg.mul(&cur, fctx).rem(f, fctx).unwrap();
        let t2 = xj
            .sub(&xi, fctx)
            .mul(&td, fctx)
            .rem(f, fctx)
            .unwrap()
            .mul(&prev, fctx)
            .rem(f, fctx)
            .unwrap();
        let next = t1.sub(&t2, fctx);
        prev = cur;
        cur = next;
        td = poly::pow_mod(&td, q, f, fctx).unwrap();
    }
    (prev, cur)
}

/// Matrix route: w ← A_k·w from w = (1, γ), where
/// A_k = [[0, 1], [(ξ − ξ_{k+1})·τ^k(δ), τ^{k+1}(γ)]].
fn matrix_pair(g_phi: &Poly, delta: &Poly, f: &Poly, fctx: &FieldCtx) -> (Poly, Poly) {
    let q = fctx.q();
    let n = f.degree();
    let xi = Poly::x().rem(f, fctx).unwrap();
    let gamma = g_phi.rem(f, fctx).unwrap();
    let mut w0 = Poly::one();
    let mut w1 = gamma.clone();
    let mut xk1 = poly::pow_mod(&xi, q, f, fctx).unwrap();
    let mut tdk = delta.rem(f, fctx).unwrap();
    let mut tgk1 = poly::pow_mod(&gamma, q, f, fctx).unwrap();
    for _k in 0..n {
        let low = xi
            .sub(&xk1, fctx)
            .mul(&tdk, fctx)
            .rem(f, fctx)
            .unwrap()
            .mul(&w0, fctx)
            .rem(f, fctx)
            .unwrap();
        let new1 = low.add(&tgk1.mul(&w1, fctx).rem(f, fctx).unwrap(), fctx);
        w0 = w1;
        w1 = new1;
        xk1 = poly::pow_mod(&xk1, q, f, fctx).unwrap();
        tdk = poly::pow_mod(&tdk, q, f, fctx).unwrap();
        tgk1 = poly::pow_mod(&tgk1, q, f, fctx).unwrap();
    }
    (w0, w1)
}

fn rand_squarefree(rng: &mut StdRng, deg: usize, fctx: &FieldCtx) -> Poly {
    loop {
        let mut coeffs: Vec<u64> = (0..deg).map(|_| rng.gen_range(0..fctx.q())).collect();
        coeffs.push(1);
        let f = Poly::from_u64(&coeffs, fctx);
        if poly::gcd(&f, &f.derivative(fctx), fctx).is_one() {
            return f;
        }
    }
}

fn rand_module(rng: &mut StdRng, f: &Poly, fctx: &FieldCtx) -> EllipticModule {
    let n = f.degree();
    let gd = rng.gen_range(0..n);
    let mut g: Vec<u64> = (0..=gd).map(|_| rng.gen_range(0..fctx.q())).collect();
    g[gd] = 1;
    loop {
        let dd = rng.gen_range(0..n);
        let mut d: Vec<u64> = (0..=dd).map(|_| rng.gen_range(0..fctx.q())).collect();
        d[dd] = 1;
        let delta = Poly::from_u64(&d, fctx);
        if poly::gcd(&delta, f, fctx).is_one() {
            return EllipticModule::new(Poly::from_u64(&g, fctx), delta).unwrap();
        }
    }
}

#[test]
fn lift_agrees_with_both_oracles() {
    let mut rng = StdRng::seed_from_u64(11);
    for q in [3u64, 5, 7, 11] {
        let fctx = FieldCtx::new(q).unwrap();
        for _ in 0..12 {
            let deg = rng.gen_range(2..=20);
            let f = rand_squarefree(&mut rng, deg, &fctx);
            let phi = rand_module(&mut rng, &f, &fctx);
            let (s_n, s_n1) = scalar_pair(phi.g(), phi.delta(), &f, &fctx);
            let (m_n, m_n1) = matrix_pair(phi.g(), phi.delta(), &f, &fctx);
            assert_eq!(s_n, m_n, "the two oracles disagree, q={q} deg={deg}");
            assert_eq!(s_n1, m_n1);
            let ctx = ModulusCtx::new(&f, &fctx).unwrap();
            let beta = rng.gen_range(0.25..0.9);
            let (r_n, r_n1) = hasse::hasse_lift_beta(&phi, &ctx, beta).unwrap();
            assert_eq!(r_n.poly(), &s_n, "q={q} deg={deg} beta={beta}");
            assert_eq!(r_n1.poly(), &s_n1, "q={q} deg={deg} beta={beta}");
        }
    }
}

#[test]
fn hbar_is_the_monic_gcd_of_the_oracle_pair() {
    let mut rng = StdRng::seed_from_u64(13);
    let fctx = FieldCtx::new(7).unwrap();
    for _ in 0..25 {
        let deg = rng.gen_range(2..=16);
        let f = rand_squarefree(&mut rng, deg, &fctx);
        let phi = rand_module(&mut rng, &f, &fctx);
        let (s_n, s_n1) = scalar_pair(phi.g(), phi.delta(), &f, &fctx);
        let want = poly::gcd(&s_n, &s_n1, &fctx);
        let got = hasse::hbar(&phi, &f, &fctx).unwrap();
        assert_eq!(got, want);
        assert!(got.is_zero() || got.leading() == fctx.one());
    }
}

#[test]
fn multipoint_evaluation_matches_pointwise_horner() {
    let fctx = FieldCtx::new(7).unwrap();
    let f = Poly::from_u64(&[2, 5, 6, 3, 6, 6, 1], &fctx);
    let ctx = ModulusCtx::new(&f, &fctx).unwrap();
    let mut rng = StdRng::seed_from_u64(17);
    let rand_elem = |rng: &mut StdRng| {
        let coeffs: Vec<u64> = (0..ctx.n()).map(|_| rng.gen_range(0..7)).collect();
        ResidueElem::from_poly(Poly::from_u64(&coeffs, &fctx), &ctx)
    };
    for deg_y in 1..=3usize {
        let coeffs: Vec<Mat2> = (0..=deg_y)
            .map(|_| {
                Mat2::new([
                    rand_elem(&mut rng),
                    rand_elem(&mut rng),
                    rand_elem(&mut rng),
                    rand_elem(&mut rng),
                ])
                .unwrap()
            })
            .collect();
        let m = MatPoly::from_coeffs(coeffs.clone()).unwrap();
        let points: Vec<ResidueElem> = (0..5).map(|_| rand_elem(&mut rng)).collect();
        let fast = multipoint_eval_mat(&m, &points).unwrap();
        for (pt, got) in points.iter().zip(&fast) {
            // eval_at route
            assert_eq!(got, &m.eval_at(pt).unwrap());
            // plain Horner route per entry
            for e in 0..4 {
                let mut acc = Poly::zero();
                for c in coeffs.iter().rev() {
                    acc = acc
                        .mul(pt.poly(), &fctx)
                        .rem(&f, &fctx)
                        .unwrap()
                        .add(c.entry(e / 2, e % 2).poly(), &fctx);
                }
                assert_eq!(got.entry(e / 2, e % 2).poly(), &acc, "entry {e}");
            }
        }
    }
}

#[test]
fn block_product_equals_direct_factor_product() {
    let fctx = FieldCtx::new(5).unwrap();
    let f = Poly::from_u64(&[2, 1, 0, 0, 1, 0, 0, 0, 1], &fctx);
    let ctx = ModulusCtx::new(&f, &fctx).unwrap();
    let gamma = ResidueElem::from_poly(Poly::from_u64(&[3, 0, 1, 2], &fctx), &ctx);
    let delta = ResidueElem::from_poly(Poly::from_u64(&[1, 1], &fctx), &ctx);
    for (u, n) in [(0usize, 8usize), (2, 8), (3, 7), (0, 5)] {
        // the block covers [u, v) with v = u + m·ℓ from the plan; the
        // tail [v, n) is the caller's job
        let plan = BsgsPlan::new(u, n, 0.5).unwrap();
        let block = hasse::hasse_block(&gamma, &delta, u, n, 0.5, &ctx).unwrap();
        let mut direct = Mat2::identity(&ctx);
        for k in u as u64..plan.v as u64 {
            direct = hasse::matrix_A(k, &gamma, &delta, &ctx).mul(&direct).unwrap();
        }
        assert_eq!(block, direct, "u={u}, n={n}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn plan_shape_invariants(u in 0usize..64, span in 4usize..512, beta_pct in 20u32..95) {
        let n = u + span;
        let beta = beta_pct as f64 / 100.0;
        let plan = BsgsPlan::new(u, n, beta).unwrap();
        prop_assert!(plan.ell >= 1);
        prop_assert!(plan.m >= 1);
        prop_assert_eq!(plan.v, u + plan.m * plan.ell);
        prop_assert!(plan.v <= n);
        // ℓ is the ceiling of span^β: bracketed by the real power
        let pow = (span as f64).powf(beta);
        prop_assert!((plan.ell as f64) >= pow - 1e-6);
        prop_assert!((plan.ell as f64) < pow + 1.0);
        // the leftover tail is shorter than one more block
        prop_assert!(n - plan.v < plan.ell);
    }

    #[test]
    fn plan_rejects_bad_inputs(u in 0usize..16, n in 0usize..16) {
        prop_assume!(u >= n);
        prop_assert!(matches!(BsgsPlan::new(u, n, 0.5), Err(Error::InvalidInput(_))));
    }
}
