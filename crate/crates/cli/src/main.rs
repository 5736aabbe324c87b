//! Command-line surface for the Drinfeld-module toolkit: factor
//! polynomials over prime fields, compute Hasse-invariant lifts, test
//! supersingularity, and benchmark the lift against the plain recurrence.
//!
//! Exit codes: 0 success, 2 parse/precondition error, 3 split retry cap
//! exhausted, 4 bad-reduction risk (linear factor in the modulus, or an
//! actual gcd(Δ, f) ≠ 1).

use clap::{Args, Parser, Subcommand};
use drinfeld_core::drinfeld::{self, EllipticModule};
use drinfeld_core::factor::factor;
use drinfeld_core::field::{FieldCtx, FieldElem};
use drinfeld_core::frobenius::ModulusCtx;
use drinfeld_core::hasse;
use drinfeld_core::poly::{self, Poly};
use drinfeld_core::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

const EXIT_PARSE: i32 = 2;
const EXIT_RETRY_CAP: i32 = 3;
const EXIT_BAD_REDUCTION: i32 = 4;

#[derive(Parser)]
#[command(
    name = "drinfeld",
    about = "Factor polynomials over F_q and compute Hasse-invariant lifts of rank-2 Drinfeld modules",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Factor a polynomial over F_q with random CM modules
    Factor(FactorArgs),
    /// Compute (r_n, r_{n+1}) mod f and the detected divisor gcd for one module
    HasseLift(HasseLiftArgs),
    /// Decide whether a module is supersingular at an irreducible prime
    Supersingular(SupersingularArgs),
    /// Time the block lift against the plain recurrence over a range of degrees
    Bench(BenchArgs),
}

#[derive(Args)]
struct FactorArgs {
    /// Field size (odd prime)
    #[arg(long)]
    q: u64,
    /// Ascending comma-separated coefficients, constant term first
    #[arg(long, allow_hyphen_values = true)]
    poly: String,
    /// PRNG seed for the element draws
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Emit the machine-readable JSON payload instead of the report
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct HasseLiftArgs {
    #[arg(long)]
    q: u64,
    /// Modulus f: ascending comma-separated coefficients
    #[arg(long, allow_hyphen_values = true)]
    poly: String,
    /// CM parameter: builds the module for x − a
    #[arg(long, conflicts_with = "raw_module")]
    a: Option<u64>,
    /// Explicit module "g/δ" (two ascending coefficient lists separated
    /// by a slash), bypassing the CM construction
    #[arg(long, allow_hyphen_values = true)]
    raw_module: Option<String>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SupersingularArgs {
    #[arg(long)]
    q: u64,
    /// Irreducible prime f: ascending comma-separated coefficients
    #[arg(long, allow_hyphen_values = true)]
    f: String,
    /// CM parameter: builds the module for x − a
    #[arg(long, conflicts_with = "raw_module")]
    a: Option<u64>,
    /// Explicit module "g/δ" (two ascending coefficient lists separated
    /// by a slash), bypassing the CM construction
    #[arg(long, allow_hyphen_values = true)]
    raw_module: Option<String>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    q: u64,
    /// Comma-separated modulus degrees (each ≥ 2); empty list allowed
    #[arg(long, default_value = "")]
    degrees: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Emit bare CSV (header + rows) instead of the report
    #[arg(long)]
    csv: bool,
}

/// One human-readable run summary: command echo, seed, wall time, payload.
struct RunReport {
    command: String,
    seed: Option<u64>,
    lines: Vec<String>,
}

impl RunReport {
    fn new(seed: Option<u64>) -> Self {
        let command = std::env::args().collect::<Vec<_>>().join(" ");
        RunReport {
            command,
            seed,
            lines: Vec::new(),
        }
    }

    fn push(&mut self, line: String) {
        self.lines.push(line);
    }

    fn print(&self, started: Instant) {
        println!("command: {}", self.command);
        if let Some(seed) = self.seed {
            println!("seed: {seed}");
        }
        for line in &self.lines {
            println!("{line}");
        }
        println!("wall_ms: {}", started.elapsed().as_millis());
    }
}

fn fail(code: i32, msg: &str) -> ! {
    eprintln!("error: {msg}");
    std::process::exit(code);
}

fn field_ctx(q: u64) -> FieldCtx {
    FieldCtx::new(q).unwrap_or_else(|e| fail(EXIT_PARSE, &e.to_string()))
}

/// Comma-separated ascending decimal coefficients, reduced mod q.
fn parse_poly(spec: &str, fctx: &FieldCtx) -> Poly {
    let q = fctx.q() as i128;
    let mut coeffs = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        if part.is_empty() {
            fail(
                EXIT_PARSE,
                &format!("empty coefficient in polynomial spec {spec:?}"),
            );
        }
        let v: i128 = part.parse().unwrap_or_else(|_| {
            fail(EXIT_PARSE, &format!("bad coefficient {part:?}"))
        });
        coeffs.push(v.rem_euclid(q) as u64);
    }
    Poly::from_u64(&coeffs, fctx)
}

fn coeffs_csv(p: &Poly) -> String {
    let c = p.coeffs_u64();
    if c.is_empty() {
        return "0".to_string();
    }
    c.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_a(a: Option<u64>, raw: &Option<String>, fctx: &FieldCtx) -> Option<FieldElem> {
    match (a, raw) {
        (Some(v), None) => {
            if v >= fctx.q() {
                fail(
                    EXIT_PARSE,
                    &format!("a = {v} must lie in [0, {})", fctx.q()),
                );
            }
            Some(fctx.elem(v))
        }
        (None, Some(_)) => None,
        (None, None) => fail(EXIT_PARSE, "one of --a or --raw-module is required"),
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    }
}

/// "g/δ": two ascending coefficient lists separated by a slash.
fn parse_raw_module(spec: &str, fctx: &FieldCtx) -> EllipticModule {
    let Some((g, d)) = spec.split_once('/') else {
        fail(
            EXIT_PARSE,
            "raw module must be written g/δ with a slash between the two coefficient lists",
        );
    };
    let g = parse_poly(g, fctx);
    let d = parse_poly(d, fctx);
    EllipticModule::new(g, d).unwrap_or_else(|e| fail(EXIT_PARSE, &e.to_string()))
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::RetryCapExhausted { .. } => EXIT_RETRY_CAP,
        Error::BadReduction { .. } => EXIT_BAD_REDUCTION,
        Error::InvalidModulus(_)
        | Error::ConstantPolynomial
        | Error::NotSquarefree
        | Error::Reducible
        | Error::InvalidInput(_) => EXIT_PARSE,
        _ => 1,
    }
}

fn cmd_factor(args: FactorArgs) {
    let started = Instant::now();
    let fctx = field_ctx(args.q);
    let f = parse_poly(&args.poly, &fctx);
    let mut src = ChaCha8Rng::seed_from_u64(args.seed);
    let result = factor(&f, &fctx, &mut src)
        .unwrap_or_else(|e| fail(exit_code_for(&e), &e.to_string()));
    if args.json {
        let factors: Vec<serde_json::Value> = result
            .factors
            .iter()
            .map(|(p, m)| {
                serde_json::json!({
                    "coeffs": p.coeffs_u64(),
                    "multiplicity": m,
                })
            })
            .collect();
        let payload = serde_json::json!({
            "q": args.q,
            "unit": result.unit.value(),
            "factors": factors,
            "seed": args.seed,
        });
        println!("{payload}");
        return;
    }
    let mut report = RunReport::new(Some(args.seed));
    report.push(format!("unit: {}", result.unit.value()));
    report.push(format!("factors ({}):", result.factors.len()));
    for (p, m) in &result.factors {
        report.push(format!("  {}  multiplicity {m}", coeffs_csv(p)));
    }
    report.print(started);
}

/// f has a linear factor exactly when gcd(x^q − x, f) is nonconstant.
fn has_linear_factor(f: &Poly, fctx: &FieldCtx) -> bool {
    if f.degree() == 1 {
        return true;
    }
    let xq = poly::pow_mod(&Poly::x(), fctx.q(), f, fctx)
        .expect("modulus is nonconstant");
    let t = xq.sub(&Poly::x(), fctx);
    let g = poly::gcd(&t, f, fctx);
    !g.is_one()
}

fn cmd_hasse_lift(args: HasseLiftArgs) {
    let started = Instant::now();
    let fctx = field_ctx(args.q);
    let f = parse_poly(&args.poly, &fctx);
    if f.degree() < 2 {
        if f.degree() == 1 {
            fail(
                EXIT_BAD_REDUCTION,
                "bad reduction risk: the modulus is linear",
            );
        }
        fail(EXIT_PARSE, "the modulus must have degree at least 2");
    }
    let a = parse_a(args.a, &args.raw_module, &fctx);
    // The CM discriminant is divisible only by linear primes, so a linear
    // factor in f dooms every draw of a; reject it up front. Raw modules
    // carry their own δ and are only stopped by an actual bad gcd.
    if a.is_some() && has_linear_factor(&f, &fctx) {
        fail(
            EXIT_BAD_REDUCTION,
            "bad reduction risk: the modulus has a linear factor; remove linear factors first",
        );
    }
    let ctx = ModulusCtx::new(&f, &fctx)
        .unwrap_or_else(|e| fail(exit_code_for(&e), &e.to_string()));
    let phi = match (&a, &args.raw_module) {
        (Some(a), _) => drinfeld::cm_module(*a, &ctx)
            .unwrap_or_else(|e| fail(exit_code_for(&e), &e.to_string())),
        (None, Some(raw)) => parse_raw_module(raw, &fctx),
        (None, None) => unreachable!("parse_a enforces the choice"),
    };
    let (r_n, r_n1) = hasse::hasse_lift(&phi, &ctx)
        .unwrap_or_else(|e| fail(exit_code_for(&e), &e.to_string()));
    let hbar = poly::gcd(r_n.poly(), r_n1.poly(), &fctx);
    let detected = poly::gcd(&hbar, &f, &fctx);
    if args.json {
        let payload = serde_json::json!({
            "q": args.q,
            "poly": f.coeffs_u64(),
            "a": a.map(|v| v.value()),
            "r_n": r_n.poly().coeffs_u64(),
            "r_n1": r_n1.poly().coeffs_u64(),
            "gcd": detected.coeffs_u64(),
        });
        println!("{payload}");
        return;
    }
    let mut report = RunReport::new(None);
    report.push(format!("r_n: {}", coeffs_csv(r_n.poly())));
    report.push(format!("r_n1: {}", coeffs_csv(r_n1.poly())));
    report.push(format!("gcd: {}", coeffs_csv(&detected)));
    report.print(started);
}

fn cmd_supersingular(args: SupersingularArgs) {
    let fctx = field_ctx(args.q);
    let f = parse_poly(&args.f, &fctx);
    if !poly::is_irreducible(&f, &fctx) {
        fail(EXIT_PARSE, "f must be irreducible");
    }
    let a = parse_a(args.a, &args.raw_module, &fctx);
    let phi = match (&a, &args.raw_module) {
        (Some(a), _) => {
            let ctx = ModulusCtx::new(&f, &fctx)
                .unwrap_or_else(|e| fail(exit_code_for(&e), &e.to_string()));
            drinfeld::cm_module(*a, &ctx)
                .unwrap_or_else(|e| fail(exit_code_for(&e), &e.to_string()))
        }
        (None, Some(raw)) => parse_raw_module(raw, &fctx),
        (None, None) => unreachable!("parse_a enforces the choice"),
    };
    let ss = drinfeld::is_supersingular(&phi, &f, &fctx)
        .unwrap_or_else(|e| fail(exit_code_for(&e), &e.to_string()));
    println!("{}", if ss { "supersingular" } else { "ordinary" });
}

fn cmd_bench(args: BenchArgs) {
    let fctx = field_ctx(args.q);
    let degrees: Vec<usize> = args
        .degrees
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let n: usize = s
                .parse()
                .unwrap_or_else(|_| fail(EXIT_PARSE, &format!("bad degree {s:?}")));
            if n < 2 {
                fail(EXIT_PARSE, "bench degrees must be at least 2");
            }
            n
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    println!("n,fast_ms,naive_ms,modcomp_count");
    for n in degrees {
        let (f, phi) = random_instance(&mut rng, n, &fctx);
        let ctx = ModulusCtx::new(&f, &fctx).expect("instance modulus is squarefree");
        let t0 = Instant::now();
        let (fast_n, fast_n1) = hasse::hasse_lift(&phi, &ctx).expect("good reduction");
        let fast_ms = t0.elapsed().as_millis();
        let comps = ctx.modcomp_count();
        let naive_ctx = ModulusCtx::new(&f, &fctx).expect("instance modulus is squarefree");
        let t1 = Instant::now();
        let (naive_n, naive_n1) =
            drinfeld::gekeler_pair(&phi, &naive_ctx, n as u64);
        let naive_ms = t1.elapsed().as_millis();
        assert_eq!(fast_n.poly(), naive_n.poly(), "lift disagrees at n = {n}");
        assert_eq!(fast_n1.poly(), naive_n1.poly(), "lift disagrees at n = {n}");
        println!("{n},{fast_ms},{naive_ms},{comps}");
        if !args.csv {
            eprintln!(
                "n={n}: block lift {fast_ms} ms, plain recurrence {naive_ms} ms, {comps} modular compositions"
            );
        }
    }
}

/// A random squarefree monic modulus of degree n and a good-reduction
/// module over it.
fn random_instance(rng: &mut ChaCha8Rng, n: usize, fctx: &FieldCtx) -> (Poly, EllipticModule) {
    use rand::Rng;
    let q = fctx.q();
    let f = loop {
        let mut coeffs: Vec<u64> = (0..n).map(|_| rng.gen_range(0..q)).collect();
        coeffs.push(1);
        let f = Poly::from_u64(&coeffs, fctx);
        let fp = f.derivative(fctx);
        if !fp.is_zero() && poly::gcd(&f, &fp, fctx).is_one() {
            break f;
        }
    };
    let g_coeffs: Vec<u64> = (0..n).map(|_| rng.gen_range(0..q)).collect();
    let delta = loop {
        let coeffs: Vec<u64> = (0..n).map(|_| rng.gen_range(0..q)).collect();
        let d = Poly::from_u64(&coeffs, fctx);
        if !d.is_zero() && poly::gcd(&d, &f, fctx).is_one() {
            break d;
        }
    };
    let g = Poly::from_u64(&g_coeffs, fctx);
    let phi = EllipticModule::new(g, delta).expect("nonzero discriminant");
    (f, phi)
}

fn main() {
    match Cli::parse().command {
        Command::Factor(args) => cmd_factor(args),
        Command::HasseLift(args) => cmd_hasse_lift(args),
        Command::Supersingular(args) => cmd_supersingular(args),
        Command::Bench(args) => cmd_bench(args),
    }
}
