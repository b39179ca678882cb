//! Acceptance suite: one PASS/FAIL line per criterion. Run with
//! `cargo test -p nilres-cli --test acceptance`.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use nilres_cli::config::{ExperimentConfig, PairSpec, TermSpec};
use nilres_cli::{analyse, cmd_norms, cmd_verify, correlate_pairs, Analysis};
use nilres_core::group::rational_from_f64;
use nilres_core::norms::{NormsConfig, Semantics};
use nilres_core::transfer::check_intertwining;
use nilres_core::{
    correlate, exp, reduce, theta_atom, DiffOp, ExactPoint, LatticeElement, LieVector, PartialHypAuto, Point,
    SectorFunction, ThetaTerm,
};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0x6e69_6c72_6573;

/// Outcome of one criterion.
struct Outcome {
    pass: bool,
    lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { pass: true, lines: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        self.lines.push(format!("{} {what}", if ok { "ok  " } else { "FAIL" }));
        self.pass &= ok;
    }

    fn bound(&mut self, what: &str, value: f64, tol: f64) {
        self.check(value <= tol, format!("{what}: {value:.3e} <= {tol:.0e}"));
    }

    fn timed(&mut self, start: Instant, limit: f64) {
        let secs = start.elapsed().as_secs_f64();
        self.check(secs <= limit, format!("runtime {secs:.2} s <= {limit} s"));
    }
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn random_rational(rng: &mut ChaCha8Rng) -> BigRational {
    q(rng.gen_range(-60..=60), rng.gen_range(1..=24))
}

fn random_point(rng: &mut ChaCha8Rng) -> ExactPoint {
    ExactPoint::new(random_rational(rng), random_rational(rng), random_rational(rng))
}

fn random_lattice(rng: &mut ChaCha8Rng) -> LatticeElement {
    LatticeElement::new(rng.gen_range(-5..=5), rng.gen_range(-5..=5), rng.gen_range(-9..=9))
}

fn golden() -> PartialHypAuto {
    PartialHypAuto::build(2, 1, 1, 1, 0, 0, 1).unwrap()
}

/// `exp` of the strictly upper triangular matrix `[[0, x, z], [0, 0, y], [0, 0, 0]]`
/// is `I + N + N²/2`; read off the polarized coordinates.
fn matrix_exp(v: &LieVector<BigRational>) -> ExactPoint {
    let half = q(1, 2);
    ExactPoint::new(v.x.clone(), v.y.clone(), v.z.clone() + &v.x * &v.y * half)
}

/// Group law as upper triangular matrix multiplication.
fn matrix_mul(a: &ExactPoint, b: &ExactPoint) -> ExactPoint {
    ExactPoint::new(&a.x + &b.x, &a.y + &b.y, &a.z + &b.z + &a.x * &b.y)
}

fn algebra() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut assoc, mut inverse, mut matrix, mut idem, mut reduction, mut expo) = (true, true, true, true, true, true);
    let id = ExactPoint::identity();
    for i in 0..10_000 {
        let (a, b, c) = (random_point(&mut rng), random_point(&mut rng), random_point(&mut rng));
        assoc &= a.mul(&b).mul(&c) == a.mul(&b.mul(&c));
        inverse &= a.mul(&a.inverse()) == id && a.inverse().mul(&a) == id;
        matrix &= a.mul(&b) == matrix_mul(&a, &b);
        let k = 1 + (i % 4) as u32;
        let r = reduce(&a, k);
        reduction &= r.lattice.embed::<BigRational>(k).mul(&a) == r.point && r.point.in_fundamental_domain(k);
        idem &= reduce(&r.point, k).point == r.point;
        let v = LieVector::new(b.x.clone(), b.y.clone(), b.z.clone());
        expo &= exp(&v) == matrix_exp(&v);
    }
    o.check(assoc, "associativity on 10^4 rational triples");
    o.check(inverse, "two-sided inverses");
    o.check(matrix, "product equals the matrix product");
    o.check(expo, "exp equals the nilpotent matrix exponential");
    o.check(reduction, "reduction lands in the fundamental domain via its lattice element");
    o.check(idem, "reduction is idempotent");
    let mut closed = true;
    for _ in 0..2_000 {
        let k = rng.gen_range(1..=4u32);
        let (g, h) = (random_lattice(&mut rng), random_lattice(&mut rng));
        let product = g.embed::<BigRational>(k).mul(&h.embed(k));
        closed &= LatticeElement::from_element(&product, k) == Some(g.mul(&h, k));
        closed &= LatticeElement::from_element(&g.embed::<BigRational>(k).inverse(), k) == Some(g.inverse(k));
    }
    o.check(closed, "Gamma_K closed under products and inverses");
    o.timed(start, 1.0);
    o
}

fn automorphism_suite() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    o.check(PartialHypAuto::build(2, 1, 1, 2, 0, 0, 1).is_err(), "determinant 3 rejected");
    o.check(PartialHypAuto::build(1, 1, 0, 1, 0, 0, 1).is_err(), "trace 2 rejected");
    let auto = golden();
    o.check(auto.trace() == 3, "trace 3 accepted");
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut well_defined = true;
    for _ in 0..1_000 {
        let m = random_point(&mut rng);
        let g = random_lattice(&mut rng).embed::<BigRational>(1);
        let image = auto.apply(&g);
        well_defined &= LatticeElement::from_element(&image, 1).is_some();
        well_defined &= auto.apply(&g.mul(&m)) == image.mul(&auto.apply(&m));
        well_defined &= reduce(&auto.apply(&g.mul(&m)), 1).point == reduce(&auto.apply(&m), 1).point;
    }
    o.check(well_defined, "Phi descends to the quotient on 10^3 random (gamma, m)");
    let mut cocycle = true;
    for n in 0..=8 {
        let c = auto.iterate_cocycle(n);
        for _ in 0..20 {
            let m = random_point(&mut rng);
            cocycle &= c.apply(&m) == auto.apply_n(&m, n);
        }
    }
    o.check(cocycle, "iterated cocycle equals n-fold application, n <= 8");
    let f = &auto.frame;
    let pv = auto.push_forward(&f.v, 1);
    let pw = auto.push_forward(&f.w, 1);
    let ev = [pv.x - f.v.x / auto.lambda, pv.y - f.v.y / auto.lambda, pv.z - f.v.z / auto.lambda];
    let ew = [pw.x - f.w.x * auto.lambda, pw.y - f.w.y * auto.lambda, pw.z - f.w.z * auto.lambda];
    let eig = ev.iter().chain(&ew).fold(0.0f64, |a, e| a.max(e.abs()));
    o.bound("frame eigen-relations", eig, 1e-12);
    let bracket = f.v.bracket(&f.w);
    o.check(
        bracket.x == 0.0 && bracket.y == 0.0 && bracket.z == 1.0,
        format!("[V, W] = Z exactly ({:?})", bracket),
    );
    let m = Point::new(0.3, 0.4, 0.1);
    for h in [1e-4, 1e-5, 1e-6] {
        let (rv, rw) = auto.check_pushforward(&m, h);
        o.check(rv <= 10.0 * h && rw <= 10.0 * h, format!("pushforward residuals at step {h:.0e}: {rv:.2e}, {rw:.2e}"));
    }
    o.timed(start, 1.0);
    o
}

fn renormalization() -> Outcome {
    let mut o = Outcome::new();
    let auto = golden();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let worst = (0..1_000)
        .map(|_| {
            let m = Point::new(rng.gen(), rng.gen(), rng.gen());
            auto.renormalization_defect(&m, rng.gen_range(-0.5..=0.5))
        })
        .fold(0.0f64, f64::max);
    o.bound("max renormalization defect over 10^3 (m, t)", worst, 1e-10);
    o
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * b.norm().max(1.0)
}

fn sector_suite() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let auto = golden();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut periodic = true;
    let mut invariant = true;
    let mut eigen = true;
    for (n, k) in [(1, 1), (2, 1), (1, 2), (-1, 3)] {
        for (m, l) in [(0, 0), (1, 1), (3, -2)] {
            let h = theta_atom(n, k, m, l, 8).unwrap();
            let nk = (n * i64::from(k)) as f64;
            for _ in 0..20 {
                let (x, y, z) = (rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>());
                periodic &= close(h.profile(x + 1.0, y), Complex64::cis(-2.0 * PI * nk * y) * h.profile(x, y), 1e-12);
                periodic &= close(h.profile(x, y + 1.0), h.profile(x, y), 1e-12);
                let p = ExactPoint::new(rational_from_f64(x), rational_from_f64(y), rational_from_f64(z));
                let g = random_lattice(&mut rng).embed::<BigRational>(k);
                invariant &= close(h.evaluate(&g.mul(&p)), h.evaluate(&p), 1e-12);
            }
            let z = DiffOp::field(&LieVector::basis_z(), h.nk());
            eigen &= z == DiffOp::identity(h.nk()).scaled(Complex64::new(0.0, 2.0 * PI * nk));
        }
    }
    o.check(periodic, "twisted periodicity of theta atoms to 1e-12");
    o.check(invariant, "Gamma_K invariance to 1e-12");
    o.check(eigen, "Z acts as the scalar 2 pi i N K");
    let h = theta_atom(1, 1, 1, 0, 8).unwrap().plus(&theta_atom(1, 1, 0, 1, 8).unwrap()).unwrap();
    let fields = [auto.frame.v.clone(), auto.frame.w.clone(), LieVector::basis_z()];
    let mut fd = 0.0f64;
    for m in [Point::new(0.31, 0.72, 0.4), Point::new(0.9, 0.05, 0.99), Point::new(0.1, 0.5, 0.2)] {
        for v in &fields {
            let exact = h.apply_vector_field(v).evaluate(&m);
            let f = |t: f64| h.evaluate(&m.flow(v, t));
            let s = 1e-3;
            let approx = (8.0 * (f(s) - f(-s)) - (f(2.0 * s) - f(-2.0 * s))) / (12.0 * s);
            fd = fd.max((approx - exact).norm() / exact.norm().max(1.0));
        }
    }
    o.bound("V, W, Z against finite differences", fd, 1e-6);
    o.timed(start, 5.0);
    o
}

fn intertwining() -> Outcome {
    let mut o = Outcome::new();
    let auto = golden();
    let h = theta_atom(1, 1, 1, 0, 8).unwrap().plus(&theta_atom(1, 1, 0, 2, 8).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let points: Vec<Point> = (0..20).map(|_| Point::new(rng.gen(), rng.gen(), rng.gen())).collect();
    let mut worst = 0.0f64;
    for j in 1..=2 {
        for k in 1..=4 {
            let r = check_intertwining(&auto, &h, j, k, &points);
            worst = worst.max(r.v).max(r.w);
        }
    }
    o.bound("relative residual, j <= 2, k <= 4, 20 points", worst, 1e-8);
    o
}

fn atom(m: i64, l: i64) -> TermSpec {
    TermSpec { re: 1.0, im: 0.0, m, l }
}

fn check_line(o: &mut Outcome, a: &Analysis, pair: usize, name: &str) {
    match a.pairs[pair].verdict.check(name) {
        Some(c) => o.check(c.pass, format!("pair {pair} {name}: {} (margin {:.3e})", c.detail, c.margin)),
        None => o.check(false, format!("pair {pair} {name}: missing")),
    }
}

fn headline(out: &Path) -> (Outcome, Option<Analysis>) {
    let mut o = Outcome::new();
    let start = Instant::now();
    let cfg = ExperimentConfig::golden();
    let a = match cmd_verify(&cfg, out) {
        Ok(a) => a,
        Err(e) => {
            o.check(false, format!("pipeline error: {e:#}"));
            return (o, None);
        }
    };
    for name in ["band0_modulus", "band0_count", "mu_unit_modulus", "band1_modulus", "band1_position"] {
        check_line(&mut o, &a, 0, name);
    }
    o.timed(start, 60.0);
    (o, Some(a))
}

fn multiplicity() -> Outcome {
    let mut o = Outcome::new();
    for (n, k) in [(2, 1), (1, 2)] {
        let start = Instant::now();
        let mut cfg = ExperimentConfig::golden();
        cfg.sector.n = n;
        cfg.sector.k = k;
        cfg.correlation.grid = 8192;
        cfg.correlation.n_max = 15;
        cfg.pairs = vec![
            PairSpec { g: vec![atom(0, 0)], h: vec![atom(0, 0)] },
            PairSpec { g: vec![atom(0, 0)], h: vec![atom(0, 1)] },
        ];
        let run = cfg
            .validate()
            .and_then(|auto| correlate_pairs(&cfg, &auto))
            .map(|s| analyse(s, &cfg.tolerances));
        match run {
            Ok(a) => {
                o.lines.push(format!("     N = {n}, K = {k}, grid 8192, n_max 15"));
                for p in 0..a.pairs.len() {
                    check_line(&mut o, &a, p, "band0_count");
                }
                match a.checks.iter().find(|c| c.name == "band0_agreement") {
                    Some(c) => o.check(c.pass, format!("band-0 agreement across pairs (margin {:.3e})", c.margin)),
                    None => o.check(false, "band-0 agreement missing"),
                }
            }
            Err(e) => o.check(false, format!("N = {n}, K = {k}: {e:#}")),
        }
        o.lines.push(format!("     {:.1} s", start.elapsed().as_secs_f64()));
    }
    o
}

fn toral() -> Outcome {
    let mut o = Outcome::new();
    let mut cfg = ExperimentConfig::golden();
    cfg.sector.n = 0;
    let with_constant = vec![atom(0, 0), TermSpec { re: 0.5, im: -0.25, m: 1, l: 0 }, atom(2, -1)];
    cfg.pairs = vec![PairSpec { g: with_constant.clone(), h: with_constant }];
    match cfg
        .validate()
        .and_then(|auto| correlate_pairs(&cfg, &auto))
        .map(|s| analyse(s, &cfg.tolerances))
    {
        Ok(a) => {
            check_line(&mut o, &a, 0, "toral_single_resonance");
            check_line(&mut o, &a, 0, "toral_resonance_at_one");
        }
        Err(e) => o.check(false, format!("{e:#}")),
    }
    let auto = golden();
    let mean_zero = SectorFunction::new(
        0,
        1,
        vec![
            ThetaTerm::new(Complex64::new(1.0, 0.0), 1, 0),
            ThetaTerm::new(Complex64::new(0.0, 1.0), 0, 1),
            ThetaTerm::new(Complex64::new(0.3, 0.0), 2, -1),
        ],
        8,
    )
    .unwrap();
    match correlate(&auto, &mean_zero, &mean_zero, 8, 256) {
        Ok(s) => {
            let worst = s.resolved().iter().skip(4).map(|c| c.norm()).fold(0.0f64, f64::max);
            o.bound(&format!("mean-zero |C_n|, 4 <= n < {}", s.meta.resolved_len), worst, 1e-10);
        }
        Err(e) => o.check(false, e.to_string()),
    }
    o
}

fn decay(golden: Option<&Analysis>) -> Outcome {
    let mut o = Outcome::new();
    match golden {
        Some(a) => {
            check_line(&mut o, a, 0, "residual_decay");
            if let Some(d) = &a.pairs[0].decay {
                o.lines.push(format!("     slope {:.4} against {:.4} over lags {}..={}", d.slope, d.expected, d.first, d.last));
            }
        }
        None => o.check(false, "golden pipeline did not run"),
    }
    o
}

fn norms(out: &Path) -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let mut cfg = ExperimentConfig::golden();
    cfg.norms = NormsConfig { base_points: 8, ..NormsConfig::default() };
    let report = match cmd_norms(&cfg, out) {
        Ok(r) => r,
        Err(e) => {
            o.check(false, format!("{e:#}"));
            return o;
        }
    };
    let summary = |lemma: &str, filter: &dyn Fn(&nilres_core::norms::Entry) -> bool| {
        let entries: Vec<_> = report.entries_for(lemma).filter(|e| filter(e)).collect();
        let failed = entries.iter().filter(|e| !e.verdict).count();
        (entries.len(), failed)
    };
    let (n, failed) = summary("mollifier", &|_| true);
    o.check(n == 216 && failed == 0, format!("mollifier bounds: {n} entries, {failed} failed"));
    let margin = report
        .entries_for("mollifier")
        .map(|e| e.rhs - e.lhs)
        .fold(f64::INFINITY, f64::min);
    o.check(margin >= 0.0, format!("smallest mollifier margin {margin:.3e}"));
    let (n, failed) = summary("v-continuity", &|e| e.semantics == Semantics::ExactDictionary);
    o.check(n > 0 && failed == 0, format!("dictionary-exact V-continuity: {n} entries, {failed} failed"));
    let (n, failed) = summary("slide", &|_| true);
    o.check(n > 0 && failed == 0, format!("slide bound first order under halving: {n} entries, {failed} failed"));
    let (n, failed) = summary("v-contraction", &|_| true);
    o.check(n >= 4 && failed == 0, format!("V-contraction trend, k <= 4: {n} entries, {failed} failed"));
    o.lines.push(format!("     {} entries in all, {:.1} s", report.entries.len(), start.elapsed().as_secs_f64()));
    o
}

fn determinism(first: &Path, scratch: &Path) -> Outcome {
    let mut o = Outcome::new();
    let cfg = ExperimentConfig::golden();
    for run in 0..2 {
        let dir = scratch.join(format!("run{run}"));
        if let Err(e) = cmd_verify(&cfg, &dir) {
            o.check(false, format!("{e:#}"));
            return o;
        }
        for file in ["correlations.csv", "correlations.json", "resonances.json", "report.md"] {
            let a = std::fs::read(first.join(file)).unwrap_or_default();
            let b = std::fs::read(dir.join(file)).unwrap_or_default();
            o.check(!a.is_empty() && a == b, format!("rerun {run}: {file} byte-identical"));
        }
    }
    o
}

fn main() {
    let scratch = tempfile::tempdir().expect("temporary directory");
    let golden_dir = scratch.path().join("golden");
    let mut golden_analysis = None;
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut run = |id: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome { pass: false, lines: vec![format!("FAIL panicked: {msg}")] }
        });
        println!("{} criterion {id}: {name}", if outcome.pass { "PASS" } else { "FAIL" });
        for line in &outcome.lines {
            println!("    {line}");
        }
        results.push((id, name, outcome));
    };
    run(1, "algebra", &mut algebra);
    run(2, "automorphism", &mut automorphism_suite);
    run(3, "renormalization", &mut renormalization);
    run(4, "sector", &mut sector_suite);
    run(5, "operator identities", &mut intertwining);
    run(6, "spectral headline", &mut || {
        let (o, a) = headline(&golden_dir);
        golden_analysis = a;
        o
    });
    run(7, "multiplicity", &mut multiplicity);
    run(8, "toral sanity", &mut toral);
    run(9, "residual decay", &mut || decay(golden_analysis.as_ref()));
    run(10, "norms laboratory", &mut || norms(&scratch.path().join("norms")));
    run(11, "determinism", &mut || determinism(&golden_dir, scratch.path()));

    let failed: Vec<String> = results.iter().filter(|r| !r.2.pass).map(|r| r.0.to_string()).collect();
    println!();
    if failed.is_empty() {
        println!("acceptance: all {} criteria PASS", results.len());
    } else {
        println!("acceptance: FAIL on criteria {}", failed.join(", "));
        std::process::exit(1);
    }
}
