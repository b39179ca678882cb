use criterion::{black_box, criterion_group, criterion_main, Criterion};
use nilres_core::{correlate, pencil_fit, theta_atom, ExactPoint, PartialHypAuto, Point, Tolerances};

fn golden() -> PartialHypAuto {
    PartialHypAuto::build(2, 1, 1, 1, 0, 0, 1).unwrap()
}

fn group(c: &mut Criterion) {
    let a = ExactPoint::from_ratios((1, 3), (-2, 7), (5, 11));
    let b = ExactPoint::from_ratios((4, 5), (1, 9), (-3, 2));
    c.bench_function("group_mul_rational", |bench| bench.iter(|| black_box(&a).mul(black_box(&b))));
    let p = Point::new(0.3, 0.4, 0.1);
    let q = Point::new(-1.2, 0.7, 2.5);
    c.bench_function("group_mul_f64", |bench| bench.iter(|| black_box(&p).mul(black_box(&q))));
    let auto = golden();
    c.bench_function("apply_n_rational_8", |bench| bench.iter(|| auto.apply_n(black_box(&a), 8)));
}

fn correlations(c: &mut Criterion) {
    let auto = golden();
    let h = theta_atom(1, 1, 0, 0, 8).unwrap();
    let mut g = c.benchmark_group("correlate");
    g.sample_size(10);
    for grid in [64usize, 256] {
        g.bench_function(format!("golden_grid_{grid}"), |bench| {
            bench.iter(|| correlate(&auto, &h, &h, 12, grid).unwrap())
        });
    }
    g.finish();
}

fn fitting(c: &mut Criterion) {
    let auto = golden();
    let h = theta_atom(1, 1, 0, 0, 8).unwrap();
    let series = correlate(&auto, &h, &h, 12, 256).unwrap();
    let samples = series.resolved().to_vec();
    let tol = Tolerances::default();
    c.bench_function("pencil_fit_golden", |bench| {
        bench.iter(|| pencil_fit(black_box(&samples), auto.lambda, &tol).unwrap())
    });
}

criterion_group!(benches, group, correlations, fitting);
criterion_main!(benches);
