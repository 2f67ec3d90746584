//! Rayon kernels against the sequential baseline, plus whole steps.
//!
//! `cargo bench -p fnls-core` compares both backends directly;
//! `--no-default-features` makes the solver itself sequential.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fnls::evolution::Stepper;
use fnls::par::seq;
use fnls::{Grid, Integrator, ModelParams, PhysicalField};
use num_complex::Complex64;
use std::hint::black_box;

fn field(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|j| Complex64::from_polar(1.0 / (1.0 + j as f64 * 1e-4), j as f64 * 0.01))
        .collect()
}

fn rotate(z: &mut Complex64) {
    *z *= Complex64::from_polar(1.0, 1e-3 * z.norm_sqr());
}

fn kernels(c: &mut Criterion) {
    let mut g = c.benchmark_group("kernels");
    for log2 in [12, 15, 17] {
        let n = 1usize << log2;
        let mut v = field(n);
        g.bench_with_input(BenchmarkId::new("rotate/seq", n), &n, |b, _| {
            b.iter(|| seq::for_each_indexed(black_box(&mut v), |_, z| rotate(z)))
        });
        #[cfg(feature = "parallel")]
        g.bench_with_input(BenchmarkId::new("rotate/par", n), &n, |b, _| {
            b.iter(|| fnls::par::par::for_each_indexed(black_box(&mut v), |_, z| rotate(z)))
        });
        g.bench_with_input(BenchmarkId::new("mass/seq", n), &n, |b, _| {
            b.iter(|| seq::sum_indexed(black_box(&v), |_, z| z.norm_sqr()))
        });
        #[cfg(feature = "parallel")]
        g.bench_with_input(BenchmarkId::new("mass/par", n), &n, |b, _| {
            b.iter(|| fnls::par::par::sum_indexed(black_box(&v), |_, z| z.norm_sqr()))
        });
    }
    g.finish();
}

fn steps(c: &mut Criterion) {
    let mut g = c.benchmark_group("step");
    g.sample_size(20);
    let params = ModelParams::focusing(0.5, 1.0).unwrap();
    for log2 in [12, 15] {
        let n = 1usize << log2;
        let grid = Grid::new(n, 10.0).unwrap();
        let u = PhysicalField::from_real_fn(&grid, |x| 1.0 / x.cosh());
        for (name, integrator) in [("splitting4", Integrator::Splitting4), ("stiff_rk4", Integrator::StiffRk4)] {
            let mut stepper = Stepper::new(&grid, &params, 1e-4, integrator);
            let mut state = u.to_spectral().into_coefficients();
            g.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| stepper.step(black_box(&mut state)))
            });
        }
    }
    g.finish();
}

criterion_group!(benches, kernels, steps);
criterion_main!(benches);
