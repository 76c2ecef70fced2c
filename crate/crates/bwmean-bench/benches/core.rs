//! Hot-path benchmarks: the incomplete-gamma kernel every oracle evaluation
//! goes through, the two mixture-CDF modes, closed-form grid tabulation, the
//! identity-level Bernoulli sums, and the simulation loop.

use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};

use bwmean::binomial::{bernoulli_sum, binom_pmf, BinomialParams};
use bwmean::bwm::{bwm_edgeworth_grid, default_grid, mixture_cdf_grid, BwmProblem, PerKMode};
use bwmean::distributions::make_exponential;
use bwmean::montecarlo::{sample_z, SimConfig};
use bwmean::special::gamma_p;

fn problem(n: u64, p: f64) -> BwmProblem {
    BwmProblem::new(
        make_exponential(1.0).unwrap(),
        BinomialParams::new(n, p).unwrap(),
        4,
    )
    .unwrap()
}

fn bench_special(c: &mut Criterion) {
    c.bench_function("gamma_p series (a=8, x=5)", |b| {
        b.iter(|| gamma_p(black_box(8.0), black_box(5.0)))
    });
    c.bench_function("gamma_p continued fraction (a=60, x=90)", |b| {
        b.iter(|| gamma_p(black_box(60.0), black_box(90.0)))
    });
    let b1000 = BinomialParams::new(1000, 0.3).unwrap();
    c.bench_function("binom_pmf (n=1000, p=0.3, k=310)", |b| {
        b.iter(|| binom_pmf(black_box(&b1000), black_box(310)))
    });
}

fn bench_identities(c: &mut Criterion) {
    let b1000 = BinomialParams::new(1000, 0.3).unwrap();
    c.bench_function("bernoulli_sum (n=1000, alpha=-0.5)", |b| {
        b.iter(|| bernoulli_sum(black_box(&b1000), black_box(-0.5)))
    });
}

fn bench_mixture(c: &mut Criterion) {
    let grid = default_grid();
    let small = problem(200, 0.3);
    c.bench_function("mixture grid, oracle terms (n=200, 1602 pts)", |b| {
        b.iter(|| mixture_cdf_grid(black_box(&small), black_box(&grid), PerKMode::OracleExact))
    });
    let large = problem(100_000, 0.3);
    c.bench_function("mixture grid, expansion terms (n=1e5, 1602 pts)", |b| {
        b.iter(|| mixture_cdf_grid(black_box(&large), black_box(&grid), PerKMode::Edgeworth))
    });
    c.bench_function("closed-form grid (n=1e5, 1602 pts)", |b| {
        b.iter(|| bwm_edgeworth_grid(black_box(&large), black_box(&grid)))
    });
}

fn bench_simulation(c: &mut Criterion) {
    for streams in [1u64, 8] {
        let cfg = SimConfig::new(problem(200, 0.3), 20_000, 7, streams).unwrap();
        c.bench_function(&format!("sample_z (n=200, 2e4 reps, {streams} stream(s))"), |b| {
            b.iter_batched(|| &cfg, |cfg| sample_z(black_box(cfg)), BatchSize::SmallInput)
        });
    }
}

criterion_group!(
    benches,
    bench_special,
    bench_identities,
    bench_mixture,
    bench_simulation
);
criterion_main!(benches);
