use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use mpass::{
    build_radial_grid, continuation_sweep, deform, estimate_c, estimate_mu_p_on, init_path,
    log_spaced, minimize_on_level, MpaOptions, SweepOptions, Variational,
};
use mpass_bench::{critical, endpoint, hardy, options, toy};
use std::hint::black_box;
use std::sync::Arc;

fn energies(c: &mut Criterion) {
    let spec = hardy();
    let (v, _) = mpass_bench::level_one(&spec);
    c.bench_function("hardy/eval_f", |b| b.iter(|| spec.eval_f(black_box(&v))));
    c.bench_function("hardy/grad_f", |b| b.iter(|| spec.grad_f(black_box(&v))));
}

fn minimize(c: &mut Criterion) {
    let mut g = c.benchmark_group("minimize_on_level");
    g.sample_size(10);
    for (name, spec) in [("hardy", hardy()), ("critical", critical())] {
        let opts = options(&spec);
        g.bench_function(name, |b| {
            b.iter(|| minimize_on_level(&spec, 1.0, &spec.seed(), &opts).unwrap())
        });
    }
    g.finish();
}

fn sweep(c: &mut Criterion) {
    let spec = critical();
    let opts = options(&spec);
    let levels = log_spaced(1.0, 1000.0, 31).unwrap();
    let mut g = c.benchmark_group("continuation_sweep");
    g.sample_size(10);
    g.bench_function("critical/31", |b| {
        b.iter(|| continuation_sweep(&spec, &levels, &opts, &SweepOptions::default()).unwrap())
    });
    g.finish();
}

fn mountain_pass(c: &mut Criterion) {
    let mut g = c.benchmark_group("mpa");
    g.sample_size(10);
    let t = toy();
    let e = t.as_toy().unwrap().point(2.0);
    g.bench_function("toy/estimate_c", |b| {
        b.iter(|| estimate_c(&t, &e, &MpaOptions::toy()).unwrap())
    });
    let h = hardy();
    let e = endpoint(&h);
    let opts = MpaOptions::pde();
    g.bench_function("hardy/deform", |b| {
        b.iter_batched(
            || init_path(&h, &e, opts.k).unwrap(),
            |path| deform(&path, &h, &opts, opts.step).unwrap(),
            BatchSize::LargeInput,
        )
    });
    g.finish();
}

fn mu_p(c: &mut Criterion) {
    let grid = Arc::new(build_radial_grid(5, 1.0, 400, 1.0).unwrap());
    let mut g = c.benchmark_group("mu_p");
    g.sample_size(10);
    g.bench_function("p2/m400", |b| {
        b.iter(|| estimate_mu_p_on(grid.clone(), 2.0).unwrap())
    });
    g.finish();
}

criterion_group!(benches, energies, minimize, sweep, mountain_pass, mu_p);
criterion_main!(benches);
