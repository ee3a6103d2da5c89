use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use madelung_bench::scenario;
use madelung_core::madelung::{CurrentMode, CurrentVariant};
use madelung_core::pipeline::{frame_audits, trace_streamlines};
use madelung_core::spectral::solve_fd_eigens;
use madelung_core::streamlines::VelocityFrame;
use madelung_core::prepare;

fn eigensolve(c: &mut Criterion) {
    let cfg = scenario("stationary");
    let mut g = c.benchmark_group("fd_eigensolve");
    g.sample_size(10);
    for n in [2049, 4097] {
        let grid = cfg.potential.grid(n).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &grid, |b, grid| {
            b.iter(|| solve_fd_eigens(&cfg.potential, grid, 2).unwrap())
        });
    }
    g.finish();
}

fn frame_analysis(c: &mut Criterion) {
    let p = prepare(&scenario("tunneling"), 4097).unwrap();
    let t = 0.3 * p.t_end;
    c.bench_function("frame_analysis_4097", |b| b.iter(|| p.analyse(black_box(t)).unwrap()));
    let f = p.analyse(t).unwrap();
    c.bench_function("exchange_terms_4097", |b| b.iter(|| f.exchange(CurrentVariant::QR, CurrentMode::Derived)));
    c.bench_function("frame_audits_4097", |b| b.iter(|| frame_audits(&f, CurrentMode::Derived)));
}

fn streamline_family(c: &mut Criterion) {
    let cfg = scenario("tunneling");
    let p = prepare(&cfg, cfg.grid.fast_points).unwrap();
    let frames = 128;
    let velocity: Vec<VelocityFrame> = p
        .frame_times(frames, false)
        .iter()
        .map(|&t| VelocityFrame::from_eikonal(&p.analyse(t).unwrap().eikonal))
        .collect();
    let mut g = c.benchmark_group("streamlines");
    g.sample_size(10);
    g.bench_function("tunneling_32_seeds", |b| b.iter(|| trace_streamlines(&p, velocity.clone(), frames).unwrap()));
    g.finish();
}

criterion_group!(benches, eigensolve, frame_analysis, streamline_family);
criterion_main!(benches);
