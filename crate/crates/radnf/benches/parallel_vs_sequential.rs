//! The two batch workloads the engine fans out — certificate production over
//! many symbols and W- evaluation over a sample grid — timed through the
//! data-parallel map and through the always-sequential variant. Per-item
//! closures are identical, so the difference is pure scheduling.

use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::{dvector, DMatrix};
use radnf::exec;
use radnf::flow::{wminus_map, FlowParams, FlowSpec, PerturbationTerm, SampleBox};
use radnf::principal::normalize_principal;
use radnf::sampling::{random_radial_principal, trial_rng};
use radnf::JetCaps;

fn principal_batch(c: &mut Criterion) {
    let caps = JetCaps::new(2, 6, 4);
    let jets: Vec<_> = (0..48u64)
        .map(|i| {
            let mut rng = trial_rng(7, i);
            random_radial_principal(caps, &mut rng)
        })
        .collect();
    let work = |p: &radnf::JetSeries| normalize_principal(p).unwrap().generators.len();

    let mut group = c.benchmark_group("principal_batch_48");
    group.bench_function("parallel", |b| b.iter(|| exec::map_collect(&jets, work)));
    group.bench_function("sequential", |b| b.iter(|| exec::map_collect_seq(&jets, work)));
    group.finish();
}

fn wminus_grid(c: &mut Criterion) {
    let spec = FlowSpec {
        dim: 2,
        a: DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]),
        l_coords: vec![],
        perturbation: vec![
            PerturbationTerm { target: 0, coeff: 0.3, exponents: vec![0, 9] },
            PerturbationTerm { target: 1, coeff: -0.25, exponents: vec![4, 5] },
        ],
        vanish_order: 9,
        bump_radius: 1.0,
    };
    let grid = SampleBox { center: dvector![0.0, 0.0], half_width: 0.25, per_axis: 7 };
    let points = grid.points();
    let params = FlowParams::default();
    let work = |x: &nalgebra::DVector<f64>| wminus_map(&spec, x, &params).unwrap().cauchy_diff;

    let mut group = c.benchmark_group("wminus_grid_49");
    group.sample_size(20);
    group.bench_function("parallel", |b| b.iter(|| exec::map_collect(&points, work)));
    group.bench_function("sequential", |b| b.iter(|| exec::map_collect_seq(&points, work)));
    group.finish();
}

criterion_group!(benches, principal_batch, wminus_grid);
criterion_main!(benches);
