use boxtdse::atom::{solve_atom, ModelAtomSpec};
use boxtdse::propagator::{propagate_system, CoupledSystem, PropagationOptions};
use boxtdse::pulse::{Drive, Pulse, PulseSpec};
use boxtdse::system::{build_system, SystemSpec, ALPHA_R14};
use boxtdse::two_center::{solve_two_center, TwoCenterSpec};
use boxtdse::{Orientation, SymmetryBlock};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn eigensolvers(c: &mut Criterion) {
    let mut g = c.benchmark_group("eigen");
    g.sample_size(10);
    let atom = ModelAtomSpec::fast_preset(ALPHA_R14).with_l_max(1);
    g.bench_function("atom_fast_l1", |b| b.iter(|| solve_atom(black_box(&atom)).unwrap()));
    let mol = TwoCenterSpec::small_preset(2.0);
    g.bench_function("two_center_small_sigma_g", |b| {
        b.iter(|| solve_two_center(black_box(&mol), SymmetryBlock::sigma_g()).unwrap())
    });
    g.finish();
}

fn propagation(c: &mut Criterion) {
    let spec = SystemSpec::TwoCenter(TwoCenterSpec::small_preset(2.0));
    let built = build_system(&spec, &[Orientation::Parallel]).unwrap();
    let opts = PropagationOptions {
        rtol: 1e-7,
        atol: 1e-10,
        ..PropagationOptions::default()
    };
    let system = CoupledSystem::new(&built.basis, &built.couplings[0], &opts).unwrap();
    let pulse = Pulse::new(PulseSpec::new(0.45, 4, 1e13)).unwrap();
    let mut g = c.benchmark_group("propagate");
    g.sample_size(10);
    g.bench_function("h2plus_small_parallel_4_cycles", |b| {
        b.iter(|| propagate_system(&system, black_box(&pulse), &opts).unwrap())
    });
    g.finish();
}

fn pulse(c: &mut Criterion) {
    let p = Pulse::new(PulseSpec::new(0.3, 10, 1e14)).unwrap();
    let (t0, t1) = p.window();
    c.bench_function("pulse_vector_potential_1000", |b| {
        b.iter(|| {
            (0..1000)
                .map(|i| Drive::vector_potential(&p, t0 + (t1 - t0) * i as f64 / 1000.0))
                .sum::<f64>()
        })
    });
}

criterion_group!(benches, eigensolvers, propagation, pulse);
criterion_main!(benches);
