use criterion::{criterion_group, criterion_main, Criterion};
use ctws_core::wave::{Propagator, PropagatorConfig, VelocityModel};

fn step_201(c: &mut Criterion) {
    let model = VelocityModel::two_layer([201, 201, 1], 10.0, 1400.0, 2000.0, 100).unwrap();
    let prop = Propagator::<f32>::new(&model, PropagatorConfig::new(1e-3)).unwrap();
    let mut st = prop.state();
    prop.inject(&mut st, [100, 100, 0], 1.0);
    for _ in 0..50 {
        prop.advance(&mut st).unwrap();
    }
    c.bench_function("advance 201x201 f32 order 8", |b| {
        b.iter(|| prop.advance(&mut st).unwrap())
    });

    let prop64 = Propagator::<f64>::new(&model, PropagatorConfig::new(1e-3)).unwrap();
    let mut st64 = prop64.state();
    prop64.inject(&mut st64, [100, 100, 0], 1.0);
    c.bench_function("advance 201x201 f64 order 8", |b| {
        b.iter(|| prop64.advance(&mut st64).unwrap())
    });
}

criterion_group!(benches, step_201);
criterion_main!(benches);
