//! Benchmarks for the hot paths: group exponential/logarithm, one simulator
//! step, the Riccati solve, and identification as the dataset grows.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use liectrl::adaptive::{run_algorithm1, AdaptiveConfig, PlantMode};
use liectrl::error_dynamics::linearize;
use liectrl::lqr::solve_dare;
use liectrl::rigid_body::{
    feasible_reference_input, step, BodyState, InertialParams, ReferenceInputMode,
};
use liectrl::se3::{exp_se3, log_se3, Pose, Twist};
use liectrl::sysid::{fit_linear_model, reconstruct_params};
use liectrl::{default_state_cost, StateMatrix};

fn reference_params() -> InertialParams {
    #[rustfmt::skip]
    let inertia = Matrix3::new(
        1.0, 0.2, 0.1,
        0.2, 1.0, 0.2,
        0.1, 0.2, 1.0,
    );
    InertialParams::new(2.0, inertia).unwrap()
}

fn reference_twist() -> Twist {
    Twist::new(Vector3::new(0.0, 0.0, 1.0), Vector3::new(2.0, 0.0, 0.2))
}

fn bench_geometry(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let twists: Vec<Twist> = (0..256)
        .map(|_| Twist::from_vector(&Vector6::from_fn(|_, _| rng.random_range(-1.0..1.0))))
        .collect();
    let mut group = c.benchmark_group("geometry");
    group.throughput(Throughput::Elements(twists.len() as u64));
    group.bench_function("exp_log_roundtrip", |b| {
        b.iter(|| {
            for xi in &twists {
                let pose = exp_se3(black_box(xi));
                black_box(log_se3(&pose).unwrap());
            }
        })
    });
    group.finish();
}

fn bench_simulator_step(c: &mut Criterion) {
    let p = reference_params();
    let zd = reference_twist();
    let u = feasible_reference_input(&zd, &p, ReferenceInputMode::Exact);
    let state = BodyState::new(Pose::identity(), zd);
    c.bench_function("simulator_step", |b| {
        b.iter(|| black_box(step(black_box(&state), &u, &p, 0.01)))
    });
}

fn bench_dare(c: &mut Criterion) {
    let model = linearize(&reference_twist(), &reference_params(), 0.01);
    let q: StateMatrix = default_state_cost();
    let r = Matrix6::identity();
    c.bench_function("dare_solve_12dim", |b| {
        b.iter(|| black_box(solve_dare(black_box(&model), &q, &r).unwrap()))
    });
}

fn bench_identification(c: &mut Criterion) {
    let truth = reference_params();
    let nominal = InertialParams::new(2.6, truth.inertia() + Matrix3::identity() * 0.3).unwrap();
    let mut group = c.benchmark_group("identification");
    for n in [500usize, 1000, 2000] {
        let cfg = AdaptiveConfig {
            n_samples: n,
            plant: PlantMode::Linear,
            seed: 42,
            ..AdaptiveConfig::default()
        };
        let dataset = run_algorithm1(&truth, &nominal, &cfg).unwrap().dataset;
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::new("fit_and_reconstruct", n), &n, |b, _| {
            b.iter(|| {
                let fitted = fit_linear_model(black_box(&dataset), 1e-6).unwrap();
                black_box(reconstruct_params(&fitted, 0.01).unwrap())
            })
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_geometry,
    bench_simulator_step,
    bench_dare,
    bench_identification
);
criterion_main!(benches);
