//! Criterion benchmarks of the hot kernels.
//!
//! Benchmark ids carry the backend, so running once with default features and
//! once with `--no-default-features` puts the rayon and sequential timings side
//! by side in the same report.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use gconv::fock::build_trisqueezed;
use gconv::gaussian::{DetProblem, GaussianChannel};
use gconv::optim::{OptimizerConfig, SwarmConfig};
use gconv::par::is_parallel;
use gconv::phase_space::{wigner_pure, Axis};
use gconv::protocol::{
    default_mask, optimize_probabilistic, CircuitParams, ProbProblem, QuadratureScheme,
};
use gconv::quadrature::PlaneQuadrature;
use gconv::wavefunction::{position_wavefunction, xi_from_db};
use gconv::C64;

fn backend() -> &'static str {
    if is_parallel() {
        "rayon"
    } else {
        "sequential"
    }
}

fn row1() -> CircuitParams {
    CircuitParams {
        theta: 1.0133,
        q_beta: 0.8304,
        xi: 0.3257,
        d: -0.9525,
        ..Default::default()
    }
}

fn bench_kernels(c: &mut Criterion) {
    let xi = xi_from_db(5.0);

    let det = DetProblem::trisqueezed(0.1, 60, 0.1558, xi, PlaneQuadrature::default()).unwrap();
    let ch = GaussianChannel::squeeze_displace(1.4837, 0.0, 0.1586).unwrap();
    c.bench_function(&format!("det_fidelity/{}", backend()), |b| {
        b.iter(|| det.fidelity(&ch).unwrap())
    });

    let prob = ProbProblem::trisqueezed(0.1, 60, 0.1558, xi, QuadratureScheme::default()).unwrap();
    let p = row1();
    c.bench_function(&format!("prob_evaluate/{}", backend()), |b| {
        b.iter(|| prob.evaluate(&p).unwrap())
    });

    let psi = position_wavefunction(&build_trisqueezed(C64::new(0.1, 0.0), 60).unwrap());
    let ax = Axis::symmetric(5.0, 0.05).unwrap();
    c.bench_function(&format!("wigner_grid_201x201/{}", backend()), |b| {
        b.iter(|| wigner_pure(&psi, ax, ax).unwrap())
    });
}

fn bench_population(c: &mut Criterion) {
    let xi = xi_from_db(5.0);
    let prob = ProbProblem::trisqueezed(0.1, 60, 0.1558, xi, QuadratureScheme::default()).unwrap();
    let cfg = OptimizerConfig::Pso(SwarmConfig::standard(16, 3, 1));
    let mut group = c.benchmark_group("swarm");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("prob_16x3", backend()), |b| {
        b.iter(|| {
            optimize_probabilistic(&prob, &CircuitParams::default(), &default_mask(), &cfg).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, bench_kernels, bench_population);
criterion_main!(benches);
