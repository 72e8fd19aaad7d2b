//! Compares sequential and parallel noise-covariance estimation. Each
//! replication simulates the centered flow noise to unscaled time 1/eps^2,
//! so the work grows linearly in the replication count and the runs are
//! independent — the parallel path distributes them across threads.

use criterion::{criterion_group, criterion_main, Criterion};

use workbench_core::netsim::{estimate_sigma_seq, IncrementFamily, SimConfig, StochasticSpec};
use workbench_core::ratmath::{RMatrix, RVector, Rational};
use workbench_core::workload::{solve_static_plan, NetworkData};

#[cfg(feature = "parallel")]
use workbench_core::netsim::estimate_sigma_par;

fn r(num: i64, den: i64) -> Rational {
    Rational::new(num, den)
}

/// One server, two materials, three activities (see networks/ex2.net).
fn substitution_net() -> NetworkData {
    let flow = RMatrix::from_rows(vec![
        vec![r(1, 1), r(4, 3), r(0, 1)],
        vec![r(1, 1), r(0, 1), r(4, 3)],
    ]);
    let capacity = RMatrix::from_rows(vec![vec![r(1, 1), r(1, 1), r(1, 1)]]);
    let arrivals = RVector::from_vec(vec![r(1, 1), r(1, 1)]);
    NetworkData::new(flow, capacity, arrivals).unwrap()
}

fn bench_replications(c: &mut Criterion) {
    let net = substitution_net();
    let plan = solve_static_plan(&net).unwrap();
    let spec = StochasticSpec::isotropic(IncrementFamily::Gaussian, 2, 3, 0.04, 0.04).unwrap();
    let cfg = SimConfig {
        horizon: 4.0,
        step: 0.01,
        epsilon: 0.5,
        seed: 17,
        replications: 64,
    };

    let mut group = c.benchmark_group("sigma-estimation-64-replications");
    group.sample_size(20);
    group.bench_function("sequential", |b| {
        b.iter(|| estimate_sigma_seq(&net, &plan, &spec, &cfg).unwrap())
    });
    #[cfg(feature = "parallel")]
    group.bench_function("parallel", |b| {
        b.iter(|| estimate_sigma_par(&net, &plan, &spec, &cfg).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_replications);
criterion_main!(benches);
