//! Compares sequential and parallel dual-vertex enumeration on a network
//! whose dual polyhedron is large enough for the subset scan to dominate:
//! nine materials and six servers give a 15-dimensional polyhedron with 18
//! inequality rows, i.e. C(18, 14) = 3060 candidate bases per run.

use criterion::{criterion_group, criterion_main, Criterion};

use workbench_core::ratmath::{RMatrix, RVector, Rational};
use workbench_core::vertexenum::{enumerate_vertices_seq, Polyhedron, DEFAULT_SUBSET_BUDGET};
use workbench_core::workload::NetworkData;

#[cfg(feature = "parallel")]
use workbench_core::vertexenum::enumerate_vertices_par;

fn r(num: i64, den: i64) -> Rational {
    Rational::new(num, den)
}

/// Two inflow streams on six two-activity servers (see networks/laws-2x3.net).
fn grid_net() -> NetworkData {
    let flow = RMatrix::from_rows(
        [
            [1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
            [0, 0, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0],
            [-1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0],
            [0, 0, 0, 0, 0, -1, 1, 0, 0, 0, 0, 0],
            [0, 0, -1, 0, 0, 0, 0, 1, 0, 0, 0, 0],
            [0, 0, 0, -1, 0, 0, 0, 0, 1, 0, 0, 0],
            [0, 0, 0, 0, -1, 0, 0, 0, 0, 1, 0, 0],
            [0, -1, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0],
            [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, -1, 1],
        ]
        .iter()
        .map(|row| row.iter().map(|&v| r(v, 1)).collect())
        .collect(),
    );
    let capacity = RMatrix::from_rows(
        [
            [1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0],
            [0, 0, 0, 1, 0, 1, 0, 0, 0, 0, 0, 0],
            [0, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0, 0],
            [0, 1, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0],
            [0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 1, 0],
            [0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 1],
        ]
        .iter()
        .map(|row| row.iter().map(|&v| r(v, 1)).collect())
        .collect(),
    );
    let mut arrivals = vec![Rational::zero(); 9];
    arrivals[0] = r(1, 1);
    arrivals[1] = r(3, 2);
    NetworkData::new(flow, capacity, RVector::from_vec(arrivals)).unwrap()
}

/// The dual polyhedron of the utilization LP: one weight per material and
/// per server, activity rows bounding material weights by capacity weights,
/// server weights nonnegative and summing to one.
fn dual_polyhedron(net: &NetworkData) -> Polyhedron {
    let (m, servers, n) = (net.materials(), net.servers(), net.activities());
    let dim = m + servers;
    let eq = RMatrix::from_fn(1, dim, |_, j| {
        if j < m {
            Rational::zero()
        } else {
            Rational::one()
        }
    });
    let mut ineq_rows = Vec::with_capacity(n + servers);
    for j in 0..n {
        let mut row = Vec::with_capacity(dim);
        for i in 0..m {
            row.push(net.flow()[(i, j)].clone());
        }
        for k in 0..servers {
            row.push(-&net.capacity()[(k, j)]);
        }
        ineq_rows.push(row);
    }
    for k in 0..servers {
        let mut row = vec![Rational::zero(); dim];
        row[m + k] = Rational::from_int(-1);
        ineq_rows.push(row);
    }
    Polyhedron::new(
        dim,
        eq,
        RVector::from_ints(&[1]),
        RMatrix::from_rows(ineq_rows),
        RVector::zeros(n + servers),
    )
}

fn bench_enumeration(c: &mut Criterion) {
    let polyhedron = dual_polyhedron(&grid_net());
    let mut group = c.benchmark_group("dual-vertex-enumeration");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| enumerate_vertices_seq(&polyhedron, DEFAULT_SUBSET_BUDGET).unwrap())
    });
    #[cfg(feature = "parallel")]
    group.bench_function("parallel", |b| {
        b.iter(|| enumerate_vertices_par(&polyhedron, DEFAULT_SUBSET_BUDGET).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_enumeration);
criterion_main!(benches);
