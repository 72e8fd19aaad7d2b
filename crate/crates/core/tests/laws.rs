//! End-to-end oracles for the six-server grid network: the full dual
//! vertex set, the three-dimensional workload space, critical-server
//! profiles, and draining-time asymptotics.

mod common;

use common::{grid_dual_vertices, grid_net, r};
use workbench_core::fluid::{
    asymptotic_agreement_threshold, communicates, critical_profile, mtte,
};
use workbench_core::ratmath::{null_space_basis, rank, RMatrix, RVector, Rational};
use workbench_core::workload::analyze;

#[test]
fn balanced_grid_plan_is_uniform() {
    let net = grid_net(r(1, 1), r(3, 2));
    let analysis = analyze(&net, 10_000).unwrap();
    assert_eq!(analysis.plan.utilization, Rational::one());
    for j in 0..12 {
        assert_eq!(analysis.plan.rates[j], r(1, 2), "activity {}", j + 1);
    }
    assert_eq!(analysis.plan.basic, (0..12).collect::<Vec<_>>());
    assert!(analysis.report.satisfied);
}

#[test]
fn grid_binding_vertices_match_known_set() {
    let net = grid_net(r(1, 1), r(3, 2));
    let analysis = analyze(&net, 10_000).unwrap();
    let cuts = &analysis.cuts;

    let mut expected: Vec<(RVector, RVector)> = grid_dual_vertices();
    expected.sort();
    let mut binding: Vec<(RVector, RVector)> = cuts
        .binding()
        .map(|v| (v.material_weights.clone(), v.server_weights.clone()))
        .collect();
    binding.sort();
    assert_eq!(binding, expected);

    let rep = analysis.representation.as_ref().unwrap();
    assert_eq!(rep.dim(), 3);
    assert_eq!(rep.basic_count(), 12);
    assert!(rep.assumption3_holds());

    // The six server-weight vectors span a three-dimensional space.
    let pi_stack = RMatrix::from_rows(
        grid_dual_vertices()
            .iter()
            .map(|(_, pi)| pi.as_slice().to_vec())
            .collect(),
    );
    assert_eq!(rank(&pi_stack), 3);
}

#[test]
fn grid_workload_spans_the_published_rows() {
    let net = grid_net(r(1, 1), r(3, 2));
    let analysis = analyze(&net, 10_000).unwrap();
    let rep = analysis.representation.as_ref().unwrap();

    let published = RMatrix::from_rows(
        grid_dual_vertices()[..3]
            .iter()
            .map(|(mu, _)| mu.as_slice().to_vec())
            .collect(),
    );
    assert_eq!(rank(&rep.workload), 3);
    assert_eq!(rank(&published), 3);
    assert_eq!(rank(&rep.workload.vstack(&published)), 3);
}

#[test]
fn grid_critical_profiles() {
    let net = grid_net(r(1, 1), r(3, 2));
    let analysis = analyze(&net, 10_000).unwrap();
    let rep = analysis.representation.as_ref().unwrap();

    // Extra material in buffers 6 and 8 is worst for exactly one vertex,
    // whose zero server weights leave servers 2 and 4 noncritical.
    let mut delta = RVector::zeros(9);
    delta[5] = Rational::one();
    delta[7] = Rational::one();
    let profile = critical_profile(rep, &delta);
    assert_eq!(profile.value, r(5, 6));
    assert_eq!(profile.maximizers.len(), 1);
    let top = &profile.maximizers[0];
    let binding: Vec<_> = rep.binding_vertices().collect();
    assert_eq!(
        binding[top.vertex].material_weights,
        grid_dual_vertices()[0].0,
        "worst-case vertex"
    );
    assert_eq!(top.noncritical_servers, vec![1, 3]);
    assert_eq!(top.zero_workload_materials, vec![4]);

    // Extra material in buffer 5 alone produces a two-way tie.
    let mut delta = RVector::zeros(9);
    delta[4] = Rational::one();
    let profile = critical_profile(rep, &delta);
    assert_eq!(profile.value, r(1, 3));
    let worst: Vec<RVector> = profile
        .maximizers
        .iter()
        .map(|c| binding[c.vertex].material_weights.clone())
        .collect();
    assert_eq!(
        worst,
        vec![grid_dual_vertices()[2].0.clone(), grid_dual_vertices()[4].0.clone()]
    );
}

#[test]
fn grid_draining_time_and_asymptotics() {
    let net = grid_net(r(1, 1), r(3, 2));
    let analysis = analyze(&net, 10_000).unwrap();
    let rep = analysis.representation.as_ref().unwrap();

    // Draining the nominal inventory takes exactly unit time per unit.
    for t in [r(1, 1), r(7, 2)] {
        let q = net.arrivals().scale(&t);
        assert_eq!(mtte(&net, &q).unwrap().time, t);
    }

    // Every vertex weighs the first buffer at 1/2, so one extra unit
    // there adds exactly half a time unit once t is large enough.
    let mut delta = RVector::zeros(9);
    delta[0] = Rational::one();
    let t0 = asymptotic_agreement_threshold(&net, rep, &delta, 24).unwrap();
    let q = net.arrivals().scale(&t0).add(&delta);
    assert_eq!(mtte(&net, &q).unwrap().time, &t0 + &r(1, 2));
}

#[test]
fn grid_states_with_equal_workload_communicate() {
    let net = grid_net(r(1, 1), r(3, 2));
    let analysis = analyze(&net, 10_000).unwrap();
    let rep = analysis.representation.as_ref().unwrap();

    // Workload-neutral moves are exactly the kernel of the workload
    // matrix, six-dimensional here; a state shifted along any of them
    // (kept nonnegative) communicates with the original.
    let start: RVector = (0..9).map(|_| r(2, 1)).collect();
    let kernel = null_space_basis(&rep.workload);
    assert_eq!(kernel.cols(), 6);
    for k in 0..kernel.cols() {
        let raw = kernel.col_vec(k);
        let largest = raw
            .iter()
            .map(|x| x.abs())
            .max()
            .expect("basis vectors are nonzero");
        let shift = raw.scale(&(&Rational::one() / &largest));
        let target = start.add(&shift);
        assert!(target.is_nonnegative());
        let answer = communicates(&net, rep, &start, &target).unwrap();
        assert!(answer.communicates, "kernel direction {k}");
    }

    // A plain unit of extra arriving work is never workload-neutral.
    let mut heavier = start.clone();
    heavier[0] = &heavier[0] + &Rational::one();
    let answer = communicates(&net, rep, &start, &heavier).unwrap();
    assert!(!answer.communicates);
}
