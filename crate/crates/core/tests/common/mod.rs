//! Shared instances for integration tests: the three small study networks
//! and the six-server grid.

#![allow(dead_code)]

use workbench_core::ratmath::{RMatrix, RVector, Rational};
use workbench_core::workload::NetworkData;

pub fn r(num: i64, den: i64) -> Rational {
    Rational::new(num, den)
}

/// Two materials assembled/disassembled by two activities sharing one
/// server; the appendix's first study network.
pub fn assembly_net() -> NetworkData {
    NetworkData::new(
        RMatrix::from_int_rows(&[&[2, 1], &[2, -1]]),
        RMatrix::from_int_rows(&[&[1, 1]]),
        RVector::from_pairs(&[(3, 2), (1, 2)]),
    )
    .unwrap()
}

/// One server with a joint activity and two dedicated substitutes, at the
/// given arrival rates.
pub fn substitution_net(lambda: RVector) -> NetworkData {
    NetworkData::new(
        RMatrix::from_pair_rows(&[&[(1, 1), (4, 3), (0, 1)], &[(1, 1), (0, 1), (4, 3)]]),
        RMatrix::from_int_rows(&[&[1, 1, 1]]),
        lambda,
    )
    .unwrap()
}

/// The substitution network split over two servers, forming a pool.
pub fn two_server_net() -> NetworkData {
    NetworkData::new(
        RMatrix::from_pair_rows(&[&[(1, 1), (4, 3), (0, 1)], &[(1, 1), (0, 1), (4, 3)]]),
        RMatrix::from_int_rows(&[&[1, 1, 0], &[0, 0, 1]]),
        RVector::from_pairs(&[(5, 4), (19, 12)]),
    )
    .unwrap()
}

/// Six servers in a 2x3 grid processing nine job classes through twelve
/// unit-rate activities. Classes 1 and 2 arrive exogenously; class 1 can
/// start at server 1 (continuing 3 -> 4 via servers 2, 3) or at server 4
/// (continuing 8 -> 9 via servers 5, 6); class 2 can start at server 1, 2
/// or 3 (finishing as class 5, 6 or 7 at servers 4, 5 or 6 respectively).
pub fn grid_net(lambda1: Rational, lambda2: Rational) -> NetworkData {
    let mut arrivals = vec![Rational::zero(); 9];
    arrivals[0] = lambda1;
    arrivals[1] = lambda2;
    NetworkData::new(
        RMatrix::from_int_rows(&[
            &[1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
            &[0, 0, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0],
            &[-1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0],
            &[0, 0, 0, 0, 0, -1, 1, 0, 0, 0, 0, 0],
            &[0, 0, -1, 0, 0, 0, 0, 1, 0, 0, 0, 0],
            &[0, 0, 0, -1, 0, 0, 0, 0, 1, 0, 0, 0],
            &[0, 0, 0, 0, -1, 0, 0, 0, 0, 1, 0, 0],
            &[0, -1, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0],
            &[0, 0, 0, 0, 0, 0, 0, 0, 0, 0, -1, 1],
        ]),
        RMatrix::from_int_rows(&[
            &[1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0],
            &[0, 0, 0, 1, 0, 1, 0, 0, 0, 0, 0, 0],
            &[0, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0, 0],
            &[0, 1, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0],
            &[0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 1, 0],
            &[0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 1],
        ]),
        RVector::from_vec(arrivals),
    )
    .unwrap()
}

/// One material, one activity, one server: trivially monotone.
pub fn single_activity_net() -> NetworkData {
    NetworkData::new(
        RMatrix::from_int_rows(&[&[1]]),
        RMatrix::from_int_rows(&[&[1]]),
        RVector::from_ints(&[1]),
    )
    .unwrap()
}

/// The six dual vertices of the grid network at balanced arrivals, as
/// (material weights, server weights) pairs scaled by six.
pub fn grid_dual_vertices() -> Vec<(RVector, RVector)> {
    let sixth = |v: &[i64]| RVector::from_vec(v.iter().map(|&x| r(x, 6)).collect());
    vec![
        (
            sixth(&[3, 2, 1, 1, 0, 2, 1, 3, 1]),
            sixth(&[2, 0, 1, 0, 2, 1]),
        ),
        (
            sixth(&[3, 2, 1, 0, 0, 1, 2, 3, 2]),
            sixth(&[2, 1, 0, 0, 1, 2]),
        ),
        (
            sixth(&[3, 2, 3, 1, 2, 0, 1, 1, 1]),
            sixth(&[0, 2, 1, 2, 0, 1]),
        ),
        (
            sixth(&[3, 2, 2, 0, 1, 0, 2, 2, 2]),
            sixth(&[1, 2, 0, 1, 0, 2]),
        ),
        (
            sixth(&[3, 2, 3, 2, 2, 1, 0, 1, 0]),
            sixth(&[0, 1, 2, 2, 1, 0]),
        ),
        (
            sixth(&[3, 2, 2, 2, 1, 2, 0, 2, 0]),
            sixth(&[1, 0, 2, 1, 2, 0]),
        ),
    ]
}
