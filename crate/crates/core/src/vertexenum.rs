//! Brute-force vertex enumeration for small polyhedra.
//!
//! A candidate basis is any `dim`-sized subset of constraints that contains
//! every (independent) equality; each nonsingular subset is solved exactly
//! and the solution kept when it satisfies all constraints. The subset count
//! is bounded by an explicit budget so a mis-sized call fails fast instead of
//! grinding. Enumeration over subsets is embarrassingly parallel; the
//! parallel and sequential paths return identical results because candidates
//! are deduplicated and sorted lexicographically at the end.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use thiserror::Error;

use crate::ratmath::{reduced_row_echelon, RMatrix, RVector, Rational};
use crate::simplex::{solve_lp, LPSolution, LinearProgram, Sense, VarBound};

/// Subsets a single enumeration may attempt by default.
pub const DEFAULT_SUBSET_BUDGET: u64 = 5_000_000;

/// `{x in Q^dim : eq_matrix x = eq_rhs, ineq_matrix x <= ineq_rhs}`.
#[derive(Clone)]
pub struct Polyhedron {
    pub dim: usize,
    pub eq_matrix: RMatrix,
    pub eq_rhs: RVector,
    pub ineq_matrix: RMatrix,
    pub ineq_rhs: RVector,
}

impl Polyhedron {
    pub fn new(
        dim: usize,
        eq_matrix: RMatrix,
        eq_rhs: RVector,
        ineq_matrix: RMatrix,
        ineq_rhs: RVector,
    ) -> Self {
        assert!(dim >= 1, "polyhedron dimension must be positive");
        assert_eq!(eq_matrix.cols(), dim, "equality block width mismatch");
        assert_eq!(ineq_matrix.cols(), dim, "inequality block width mismatch");
        assert_eq!(eq_matrix.rows(), eq_rhs.len(), "equality rhs mismatch");
        assert_eq!(ineq_matrix.rows(), ineq_rhs.len(), "inequality rhs mismatch");
        Polyhedron {
            dim,
            eq_matrix,
            eq_rhs,
            ineq_matrix,
            ineq_rhs,
        }
    }

    pub fn contains(&self, x: &RVector) -> bool {
        self.eq_matrix.mul_vec(x) == self.eq_rhs && {
            let cx = self.ineq_matrix.mul_vec(x);
            (0..cx.len()).all(|i| cx[i] <= self.ineq_rhs[i])
        }
    }
}

/// All vertices, in lexicographic order, with a recession-cone boundedness
/// verdict. `bounded` is false iff the recession cone contains a nonzero
/// direction, in which case one is returned as a witness (this is about the
/// constraint cone, so it is meaningful even when there are no vertices).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexSet {
    pub vertices: Vec<RVector>,
    pub bounded: bool,
    pub recession_witness: Option<RVector>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnumError {
    #[error("enumeration would try {subsets} constraint subsets, over the budget of {budget}")]
    TooLarge { subsets: u128, budget: u64 },
}

// Saturating binomial coefficient; anything above u128::MAX/2 is effectively
// infinite for budget comparison.
fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i + 1) as u128;
        if acc > u128::MAX / 4 {
            return u128::MAX / 2;
        }
    }
    acc
}

// Lexicographic unranking of a k-subset of {0..n-1}.
fn unrank_subset(mut index: u128, n: usize, k: usize) -> Vec<usize> {
    let mut subset = Vec::with_capacity(k);
    let mut next = 0;
    let mut remaining = k;
    while remaining > 0 {
        let with_next = binomial((n - next - 1) as u64, (remaining - 1) as u64);
        if index < with_next {
            subset.push(next);
            remaining -= 1;
        } else {
            index -= with_next;
        }
        next += 1;
    }
    subset
}

// Unique solution of a square-ish exact system, or None when the stacked
// rows are singular or inconsistent.
fn solve_unique(rows: &RMatrix, rhs: &RVector) -> Option<RVector> {
    let n = rows.cols();
    let augmented = rows.hstack(&RMatrix::from_fn(rhs.len(), 1, |i, _| rhs[i].clone()));
    let ech = reduced_row_echelon(&augmented);
    if ech.pivots.iter().any(|&c| c >= n) {
        return None;
    }
    if ech.pivots.len() < n {
        return None;
    }
    Some((0..n).map(|i| ech.reduced[(i, n)].clone()).collect())
}

struct Preprocessed {
    // Independent equality rows (RREF of the original block).
    eq_rows: RMatrix,
    eq_rhs: RVector,
    feasible_eq: bool,
}

fn preprocess_equalities(p: &Polyhedron) -> Preprocessed {
    let augmented = p
        .eq_matrix
        .hstack(&RMatrix::from_fn(p.eq_rhs.len(), 1, |i, _| p.eq_rhs[i].clone()));
    let ech = reduced_row_echelon(&augmented);
    if ech.pivots.iter().any(|&c| c >= p.dim) {
        return Preprocessed {
            eq_rows: RMatrix::zeros(0, p.dim),
            eq_rhs: RVector::zeros(0),
            feasible_eq: false,
        };
    }
    let k = ech.pivots.len();
    let eq_rows = RMatrix::from_fn(k, p.dim, |i, j| ech.reduced[(i, j)].clone());
    let eq_rhs = (0..k).map(|i| ech.reduced[(i, p.dim)].clone()).collect();
    Preprocessed {
        eq_rows,
        eq_rhs,
        feasible_eq: true,
    }
}

fn candidate_for_subset(p: &Polyhedron, pre: &Preprocessed, subset: &[usize]) -> Option<RVector> {
    let ineq_rows = p.ineq_matrix.select_rows(subset);
    let ineq_rhs: RVector = subset.iter().map(|&i| p.ineq_rhs[i].clone()).collect();
    let rows = pre.eq_rows.vstack(&ineq_rows);
    let rhs: RVector = pre
        .eq_rhs
        .iter()
        .chain(ineq_rhs.iter())
        .cloned()
        .collect();
    let x = solve_unique(&rows, &rhs)?;
    p.contains(&x).then_some(x)
}

fn finish(p: &Polyhedron, mut candidates: Vec<RVector>) -> VertexSet {
    candidates.sort();
    candidates.dedup();
    let (bounded, recession_witness) = recession_direction(p);
    VertexSet {
        vertices: candidates,
        bounded,
        recession_witness,
    }
}

// Nonzero recession direction via coordinate LPs: for each coordinate, push
// it to +-1 inside the normalized cone slice. The cone is scalable, so any
// nonzero direction shows up at one of the 2*dim probes.
fn recession_direction(p: &Polyhedron) -> (bool, Option<RVector>) {
    for coord in 0..p.dim {
        for sign in [1i64, -1] {
            let mut objective = RVector::zeros(p.dim);
            objective[coord] = Rational::from_int(sign);
            // Cap the probed coordinate so the LP has a finite optimum.
            let cap_row = RMatrix::from_fn(1, p.dim, |_, j| {
                if j == coord {
                    Rational::from_int(sign)
                } else {
                    Rational::zero()
                }
            });
            let ineq = p.ineq_matrix.vstack(&cap_row);
            let ineq_rhs: RVector = (0..p.ineq_rhs.len())
                .map(|_| Rational::zero())
                .chain([Rational::one()])
                .collect();
            let lp = LinearProgram::new(
                Sense::Maximize,
                objective,
                p.eq_matrix.clone(),
                RVector::zeros(p.eq_rhs.len()),
                ineq,
                ineq_rhs,
                vec![VarBound::Free; p.dim],
            );
            let LPSolution::Optimal(sol) = solve_lp(&lp) else {
                unreachable!("cone slice contains the origin and is capped");
            };
            if sol.objective.is_positive() {
                let w = sol.primal;
                debug_assert!(!w.is_zero());
                debug_assert!(p.eq_matrix.mul_vec(&w).is_zero());
                return (false, Some(w));
            }
        }
    }
    (true, None)
}

fn enumeration_plan(p: &Polyhedron, budget: u64) -> Result<Option<(Preprocessed, u128)>, EnumError> {
    let pre = preprocess_equalities(p);
    if !pre.feasible_eq {
        return Ok(None);
    }
    let need = p.dim - pre.eq_rows.rows();
    let total = binomial(p.ineq_matrix.rows() as u64, need as u64);
    if total > budget as u128 {
        return Err(EnumError::TooLarge {
            subsets: total,
            budget,
        });
    }
    Ok(Some((pre, total)))
}

/// Enumerates all vertices within `budget` subset solves; dispatches to the
/// parallel scan when the `parallel` feature is on. Results are identical
/// either way.
pub fn enumerate_vertices(p: &Polyhedron, budget: u64) -> Result<VertexSet, EnumError> {
    #[cfg(feature = "parallel")]
    {
        enumerate_vertices_par(p, budget)
    }
    #[cfg(not(feature = "parallel"))]
    {
        enumerate_vertices_seq(p, budget)
    }
}

/// Sequential subset scan.
pub fn enumerate_vertices_seq(p: &Polyhedron, budget: u64) -> Result<VertexSet, EnumError> {
    let Some((pre, total)) = enumeration_plan(p, budget)? else {
        return Ok(VertexSet {
            vertices: Vec::new(),
            bounded: true,
            recession_witness: None,
        });
    };
    let need = p.dim - pre.eq_rows.rows();
    let candidates = (0..total)
        .filter_map(|i| {
            candidate_for_subset(p, &pre, &unrank_subset(i, p.ineq_matrix.rows(), need))
        })
        .collect();
    Ok(finish(p, candidates))
}

/// Parallel subset scan over the same lexicographic subset ordering.
#[cfg(feature = "parallel")]
pub fn enumerate_vertices_par(p: &Polyhedron, budget: u64) -> Result<VertexSet, EnumError> {
    let Some((pre, total)) = enumeration_plan(p, budget)? else {
        return Ok(VertexSet {
            vertices: Vec::new(),
            bounded: true,
            recession_witness: None,
        });
    };
    let need = p.dim - pre.eq_rows.rows();
    let total_u64 = u64::try_from(total).expect("budget fits in u64");
    let candidates = (0..total_u64)
        .into_par_iter()
        .filter_map(|i| {
            candidate_for_subset(p, &pre, &unrank_subset(i as u128, p.ineq_matrix.rows(), need))
        })
        .collect();
    Ok(finish(p, candidates))
}
