use thiserror::Error;

use super::{RMatrix, RVector, Rational};

/// Outcome of one Gauss-Jordan elimination: the reduced row-echelon form and
/// the pivot column of each pivot row.
pub struct Echelon {
    pub reduced: RMatrix,
    pub pivots: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("matrix does not have full row rank (rank {rank} of {rows} rows)")]
    NotFullRowRank { rank: usize, rows: usize },
}

/// Reduced row-echelon form with the fixed pivot rule: scan columns left to
/// right, pivot on the lowest-index row that has a nonzero entry there.
/// Exact arithmetic, so the result is unique and deterministic.
pub fn reduced_row_echelon(m: &RMatrix) -> Echelon {
    let mut a = m.clone();
    let (rows, cols) = (a.rows(), a.cols());
    let mut pivots = Vec::new();
    let mut next_row = 0;
    for col in 0..cols {
        if next_row == rows {
            break;
        }
        let Some(pivot_row) = (next_row..rows).find(|&i| !a[(i, col)].is_zero()) else {
            continue;
        };
        if pivot_row != next_row {
            for j in 0..cols {
                let tmp = a[(pivot_row, j)].clone();
                a[(pivot_row, j)] = a[(next_row, j)].clone();
                a[(next_row, j)] = tmp;
            }
        }
        let inv = a[(next_row, col)].recip();
        for j in col..cols {
            let scaled = &a[(next_row, j)] * &inv;
            a[(next_row, j)] = scaled;
        }
        for i in 0..rows {
            if i != next_row && !a[(i, col)].is_zero() {
                let factor = a[(i, col)].clone();
                for j in col..cols {
                    let delta = &factor * &a[(next_row, j)];
                    let updated = &a[(i, j)] - &delta;
                    a[(i, j)] = updated;
                }
            }
        }
        pivots.push(col);
        next_row += 1;
    }
    Echelon { reduced: a, pivots }
}

/// Exact rank.
///
/// ```
/// use workbench_core::ratmath::{rank, RMatrix};
/// assert_eq!(rank(&RMatrix::identity(2)), 2);
/// assert_eq!(rank(&RMatrix::zeros(3, 4)), 0);
/// assert_eq!(rank(&RMatrix::from_pair_rows(&[&[(1, 1), (0, 1)], &[(1, 1), (4, 3)]])), 2);
/// ```
pub fn rank(m: &RMatrix) -> usize {
    reduced_row_echelon(m).pivots.len()
}

/// One exact solution of `a x = b`, or `None` when the system is
/// inconsistent. Free variables are set to zero, which together with the
/// fixed pivot rule makes the returned solution deterministic.
pub fn solve_linear(a: &RMatrix, b: &RVector) -> Option<RVector> {
    assert_eq!(a.rows(), b.len(), "solve_linear: dimension mismatch");
    let rhs = RMatrix::from_fn(b.len(), 1, |i, _| b[i].clone());
    solve_linear_multi(a, &rhs).map(|x| x.col_vec(0))
}

/// Simultaneous exact solve of `a X = B` for every column of `B`; `None` when
/// any column is inconsistent. Free variables are zero in every column.
pub fn solve_linear_multi(a: &RMatrix, b: &RMatrix) -> Option<RMatrix> {
    assert_eq!(a.rows(), b.rows(), "solve_linear_multi: dimension mismatch");
    let n = a.cols();
    let augmented = a.hstack(b);
    let ech = reduced_row_echelon(&augmented);
    // A pivot to the right of the coefficient block witnesses 0 = nonzero.
    if ech.pivots.iter().any(|&col| col >= n) {
        return None;
    }
    let mut x = RMatrix::zeros(n, b.cols());
    for (row, &col) in ech.pivots.iter().enumerate() {
        for k in 0..b.cols() {
            x[(col, k)] = ech.reduced[(row, n + k)].clone();
        }
    }
    Some(x)
}

/// Basis of the null space, one basis vector per column; the column count is
/// always `cols - rank`.
///
/// ```
/// use workbench_core::ratmath::{null_space_basis, RMatrix, RVector, Rational};
/// let k = null_space_basis(&RMatrix::from_int_rows(&[&[1, 1]]));
/// assert_eq!(k.cols(), 1);
/// assert!(RMatrix::from_int_rows(&[&[1, 1]]).mul_vec(&k.col_vec(0)).is_zero());
/// ```
pub fn null_space_basis(m: &RMatrix) -> RMatrix {
    let n = m.cols();
    let ech = reduced_row_echelon(m);
    let pivot_set: Vec<usize> = ech.pivots.clone();
    let free_cols: Vec<usize> = (0..n).filter(|c| !pivot_set.contains(c)).collect();
    let mut basis = RMatrix::zeros(n, free_cols.len());
    for (k, &f) in free_cols.iter().enumerate() {
        basis[(f, k)] = Rational::one();
        for (row, &p) in pivot_set.iter().enumerate() {
            basis[(p, k)] = -&ech.reduced[(row, f)];
        }
    }
    basis
}

/// Right inverse `X` with `m X = I`, free variables zero; requires full row
/// rank.
///
/// ```
/// use workbench_core::ratmath::{right_inverse, RMatrix};
/// let h = RMatrix::from_pair_rows(&[&[(1, 1), (0, 1)], &[(1, 1), (4, 3)]]);
/// let hp = right_inverse(&h).unwrap();
/// assert_eq!(h.matmul(&hp), RMatrix::identity(2));
/// assert_eq!(hp, RMatrix::from_pair_rows(&[&[(1, 1), (0, 1)], &[(-3, 4), (3, 4)]]));
/// ```
pub fn right_inverse(m: &RMatrix) -> Result<RMatrix, LinalgError> {
    let r = rank(m);
    if r < m.rows() {
        return Err(LinalgError::NotFullRowRank {
            rank: r,
            rows: m.rows(),
        });
    }
    let x = solve_linear_multi(m, &RMatrix::identity(m.rows()))
        .expect("full row rank system is consistent");
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex1_inputs() -> (RMatrix, RVector) {
        (
            RMatrix::from_int_rows(&[&[2, 1], &[2, -1]]),
            RVector::from_pairs(&[(3, 2), (1, 2)]),
        )
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&RMatrix::identity(2)), 2);
        assert_eq!(rank(&RMatrix::zeros(3, 4)), 0);
        let h = RMatrix::from_pair_rows(&[&[(1, 1), (0, 1)], &[(1, 1), (4, 3)]]);
        assert_eq!(rank(&h), 2);
        let dependent = RMatrix::from_int_rows(&[&[1, 2], &[2, 4], &[3, 6]]);
        assert_eq!(rank(&dependent), 1);
    }

    #[test]
    fn solve_square_and_underdetermined() {
        let (r, lambda) = ex1_inputs();
        assert_eq!(solve_linear(&r, &lambda).unwrap(), RVector::from_pairs(&[(1, 2), (1, 2)]));

        let i3 = RMatrix::identity(3);
        let b = RVector::from_ints(&[4, -5, 6]);
        assert_eq!(solve_linear(&i3, &b).unwrap(), b);

        // One equation, two unknowns: the free variable stays zero.
        let wide = RMatrix::from_int_rows(&[&[1, 1]]);
        assert_eq!(
            solve_linear(&wide, &RVector::from_ints(&[2])).unwrap(),
            RVector::from_ints(&[2, 0])
        );
    }

    #[test]
    fn solve_detects_inconsistency() {
        let a = RMatrix::from_int_rows(&[&[1, 1], &[1, 1]]);
        let b = RVector::from_ints(&[1, 2]);
        assert_eq!(solve_linear(&a, &b), None);
    }

    #[test]
    fn solution_satisfies_system() {
        let a = RMatrix::from_pair_rows(&[&[(1, 1), (4, 3), (0, 1)], &[(1, 1), (0, 1), (4, 3)]]);
        let b = RVector::from_pairs(&[(5, 4), (19, 12)]);
        let x = solve_linear(&a, &b).unwrap();
        assert_eq!(a.mul_vec(&x), b);
    }

    #[test]
    fn null_space_of_invertible_is_empty() {
        assert_eq!(null_space_basis(&RMatrix::identity(3)).cols(), 0);
        // Augmented capacity matrix with no nonbasic kernel: 3x3 nonsingular.
        let k = RMatrix::from_int_rows(&[&[1, 1, 1], &[0, -1, 0], &[0, 0, -1]]);
        assert_eq!(null_space_basis(&k).cols(), 0);
    }

    #[test]
    fn null_space_spans_kernel() {
        let m = RMatrix::from_int_rows(&[&[1, 1]]);
        let basis = null_space_basis(&m);
        assert_eq!(basis.cols(), 1);
        let v = basis.col_vec(0);
        assert!(m.mul_vec(&v).is_zero());
        // Spans the line through (1, -1).
        assert_eq!(&v[0] * &Rational::from_int(-1), v[1]);

        let wide = RMatrix::from_int_rows(&[&[1, 2, 3], &[0, 1, 1]]);
        let basis = wide.clone();
        let kernel = null_space_basis(&basis);
        assert_eq!(kernel.cols(), 1);
        assert!(wide.mul_vec(&kernel.col_vec(0)).is_zero());
    }

    #[test]
    fn right_inverse_examples() {
        assert_eq!(right_inverse(&RMatrix::identity(3)).unwrap(), RMatrix::identity(3));

        let h = RMatrix::from_pair_rows(&[&[(1, 1), (0, 1)], &[(1, 1), (4, 3)]]);
        let hp = right_inverse(&h).unwrap();
        assert_eq!(hp, RMatrix::from_pair_rows(&[&[(1, 1), (0, 1)], &[(-3, 4), (3, 4)]]));

        let wide = RMatrix::from_pair_rows(&[&[(1, 1), (4, 3), (0, 1)], &[(1, 1), (0, 1), (4, 3)]]);
        let wp = right_inverse(&wide).unwrap();
        assert_eq!(wide.matmul(&wp), RMatrix::identity(2));
    }

    #[test]
    fn right_inverse_requires_full_row_rank() {
        let degenerate = RMatrix::from_int_rows(&[&[1, 2], &[2, 4]]);
        assert_eq!(
            right_inverse(&degenerate),
            Err(LinalgError::NotFullRowRank { rank: 1, rows: 2 })
        );
    }
}
