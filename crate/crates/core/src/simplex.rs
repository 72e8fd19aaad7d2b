//! Exact two-phase primal simplex over rationals.
//!
//! The solver runs Bland's anti-cycling rule (lowest eligible column enters;
//! on ratio ties the row whose basic variable has the lowest index leaves),
//! so it terminates on every input and is deterministic: the same program
//! always yields the same vertex, objective, and dual multipliers.
//!
//! Dual sign convention: the returned multipliers always satisfy
//! `eq_rhs . dual_eq + ineq_rhs . dual_ineq = objective value`. For a
//! minimization the multipliers on `<=` rows are `<= 0`; for a maximization
//! they are `>= 0`. Equality multipliers are unrestricted. Complementary
//! slackness holds exactly and is asserted before any solution is returned.

use thiserror::Error;

use crate::ratmath::{solve_linear, RMatrix, RVector, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Lower bound of a variable; there are no finite upper bounds at this layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarBound {
    NonNegative,
    Free,
}

/// `sense objective . x` subject to `eq_matrix x = eq_rhs`,
/// `ineq_matrix x <= ineq_rhs`, and per-variable bounds.
#[derive(Clone)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: RVector,
    pub eq_matrix: RMatrix,
    pub eq_rhs: RVector,
    pub ineq_matrix: RMatrix,
    pub ineq_rhs: RVector,
    pub bounds: Vec<VarBound>,
}

impl LinearProgram {
    pub fn new(
        sense: Sense,
        objective: RVector,
        eq_matrix: RMatrix,
        eq_rhs: RVector,
        ineq_matrix: RMatrix,
        ineq_rhs: RVector,
        bounds: Vec<VarBound>,
    ) -> Self {
        let n = objective.len();
        assert_eq!(eq_matrix.cols(), n, "equality block width mismatch");
        assert_eq!(ineq_matrix.cols(), n, "inequality block width mismatch");
        assert_eq!(eq_matrix.rows(), eq_rhs.len(), "equality rhs mismatch");
        assert_eq!(ineq_matrix.rows(), ineq_rhs.len(), "inequality rhs mismatch");
        assert_eq!(bounds.len(), n, "bounds length mismatch");
        LinearProgram {
            sense,
            objective,
            eq_matrix,
            eq_rhs,
            ineq_matrix,
            ineq_rhs,
            bounds,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }
}

/// Exact optimum: primal point, objective value, and dual multipliers per
/// original constraint (equalities first, then inequalities).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OptimalSolution {
    pub objective: Rational,
    pub primal: RVector,
    pub dual_eq: RVector,
    pub dual_ineq: RVector,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LPSolution {
    Optimal(OptimalSolution),
    Infeasible,
    Unbounded,
}

impl LPSolution {
    pub fn optimal(&self) -> Option<&OptimalSolution> {
        match self {
            LPSolution::Optimal(sol) => Some(sol),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimplexError {
    #[error("program has no finite optimum to range over")]
    NotOptimal,
    #[error("optimal face is unbounded in variable {var}")]
    UnboundedRange { var: usize },
}

// Standard-form tableau: min c.x, A x = b (b >= 0), x >= 0.
struct Tableau {
    // a and b mutate under pivoting; orig keeps the standardized rows for the
    // final dual solve.
    a: Vec<Vec<Rational>>,
    b: Vec<Rational>,
    orig: Vec<Vec<Rational>>,
    orig_b: Vec<Rational>,
    basis: Vec<usize>,
    obj: Vec<Rational>,
    obj_value: Rational,
    ncols: usize,
    // row k of the tableau came from original constraint row_origin[k],
    // scaled by row_sign[k]; indices into eqs then ineqs.
    row_origin: Vec<usize>,
    row_sign: Vec<Rational>,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let inv = self.a[row][col].recip();
        for x in self.a[row].iter_mut() {
            *x *= &inv;
        }
        self.b[row] *= &inv;
        for r in 0..self.a.len() {
            if r != row && !self.a[r][col].is_zero() {
                let f = self.a[r][col].clone();
                for j in 0..self.ncols {
                    let delta = &f * &self.a[row][j];
                    let updated = &self.a[r][j] - &delta;
                    self.a[r][j] = updated;
                }
                let delta = &f * &self.b[row];
                let updated = &self.b[r] - &delta;
                self.b[r] = updated;
            }
        }
        if !self.obj[col].is_zero() {
            let f = self.obj[col].clone();
            for j in 0..self.ncols {
                let delta = &f * &self.a[row][j];
                let updated = &self.obj[j] - &delta;
                self.obj[j] = updated;
            }
            let delta = &f * &self.b[row];
            let updated = &self.obj_value - &delta;
            self.obj_value = updated;
        }
        self.basis[row] = col;
    }

    /// Bland iteration until optimal or unbounded. `allowed` bounds the
    /// entering-column range.
    fn run(&mut self, allowed: usize) -> bool {
        loop {
            let Some(entering) = (0..allowed).find(|&j| self.obj[j].is_negative()) else {
                return true;
            };
            let mut leaving: Option<usize> = None;
            for r in 0..self.a.len() {
                if self.a[r][entering].is_positive() {
                    let better = match leaving {
                        None => true,
                        Some(cur) => {
                            let lhs = &self.b[r] * &self.a[cur][entering];
                            let rhs = &self.b[cur] * &self.a[r][entering];
                            lhs < rhs || (lhs == rhs && self.basis[r] < self.basis[cur])
                        }
                    };
                    if better {
                        leaving = Some(r);
                    }
                }
            }
            match leaving {
                Some(row) => self.pivot(row, entering),
                None => return false,
            }
        }
    }
}

/// Solves the program exactly. Every `Optimal` result has been verified in
/// place: primal feasibility, strong duality, dual feasibility, and
/// complementary slackness all hold exactly or the solver panics.
pub fn solve_lp(lp: &LinearProgram) -> LPSolution {
    let n = lp.num_vars();
    let me = lp.eq_matrix.rows();
    let mi = lp.ineq_matrix.rows();
    let minimize = lp.sense == Sense::Minimize;

    // Standard-form columns: per variable one column (nonnegative) or a
    // split pair (free), then one slack per inequality row.
    let mut col_of_var: Vec<(usize, bool)> = Vec::with_capacity(n); // (col, split)
    let mut ncols = 0;
    for bound in &lp.bounds {
        match bound {
            VarBound::NonNegative => {
                col_of_var.push((ncols, false));
                ncols += 1;
            }
            VarBound::Free => {
                col_of_var.push((ncols, true));
                ncols += 2;
            }
        }
    }
    let slack_start = ncols;
    ncols += mi;

    let mut cost = vec![Rational::zero(); ncols];
    for (j, &(col, split)) in col_of_var.iter().enumerate() {
        let c = if minimize {
            lp.objective[j].clone()
        } else {
            -&lp.objective[j]
        };
        cost[col] = c.clone();
        if split {
            cost[col + 1] = -c;
        }
    }

    let mut rows: Vec<Vec<Rational>> = Vec::with_capacity(me + mi);
    let mut rhs: Vec<Rational> = Vec::with_capacity(me + mi);
    let mut row_origin = Vec::with_capacity(me + mi);
    let mut row_sign = Vec::with_capacity(me + mi);
    for i in 0..me + mi {
        let (coeffs, b) = if i < me {
            (lp.eq_matrix.row_slice(i), lp.eq_rhs[i].clone())
        } else {
            (lp.ineq_matrix.row_slice(i - me), lp.ineq_rhs[i - me].clone())
        };
        let sign = if b.is_negative() {
            Rational::from_int(-1)
        } else {
            Rational::one()
        };
        let mut row = vec![Rational::zero(); ncols];
        for (j, &(col, split)) in col_of_var.iter().enumerate() {
            let v = &sign * &coeffs[j];
            if split {
                row[col + 1] = -&v;
            }
            row[col] = v;
        }
        if i >= me {
            row[slack_start + (i - me)] = sign.clone();
        }
        rows.push(row);
        rhs.push(&sign * &b);
        row_origin.push(i);
        row_sign.push(sign);
    }

    let nrows = rows.len();
    let mut t = Tableau {
        orig: rows.clone(),
        orig_b: rhs.clone(),
        a: rows,
        b: rhs,
        basis: (0..nrows).map(|r| ncols + r).collect(),
        obj: vec![Rational::zero(); ncols + nrows],
        obj_value: Rational::zero(),
        ncols: ncols + nrows,
        row_origin,
        row_sign,
    };
    // Artificial columns form the identity on the right of the tableau.
    for (r, row) in t.a.iter_mut().enumerate() {
        row.extend((0..nrows).map(|k| {
            if k == r {
                Rational::one()
            } else {
                Rational::zero()
            }
        }));
    }
    // Phase-1 objective: sum of artificials, expressed over the current
    // (all-artificial) basis.
    for j in 0..ncols {
        t.obj[j] = -(0..nrows).map(|r| t.a[r][j].clone()).sum::<Rational>();
    }
    t.obj_value = -t.b.iter().cloned().sum::<Rational>();

    let phase1_bounded = t.run(ncols);
    assert!(phase1_bounded, "phase-1 objective is bounded below by zero");
    if !t.obj_value.is_zero() {
        return LPSolution::Infeasible;
    }

    // Drive leftover artificials out of the basis; an all-zero structural row
    // is redundant and dropped.
    let mut r = 0;
    while r < t.a.len() {
        if t.basis[r] >= ncols {
            debug_assert!(t.b[r].is_zero());
            match (0..ncols).find(|&j| !t.a[r][j].is_zero()) {
                Some(j) => t.pivot(r, j),
                None => {
                    t.a.remove(r);
                    t.b.remove(r);
                    t.orig.remove(r);
                    t.orig_b.remove(r);
                    t.basis.remove(r);
                    t.row_origin.remove(r);
                    t.row_sign.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }
    for row in t.a.iter_mut() {
        row.truncate(ncols);
    }
    t.ncols = ncols;

    // Phase-2 objective over the phase-1 basis.
    t.obj = cost.clone();
    t.obj_value = Rational::zero();
    for r in 0..t.a.len() {
        let cb = cost[t.basis[r]].clone();
        if !cb.is_zero() {
            for j in 0..ncols {
                let delta = &cb * &t.a[r][j];
                let updated = &t.obj[j] - &delta;
                t.obj[j] = updated;
            }
            let delta = &cb * &t.b[r];
            let updated = &t.obj_value - &delta;
            t.obj_value = updated;
        }
    }

    if !t.run(ncols) {
        return LPSolution::Unbounded;
    }

    // Primal in original variables.
    let mut x_std = vec![Rational::zero(); ncols];
    for (r, &col) in t.basis.iter().enumerate() {
        x_std[col] = t.b[r].clone();
    }
    let primal: RVector = col_of_var
        .iter()
        .map(|&(col, split)| {
            if split {
                &x_std[col] - &x_std[col + 1]
            } else {
                x_std[col].clone()
            }
        })
        .collect();

    let std_objective = -&t.obj_value;
    let objective = if minimize {
        std_objective.clone()
    } else {
        -&std_objective
    };

    // Dual multipliers: solve B^T y = c_B on the standardized rows, then map
    // through the row scaling back to the original constraints.
    let kept = t.a.len();
    let basis_t = RMatrix::from_fn(kept, kept, |i, j| t.orig[j][t.basis[i]].clone());
    let cb: RVector = t.basis.iter().map(|&j| cost[j].clone()).collect();
    let y = solve_linear(&basis_t, &cb).expect("basis matrix is nonsingular");
    let mut dual_eq = RVector::zeros(me);
    let mut dual_ineq = RVector::zeros(mi);
    for k in 0..kept {
        let value = &t.row_sign[k] * &y[k];
        let value = if minimize { value } else { -value };
        let origin = t.row_origin[k];
        if origin < me {
            dual_eq[origin] = value;
        } else {
            dual_ineq[origin - me] = value;
        }
    }

    let solution = OptimalSolution {
        objective,
        primal,
        dual_eq,
        dual_ineq,
    };
    verify_optimal(lp, &solution);
    LPSolution::Optimal(solution)
}

// Exactness is the whole point: check every optimality certificate before
// handing the solution out, and panic on any violation (a solver bug).
fn verify_optimal(lp: &LinearProgram, sol: &OptimalSolution) {
    let x = &sol.primal;
    assert_eq!(lp.eq_matrix.mul_vec(x), lp.eq_rhs, "equality rows violated");
    let cx = lp.ineq_matrix.mul_vec(x);
    for i in 0..lp.ineq_rhs.len() {
        assert!(cx[i] <= lp.ineq_rhs[i], "inequality row {i} violated");
        let slack_zero = cx[i] == lp.ineq_rhs[i];
        assert!(
            slack_zero || sol.dual_ineq[i].is_zero(),
            "complementary slackness violated on row {i}"
        );
        let sign_ok = match lp.sense {
            Sense::Minimize => !sol.dual_ineq[i].is_positive(),
            Sense::Maximize => !sol.dual_ineq[i].is_negative(),
        };
        assert!(sign_ok, "dual sign violated on inequality row {i}");
    }
    for (j, bound) in lp.bounds.iter().enumerate() {
        if *bound == VarBound::NonNegative {
            assert!(!x[j].is_negative(), "bound violated on variable {j}");
        }
    }
    let dual_objective = lp.eq_rhs.dot(&sol.dual_eq) + lp.ineq_rhs.dot(&sol.dual_ineq);
    assert_eq!(dual_objective, sol.objective, "strong duality violated");
    assert_eq!(lp.objective.dot(x), sol.objective, "objective value mismatch");
    // Reduced costs: zero on free or active variables, correctly signed on
    // the rest.
    let yt_e = lp.eq_matrix.vec_mul(&sol.dual_eq);
    let zt_c = lp.ineq_matrix.vec_mul(&sol.dual_ineq);
    for j in 0..lp.num_vars() {
        let reduced = &lp.objective[j] - &(&yt_e[j] + &zt_c[j]);
        match lp.bounds[j] {
            VarBound::Free => assert!(reduced.is_zero(), "free variable {j} has nonzero reduced cost"),
            VarBound::NonNegative => {
                let sign_ok = match lp.sense {
                    Sense::Minimize => !reduced.is_negative(),
                    Sense::Maximize => !reduced.is_positive(),
                };
                assert!(sign_ok, "reduced cost sign violated on variable {j}");
                assert!(
                    x[j].is_zero() || reduced.is_zero(),
                    "complementary slackness violated on variable {j}"
                );
            }
        }
    }
}

/// Exact range `[lo, hi]` of variable `var` over the optimal face of `lp`.
/// Errors if `lp` has no finite optimum, or if the face is unbounded in that
/// coordinate.
pub fn optimal_variable_range(
    lp: &LinearProgram,
    var: usize,
) -> Result<(Rational, Rational), SimplexError> {
    assert!(var < lp.num_vars(), "variable index out of range");
    let LPSolution::Optimal(base) = solve_lp(lp) else {
        return Err(SimplexError::NotOptimal);
    };
    // Pin the objective to its optimal value, then push the coordinate to
    // both ends of the face.
    let mut pinned = lp.clone();
    pinned.eq_matrix = pinned.eq_matrix.vstack(&RMatrix::from_rows(vec![lp
        .objective
        .as_slice()
        .to_vec()]));
    pinned.eq_rhs = pinned
        .eq_rhs
        .iter()
        .cloned()
        .chain([base.objective.clone()])
        .collect();
    let mut unit = RVector::zeros(lp.num_vars());
    unit[var] = Rational::one();
    pinned.objective = unit;

    let mut extreme = |sense: Sense| -> Result<Rational, SimplexError> {
        pinned.sense = sense;
        match solve_lp(&pinned) {
            LPSolution::Optimal(sol) => Ok(sol.objective),
            LPSolution::Unbounded => Err(SimplexError::UnboundedRange { var }),
            LPSolution::Infeasible => unreachable!("pinned face contains the optimum"),
        }
    };
    let lo = extreme(Sense::Minimize)?;
    let hi = extreme(Sense::Maximize)?;
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn no_eq(n: usize) -> (RMatrix, RVector) {
        (RMatrix::zeros(0, n), RVector::zeros(0))
    }

    // min rho s.t. processing rates meet demand within capacity rho.
    fn utilization_lp() -> LinearProgram {
        LinearProgram::new(
            Sense::Minimize,
            RVector::from_ints(&[0, 0, 1]),
            RMatrix::from_int_rows(&[&[2, 1, 0], &[2, -1, 0]]),
            RVector::from_pairs(&[(3, 2), (1, 2)]),
            RMatrix::from_int_rows(&[&[1, 1, -1]]),
            RVector::zeros(1),
            vec![VarBound::NonNegative, VarBound::NonNegative, VarBound::Free],
        )
    }

    #[test]
    fn minimizes_utilization_exactly() {
        let LPSolution::Optimal(sol) = solve_lp(&utilization_lp()) else {
            panic!("expected optimum");
        };
        assert_eq!(sol.objective, r(1, 1));
        assert_eq!(sol.primal, RVector::from_pairs(&[(1, 2), (1, 2), (1, 1)]));
    }

    #[test]
    fn dual_matches_hand_computation() {
        // min x1 + x2 s.t. x1 + 2 x2 >= 1, x >= 0, stated as a <= row.
        let (eq, eq_rhs) = no_eq(2);
        let lp = LinearProgram::new(
            Sense::Minimize,
            RVector::from_ints(&[1, 1]),
            eq,
            eq_rhs,
            RMatrix::from_int_rows(&[&[-1, -2]]),
            RVector::from_ints(&[-1]),
            vec![VarBound::NonNegative; 2],
        );
        let LPSolution::Optimal(sol) = solve_lp(&lp) else {
            panic!("expected optimum");
        };
        assert_eq!(sol.objective, r(1, 2));
        assert_eq!(sol.primal, RVector::from_pairs(&[(0, 1), (1, 2)]));
        assert_eq!(sol.dual_ineq, RVector::from_pairs(&[(-1, 2)]));
    }

    #[test]
    fn detects_infeasibility() {
        let lp = LinearProgram::new(
            Sense::Minimize,
            RVector::from_ints(&[0]),
            RMatrix::from_int_rows(&[&[1]]),
            RVector::from_ints(&[-1]),
            RMatrix::zeros(0, 1),
            RVector::zeros(0),
            vec![VarBound::NonNegative],
        );
        assert_eq!(solve_lp(&lp), LPSolution::Infeasible);
    }

    #[test]
    fn detects_unboundedness() {
        let (eq, eq_rhs) = no_eq(1);
        let lp = LinearProgram::new(
            Sense::Maximize,
            RVector::from_ints(&[1]),
            eq,
            eq_rhs,
            RMatrix::zeros(0, 1),
            RVector::zeros(0),
            vec![VarBound::NonNegative],
        );
        assert_eq!(solve_lp(&lp), LPSolution::Unbounded);
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let lp = LinearProgram::new(
            Sense::Minimize,
            RVector::from_ints(&[1, 0]),
            RMatrix::from_int_rows(&[&[1, 1], &[2, 2]]),
            RVector::from_ints(&[3, 6]),
            RMatrix::zeros(0, 2),
            RVector::zeros(0),
            vec![VarBound::NonNegative; 2],
        );
        let LPSolution::Optimal(sol) = solve_lp(&lp) else {
            panic!("expected optimum");
        };
        assert_eq!(sol.objective, r(0, 1));
        assert_eq!(sol.primal, RVector::from_ints(&[0, 3]));
        // The dropped duplicate row carries a zero multiplier; duality still
        // balances exactly (checked internally by the solver).
    }

    #[test]
    fn free_variables_can_go_negative() {
        // min x s.t. x >= -5 stated as -x <= 5 with x free.
        let lp = LinearProgram::new(
            Sense::Minimize,
            RVector::from_ints(&[1]),
            RMatrix::zeros(0, 1),
            RVector::zeros(0),
            RMatrix::from_int_rows(&[&[-1]]),
            RVector::from_ints(&[5]),
            vec![VarBound::Free],
        );
        let LPSolution::Optimal(sol) = solve_lp(&lp) else {
            panic!("expected optimum");
        };
        assert_eq!(sol.primal, RVector::from_ints(&[-5]));
        assert_eq!(sol.objective, r(-5, 1));
    }

    #[test]
    fn range_on_a_segment() {
        // Objective 0 over the segment 0 <= x <= 1.
        let lp = LinearProgram::new(
            Sense::Minimize,
            RVector::from_ints(&[0]),
            RMatrix::zeros(0, 1),
            RVector::zeros(0),
            RMatrix::from_int_rows(&[&[1]]),
            RVector::from_ints(&[1]),
            vec![VarBound::NonNegative],
        );
        assert_eq!(optimal_variable_range(&lp, 0).unwrap(), (r(0, 1), r(1, 1)));
    }

    #[test]
    fn range_detects_unique_optimum() {
        let lp = utilization_lp();
        for var in 0..3 {
            let (lo, hi) = optimal_variable_range(&lp, var).unwrap();
            assert_eq!(lo, hi, "variable {var} should be pinned");
        }
        assert_eq!(optimal_variable_range(&lp, 0).unwrap().0, r(1, 2));
    }

    #[test]
    fn range_reports_unbounded_face() {
        let lp = LinearProgram::new(
            Sense::Minimize,
            RVector::from_ints(&[0]),
            RMatrix::zeros(0, 1),
            RVector::zeros(0),
            RMatrix::zeros(0, 1),
            RVector::zeros(0),
            vec![VarBound::NonNegative],
        );
        assert_eq!(
            optimal_variable_range(&lp, 0),
            Err(SimplexError::UnboundedRange { var: 0 })
        );
    }

    #[test]
    fn range_requires_finite_optimum() {
        let lp = LinearProgram::new(
            Sense::Maximize,
            RVector::from_ints(&[1]),
            RMatrix::zeros(0, 1),
            RVector::zeros(0),
            RMatrix::zeros(0, 1),
            RVector::zeros(0),
            vec![VarBound::NonNegative],
        );
        assert_eq!(optimal_variable_range(&lp, 0), Err(SimplexError::NotOptimal));
    }

    #[test]
    fn resolving_is_deterministic() {
        let lp = utilization_lp();
        assert_eq!(solve_lp(&lp), solve_lp(&lp));
    }

    #[test]
    fn degenerate_cycling_guard() {
        // Classic degenerate program; Bland's rule must terminate.
        let (eq, eq_rhs) = no_eq(4);
        let lp = LinearProgram::new(
            Sense::Minimize,
            RVector::from_pairs(&[(-3, 4), (150, 1), (-1, 50), (6, 1)]),
            eq,
            eq_rhs,
            RMatrix::from_pair_rows(&[
                &[(1, 4), (-60, 1), (-1, 25), (9, 1)],
                &[(1, 2), (-90, 1), (-1, 50), (3, 1)],
                &[(0, 1), (0, 1), (1, 1), (0, 1)],
            ]),
            RVector::from_ints(&[0, 0, 1]),
            vec![VarBound::NonNegative; 4],
        );
        let LPSolution::Optimal(sol) = solve_lp(&lp) else {
            panic!("expected optimum");
        };
        assert_eq!(sol.objective, r(-1, 20));
    }
}
