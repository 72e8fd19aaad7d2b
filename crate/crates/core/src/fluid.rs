//! Fluid-model analysis on top of a solved network: minimum time to empty,
//! the asymptotic workload formula, reachability and communication between
//! inventory states (each decided by two independent routes that must
//! agree), critical-server profiles, and exact piecewise-linear
//! trajectories under piecewise-constant processing rates.

use thiserror::Error;

use crate::ratmath::{solve_linear, RMatrix, RVector, Rational};
use crate::simplex::{solve_lp, LPSolution, LinearProgram, Sense, VarBound};
use crate::workload::{
    augmented_capacity_matrix, solve_static_plan, verify_assumption1, NetworkData,
    WorkloadRepresentation,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FluidError {
    #[error("no nonnegative activity totals effect the requested change")]
    Infeasible,
    #[error("independent decision routes disagree (solver bug): {0}")]
    InconsistentRoutes(String),
    #[error("segment {segment} infeasible at time {time}: {constraint}")]
    InfeasibleSegment {
        segment: usize,
        time: Rational,
        constraint: String,
    },
    #[error("heavy-traffic assumption not satisfied: {0}")]
    AssumptionNotSatisfied(String),
    #[error("no agreement threshold found up to time {last_tried}")]
    ThresholdNotFound { last_tried: Rational },
}

/// Least time needed to effect a vector of inventory changes with exogenous
/// inflows switched off, together with exact primal and dual certificates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinTimeToEmpty {
    /// Optimal horizon length.
    pub time: Rational,
    /// Total amount of each activity over the horizon.
    pub activity_totals: RVector,
    /// Marginal time per extra unit of each material.
    pub material_weights: RVector,
    /// Marginal time saved per unit of extra capacity at each server.
    pub server_weights: RVector,
}

/// Solves `minimize tau` over `flow . x = q`, `capacity . x <= tau`,
/// `x >= 0`. Negative entries of `q` ask activities to add material. The
/// dual certificate satisfies `material_weights . q = time` and lies in the
/// cut-constraint polyhedron.
pub fn mtte(net: &NetworkData, q: &RVector) -> Result<MinTimeToEmpty, FluidError> {
    let (m, r, n) = (net.materials(), net.servers(), net.activities());
    assert_eq!(q.len(), m, "inventory change vector length");
    let mut objective = RVector::zeros(n + 1);
    objective[n] = Rational::one();
    let eq = net.flow().hstack(&RMatrix::zeros(m, 1));
    let ineq = net
        .capacity()
        .hstack(&RMatrix::from_fn(r, 1, |_, _| Rational::from_int(-1)));
    let mut bounds = vec![VarBound::NonNegative; n + 1];
    bounds[n] = VarBound::Free;
    let lp = LinearProgram::new(
        Sense::Minimize,
        objective,
        eq,
        q.clone(),
        ineq,
        RVector::zeros(r),
        bounds,
    );
    match solve_lp(&lp) {
        LPSolution::Optimal(sol) => Ok(MinTimeToEmpty {
            time: sol.objective,
            activity_totals: (0..n).map(|j| sol.primal[j].clone()).collect(),
            material_weights: sol.dual_eq.clone(),
            server_weights: (0..r).map(|k| -&sol.dual_ineq[k]).collect(),
        }),
        LPSolution::Infeasible => Err(FluidError::Infeasible),
        // Every capacity row enforces tau >= 0.
        LPSolution::Unbounded => unreachable!("horizon length is bounded below"),
    }
}

/// Asymptotic emptying time for inventories `t * arrivals + delta` at large
/// `t`: the maximum of `mu . delta` over all binding vertices, added to `t`.
pub fn mtte_asymptotic(rep: &WorkloadRepresentation, delta: &RVector, t: &Rational) -> Rational {
    let best = rep
        .binding_vertices()
        .map(|v| v.material_weights.dot(delta))
        .max()
        .expect("a representation always has a binding vertex");
    t + &best
}

/// Finds a horizon beyond which the asymptotic formula matches the exact
/// optimum, by doubling `t` from 1 until the two agree at `t` and `2t`;
/// returns that `t`. The agreement is exact rational equality.
pub fn asymptotic_agreement_threshold(
    net: &NetworkData,
    rep: &WorkloadRepresentation,
    delta: &RVector,
    max_doublings: u32,
) -> Result<Rational, FluidError> {
    let mut t = Rational::one();
    let mut previous_agreed = false;
    for _ in 0..max_doublings {
        let inventory: RVector = (0..net.materials())
            .map(|i| &net.arrivals()[i] * &t + &delta[i])
            .collect();
        // An infeasible target at small t (the perturbation outweighs the
        // nominal inventory) just means the asymptotic regime has not been
        // reached; keep doubling.
        let agreed = match mtte(net, &inventory) {
            Ok(solution) => solution.time == mtte_asymptotic(rep, delta, &t),
            Err(FluidError::Infeasible) => false,
            Err(other) => return Err(other),
        };
        if agreed && previous_agreed {
            return Ok(&t * &Rational::new(1, 2));
        }
        previous_agreed = agreed;
        t = &t * &Rational::from_int(2);
    }
    Err(FluidError::ThresholdNotFound { last_tried: t })
}

/// Whether one inventory state can be driven to another, with a certificate
/// either way: constant rates plus a horizon when reachable, the offending
/// binding vertices when not.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReachabilityAnswer {
    pub reachable: bool,
    /// Constant processing rates `x` with `capacity . x <= 1` and
    /// `flow . x = arrivals - delta / witness_time`.
    pub witness_rates: Option<RVector>,
    pub witness_time: Option<Rational>,
    /// Positions (within the binding-vertex sequence) whose material
    /// weights see the move as a strict workload decrease.
    pub dual_violations: Vec<usize>,
}

/// Decides reachability of `target` from `start` by two independent routes:
/// the sign test `mu . delta >= 0` over all binding vertices, and a rate
/// LP maximizing the speed `s` in `flow . x + s delta = arrivals`. The
/// routes must agree; disagreement is reported as an internal error.
pub fn is_reachable(
    net: &NetworkData,
    rep: &WorkloadRepresentation,
    start: &RVector,
    target: &RVector,
) -> Result<ReachabilityAnswer, FluidError> {
    let delta = target.sub(start);
    let dual_violations: Vec<usize> = rep
        .binding_vertices()
        .enumerate()
        .filter(|(_, v)| v.material_weights.dot(&delta).is_negative())
        .map(|(l, _)| l)
        .collect();
    let by_duals = dual_violations.is_empty();

    // max s subject to flow.x + s delta = arrivals, capacity.x <= 1,
    // s <= 1, x >= 0, s >= 0. The feasible speeds form a closed interval
    // containing 0; capping at 1 keeps the optimum finite without changing
    // the sign test.
    let (m, r, n) = (net.materials(), net.servers(), net.activities());
    let mut objective = RVector::zeros(n + 1);
    objective[n] = Rational::one();
    let eq = net
        .flow()
        .hstack(&RMatrix::from_fn(m, 1, |i, _| delta[i].clone()));
    let mut cap_row = vec![Rational::zero(); n + 1];
    cap_row[n] = Rational::one();
    let ineq = net
        .capacity()
        .hstack(&RMatrix::zeros(r, 1))
        .vstack(&RMatrix::from_rows(vec![cap_row]));
    let mut rhs = vec![Rational::one(); r + 1];
    rhs[r] = Rational::one();
    let lp = LinearProgram::new(
        Sense::Maximize,
        objective,
        eq,
        net.arrivals().clone(),
        ineq,
        rhs.into_iter().collect(),
        vec![VarBound::NonNegative; n + 1],
    );
    let LPSolution::Optimal(sol) = solve_lp(&lp) else {
        return Err(FluidError::InconsistentRoutes(
            "speed program lost the nominal plan as a feasible point".into(),
        ));
    };
    let speed = sol.primal[n].clone();
    let by_lp = speed.is_positive();

    if by_duals != by_lp {
        return Err(FluidError::InconsistentRoutes(format!(
            "vertex signs say reachable = {by_duals}, speed program found s* = {speed}"
        )));
    }
    let (witness_rates, witness_time) = if by_lp {
        let rates: RVector = (0..n).map(|j| sol.primal[j].clone()).collect();
        (Some(rates), Some(speed.recip()))
    } else {
        (None, None)
    };
    Ok(ReachabilityAnswer {
        reachable: by_duals,
        witness_rates,
        witness_time,
        dual_violations,
    })
}

/// Whether two inventory states can each be driven to the other, with a
/// reversible-displacement witness when they can.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommunicationAnswer {
    pub communicates: bool,
    /// Activity adjustment `y` with `flow . y = delta` and
    /// `augmented_capacity . y = 0`.
    pub witness: Option<RVector>,
}

/// Decides two-way reachability by two independent routes: the workload
/// test `workload . delta = 0` and solvability of the stacked linear system
/// for a witness. The routes must agree.
pub fn communicates(
    net: &NetworkData,
    rep: &WorkloadRepresentation,
    start: &RVector,
    target: &RVector,
) -> Result<CommunicationAnswer, FluidError> {
    let delta = target.sub(start);
    let by_workload = rep.workload.mul_vec(&delta).is_zero();

    let stacked = net.flow().vstack(&rep.augmented_capacity);
    let mut rhs = delta.as_slice().to_vec();
    rhs.extend(std::iter::repeat_with(Rational::zero).take(rep.augmented_rows()));
    let witness = solve_linear(&stacked, &rhs.into_iter().collect());

    if by_workload != witness.is_some() {
        return Err(FluidError::InconsistentRoutes(format!(
            "workload test says communicates = {by_workload}, system solve {}",
            if witness.is_some() {
                "found a witness"
            } else {
                "found none"
            }
        )));
    }
    if let Some(y) = &witness {
        assert_eq!(net.flow().mul_vec(y), delta, "witness moves the state");
        assert!(
            rep.augmented_capacity.mul_vec(y).is_zero(),
            "witness must be a reversible displacement"
        );
    }
    Ok(CommunicationAnswer {
        communicates: by_workload,
        witness,
    })
}

/// One maximizer of the perturbation workload, with the servers its
/// capacity weights render noncritical and the materials carrying zero
/// marginal workload.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CriticalVertex {
    /// Position within the binding-vertex sequence.
    pub vertex: usize,
    /// Servers `k` with zero capacity weight: extra capacity there does not
    /// shorten the emptying time after the perturbation.
    pub noncritical_servers: Vec<usize>,
    /// Materials `i` with zero material weight: extra units there do not
    /// lengthen it.
    pub zero_workload_materials: Vec<usize>,
}

/// All binding vertices attaining `max mu . delta`, ties reported rather
/// than broken.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CriticalProfile {
    /// The attained maximum.
    pub value: Rational,
    /// Every maximizer, ascending by position.
    pub maximizers: Vec<CriticalVertex>,
}

pub fn critical_profile(rep: &WorkloadRepresentation, delta: &RVector) -> CriticalProfile {
    let scores: Vec<Rational> = rep
        .binding_vertices()
        .map(|v| v.material_weights.dot(delta))
        .collect();
    let value = scores
        .iter()
        .max()
        .expect("a representation always has a binding vertex")
        .clone();
    let maximizers = rep
        .binding_vertices()
        .enumerate()
        .filter(|(l, _)| scores[*l] == value)
        .map(|(l, v)| CriticalVertex {
            vertex: l,
            noncritical_servers: (0..v.server_weights.len())
                .filter(|&k| v.server_weights[k].is_zero())
                .collect(),
            zero_workload_materials: (0..v.material_weights.len())
                .filter(|&i| v.material_weights[i].is_zero())
                .collect(),
        })
        .collect();
    CriticalProfile { value, maximizers }
}

/// Exact piecewise-linear evolution under piecewise-constant rates: states
/// at breakpoints, the centered controls (nominal-minus-actual cumulative
/// activity), and the cumulative slacks they induce.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FluidTrajectory {
    /// Times 0 = t_0 < t_1 < ... (one per segment boundary).
    pub breakpoints: Vec<Rational>,
    /// Constant rate vector used on each segment.
    pub rates: Vec<RVector>,
    /// Inventory at each breakpoint.
    pub states: Vec<RVector>,
    /// Centered control at each breakpoint: nominal cumulative activity
    /// minus actual.
    pub deficits: Vec<RVector>,
    /// `augmented_capacity . deficit` at each breakpoint: cumulative unused
    /// server capacity stacked over cumulative nonbasic activity;
    /// componentwise nondecreasing from zero.
    pub slacks: Vec<RVector>,
}

/// Runs the fluid dynamics from `start` through the given `(duration,
/// rates)` segments, validating each segment exactly: durations positive,
/// rates nonnegative, server loads within capacity, inventories nonnegative
/// throughout. The first violated constraint is reported with the exact
/// time it occurs (rate and load violations hold across a whole segment and
/// are reported at its start; an inventory crossing is reported at the
/// crossing). Requires the heavy-traffic conditions, which make the slack
/// processes nondecreasing by construction.
pub fn fluid_trajectory(
    net: &NetworkData,
    start: &RVector,
    segments: &[(Rational, RVector)],
) -> Result<FluidTrajectory, FluidError> {
    let plan = solve_static_plan(net).map_err(|_| FluidError::Infeasible)?;
    let report = verify_assumption1(net, &plan);
    if !report.satisfied {
        return Err(FluidError::AssumptionNotSatisfied(
            report.diagnostics.join("; "),
        ));
    }
    let slack_matrix = augmented_capacity_matrix(net, &plan.basic);

    let (m, r, n) = (net.materials(), net.servers(), net.activities());
    assert_eq!(start.len(), m, "initial inventory length");
    for i in 0..m {
        if start[i].is_negative() {
            return Err(FluidError::InfeasibleSegment {
                segment: 0,
                time: Rational::zero(),
                constraint: format!("initial inventory of material {} is negative", i + 1),
            });
        }
    }

    let mut breakpoints = vec![Rational::zero()];
    let mut states = vec![start.clone()];
    let mut deficits = vec![RVector::zeros(n)];
    let mut slacks = vec![RVector::zeros(slack_matrix.rows())];
    let mut rates = Vec::with_capacity(segments.len());

    for (segment, (duration, alpha)) in segments.iter().enumerate() {
        let now = breakpoints.last().unwrap().clone();
        assert_eq!(alpha.len(), n, "rate vector length");
        if !duration.is_positive() {
            return Err(FluidError::InfeasibleSegment {
                segment,
                time: now,
                constraint: format!("duration {duration} is not positive"),
            });
        }
        for j in 0..n {
            if alpha[j].is_negative() {
                return Err(FluidError::InfeasibleSegment {
                    segment,
                    time: now,
                    constraint: format!("rate of activity {} is {}", j + 1, alpha[j]),
                });
            }
        }
        let load = net.capacity().mul_vec(alpha);
        for k in 0..r {
            if load[k] > Rational::one() {
                return Err(FluidError::InfeasibleSegment {
                    segment,
                    time: now,
                    constraint: format!("server {} load {} exceeds capacity", k + 1, load[k]),
                });
            }
        }

        let slope = net.arrivals().sub(&net.flow().mul_vec(alpha));
        let state_now = states.last().unwrap().clone();
        let state_end: RVector = (0..m)
            .map(|i| &state_now[i] + &(&slope[i] * duration))
            .collect();
        // Inventories are linear on the segment, so the earliest violation
        // is the earliest downward zero crossing that continues negative.
        let mut crossing: Option<(Rational, usize)> = None;
        for i in 0..m {
            if state_end[i].is_negative() {
                let t = &now + &(&state_now[i] * duration / (&state_now[i] - &state_end[i]));
                if crossing.as_ref().is_none_or(|(best, _)| t < *best) {
                    crossing = Some((t, i));
                }
            }
        }
        if let Some((time, material)) = crossing {
            return Err(FluidError::InfeasibleSegment {
                segment,
                time,
                constraint: format!("inventory of material {} turns negative", material + 1),
            });
        }

        let deficit_now = deficits.last().unwrap().clone();
        let deficit_end: RVector = (0..n)
            .map(|j| &deficit_now[j] + &(&(&plan.rates[j] - &alpha[j]) * duration))
            .collect();
        let slack_end = slack_matrix.mul_vec(&deficit_end);
        let slack_now = slacks.last().unwrap();
        for row in 0..slack_end.len() {
            assert!(
                slack_end[row] >= slack_now[row],
                "slack must be nondecreasing under full utilization"
            );
        }
        assert_eq!(
            net.flow().mul_vec(&deficit_end).add(start),
            state_end,
            "state must equal start plus flow of the centered control"
        );

        breakpoints.push(&now + duration);
        states.push(state_end);
        deficits.push(deficit_end);
        slacks.push(slack_end);
        rates.push(alpha.clone());
    }

    Ok(FluidTrajectory {
        breakpoints,
        rates,
        states,
        deficits,
        slacks,
    })
}
