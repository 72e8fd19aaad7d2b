//! Static planning and the canonical workload representation of an open
//! processing network.
//!
//! A network is given by a material-flow matrix `R` (one column per
//! activity: positive entries consume, negative entries produce), a
//! nonnegative capacity-consumption matrix `A` (rows are servers), and
//! nonnegative arrival rates. The static planning problem picks activity
//! rates meeting arrivals at minimum peak server utilization; its dual
//! polyhedron (one inequality per activity, server weights summing to one)
//! yields generalized cut constraints, and the binding dual vertices assemble
//! into the workload representation: a maximal independent family of
//! workload vectors `M`, matching server weights, and the exact structural
//! identities connecting them to the flow and capacity split along basic
//! activities.
//!
//! All computations here are exact; every structural identity is checked by
//! construction and a violation is reported as an internal-consistency error
//! rather than silently returned.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ratmath::{null_space_basis, rank, right_inverse, RMatrix, RVector, Rational};
use crate::simplex::{
    optimal_variable_range, solve_lp, LPSolution, LinearProgram, Sense, SimplexError, VarBound,
};
use crate::vertexenum::{enumerate_vertices, EnumError, Polyhedron, VertexSet};

/// Validated network primitives: flow matrix, capacity matrix, arrival
/// rates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkData {
    flow: RMatrix,
    capacity: RMatrix,
    arrivals: RVector,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error("{0}")]
    DimensionMismatch(String),
    #[error("capacity entry at server {row}, activity {col} is negative")]
    NegativeCapacityEntry { row: usize, col: usize },
    #[error("arrival rate {index} is negative")]
    NegativeArrival { index: usize },
    #[error("at least one arrival rate must be positive")]
    NoArrivals,
}

impl NetworkData {
    pub fn new(flow: RMatrix, capacity: RMatrix, arrivals: RVector) -> Result<Self, NetworkError> {
        let (m, n, r) = (flow.rows(), flow.cols(), capacity.rows());
        if m == 0 || n == 0 || r == 0 {
            return Err(NetworkError::DimensionMismatch(
                "need at least one material, one server, and one activity".into(),
            ));
        }
        if capacity.cols() != n {
            return Err(NetworkError::DimensionMismatch(format!(
                "capacity matrix has {} columns, flow matrix has {n}",
                capacity.cols()
            )));
        }
        if arrivals.len() != m {
            return Err(NetworkError::DimensionMismatch(format!(
                "{} arrival rates for {m} materials",
                arrivals.len()
            )));
        }
        for i in 0..r {
            for j in 0..n {
                if capacity[(i, j)].is_negative() {
                    return Err(NetworkError::NegativeCapacityEntry { row: i, col: j });
                }
            }
        }
        for i in 0..m {
            if arrivals[i].is_negative() {
                return Err(NetworkError::NegativeArrival { index: i });
            }
        }
        if arrivals.iter().all(Rational::is_zero) {
            return Err(NetworkError::NoArrivals);
        }
        Ok(NetworkData {
            flow,
            capacity,
            arrivals,
        })
    }

    pub fn materials(&self) -> usize {
        self.flow.rows()
    }

    pub fn servers(&self) -> usize {
        self.capacity.rows()
    }

    pub fn activities(&self) -> usize {
        self.flow.cols()
    }

    pub fn flow(&self) -> &RMatrix {
        &self.flow
    }

    pub fn capacity(&self) -> &RMatrix {
        &self.capacity
    }

    pub fn arrivals(&self) -> &RVector {
        &self.arrivals
    }

    /// Same network with different arrival rates.
    pub fn with_arrivals(&self, arrivals: RVector) -> Result<Self, NetworkError> {
        NetworkData::new(self.flow.clone(), self.capacity.clone(), arrivals)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorkloadError {
    #[error("no nonnegative activity rates meet the arrival rates")]
    Infeasible,
    #[error(transparent)]
    TooLarge(#[from] EnumError),
    #[error("heavy-traffic assumption not satisfied: {0}")]
    AssumptionNotSatisfied(String),
    #[error("internal identity violated: {0}")]
    IdentityViolation(String),
}

/// Optimal solution of the static planning problem.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StaticPlan {
    /// Minimal peak server utilization.
    pub utilization: Rational,
    /// Optimal activity rates.
    pub rates: RVector,
    /// Activities with positive rate, ascending.
    pub basic: Vec<usize>,
}

impl StaticPlan {
    pub fn basic_count(&self) -> usize {
        self.basic.len()
    }

    pub fn nonbasic(&self, activities: usize) -> Vec<usize> {
        (0..activities).filter(|j| !self.basic.contains(j)).collect()
    }
}

// min rho subject to: flow x = arrivals, capacity x <= rho * ones, x >= 0.
fn static_plan_lp(net: &NetworkData) -> LinearProgram {
    let n = net.activities();
    let mut objective = RVector::zeros(n + 1);
    objective[n] = Rational::one();
    let eq = net.flow.hstack(&RMatrix::zeros(net.materials(), 1));
    let ineq = net
        .capacity
        .hstack(&RMatrix::from_fn(net.servers(), 1, |_, _| Rational::from_int(-1)));
    let mut bounds = vec![VarBound::NonNegative; n + 1];
    bounds[n] = VarBound::Free;
    LinearProgram::new(
        Sense::Minimize,
        objective,
        eq,
        net.arrivals.clone(),
        ineq,
        RVector::zeros(net.servers()),
        bounds,
    )
}

/// Solves the static planning problem exactly.
pub fn solve_static_plan(net: &NetworkData) -> Result<StaticPlan, WorkloadError> {
    match solve_lp(&static_plan_lp(net)) {
        LPSolution::Optimal(sol) => {
            let n = net.activities();
            let rates: RVector = (0..n).map(|j| sol.primal[j].clone()).collect();
            let basic = (0..n).filter(|&j| rates[j].is_positive()).collect();
            Ok(StaticPlan {
                utilization: sol.objective,
                rates,
                basic,
            })
        }
        LPSolution::Infeasible => Err(WorkloadError::Infeasible),
        // Capacity rows force the utilization below by zero.
        LPSolution::Unbounded => unreachable!("utilization is bounded below"),
    }
}

/// Heavy-traffic verdict: utilization exactly one, every server saturated,
/// and a unique optimal plan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeavyTrafficReport {
    pub rho_is_one: bool,
    pub full_utilization: bool,
    pub primal_unique: bool,
    pub satisfied: bool,
    pub diagnostics: Vec<String>,
}

/// Checks the three heavy-traffic conditions, with exact ranging over the
/// optimal face for uniqueness. Diagnostics name each failure concretely.
pub fn verify_assumption1(net: &NetworkData, plan: &StaticPlan) -> HeavyTrafficReport {
    let mut diagnostics = Vec::new();
    let one = Rational::one();

    let rho_is_one = plan.utilization == one;
    if !rho_is_one {
        diagnostics.push(format!("utilization is {}, not 1", plan.utilization));
    }

    let loads = net.capacity.mul_vec(&plan.rates);
    let mut full_utilization = true;
    for k in 0..net.servers() {
        if loads[k] != plan.utilization {
            full_utilization = false;
            diagnostics.push(format!(
                "server {} runs at {}, below the peak {}",
                k + 1,
                loads[k],
                plan.utilization
            ));
        }
    }

    let lp = static_plan_lp(net);
    let mut primal_unique = true;
    for var in 0..net.activities() + 1 {
        match optimal_variable_range(&lp, var) {
            Ok((lo, hi)) => {
                if lo != hi {
                    primal_unique = false;
                    let name = if var < net.activities() {
                        format!("activity rate {}", var + 1)
                    } else {
                        "utilization".to_string()
                    };
                    diagnostics.push(format!(
                        "optimal plan not unique: {name} ranges over [{lo}, {hi}]"
                    ));
                }
            }
            Err(SimplexError::UnboundedRange { var }) => {
                primal_unique = false;
                diagnostics.push(format!(
                    "optimal plan not unique: variable {} unbounded over the optimal face",
                    var + 1
                ));
            }
            Err(SimplexError::NotOptimal) => unreachable!("plan came from this program"),
        }
    }

    let satisfied = rho_is_one && full_utilization && primal_unique;
    HeavyTrafficReport {
        rho_is_one,
        full_utilization,
        primal_unique,
        satisfied,
        diagnostics,
    }
}

/// One extreme point of the dual polyhedron: workload weights per material,
/// capacity weights per server, and whether it attains the optimal
/// utilization on the given arrivals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualVertex {
    pub material_weights: RVector,
    pub server_weights: RVector,
    pub binding: bool,
}

/// All extreme points of the dual polyhedron, in lexicographic order over
/// the concatenated (material, server) weights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutConstraints {
    pub vertices: Vec<DualVertex>,
    pub binding_count: usize,
    pub bounded: bool,
    pub recession_witness: Option<RVector>,
}

impl CutConstraints {
    pub fn count(&self) -> usize {
        self.vertices.len()
    }

    pub fn binding(&self) -> impl Iterator<Item = &DualVertex> {
        self.vertices.iter().filter(|v| v.binding)
    }
}

// Dual polyhedron: per-activity rows mu . R_j <= pi . A_j, server weights
// nonnegative and summing to one.
fn dual_polyhedron(net: &NetworkData) -> Polyhedron {
    let (m, r, n) = (net.materials(), net.servers(), net.activities());
    let dim = m + r;
    let eq = RMatrix::from_fn(1, dim, |_, j| {
        if j < m {
            Rational::zero()
        } else {
            Rational::one()
        }
    });
    let mut ineq_rows = Vec::with_capacity(n + r);
    for j in 0..n {
        let mut row = Vec::with_capacity(dim);
        for i in 0..m {
            row.push(net.flow[(i, j)].clone());
        }
        for k in 0..r {
            row.push(-&net.capacity[(k, j)]);
        }
        ineq_rows.push(row);
    }
    for k in 0..r {
        let mut row = vec![Rational::zero(); dim];
        row[m + k] = Rational::from_int(-1);
        ineq_rows.push(row);
    }
    Polyhedron::new(
        dim,
        eq,
        RVector::from_ints(&[1]),
        RMatrix::from_rows(ineq_rows),
        RVector::zeros(n + r),
    )
}

/// Enumerates the dual vertices and marks the binding ones (those attaining
/// the plan's utilization on the arrival rates).
pub fn enumerate_cut_constraints(
    net: &NetworkData,
    plan: &StaticPlan,
    budget: u64,
) -> Result<CutConstraints, WorkloadError> {
    let poly = dual_polyhedron(net);
    let VertexSet {
        vertices,
        bounded,
        recession_witness,
    } = enumerate_vertices(&poly, budget)?;
    let m = net.materials();
    let split: Vec<DualVertex> = vertices
        .into_iter()
        .map(|v| {
            let material_weights: RVector = (0..m).map(|i| v[i].clone()).collect();
            let server_weights: RVector = (m..v.len()).map(|i| v[i].clone()).collect();
            let binding = material_weights.dot(&net.arrivals) == plan.utilization;
            DualVertex {
                material_weights,
                server_weights,
                binding,
            }
        })
        .collect();
    let binding_count = split.iter().filter(|v| v.binding).count();
    Ok(CutConstraints {
        vertices: split,
        binding_count,
        bounded,
        recession_witness,
    })
}

/// Canonical workload representation. Matrix roles:
///
/// * `workload` (`d x m`): maximal independent family of binding material
///   weights, selected greedily in lexicographic vertex order;
/// * `pooling` (`d x r`): the matching server weights;
/// * `augmented_capacity` (`p x n`, `p = servers + nonbasic`): capacity rows
///   stacked over negated selectors of the nonbasic activities;
/// * `control_cost` (`d x p`): pooling columns followed by the nonbasic
///   columns `pooling . N - workload . J` (always nonnegative);
/// * `basic_flow`/`nonbasic_flow` and `basic_capacity`/`nonbasic_capacity`:
///   the flow and capacity matrices split by basic activities, original
///   column order preserved;
/// * `basic_flow_right_inverse`: present iff `basic_flow` has full row rank,
///   in which case `workload = pooling . basic_capacity . inverse` exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorkloadRepresentation {
    pub workload: RMatrix,
    pub pooling: RMatrix,
    pub augmented_capacity: RMatrix,
    pub control_cost: RMatrix,
    pub nonbasic_cost: RMatrix,
    pub basic_flow: RMatrix,
    pub nonbasic_flow: RMatrix,
    pub basic_capacity: RMatrix,
    pub nonbasic_capacity: RMatrix,
    pub basic_flow_right_inverse: Option<RMatrix>,
    pub basic: Vec<usize>,
    pub nonbasic: Vec<usize>,
    /// Indices into `vertices` of the rows selected for `workload`.
    pub selected: Vec<usize>,
    pub vertices: Vec<DualVertex>,
    pub bounded_dual: bool,
}

impl WorkloadRepresentation {
    /// Workload dimension `d`.
    pub fn dim(&self) -> usize {
        self.workload.rows()
    }

    pub fn basic_count(&self) -> usize {
        self.basic.len()
    }

    /// Rows of `augmented_capacity` (servers plus nonbasic activities).
    pub fn augmented_rows(&self) -> usize {
        self.augmented_capacity.rows()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn binding_count(&self) -> usize {
        self.vertices.iter().filter(|v| v.binding).count()
    }

    pub fn binding_vertices(&self) -> impl Iterator<Item = &DualVertex> {
        self.vertices.iter().filter(|v| v.binding)
    }

    pub fn assumption3_holds(&self) -> bool {
        self.basic_flow_right_inverse.is_some()
    }
}

/// Augmented capacity matrix for a basic/nonbasic split: capacity rows, then
/// one negated selector row per nonbasic activity (ascending).
pub fn augmented_capacity_matrix(net: &NetworkData, basic: &[usize]) -> RMatrix {
    let n = net.activities();
    let nonbasic: Vec<usize> = (0..n).filter(|j| !basic.contains(j)).collect();
    let mut rows = Vec::with_capacity(net.servers() + nonbasic.len());
    for k in 0..net.servers() {
        rows.push(net.capacity.row_slice(k).to_vec());
    }
    for &j in &nonbasic {
        let mut row = vec![Rational::zero(); n];
        row[j] = Rational::from_int(-1);
        rows.push(row);
    }
    RMatrix::from_rows(rows)
}

/// Builds the canonical representation. Errors when the heavy-traffic check
/// fails or no dual vertex is binding; structural identity violations are
/// internal errors.
pub fn build_workload_representation(
    net: &NetworkData,
    plan: &StaticPlan,
    cuts: &CutConstraints,
) -> Result<WorkloadRepresentation, WorkloadError> {
    let report = verify_assumption1(net, plan);
    if !report.satisfied {
        return Err(WorkloadError::AssumptionNotSatisfied(
            report.diagnostics.join("; "),
        ));
    }
    if cuts.binding_count == 0 {
        return Err(WorkloadError::AssumptionNotSatisfied(
            "dual polyhedron has no binding vertex".into(),
        ));
    }

    // Greedy rank-increasing selection over binding vertices in canonical
    // order.
    let m = net.materials();
    let mut selected = Vec::new();
    let mut stacked = RMatrix::zeros(0, m);
    for (idx, vertex) in cuts.vertices.iter().enumerate() {
        if !vertex.binding {
            continue;
        }
        let candidate = stacked.vstack(&RMatrix::from_rows(vec![vertex
            .material_weights
            .as_slice()
            .to_vec()]));
        if rank(&candidate) > stacked.rows() {
            stacked = candidate;
            selected.push(idx);
        }
    }
    let d = selected.len();
    let workload = RMatrix::from_rows(
        selected
            .iter()
            .map(|&i| cuts.vertices[i].material_weights.as_slice().to_vec())
            .collect(),
    );
    let pooling = RMatrix::from_rows(
        selected
            .iter()
            .map(|&i| cuts.vertices[i].server_weights.as_slice().to_vec())
            .collect(),
    );

    let basic = plan.basic.clone();
    let nonbasic = plan.nonbasic(net.activities());
    let basic_flow = net.flow.select_cols(&basic);
    let nonbasic_flow = net.flow.select_cols(&nonbasic);
    let basic_capacity = net.capacity.select_cols(&basic);
    let nonbasic_capacity = net.capacity.select_cols(&nonbasic);
    let augmented_capacity = augmented_capacity_matrix(net, &basic);

    let nonbasic_cost = pooling
        .matmul(&nonbasic_capacity)
        .sub(&workload.matmul(&nonbasic_flow));
    if !nonbasic_cost.is_nonnegative() {
        return Err(WorkloadError::IdentityViolation(
            "nonbasic control cost has a negative entry".into(),
        ));
    }
    let control_cost = pooling.hstack(&nonbasic_cost);

    if workload.matmul(&basic_flow) != pooling.matmul(&basic_capacity) {
        return Err(WorkloadError::IdentityViolation(
            "workload . basic_flow differs from pooling . basic_capacity".into(),
        ));
    }
    if workload.matmul(&net.flow) != control_cost.matmul(&augmented_capacity) {
        return Err(WorkloadError::IdentityViolation(
            "workload . flow differs from control_cost . augmented_capacity".into(),
        ));
    }
    if rank(&workload) != d {
        return Err(WorkloadError::IdentityViolation(
            "selected workload rows are dependent".into(),
        ));
    }

    let basic_flow_right_inverse = right_inverse(&basic_flow).ok();
    if let Some(inv) = &basic_flow_right_inverse {
        if basic_flow.matmul(inv) != RMatrix::identity(m) {
            return Err(WorkloadError::IdentityViolation(
                "right inverse does not invert the basic flow matrix".into(),
            ));
        }
        if pooling.matmul(&basic_capacity).matmul(inv) != workload {
            return Err(WorkloadError::IdentityViolation(
                "factored workload differs from the selected rows".into(),
            ));
        }
    }

    Ok(WorkloadRepresentation {
        workload,
        pooling,
        augmented_capacity,
        control_cost,
        nonbasic_cost,
        basic_flow,
        nonbasic_flow,
        basic_capacity,
        nonbasic_capacity,
        basic_flow_right_inverse,
        basic,
        nonbasic,
        selected,
        vertices: cuts.vertices.clone(),
        bounded_dual: cuts.bounded,
    })
}

/// Factors the workload matrix through the basic flow: `pooling .
/// basic_capacity . right_inverse`. The result never depends on which right
/// inverse is used and equals `workload` exactly.
pub fn factor_workload(rep: &WorkloadRepresentation) -> Result<RMatrix, WorkloadError> {
    let Some(inv) = &rep.basic_flow_right_inverse else {
        return Err(WorkloadError::AssumptionNotSatisfied(format!(
            "basic flow matrix has rank {}, below the {} materials",
            rank(&rep.basic_flow),
            rep.basic_flow.rows()
        )));
    };
    Ok(rep.pooling.matmul(&rep.basic_capacity).matmul(inv))
}

/// Checks that the workload rows are exactly the annihilator of the
/// reachable flow subspace: `workload` kills every direction `flow . y` with
/// `augmented_capacity . y = 0`, and the two ranks split the material count.
pub fn check_basis_property(net: &NetworkData, rep: &WorkloadRepresentation) -> bool {
    let kernel = null_space_basis(&rep.augmented_capacity);
    let image = net.flow.matmul(&kernel);
    rep.workload.matmul(&image).is_zero()
        && rank(&rep.workload) + rank(&image) == net.materials()
}

/// True when every workload weight is nonnegative.
pub fn check_nonnegativity(rep: &WorkloadRepresentation) -> bool {
    rep.workload.is_nonnegative()
}

/// Outcome of the randomized monotonicity refuter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MonotonicityReport {
    /// Rates `x` and strictly smaller arrivals that cannot be met within the
    /// capacity `x` uses.
    CounterexampleFound {
        trial: usize,
        rates: RVector,
        arrivals: RVector,
        reduced_arrivals: RVector,
    },
    NoCounterexample { trials: usize },
}

/// Samples rate vectors and strictly reduced arrival vectors, looking for a
/// case where reducing arrivals forces more capacity. Finding none proves
/// nothing; this is a refuter only.
pub fn check_monotonicity_sampled(net: &NetworkData, trials: usize, seed: u64) -> MonotonicityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, n) = (net.materials(), net.activities());
    for trial in 0..trials {
        let rates: RVector = (0..n)
            .map(|_| Rational::new(rng.random_range(0..=8), rng.random_range(1..=4)))
            .collect();
        let arrivals = net.flow.mul_vec(&rates);
        if (0..m).any(|i| !arrivals[i].is_positive()) {
            continue;
        }
        // Strictly smaller arrivals: scale each entry by a fraction in
        // [0, 1).
        let reduced: RVector = (0..m)
            .map(|i| &arrivals[i] * &Rational::new(rng.random_range(0..16), 16))
            .collect();
        let used = net.capacity.mul_vec(&rates);
        let lp = LinearProgram::new(
            Sense::Minimize,
            RVector::zeros(n),
            net.flow.clone(),
            reduced.clone(),
            net.capacity.clone(),
            used,
            vec![VarBound::NonNegative; n],
        );
        if solve_lp(&lp) == LPSolution::Infeasible {
            return MonotonicityReport::CounterexampleFound {
                trial,
                rates,
                arrivals,
                reduced_arrivals: reduced,
            };
        }
    }
    MonotonicityReport::NoCounterexample { trials }
}

/// Full analysis pipeline: plan, heavy-traffic verdict, cut constraints, and
/// (when the assumptions hold) the workload representation with its
/// factorization.
#[derive(Clone)]
pub struct Analysis {
    pub plan: StaticPlan,
    pub report: HeavyTrafficReport,
    pub cuts: CutConstraints,
    pub representation: Option<WorkloadRepresentation>,
    pub factored: Option<RMatrix>,
}

pub fn analyze(net: &NetworkData, budget: u64) -> Result<Analysis, WorkloadError> {
    let plan = solve_static_plan(net)?;
    let report = verify_assumption1(net, &plan);
    let cuts = enumerate_cut_constraints(net, &plan, budget)?;
    let representation = if report.satisfied {
        Some(build_workload_representation(net, &plan, &cuts)?)
    } else {
        None
    };
    let factored = representation
        .as_ref()
        .and_then(|rep| factor_workload(rep).ok());
    Ok(Analysis {
        plan,
        report,
        cuts,
        representation,
        factored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    // Two materials, one server, two activities; the second activity turns
    // material one into material two.
    fn assembly_net() -> NetworkData {
        NetworkData::new(
            RMatrix::from_int_rows(&[&[2, 1], &[2, -1]]),
            RMatrix::from_int_rows(&[&[1, 1]]),
            RVector::from_pairs(&[(3, 2), (1, 2)]),
        )
        .unwrap()
    }

    // Two materials, one server, three activities with substitutes.
    fn substitution_net(arrivals: &[(i64, i64)]) -> NetworkData {
        NetworkData::new(
            RMatrix::from_pair_rows(&[
                &[(1, 1), (4, 3), (0, 1)],
                &[(1, 1), (0, 1), (4, 3)],
            ]),
            RMatrix::from_int_rows(&[&[1, 1, 1]]),
            RVector::from_pairs(arrivals),
        )
        .unwrap()
    }

    // Same flows as the substitution network but two servers.
    fn two_server_net() -> NetworkData {
        NetworkData::new(
            RMatrix::from_pair_rows(&[
                &[(1, 1), (4, 3), (0, 1)],
                &[(1, 1), (0, 1), (4, 3)],
            ]),
            RMatrix::from_int_rows(&[&[1, 1, 0], &[0, 0, 1]]),
            RVector::from_pairs(&[(5, 4), (19, 12)]),
        )
        .unwrap()
    }

    #[test]
    fn validation_rejects_bad_networks() {
        let flow = RMatrix::from_int_rows(&[&[1]]);
        assert!(matches!(
            NetworkData::new(
                flow.clone(),
                RMatrix::from_int_rows(&[&[-1]]),
                RVector::from_ints(&[1])
            ),
            Err(NetworkError::NegativeCapacityEntry { row: 0, col: 0 })
        ));
        assert!(matches!(
            NetworkData::new(
                flow.clone(),
                RMatrix::from_int_rows(&[&[1]]),
                RVector::from_ints(&[-1])
            ),
            Err(NetworkError::NegativeArrival { index: 0 })
        ));
        assert!(matches!(
            NetworkData::new(
                flow,
                RMatrix::from_int_rows(&[&[1]]),
                RVector::from_ints(&[0])
            ),
            Err(NetworkError::NoArrivals)
        ));
    }

    #[test]
    fn assembly_plan_is_balanced() {
        let net = assembly_net();
        let plan = solve_static_plan(&net).unwrap();
        assert_eq!(plan.utilization, r(1, 1));
        assert_eq!(plan.rates, RVector::from_pairs(&[(1, 2), (1, 2)]));
        assert_eq!(plan.basic, vec![0, 1]);
        let report = verify_assumption1(&net, &plan);
        assert!(report.satisfied, "{:?}", report.diagnostics);
    }

    #[test]
    fn halved_arrivals_fail_heavy_traffic() {
        let net = assembly_net()
            .with_arrivals(RVector::from_pairs(&[(3, 4), (1, 4)]))
            .unwrap();
        let plan = solve_static_plan(&net).unwrap();
        assert_eq!(plan.utilization, r(1, 2));
        let report = verify_assumption1(&net, &plan);
        assert!(!report.rho_is_one);
        assert!(!report.satisfied);
        assert!(report
            .diagnostics
            .iter()
            .any(|d| d.contains("utilization is 1/2")));
    }

    #[test]
    fn duplicated_activity_breaks_uniqueness() {
        let net = NetworkData::new(
            RMatrix::from_int_rows(&[&[2, 1, 1], &[2, -1, -1]]),
            RMatrix::from_int_rows(&[&[1, 1, 1]]),
            RVector::from_pairs(&[(3, 2), (1, 2)]),
        )
        .unwrap();
        let plan = solve_static_plan(&net).unwrap();
        let report = verify_assumption1(&net, &plan);
        assert!(!report.primal_unique);
        assert!(!report.satisfied);
        assert!(report.diagnostics.iter().any(|d| d.contains("not unique")));
    }

    #[test]
    fn assembly_workload_is_mixed_sign() {
        let net = assembly_net();
        let analysis = analyze(&net, 1_000_000).unwrap();
        assert_eq!(analysis.cuts.count(), 1);
        assert_eq!(analysis.cuts.binding_count, 1);
        let rep = analysis.representation.unwrap();
        assert_eq!(rep.dim(), 1);
        assert_eq!(
            rep.workload,
            RMatrix::from_pair_rows(&[&[(3, 4), (-1, 4)]])
        );
        assert_eq!(rep.pooling, RMatrix::from_int_rows(&[&[1]]));
        assert_eq!(rep.augmented_capacity, RMatrix::from_int_rows(&[&[1, 1]]));
        assert_eq!(rep.control_cost, RMatrix::from_int_rows(&[&[1]]));
        assert!(!check_nonnegativity(&rep));
        assert!(check_basis_property(&net, &rep));
        assert_eq!(analysis.factored.unwrap(), rep.workload);
        assert!(!rep.bounded_dual);
    }

    #[test]
    fn substitution_net_with_symmetric_arrivals() {
        let net = substitution_net(&[(1, 1), (1, 1)]);
        let analysis = analyze(&net, 1_000_000).unwrap();
        assert_eq!(analysis.plan.rates, RVector::from_ints(&[1, 0, 0]));
        assert_eq!(analysis.cuts.count(), 2);
        assert_eq!(analysis.cuts.binding_count, 2);
        let rep = analysis.representation.unwrap();
        assert_eq!(rep.dim(), 2);
        assert_eq!(rep.basic_count(), 1);
        assert_eq!(rep.augmented_rows(), 3);
        assert_eq!(
            rep.workload,
            RMatrix::from_pair_rows(&[&[(1, 4), (3, 4)], &[(3, 4), (1, 4)]])
        );
        assert_eq!(
            rep.augmented_capacity,
            RMatrix::from_int_rows(&[&[1, 1, 1], &[0, -1, 0], &[0, 0, -1]])
        );
        // Basic flow is a single column; rank one of two materials.
        assert!(!rep.assumption3_holds());
        assert_eq!(rank(&rep.basic_flow), 1);
        assert!(matches!(
            factor_workload(&rep),
            Err(WorkloadError::AssumptionNotSatisfied(_))
        ));
        assert!(check_basis_property(&net, &rep));
        assert!(check_nonnegativity(&rep));
    }

    #[test]
    fn substitution_net_with_skewed_arrivals() {
        let net = substitution_net(&[(1, 4), (5, 4)]);
        let analysis = analyze(&net, 1_000_000).unwrap();
        assert_eq!(
            analysis.plan.rates,
            RVector::from_pairs(&[(1, 4), (0, 1), (3, 4)])
        );
        assert_eq!(analysis.plan.basic, vec![0, 2]);
        // Same dual polyhedron as the symmetric case, but only one vertex
        // attains the optimum.
        assert_eq!(analysis.cuts.count(), 2);
        assert_eq!(analysis.cuts.binding_count, 1);
        let rep = analysis.representation.unwrap();
        assert_eq!(rep.dim(), 1);
        assert_eq!(rep.workload, RMatrix::from_pair_rows(&[&[(1, 4), (3, 4)]]));
        assert_eq!(
            rep.basic_flow_right_inverse.as_ref().unwrap(),
            &RMatrix::from_pair_rows(&[&[(1, 1), (0, 1)], &[(-3, 4), (3, 4)]])
        );
        assert_eq!(factor_workload(&rep).unwrap(), rep.workload);
        assert_eq!(
            rep.nonbasic_cost,
            RMatrix::from_pair_rows(&[&[(2, 3)]])
        );
        assert_eq!(
            rep.augmented_capacity,
            RMatrix::from_int_rows(&[&[1, 1, 1], &[0, -1, 0]])
        );
    }

    #[test]
    fn two_server_net_factors_through_wide_basic_flow() {
        let net = two_server_net();
        let analysis = analyze(&net, 1_000_000).unwrap();
        assert_eq!(
            analysis.plan.rates,
            RVector::from_pairs(&[(1, 4), (3, 4), (1, 1)])
        );
        assert_eq!(analysis.cuts.binding_count, 1);
        let rep = analysis.representation.unwrap();
        assert_eq!(rep.dim(), 1);
        assert_eq!(
            rep.workload,
            RMatrix::from_pair_rows(&[&[(9, 16), (3, 16)]])
        );
        assert_eq!(rep.pooling, RMatrix::from_pair_rows(&[&[(3, 4), (1, 4)]]));
        // All three activities basic: the augmented matrix is just capacity.
        assert_eq!(rep.basic_count(), 3);
        assert_eq!(rep.augmented_capacity, net.capacity().clone());
        let inv = rep.basic_flow_right_inverse.as_ref().unwrap();
        assert_eq!(rep.basic_flow.matmul(inv), RMatrix::identity(2));
        assert_eq!(factor_workload(&rep).unwrap(), rep.workload);

        // Factoring is invariant to the choice of right inverse: perturb by
        // a kernel column.
        let kernel = null_space_basis(&rep.basic_flow);
        assert!(kernel.cols() > 0);
        let mut other = inv.clone();
        for i in 0..other.rows() {
            let bumped = &other[(i, 0)] + &kernel[(i, 0)];
            other[(i, 0)] = bumped;
        }
        assert_ne!(&other, inv);
        assert_eq!(rep.basic_flow.matmul(&other), RMatrix::identity(2));
        assert_eq!(
            rep.pooling.matmul(&rep.basic_capacity).matmul(&other),
            rep.workload
        );
    }

    #[test]
    fn monotonicity_refuter_finds_assembly_counterexample() {
        let net = assembly_net();
        let report = check_monotonicity_sampled(&net, 1000, 424242);
        let MonotonicityReport::CounterexampleFound {
            rates,
            arrivals,
            reduced_arrivals,
            ..
        } = report
        else {
            panic!("expected a counterexample");
        };
        // Verify the certificate: reduced arrivals strictly below, yet no
        // feasible plan within the used capacity.
        for i in 0..2 {
            assert!(reduced_arrivals[i] < arrivals[i]);
        }
        let lp = LinearProgram::new(
            Sense::Minimize,
            RVector::zeros(2),
            net.flow().clone(),
            reduced_arrivals,
            net.capacity().clone(),
            net.capacity().mul_vec(&rates),
            vec![VarBound::NonNegative; 2],
        );
        assert_eq!(solve_lp(&lp), LPSolution::Infeasible);
    }

    #[test]
    fn monotonicity_holds_for_single_activity() {
        let net = NetworkData::new(
            RMatrix::from_int_rows(&[&[1]]),
            RMatrix::from_int_rows(&[&[1]]),
            RVector::from_ints(&[1]),
        )
        .unwrap();
        assert_eq!(
            check_monotonicity_sampled(&net, 1000, 7),
            MonotonicityReport::NoCounterexample { trials: 1000 }
        );
    }

    #[test]
    fn cut_constraints_scale_with_arrivals() {
        // The dual polyhedron ignores arrivals; only binding flags move.
        let base = substitution_net(&[(1, 1), (1, 1)]);
        let plan = solve_static_plan(&base).unwrap();
        let cuts = enumerate_cut_constraints(&base, &plan, 1_000_000).unwrap();

        let scaled = base
            .with_arrivals(RVector::from_pairs(&[(1, 2), (1, 2)]))
            .unwrap();
        let plan2 = solve_static_plan(&scaled).unwrap();
        assert_eq!(plan2.utilization, r(1, 2));
        let cuts2 = enumerate_cut_constraints(&scaled, &plan2, 1_000_000).unwrap();
        assert_eq!(cuts.count(), cuts2.count());
        for (a, b) in cuts.vertices.iter().zip(cuts2.vertices.iter()) {
            assert_eq!(a.material_weights, b.material_weights);
            assert_eq!(a.server_weights, b.server_weights);
            assert_eq!(a.binding, b.binding);
        }
    }

    #[test]
    fn infeasible_arrivals_are_reported() {
        // Activity consumes material two to make material one; nothing
        // feeds material two.
        let net = NetworkData::new(
            RMatrix::from_int_rows(&[&[-1], &[1]]),
            RMatrix::from_int_rows(&[&[1]]),
            RVector::from_ints(&[1, 0]),
        )
        .unwrap();
        assert_eq!(solve_static_plan(&net), Err(WorkloadError::Infeasible));
    }
}
