//! Discrete-time stochastic simulator for a processing network, with
//! diffusion and fluid rescaling and verification of the workload identity
//! on simulated paths.
//!
//! Everything in this module is 64-bit floating point; the exact rational
//! core never consumes simulator output except through tolerance-gated
//! comparisons. A simulation advances inventories by Euler steps: each
//! step, a policy picks activity rates, per-flow increments are drawn with
//! means given by the network columns and covariances given by a
//! [`StochasticSpec`], and any step that would drive an inventory negative
//! is truncated by proportionally scaling down the offending activities
//! (logged, never silent). Runs are deterministic given a seed, and
//! replications derive independent streams from (seed, replication index),
//! so parallel estimates match sequential ones bitwise.

// Dense small-matrix arithmetic throughout; indexed loops are the clearest
// form for the Cholesky/covariance kernels, so the range-loop lint is off.
#![allow(clippy::needless_range_loop)]

use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::ratmath::{RVector, Rational};
use crate::workload::{NetworkData, StaticPlan, WorkloadRepresentation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetsimError {
    #[error("invalid stochastic specification: {0}")]
    InvalidSpec(String),
    #[error("invalid simulation configuration: {0}")]
    InvalidConfig(String),
    #[error("policy violation at step {step}: {detail}")]
    PolicyViolation { step: usize, detail: String },
    #[error("nominal plan does not saturate every server: {0}")]
    NotFullyUtilizing(String),
    #[error("trajectory ends at unscaled time {available}, need {requested}")]
    HorizonTooShort { requested: f64, available: f64 },
    #[error("{given} replications given, at least {minimum} required")]
    TooFewReplications { given: usize, minimum: usize },
}

/// Distribution family for per-step flow increments. Each family realizes
/// a prescribed mean and covariance for the increment over a given amount
/// of flow; they differ only in shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IncrementFamily {
    /// Increments equal their mean; covariance must be zero everywhere.
    Deterministic,
    /// Gaussian increments.
    Gaussian,
    /// Mean plus a covariance factor applied to independent +/-1 signs;
    /// bounded support with the same first two moments as the Gaussian.
    SymmetricBinary,
}

/// Covariance structure of the flow processes: one m-by-m symmetric
/// positive-semidefinite matrix for the exogenous inflow and one per
/// activity. Means are always the network columns, so they are exact by
/// construction.
#[derive(Clone, Debug)]
pub struct StochasticSpec {
    family: IncrementFamily,
    covariances: Vec<Vec<Vec<f64>>>,
    // Cholesky-style factors; None marks an identically zero matrix, which
    // draws nothing from the stream.
    factors: Vec<Option<Vec<Vec<f64>>>>,
    materials: usize,
}

impl StochasticSpec {
    /// Validates and factors the covariances. `covariances[0]` belongs to
    /// the exogenous inflow, `covariances[1 + j]` to activity `j`; all must
    /// be `materials`-square, symmetric, and positive semidefinite, and the
    /// deterministic family requires them all zero.
    pub fn new(
        family: IncrementFamily,
        materials: usize,
        covariances: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self, NetsimError> {
        let mut factors = Vec::with_capacity(covariances.len());
        for (which, cov) in covariances.iter().enumerate() {
            let name = if which == 0 {
                "exogenous inflow".to_string()
            } else {
                format!("activity {}", which)
            };
            if cov.len() != materials || cov.iter().any(|row| row.len() != materials) {
                return Err(NetsimError::InvalidSpec(format!(
                    "covariance for {name} is not {materials}x{materials}"
                )));
            }
            let scale = cov
                .iter()
                .flatten()
                .fold(0.0f64, |acc, x| acc.max(x.abs()));
            if cov.iter().flatten().any(|x| !x.is_finite()) {
                return Err(NetsimError::InvalidSpec(format!(
                    "covariance for {name} has a non-finite entry"
                )));
            }
            for a in 0..materials {
                for b in 0..a {
                    if (cov[a][b] - cov[b][a]).abs() > 1e-12 * (1.0 + scale) {
                        return Err(NetsimError::InvalidSpec(format!(
                            "covariance for {name} is not symmetric at ({}, {})",
                            a + 1,
                            b + 1
                        )));
                    }
                }
            }
            if family == IncrementFamily::Deterministic && scale != 0.0 {
                return Err(NetsimError::InvalidSpec(format!(
                    "deterministic family requires zero covariance, but {name} is nonzero"
                )));
            }
            if scale == 0.0 {
                factors.push(None);
            } else {
                let factor = semidefinite_factor(cov).map_err(|detail| {
                    NetsimError::InvalidSpec(format!(
                        "covariance for {name} is not positive semidefinite: {detail}"
                    ))
                })?;
                factors.push(Some(factor));
            }
        }
        Ok(StochasticSpec {
            family,
            covariances,
            factors,
            materials,
        })
    }

    /// All covariances zero: the simulation follows its mean path.
    pub fn zero_variance(materials: usize, activities: usize) -> Self {
        let zero = vec![vec![0.0; materials]; materials];
        StochasticSpec::new(
            IncrementFamily::Deterministic,
            materials,
            vec![zero; activities + 1],
        )
        .expect("zero covariances are valid")
    }

    /// Identity covariance scaled by `exogenous_variance` for the inflow
    /// and by `activity_variance` for every activity.
    pub fn isotropic(
        family: IncrementFamily,
        materials: usize,
        activities: usize,
        exogenous_variance: f64,
        activity_variance: f64,
    ) -> Result<Self, NetsimError> {
        let eye = |v: f64| {
            (0..materials)
                .map(|a| (0..materials).map(|b| if a == b { v } else { 0.0 }).collect())
                .collect::<Vec<Vec<f64>>>()
        };
        let mut covariances = vec![eye(exogenous_variance)];
        covariances.extend(std::iter::repeat_with(|| eye(activity_variance)).take(activities));
        StochasticSpec::new(family, materials, covariances)
    }

    pub fn family(&self) -> IncrementFamily {
        self.family
    }

    pub fn materials(&self) -> usize {
        self.materials
    }

    /// Number of activities covered (the exogenous flow is extra).
    pub fn activities(&self) -> usize {
        self.covariances.len() - 1
    }

    pub fn covariance(&self, flow: usize) -> &Vec<Vec<f64>> {
        &self.covariances[flow]
    }
}

// Cholesky factorization tolerant of semidefiniteness: zero pivots zero out
// their column, and the product is verified against the input.
fn semidefinite_factor(cov: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, String> {
    let m = cov.len();
    let scale = cov
        .iter()
        .flatten()
        .fold(0.0f64, |acc, x| acc.max(x.abs()));
    let tol = 1e-8 * (1.0 + scale);
    let mut factor = vec![vec![0.0; m]; m];
    for k in 0..m {
        let mut pivot = cov[k][k];
        for i in 0..k {
            pivot -= factor[k][i] * factor[k][i];
        }
        if pivot < -tol {
            return Err(format!("pivot {pivot} at row {}", k + 1));
        }
        if pivot > tol {
            factor[k][k] = pivot.sqrt();
            for j in k + 1..m {
                let mut value = cov[j][k];
                for i in 0..k {
                    value -= factor[j][i] * factor[k][i];
                }
                factor[j][k] = value / factor[k][k];
            }
        }
        // pivot within tolerance of zero: the column stays zero.
    }
    for a in 0..m {
        for b in 0..m {
            let mut product = 0.0;
            for i in 0..m {
                product += factor[a][i] * factor[b][i];
            }
            if (product - cov[a][b]).abs() > 16.0 * tol {
                return Err(format!(
                    "residual {} at ({}, {})",
                    product - cov[a][b],
                    a + 1,
                    b + 1
                ));
            }
        }
    }
    Ok(factor)
}

/// Simulation window: `horizon` unscaled time units in steps of `step`
/// (the ratio must be a whole number), a space-time scaling parameter
/// `epsilon` in (0, 1], a seed, and a replication count.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub horizon: f64,
    pub step: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub replications: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), NetsimError> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(NetsimError::InvalidConfig(format!(
                "horizon {} must be positive",
                self.horizon
            )));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(NetsimError::InvalidConfig(format!(
                "step {} must be positive",
                self.step
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(NetsimError::InvalidConfig(format!(
                "epsilon {} must lie in (0, 1]",
                self.epsilon
            )));
        }
        if self.replications == 0 {
            return Err(NetsimError::InvalidConfig(
                "at least one replication is required".into(),
            ));
        }
        let steps = (self.horizon / self.step).round();
        if steps < 1.0 || (steps * self.step - self.horizon).abs() > 1e-9 * self.horizon {
            return Err(NetsimError::InvalidConfig(format!(
                "horizon {} is not a whole number of steps of {}",
                self.horizon, self.step
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.step).round() as usize
    }
}

/// A state-feedback decision rule: current inventories and time in,
/// activity rates out. Outputs must be nonnegative with every server load
/// at most one (checked every step, no tolerance).
pub trait Policy {
    fn rates(&self, inventory: &[f64], time: f64) -> Vec<f64>;
}

/// Runs the nominal plan regardless of state.
pub struct NominalPolicy {
    rates: Vec<f64>,
}

impl NominalPolicy {
    pub fn from_plan(plan: &StaticPlan) -> Self {
        NominalPolicy {
            rates: plan.rates.to_f64_vec(),
        }
    }
}

impl Policy for NominalPolicy {
    fn rates(&self, _inventory: &[f64], _time: f64) -> Vec<f64> {
        self.rates.clone()
    }
}

/// Does nothing; inventories accumulate at the arrival rates.
pub struct IdlePolicy {
    activities: usize,
}

impl IdlePolicy {
    pub fn new(activities: usize) -> Self {
        IdlePolicy { activities }
    }
}

impl Policy for IdlePolicy {
    fn rates(&self, _inventory: &[f64], _time: f64) -> Vec<f64> {
        vec![0.0; self.activities]
    }
}

/// Runs the nominal plan away from the boundary and substitutes near it:
/// an activity is eligible only while every material it consumes is at or
/// above `threshold`; ineligible activities stop, and the capacity they
/// free is handed greedily (ascending activity index) to eligible ones.
pub struct BoundarySubstitution {
    threshold: f64,
    nominal: Vec<f64>,
    consumption: Vec<Vec<f64>>,
    capacity: Vec<Vec<f64>>,
}

impl BoundarySubstitution {
    pub fn new(net: &NetworkData, plan: &StaticPlan, threshold: f64) -> Self {
        BoundarySubstitution {
            threshold,
            nominal: plan.rates.to_f64_vec(),
            consumption: net.flow().to_f64_rows(),
            capacity: net.capacity().to_f64_rows(),
        }
    }
}

impl Policy for BoundarySubstitution {
    fn rates(&self, inventory: &[f64], _time: f64) -> Vec<f64> {
        let (m, r) = (self.consumption.len(), self.capacity.len());
        let n = self.nominal.len();
        let eligible: Vec<bool> = (0..n)
            .map(|j| {
                (0..m).all(|i| self.consumption[i][j] <= 0.0 || inventory[i] >= self.threshold)
            })
            .collect();
        let mut rates: Vec<f64> = (0..n)
            .map(|j| if eligible[j] { self.nominal[j] } else { 0.0 })
            .collect();
        let mut load: Vec<f64> = (0..r)
            .map(|k| (0..n).map(|j| self.capacity[k][j] * rates[j]).sum())
            .collect();
        for j in 0..n {
            if !eligible[j] {
                continue;
            }
            let mut headroom = f64::INFINITY;
            for k in 0..r {
                if self.capacity[k][j] > 0.0 {
                    headroom = headroom.min((1.0 - load[k]) / self.capacity[k][j]);
                }
            }
            if headroom.is_finite() && headroom > 0.0 {
                rates[j] += headroom;
                for k in 0..r {
                    load[k] += self.capacity[k][j] * headroom;
                }
            }
        }
        rates
    }
}

/// One step where activity rates were cut back (or an inventory clamped)
/// to keep inventories nonnegative.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncationEvent {
    pub step: usize,
    /// Common factor applied to the listed activities' increments.
    pub scale: f64,
    /// Activities scaled down, ascending; empty when only an exogenous
    /// shortfall was clamped.
    pub activities: Vec<usize>,
    /// Materials whose inventories forced the intervention, ascending.
    pub materials: Vec<usize>,
}

/// Recorded sample paths, one entry per step boundary (including time 0).
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Inventory of each material.
    pub inventory: Vec<Vec<f64>>,
    /// Cumulative amount of each activity.
    pub activity: Vec<Vec<f64>>,
    /// Centered control: nominal cumulative activity minus actual.
    pub deficits: Vec<Vec<f64>>,
    /// Cumulative slack: unused capacity per server, then cumulative
    /// nonbasic activity; componentwise nondecreasing from zero.
    pub slacks: Vec<Vec<f64>>,
    /// Realized noise: inventory minus its start minus the flow of the
    /// centered control. On an untruncated nominal run this is exactly the
    /// centered flow-process noise.
    pub noise: Vec<Vec<f64>>,
    pub truncations: Vec<TruncationEvent>,
}

struct FlowSampler<'a> {
    spec: &'a StochasticSpec,
    rng: ChaCha8Rng,
    scratch: Vec<f64>,
}

impl<'a> FlowSampler<'a> {
    fn new(spec: &'a StochasticSpec, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        FlowSampler {
            spec,
            rng,
            scratch: vec![0.0; spec.materials],
        }
    }

    /// Noise part of the increment of flow `flow` over `amount` units,
    /// written into `out` (added). Draws nothing for zero covariance.
    fn add_noise(&mut self, flow: usize, amount: f64, out: &mut [f64]) {
        let Some(factor) = &self.spec.factors[flow] else {
            return;
        };
        let m = self.spec.materials;
        for s in self.scratch.iter_mut() {
            *s = match self.spec.family {
                IncrementFamily::Deterministic => unreachable!("zero covariance draws nothing"),
                IncrementFamily::Gaussian => self.rng.sample(StandardNormal),
                IncrementFamily::SymmetricBinary => {
                    if self.rng.random::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                }
            };
        }
        let sqrt_amount = amount.sqrt();
        for i in 0..m {
            let mut v = 0.0;
            for k in 0..m {
                v += factor[i][k] * self.scratch[k];
            }
            out[i] += sqrt_amount * v;
        }
    }
}

/// Simulates the network under `policy` for `cfg.steps()` Euler steps from
/// `start`, drawing flow increments from `spec`. The plan provides the
/// nominal rates that center the deficits; it must saturate every server
/// exactly. Steps that would drive an inventory negative are truncated by
/// a common proportional cut to the offending activities (grown as needed)
/// and logged; an exogenous shortfall that no cut can absorb is clamped at
/// zero and logged with an empty activity list. Deterministic given
/// `cfg.seed`.
pub fn simulate(
    net: &NetworkData,
    plan: &StaticPlan,
    spec: &StochasticSpec,
    policy: &dyn Policy,
    start: &[f64],
    cfg: &SimConfig,
) -> Result<Trajectory, NetsimError> {
    cfg.validate()?;
    let (m, r, n) = (net.materials(), net.servers(), net.activities());
    assert_eq!(start.len(), m, "initial inventory length");
    assert_eq!(plan.rates.len(), n, "plan sized for this network");
    if spec.materials() != m || spec.activities() != n {
        return Err(NetsimError::InvalidSpec(format!(
            "specification covers {} materials and {} activities, network has {m} and {n}",
            spec.materials(),
            spec.activities()
        )));
    }
    let loads = net.capacity().mul_vec(&plan.rates);
    for k in 0..r {
        if loads[k] != Rational::one() {
            return Err(NetsimError::NotFullyUtilizing(format!(
                "server {} runs at {}",
                k + 1,
                loads[k]
            )));
        }
    }
    if start.iter().any(|q| !q.is_finite() || *q < 0.0) {
        return Err(NetsimError::InvalidConfig(
            "initial inventories must be finite and nonnegative".into(),
        ));
    }

    let flow = net.flow().to_f64_rows();
    let capacity = net.capacity().to_f64_rows();
    let lambda = net.arrivals().to_f64_vec();
    let xstar = plan.rates.to_f64_vec();
    let nonbasic = plan.nonbasic(n);
    let h = cfg.step;
    let steps = cfg.steps();
    let mut sampler = FlowSampler::new(spec, cfg.seed, 0);

    let mut q = start.to_vec();
    let mut t_path = vec![0.0; n];
    let mut v_path = vec![0.0; n];
    let mut i_path = vec![0.0; r + nonbasic.len()];

    let mut trajectory = Trajectory {
        times: Vec::with_capacity(steps + 1),
        inventory: Vec::with_capacity(steps + 1),
        activity: Vec::with_capacity(steps + 1),
        deficits: Vec::with_capacity(steps + 1),
        slacks: Vec::with_capacity(steps + 1),
        noise: Vec::with_capacity(steps + 1),
        truncations: Vec::new(),
    };
    trajectory.times.push(0.0);
    trajectory.inventory.push(q.clone());
    trajectory.activity.push(t_path.clone());
    trajectory.deficits.push(v_path.clone());
    trajectory.slacks.push(i_path.clone());

    for step in 0..steps {
        let time = step as f64 * h;
        let alpha = policy.rates(&q, time);
        if alpha.len() != n {
            return Err(NetsimError::PolicyViolation {
                step,
                detail: format!("returned {} rates for {n} activities", alpha.len()),
            });
        }
        for (j, a) in alpha.iter().enumerate() {
            if !a.is_finite() || *a < 0.0 {
                return Err(NetsimError::PolicyViolation {
                    step,
                    detail: format!("rate of activity {} is {a}", j + 1),
                });
            }
        }
        for k in 0..r {
            let load: f64 = (0..n).map(|j| capacity[k][j] * alpha[j]).sum();
            if load > 1.0 {
                return Err(NetsimError::PolicyViolation {
                    step,
                    detail: format!("server {} load {load} exceeds capacity", k + 1),
                });
            }
        }

        // Draw this step's flow increments: exogenous first, then
        // activities in ascending order.
        let mut inflow: Vec<f64> = lambda.iter().map(|l| l * h).collect();
        sampler.add_noise(0, h, &mut inflow);
        let amounts: Vec<f64> = alpha.iter().map(|a| a * h).collect();
        let mut outflow: Vec<Vec<f64>> = Vec::with_capacity(n);
        for j in 0..n {
            let mut df: Vec<f64> = (0..m).map(|i| flow[i][j] * amounts[j]).collect();
            sampler.add_noise(1 + j, amounts[j], &mut df);
            outflow.push(df);
        }

        // Proportional truncation: grow a set of offending activities and
        // scale their increments by a common factor until no inventory is
        // negative, then clamp anything an activity cut cannot fix.
        let mut cut = vec![false; n];
        let mut theta = 1.0f64;
        let mut forced_materials: Vec<usize> = Vec::new();
        let mut clamped: Vec<usize> = Vec::new();
        loop {
            let mut violated = Vec::new();
            for i in 0..m {
                let mut value = q[i] + inflow[i];
                for j in 0..n {
                    value -= if cut[j] { theta * outflow[j][i] } else { outflow[j][i] };
                }
                if value < 0.0 {
                    violated.push(i);
                }
            }
            if violated.is_empty() {
                break;
            }
            let mut grew = false;
            for &i in &violated {
                if !forced_materials.contains(&i) {
                    forced_materials.push(i);
                }
                for j in 0..n {
                    if !cut[j] && outflow[j][i] > 0.0 {
                        cut[j] = true;
                        grew = true;
                    }
                }
            }
            if grew {
                theta = 1.0;
                for i in 0..m {
                    let mut base = q[i] + inflow[i];
                    let mut weight = 0.0;
                    for j in 0..n {
                        if cut[j] {
                            weight += outflow[j][i];
                        } else {
                            base -= outflow[j][i];
                        }
                    }
                    if weight > 0.0 {
                        theta = theta.min((base / weight).max(0.0));
                    }
                }
            } else {
                // Scaling already-cut activities further cannot help the
                // remaining violations (they come from exogenous
                // shortfalls or production cuts); clamp those inventories.
                clamped = violated;
                break;
            }
        }
        let activities_cut: Vec<usize> = (0..n).filter(|&j| cut[j]).collect();
        if !activities_cut.is_empty() || !clamped.is_empty() {
            forced_materials.sort_unstable();
            trajectory.truncations.push(TruncationEvent {
                step,
                scale: if activities_cut.is_empty() { 1.0 } else { theta },
                activities: activities_cut,
                materials: forced_materials,
            });
        }

        // Apply the step.
        for i in 0..m {
            let mut value = q[i] + inflow[i];
            for j in 0..n {
                value -= if cut[j] { theta * outflow[j][i] } else { outflow[j][i] };
            }
            q[i] = value.max(0.0);
        }
        let mut load_after = vec![0.0f64; r];
        for j in 0..n {
            let realized = if cut[j] { theta * amounts[j] } else { amounts[j] };
            t_path[j] += realized;
            v_path[j] += xstar[j] * h - realized;
            for k in 0..r {
                load_after[k] += capacity[k][j] * (realized / h);
            }
        }
        for k in 0..r {
            // Nonnegative by construction whenever the realized load is at
            // most one; the max guards summation dust only.
            i_path[k] += h * (1.0 - load_after[k]).max(0.0);
        }
        for (row, &j) in nonbasic.iter().enumerate() {
            let realized = if cut[j] { theta * amounts[j] } else { amounts[j] };
            i_path[r + row] += realized;
        }

        trajectory.times.push((step + 1) as f64 * h);
        trajectory.inventory.push(q.clone());
        trajectory.activity.push(t_path.clone());
        trajectory.deficits.push(v_path.clone());
        trajectory.slacks.push(i_path.clone());
    }

    // Realized noise by reconstruction: inventory minus start minus the
    // flow applied to the centered control.
    for idx in 0..trajectory.times.len() {
        let v = &trajectory.deficits[idx];
        let noise: Vec<f64> = (0..m)
            .map(|i| {
                let mut drift = 0.0;
                for j in 0..n {
                    drift += flow[i][j] * v[j];
                }
                trajectory.inventory[idx][i] - start[i] - drift
            })
            .collect();
        trajectory.noise.push(noise);
    }
    Ok(trajectory)
}

/// Which space-time rescaling to apply to a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScaleMode {
    /// Space by epsilon, time by 1/epsilon^2.
    Diffusion,
    /// Space by epsilon, time by 1/epsilon.
    Fluid,
}

/// A rescaled view of a trajectory, sampled at requested scaled times and
/// carrying the workload path of the scaled state.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledTrajectory {
    pub mode: ScaleMode,
    pub times: Vec<f64>,
    /// Scaled inventory.
    pub states: Vec<Vec<f64>>,
    /// Scaled centered control.
    pub deficits: Vec<Vec<f64>>,
    /// Scaled cumulative slack.
    pub slacks: Vec<Vec<f64>>,
    /// Workload of the scaled state: workload matrix times state.
    pub workload: Vec<Vec<f64>>,
}

/// Rescales a trajectory at the given scaled times. Each scaled time `t`
/// reads the recorded step at or immediately before `t / epsilon^2`
/// (diffusion) or `t / epsilon` (fluid); asking beyond the recorded
/// horizon is an error.
pub fn scale(
    traj: &Trajectory,
    rep: &WorkloadRepresentation,
    cfg: &SimConfig,
    mode: ScaleMode,
    scaled_times: &[f64],
) -> Result<ScaledTrajectory, NetsimError> {
    let eps = cfg.epsilon;
    let stretch = match mode {
        ScaleMode::Diffusion => eps * eps,
        ScaleMode::Fluid => eps,
    };
    let available = *traj.times.last().expect("trajectory has a start point");
    let workload_matrix = rep.workload.to_f64_rows();
    let mut out = ScaledTrajectory {
        mode,
        times: scaled_times.to_vec(),
        states: Vec::with_capacity(scaled_times.len()),
        deficits: Vec::with_capacity(scaled_times.len()),
        slacks: Vec::with_capacity(scaled_times.len()),
        workload: Vec::with_capacity(scaled_times.len()),
    };
    for &t in scaled_times {
        let unscaled = t / stretch;
        if unscaled > available * (1.0 + 1e-9) + 1e-12 {
            return Err(NetsimError::HorizonTooShort {
                requested: unscaled,
                available,
            });
        }
        let idx = (((unscaled / cfg.step) + 1e-9).floor() as usize).min(traj.times.len() - 1);
        let state: Vec<f64> = traj.inventory[idx].iter().map(|x| eps * x).collect();
        let w: Vec<f64> = workload_matrix
            .iter()
            .map(|row| row.iter().zip(&state).map(|(a, b)| a * b).sum())
            .collect();
        out.deficits
            .push(traj.deficits[idx].iter().map(|x| eps * x).collect());
        out.slacks
            .push(traj.slacks[idx].iter().map(|x| eps * x).collect());
        out.states.push(state);
        out.workload.push(w);
    }
    Ok(out)
}

/// Rescales at every recorded step of the trajectory.
pub fn scale_full(
    traj: &Trajectory,
    rep: &WorkloadRepresentation,
    cfg: &SimConfig,
    mode: ScaleMode,
) -> ScaledTrajectory {
    let stretch = match mode {
        ScaleMode::Diffusion => cfg.epsilon * cfg.epsilon,
        ScaleMode::Fluid => cfg.epsilon,
    };
    let scaled_times: Vec<f64> = traj.times.iter().map(|t| t * stretch).collect();
    scale(traj, rep, cfg, mode, &scaled_times).expect("recorded times are within the horizon")
}

/// Largest absolute residual of the workload identity along a
/// diffusion-scaled path: the noise path is reconstructed as
/// `state - start - flow . deficit`, and the identity states that the
/// workload of the state equals the workload of start plus noise plus the
/// control-cost of the slacks. The identity is algebraic, so the residual
/// measures floating-point accumulation only.
pub fn workload_identity_check(
    net: &NetworkData,
    scaled: &ScaledTrajectory,
    rep: &WorkloadRepresentation,
    start: &[f64],
) -> f64 {
    assert_eq!(
        scaled.mode,
        ScaleMode::Diffusion,
        "the workload identity is stated at diffusion scale"
    );
    let flow = net.flow().to_f64_rows();
    let workload_matrix = rep.workload.to_f64_rows();
    let control_cost = rep.control_cost.to_f64_rows();
    let (m, d) = (net.materials(), rep.dim());
    let mut worst = 0.0f64;
    for idx in 0..scaled.times.len() {
        let z = &scaled.states[idx];
        let y = &scaled.deficits[idx];
        let u = &scaled.slacks[idx];
        let x: Vec<f64> = (0..m)
            .map(|i| {
                let mut moved = 0.0;
                for (j, yj) in y.iter().enumerate() {
                    moved += flow[i][j] * yj;
                }
                z[i] - start[i] - moved
            })
            .collect();
        for l in 0..d {
            let lhs: f64 = (0..m).map(|i| workload_matrix[l][i] * z[i]).sum();
            let base: f64 = (0..m)
                .map(|i| workload_matrix[l][i] * (start[i] + x[i]))
                .sum();
            let cost: f64 = u
                .iter()
                .enumerate()
                .map(|(row, uu)| control_cost[l][row] * uu)
                .sum();
            worst = worst.max((lhs - (base + cost)).abs());
        }
    }
    worst
}

/// Default bound on scaled drift components before they are flagged as no
/// longer moderate.
pub const MODERATE_DRIFT_THRESHOLD: f64 = 10.0;

/// Scaled drift of nearly balanced arrivals.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftOffset {
    /// `(actual - nominal) / epsilon`, componentwise.
    pub offsets: Vec<f64>,
    /// False when some component exceeds the threshold in magnitude.
    pub moderate: bool,
    pub threshold: f64,
}

/// Scaled drift `(actual - nominal) / epsilon` with a moderation flag;
/// `threshold` defaults to [`MODERATE_DRIFT_THRESHOLD`].
pub fn drift_offset(
    actual: &RVector,
    nominal: &RVector,
    epsilon: f64,
    threshold: Option<f64>,
) -> DriftOffset {
    assert!(epsilon > 0.0, "epsilon must be positive");
    assert_eq!(actual.len(), nominal.len(), "arrival vectors must match");
    let threshold = threshold.unwrap_or(MODERATE_DRIFT_THRESHOLD);
    let offsets: Vec<f64> = (0..actual.len())
        .map(|i| (&actual[i] - &nominal[i]).to_f64() / epsilon)
        .collect();
    let moderate = offsets.iter().all(|x| x.abs() <= threshold);
    DriftOffset {
        offsets,
        moderate,
        threshold,
    }
}

/// Covariance of the scaled nominal-inventory noise implied by the
/// specification: the exogenous covariance plus the activity covariances
/// weighted by the nominal rates. Nonbasic activities contribute nothing.
pub fn sigma(net: &NetworkData, plan: &StaticPlan, spec: &StochasticSpec) -> Vec<Vec<f64>> {
    let m = net.materials();
    let xstar = plan.rates.to_f64_vec();
    let mut total = spec.covariance(0).clone();
    for j in 0..net.activities() {
        let cov = spec.covariance(1 + j);
        for a in 0..m {
            for b in 0..m {
                total[a][b] += xstar[j] * cov[a][b];
            }
        }
    }
    total
}

/// Monte Carlo estimate of the noise covariance with entrywise standard
/// errors.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaEstimate {
    pub estimate: Vec<Vec<f64>>,
    pub standard_errors: Vec<Vec<f64>>,
    pub replications: usize,
}

pub const MIN_SIGMA_REPLICATIONS: usize = 30;

// One replication: the nominal-inventory noise path run to unscaled time
// 1/epsilon^2 and scaled by epsilon. The deterministic part of each
// increment vanishes identically (the plan meets arrivals exactly), so
// only noise accumulates; no truncation applies.
#[allow(clippy::too_many_arguments)]
fn noise_endpoint(
    drift: &[f64],
    xstar: &[f64],
    spec: &StochasticSpec,
    seed: u64,
    stream: u64,
    steps: usize,
    h: f64,
    epsilon: f64,
) -> Vec<f64> {
    let m = drift.len();
    let mut sampler = FlowSampler::new(spec, seed, stream);
    let mut xi = vec![0.0f64; m];
    for _ in 0..steps {
        for (i, d) in drift.iter().enumerate() {
            xi[i] += d * h;
        }
        let mut inflow_noise = vec![0.0; m];
        sampler.add_noise(0, h, &mut inflow_noise);
        for i in 0..m {
            xi[i] += inflow_noise[i];
        }
        for (j, &rate) in xstar.iter().enumerate() {
            let mut activity_noise = vec![0.0; m];
            sampler.add_noise(1 + j, rate * h, &mut activity_noise);
            for i in 0..m {
                xi[i] -= activity_noise[i];
            }
        }
    }
    xi.iter().map(|x| epsilon * x).collect()
}

fn sigma_samples_to_estimate(samples: Vec<Vec<f64>>) -> SigmaEstimate {
    let n = samples.len();
    let m = samples[0].len();
    let mut estimate = vec![vec![0.0; m]; m];
    for d in &samples {
        for a in 0..m {
            for b in 0..m {
                estimate[a][b] += d[a] * d[b] / n as f64;
            }
        }
    }
    let mut standard_errors = vec![vec![0.0; m]; m];
    for a in 0..m {
        for b in 0..m {
            let mut ssq = 0.0;
            for d in &samples {
                let p = d[a] * d[b] - estimate[a][b];
                ssq += p * p;
            }
            standard_errors[a][b] = (ssq / (n as f64 * (n as f64 - 1.0))).sqrt();
        }
    }
    SigmaEstimate {
        estimate,
        standard_errors,
        replications: n,
    }
}

fn sigma_run_parameters(
    net: &NetworkData,
    plan: &StaticPlan,
    spec: &StochasticSpec,
    cfg: &SimConfig,
) -> Result<(Vec<f64>, Vec<f64>, usize), NetsimError> {
    cfg.validate()?;
    if cfg.replications < MIN_SIGMA_REPLICATIONS {
        return Err(NetsimError::TooFewReplications {
            given: cfg.replications,
            minimum: MIN_SIGMA_REPLICATIONS,
        });
    }
    if spec.materials() != net.materials() || spec.activities() != net.activities() {
        return Err(NetsimError::InvalidSpec(
            "specification does not match the network dimensions".into(),
        ));
    }
    // Exact residual arrivals - flow . rates; zero for any valid plan, so
    // the drift term contributes nothing even in floating point.
    let drift = net
        .arrivals()
        .sub(&net.flow().mul_vec(&plan.rates))
        .to_f64_vec();
    let total = 1.0 / (cfg.epsilon * cfg.epsilon);
    let steps = (total / cfg.step).round();
    if steps < 1.0 || (steps * cfg.step - total).abs() > 1e-6 * total {
        return Err(NetsimError::InvalidConfig(format!(
            "1/epsilon^2 = {total} is not a whole number of steps of {}",
            cfg.step
        )));
    }
    Ok((drift, plan.rates.to_f64_vec(), steps as usize))
}

/// Estimates the noise covariance by running independent replications of
/// the nominal-inventory noise to unscaled time `1/epsilon^2` and forming
/// the scaled endpoints' sample covariance (known zero mean) with
/// empirical standard errors. Replication `i` uses stream `i` of the
/// seed, so the result is independent of scheduling.
pub fn estimate_sigma(
    net: &NetworkData,
    plan: &StaticPlan,
    spec: &StochasticSpec,
    cfg: &SimConfig,
) -> Result<SigmaEstimate, NetsimError> {
    #[cfg(feature = "parallel")]
    {
        estimate_sigma_par(net, plan, spec, cfg)
    }
    #[cfg(not(feature = "parallel"))]
    {
        estimate_sigma_seq(net, plan, spec, cfg)
    }
}

/// Sequential implementation of [`estimate_sigma`]; same results bitwise.
pub fn estimate_sigma_seq(
    net: &NetworkData,
    plan: &StaticPlan,
    spec: &StochasticSpec,
    cfg: &SimConfig,
) -> Result<SigmaEstimate, NetsimError> {
    let (drift, xstar, steps) = sigma_run_parameters(net, plan, spec, cfg)?;
    let samples: Vec<Vec<f64>> = (0..cfg.replications)
        .map(|i| {
            noise_endpoint(
                &drift,
                &xstar,
                spec,
                cfg.seed,
                i as u64,
                steps,
                cfg.step,
                cfg.epsilon,
            )
        })
        .collect();
    Ok(sigma_samples_to_estimate(samples))
}

#[cfg(feature = "parallel")]
/// Parallel implementation of [`estimate_sigma`]; replications are
/// distributed over threads and collected in index order.
pub fn estimate_sigma_par(
    net: &NetworkData,
    plan: &StaticPlan,
    spec: &StochasticSpec,
    cfg: &SimConfig,
) -> Result<SigmaEstimate, NetsimError> {
    use rayon::prelude::*;
    let (drift, xstar, steps) = sigma_run_parameters(net, plan, spec, cfg)?;
    let samples: Vec<Vec<f64>> = (0..cfg.replications)
        .into_par_iter()
        .map(|i| {
            noise_endpoint(
                &drift,
                &xstar,
                spec,
                cfg.seed,
                i as u64,
                steps,
                cfg.step,
                cfg.epsilon,
            )
        })
        .collect();
    Ok(sigma_samples_to_estimate(samples))
}

/// Renders a trajectory as tab-separated text: a header line naming every
/// column, then one row per recorded step with the time, the inventories,
/// the cumulative slacks, and the workload of the (unscaled) inventory.
pub fn export_tsv(traj: &Trajectory, rep: &WorkloadRepresentation) -> String {
    let workload_matrix = rep.workload.to_f64_rows();
    let m = traj.inventory[0].len();
    let p = traj.slacks[0].len();
    let d = workload_matrix.len();
    let mut out = String::new();
    out.push_str("time");
    for i in 1..=m {
        let _ = write!(out, "\tq{i}");
    }
    for k in 1..=p {
        let _ = write!(out, "\ti{k}");
    }
    for l in 1..=d {
        let _ = write!(out, "\tw{l}");
    }
    out.push('\n');
    for idx in 0..traj.times.len() {
        let _ = write!(out, "{}", traj.times[idx]);
        for v in &traj.inventory[idx] {
            let _ = write!(out, "\t{v}");
        }
        for v in &traj.slacks[idx] {
            let _ = write!(out, "\t{v}");
        }
        for row in &workload_matrix {
            let w: f64 = row
                .iter()
                .zip(&traj.inventory[idx])
                .map(|(a, b)| a * b)
                .sum();
            let _ = write!(out, "\t{w}");
        }
        out.push('\n');
    }
    out
}
