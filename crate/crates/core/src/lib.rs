//! Exact-arithmetic toolkit for open processing networks in heavy traffic.
//!
//! The crate is organized bottom-up:
//!
//! * [`ratmath`] — arbitrary-precision rationals, vectors, matrices, and the
//!   exact linear-algebra kernels (rank, solve, null space, right inverse);
//! * [`simplex`] — an exact two-phase primal simplex with Bland's rule,
//!   exact dual multipliers, and optimal-face variable ranging;
//! * [`vertexenum`] — brute-force vertex enumeration for small polyhedra with
//!   a subset budget and recession-cone boundedness detection;
//! * [`workload`] — the static planning problem, its dual polyhedron, and the
//!   canonical workload representation of a processing network;
//! * [`fluid`] — minimum-time-to-empty, reachability, communication, and
//!   piecewise-constant fluid trajectories;
//! * [`netsim`] — a discrete-time stochastic simulator with diffusion and
//!   fluid rescaling (the only module that touches floating point).
//!
//! Everything upstream of `netsim` computes over rationals only; equality
//! assertions in the analysis layers are exact, never toleranced.

pub mod fluid;
pub mod netsim;
pub mod ratmath;
pub mod simplex;
pub mod vertexenum;
pub mod workload;
