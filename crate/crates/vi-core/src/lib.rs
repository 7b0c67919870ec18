//! Solvers for monotone variational inequality and generalized equilibrium
//! problems posed in 2-uniformly convex, uniformly smooth Banach spaces.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] defines the spaces (euclidean and lp for p in (1, 2]),
//!   vectors and dual vectors, the normalized duality map J and its inverse,
//!   and the Lyapunov functional phi that replaces the squared distance in
//!   every convergence argument.
//! * [`sets`] provides closed convex feasible sets, the generalized
//!   projection onto them, and the half-space cuts built from phi
//!   comparisons.
//! * [`problems`] describes problem instances (operator, optional
//!   equilibrium bifunction, optional anchor map, optional known solution),
//!   numeric verification of their standing assumptions, and a registry of
//!   packaged instances.
//! * [`resolvent`] evaluates the equilibrium resolvent, the firmly
//!   nonexpansive single-valued map whose fixed points are exactly the
//!   solutions of the generalized equilibrium problem.
//! * [`algorithms`] contains the two projection-type solvers plus three
//!   classical baselines (Korpelevich, Tseng, Thong) and the shared
//!   schedule, stopping and trace machinery.
//!
//! All solvers are deterministic: random sampling appears only in the
//! verification helpers, which take a caller-seeded generator.

pub mod algorithms;
pub mod geometry;
pub mod problems;
pub mod resolvent;
pub mod sets;

pub use geometry::{DualVector, NormFamily, SpaceSpec, Vector};
pub use problems::{ProblemSpec, RegisteredProblem};
pub use sets::{CutSet, SetSpec};
