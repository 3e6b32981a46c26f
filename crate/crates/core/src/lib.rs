//! Balanced augmented Lagrangian methods for linearly constrained convex
//! programs `min θ(x) s.t. Ax = b (or Ax ≥ b), x ∈ X`.
//!
//! The x-subproblem of every balanced method is a plain proximal step of θ;
//! the coupling through `A` moves into a fixed SPD multiplier system that is
//! factored once per run. Baselines (classic ALM, linearized ALM, the
//! primal-dual method, ADMM and linearized ADMM) share the same problem
//! model and driver, and [`diagnostics`] turns run histories into checkable
//! contraction and ergodic-gap certificates.

pub mod bench;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod multiplier;
pub mod par;
pub mod problem;
pub mod prox;
pub mod solvers;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;
pub use problem::{Instance, KktResidual, Model, PrimalDualPoint, Problem, Sense, SeparableProblem};
pub use prox::{ObjectiveSpec, SetSpec};
