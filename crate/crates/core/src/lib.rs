//! Optimal recovery of linear positive operators from inexact point samples.
//!
//! A function `x` is known only through samples `z_j ≈ x(q_j)` with
//! `|x(q_j) − z_j| ≤ e_j` and through a modulus of continuity `ω` bounding its
//! increments. For a positive operator `A` the best achievable worst-case error
//! in recovering `Ax` is `‖Aτ‖`, attained by applying `A` to the piecewise-constant
//! reconstruction `Lz` on generalized Voronoi cells. This crate builds `τ`, `L`,
//! the operators of several integral and differential problems, and an
//! adversary that checks the optimality claims numerically.

pub mod adversary;
pub mod domains;
pub mod equations;
pub mod error;
pub mod modulus;
pub mod operators;
pub mod quadrature;
pub mod recovery;
pub mod report;

pub use adversary::{envelope, grid_minimax_oracle, sample_feasible, verify_optimality, Envelope, FeasibleFunction, Rival, VerificationReport, VerifyOptions};
pub use domains::{Domain, Point, QuadratureGrid};
pub use error::{Error, Result};
pub use modulus::{validate_modulus, ModulusSpec, ValidationReport};
pub use operators::{ErrorReport, KernelOp, OperatorEntry, OperatorMatrix, OutputNorm, OutputSpace, PointEval, PsiNorm};
pub use recovery::{InfoSpec, RecoveryMethod, Variant};
