//! Numerical apparatus for the heated-bar (thermostat) boundary value problem
//!
//! ```text
//! u''(t) + λ f(t, u(t), u(σ(t))) = 0,   t ∈ [0,1]
//! u(t) = ω(t),                          t ∈ [−r,0]
//! β u'(1) + u(η) = λ B[u]
//! ```
//!
//! The problem is recast as the perturbed Hammerstein equation
//! `u = ψ + λ F u` with `F u(t) = ∫₀¹ k(t,s) g(s) f(s, u(s), u(σ(s))) ds + γ(t) B[u]`.
//! Solutions are sought on the boundary of the ball of radius `ρ` inside the
//! affine cone `ψ + K₀`, where `K₀` collects the functions that vanish on the
//! history interval and satisfy `min_[a,b] u ≥ c ‖u‖_[0,1]`.
//!
//! Module map:
//! - [`geometry`]: closed-form kernel, envelope `Φ`, cone constants, `γ` and `ψ`.
//! - [`grid`]: meshes, grid functions with interpolation, norms and quadrature.
//! - [`operator`]: the operator `F` and the boundary functional `B`.
//! - [`cone`]: membership in `K₀` and distance to `∂K_{ψ,ρ}`.
//! - [`hypothesis`]: numerical checks of the existence hypotheses.
//! - [`solver`]: normalized Picard iteration on the cone sphere and verification.
//! - [`expr`]: the expression language used for user-supplied data.
//! - [`problems`]: built-in problem instances.

// negated float comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cone;
pub mod error;
pub mod expr;
pub mod func;
pub mod geometry;
pub mod grid;
pub mod hypothesis;
pub mod operator;
pub mod problems;
pub mod solver;

pub use error::{Error, Result};
pub use func::{SourceFn, UnaryFn};
pub use geometry::{ConeConstants, ProblemGeometry};
pub use grid::{GridFunction, Interpolation, Mesh, Quadrature, QuadratureKind, QuadratureRule};
pub use operator::{BFunctional, ProblemSpec};
pub use solver::{SolveOptions, SolveResult, VerificationReport};
