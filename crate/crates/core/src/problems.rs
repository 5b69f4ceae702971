//! Built-in problem instances.

use crate::func::{SourceFn, UnaryFn};
use crate::geometry::ProblemGeometry;
use crate::hypothesis::AnalyticDelta;
use crate::operator::{BFunctional, ProblemSpec};

pub const NAMES: [&str; 4] = [
    "exponential_reflection",
    "lightbulb_reflection",
    "delay",
    "linear_oracle",
];

/// A problem together with a closed-form lower bound for `f` on the
/// region visited by the cone sphere, when one is known.
#[derive(Debug, Clone)]
pub struct Builtin {
    pub spec: ProblemSpec,
    pub delta: Option<AnalyticDelta>,
}

pub fn builtin(name: &str) -> Option<Builtin> {
    match name {
        "exponential_reflection" => Some(Builtin {
            spec: exponential_reflection(),
            // ‖ψ‖ = 1, so |u|, |v| ≤ 1 + ρ and t e^{u+2v} ≥ t e^{−3(1+ρ)}
            delta: Some(AnalyticDelta::new("t*exp(-3*(1+rho))", |rho, t| {
                t * (-3.0 * (1.0 + rho)).exp()
            })),
        }),
        "lightbulb_reflection" => Some(Builtin {
            spec: lightbulb_reflection(),
            delta: Some(AnalyticDelta::new("exp(-(1+rho)^2)", |rho, _| {
                (-(1.0 + rho).powi(2)).exp()
            })),
        }),
        "delay" => Some(Builtin {
            spec: delay(),
            delta: Some(AnalyticDelta::new("exp(-(1+rho))", |rho, _| {
                (-(1.0 + rho)).exp()
            })),
        }),
        "linear_oracle" => Some(Builtin {
            spec: linear_oracle(),
            delta: Some(AnalyticDelta::new("1", |_, _| 1.0)),
        }),
        _ => None,
    }
}

fn sqrt_history() -> UnaryFn {
    UnaryFn::new("sqrt(1+t)", |t| (1.0 + t).sqrt())
}

fn reflection() -> UnaryFn {
    UnaryFn::new("-t", |t| -t)
}

/// `f = t e^{u+2v}`, `σ(t) = −t`, `ω = √(1+t)`, `B[u] = ∫_{−1}^{1} t² u² dt`.
pub fn exponential_reflection() -> ProblemSpec {
    ProblemSpec::new(
        "exponential_reflection",
        ProblemGeometry::reflection_example(),
        SourceFn::new("t*exp(u+2*v)", |t, u, v| t * (u + 2.0 * v).exp()),
        reflection(),
        sqrt_history(),
        BFunctional::WeightedSquare(UnaryFn::new("t^2", |t| t * t)),
    )
}

/// Reflected sensor with a zero functional: `β u'(1) + u(η) = 0`.
pub fn lightbulb_reflection() -> ProblemSpec {
    ProblemSpec::new(
        "lightbulb_reflection",
        ProblemGeometry::reflection_example(),
        SourceFn::new("exp(-u^2)*(1+v^2)", |_, u, v| {
            (-u * u).exp() * (1.0 + v * v)
        }),
        reflection(),
        sqrt_history(),
        BFunctional::Zero,
    )
}

/// Constant delay `σ(t) = t − 1/4` with a linear history.
pub fn delay() -> ProblemSpec {
    ProblemSpec::new(
        "delay",
        ProblemGeometry::reflection_example(),
        SourceFn::new("exp(-abs(u))+v^2", |_, u, v| (-u.abs()).exp() + v * v),
        UnaryFn::new("t-0.25", |t| t - 0.25),
        UnaryFn::new("1+t", |t| 1.0 + t),
        BFunctional::Zero,
    )
}

/// `f ≡ 1`, `ω ≡ 0`, `B ≡ 0`: the image of every function is the same
/// quadratic, so `λ = ρ/‖q‖` with `q(t) = 9t/16 − t²/2`.
pub fn linear_oracle() -> ProblemSpec {
    ProblemSpec::new(
        "linear_oracle",
        ProblemGeometry::reflection_example(),
        SourceFn::constant(1.0),
        UnaryFn::new("t", |t| t),
        UnaryFn::constant(0.0),
        BFunctional::Zero,
    )
}
