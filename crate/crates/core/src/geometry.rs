//! Closed-form data of the thermostat problem: Green's function, its envelope,
//! the cone constants and the functions `γ`, `φ̂`, `ψ`.
//!
//! For `β > 0`, `η ∈ (0,1)` with `β + η < 1`, the Green's function of
//! `u'' + y = 0`, `u(0) = 0`, `β u'(1) + u(η) = 0` is
//!
//! ```text
//! k̂(t,s) = β t/(β+η) + t (η−s) H(η−s)/(β+η) − (t−s) H(t−s)
//! ```
//!
//! and `k(t,s) = k̂(t,s) H(t)` extends it by zero to the history interval.

use crate::error::{Error, Result};
use crate::func::UnaryFn;

/// Unit step with `H(0) = 1`.
pub fn heaviside(tau: f64) -> f64 {
    if tau >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Constants `β`, `η`, `r` and the sensor subinterval `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemGeometry {
    beta: f64,
    eta: f64,
    r: f64,
    a: f64,
    b: f64,
}

/// `c₁` from the kernel bounds, `c₂` from the `γ` bound, and `c = min(c₁, c₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeConstants {
    pub c1: f64,
    pub c2: f64,
    pub c: f64,
}

impl ProblemGeometry {
    pub fn new(beta: f64, eta: f64, r: f64, a: f64, b: f64) -> Result<Self> {
        let all_finite = [beta, eta, r, a, b].iter().all(|x| x.is_finite());
        if !all_finite {
            return Err(Error::Geometry("all constants must be finite".into()));
        }
        if !(beta > 0.0) {
            return Err(Error::Geometry(format!("beta = {beta} must be positive")));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::Geometry(format!("eta = {eta} must lie in (0,1)")));
        }
        if !(beta + eta < 1.0) {
            return Err(Error::Geometry(format!(
                "beta + eta = {} must be < 1",
                beta + eta
            )));
        }
        if !(r > 0.0) {
            return Err(Error::Geometry(format!("r = {r} must be positive")));
        }
        if !(0.0 < a && a < b && b < beta + eta) {
            return Err(Error::Geometry(format!(
                "need 0 < a < b < beta + eta, got a = {a}, b = {b}, beta + eta = {}",
                beta + eta
            )));
        }
        Ok(Self { beta, eta, r, a, b })
    }

    /// `β = η = 1/4`, `r = 1`, `[a, b] = [1/8, 1/4]`: the reflection example.
    pub fn reflection_example() -> Self {
        Self::new(0.25, 0.25, 1.0, 0.125, 0.25).expect("valid geometry")
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// `β + η`.
    pub fn sum(&self) -> f64 {
        self.beta + self.eta
    }

    fn check_t(&self, t: f64) -> Result<()> {
        if (-self.r..=1.0).contains(&t) {
            Ok(())
        } else {
            Err(Error::Domain {
                what: "t",
                value: t,
                lo: -self.r,
                hi: 1.0,
            })
        }
    }

    fn check_s(s: f64) -> Result<()> {
        if (0.0..=1.0).contains(&s) {
            Ok(())
        } else {
            Err(Error::Domain {
                what: "s",
                value: s,
                lo: 0.0,
                hi: 1.0,
            })
        }
    }

    /// `k(t, s)` on `[−r,1] × [0,1]`.
    pub fn kernel(&self, t: f64, s: f64) -> Result<f64> {
        self.check_t(t)?;
        Self::check_s(s)?;
        Ok(self.kernel_unchecked(t, s))
    }

    pub(crate) fn kernel_unchecked(&self, t: f64, s: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let sum = self.sum();
        self.beta * t / sum + t * (self.eta - s) * heaviside(self.eta - s) / sum
            - (t - s) * heaviside(t - s)
    }

    /// Envelope `Φ(s)` with `|k(t,s)| ≤ Φ(s)` on `[0,1]²`.
    pub fn phi(&self, s: f64) -> Result<f64> {
        Self::check_s(s)?;
        Ok(self.phi_unchecked(s))
    }

    pub(crate) fn phi_unchecked(&self, s: f64) -> f64 {
        let sum = self.sum();
        if sum >= 0.5 {
            s
        } else {
            (1.0 - sum) / sum * s
        }
    }

    pub fn cone_constants(&self) -> Result<ConeConstants> {
        let sum = self.sum();
        let denom = if sum >= 0.5 { sum } else { 1.0 - sum };
        let c1 = (self.a * self.beta / denom).min((sum - self.b) / denom);
        if !(c1 > 0.0 && c1 <= 1.0) {
            return Err(Error::Geometry(format!("c1 = {c1} outside (0,1]")));
        }
        let c2 = self.a;
        Ok(ConeConstants {
            c1,
            c2,
            c: c1.min(c2),
        })
    }

    /// `γ(t) = t/(β+η)` for `t ≥ 0` and zero on the history interval.
    pub fn gamma(&self, t: f64) -> Result<f64> {
        self.check_t(t)?;
        Ok(self.gamma_unchecked(t))
    }

    pub(crate) fn gamma_unchecked(&self, t: f64) -> f64 {
        t / self.sum() * heaviside(t)
    }

    /// `‖γ‖_[0,1] = 1/(β+η)`.
    pub fn gamma_norm(&self) -> f64 {
        1.0 / self.sum()
    }

    /// `φ̂(t) = (β+η−t)/(β+η)`, which solves `u'' = 0`, `u(0) = 1`, `β u'(1) + u(η) = 0`.
    pub fn phi_hat(&self, t: f64) -> f64 {
        (self.sum() - t) / self.sum()
    }

    /// `ψ(t)`: the history datum `ω` on `[−r,0]`, continued by `φ̂(t) ω(0)`.
    pub fn psi(&self, omega: &UnaryFn, t: f64) -> Result<f64> {
        self.check_t(t)?;
        if t <= 0.0 {
            omega.eval(t)
        } else {
            Ok(self.phi_hat(t) * omega.eval(0.0)?)
        }
    }
}
