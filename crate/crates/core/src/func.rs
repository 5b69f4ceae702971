//! Evaluable scalar functions: closures, parsed expressions, or tabulated samples.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;

type Unary = dyn Fn(f64) -> Result<f64> + Send + Sync;
type Ternary = dyn Fn(f64, f64, f64) -> Result<f64> + Send + Sync;

/// A real function of one variable, cheap to clone and shareable across threads.
#[derive(Clone)]
pub struct UnaryFn {
    label: String,
    f: Arc<Unary>,
}

impl UnaryFn {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            f: Arc::new(move |t| Ok(f(t))),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c}"), move |_| c)
    }

    /// Wraps an expression in the single variable `var`.
    pub fn from_expr(expr: Expr, var: &str) -> Result<Self> {
        check_vars(&expr, &[var])?;
        let expr = Expr::from_node(expr.root().clone(), &[var]);
        Ok(Self {
            label: expr.to_string(),
            f: Arc::new(move |t| expr.eval_positional(&[t])),
        })
    }

    /// Piecewise-linear interpolation of `(t, value)` samples.
    ///
    /// Samples must be strictly increasing in `t`; the caller decides whether
    /// particular nodes (such as `t = 0` for a history datum) must be present.
    pub fn tabulated(label: impl Into<String>, samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Eval(
                "tabulated function needs at least two samples".into(),
            ));
        }
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Eval(
                "tabulated abscissae must be strictly increasing".into(),
            ));
        }
        let (lo, hi) = (samples[0].0, samples[samples.len() - 1].0);
        Ok(Self {
            label: label.into(),
            f: Arc::new(move |t| {
                if !(lo..=hi).contains(&t) {
                    return Err(Error::Domain {
                        what: "t",
                        value: t,
                        lo,
                        hi,
                    });
                }
                let i = samples
                    .partition_point(|p| p.0 <= t)
                    .clamp(1, samples.len() - 1);
                let (t0, y0) = samples[i - 1];
                let (t1, y1) = samples[i];
                Ok(y0 + (y1 - y0) * (t - t0) / (t1 - t0))
            }),
        })
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        (self.f)(t)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for UnaryFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UnaryFn({})", self.label)
    }
}

/// The nonlinearity `f(t, u, v)`, where `v` stands for the deviated value `u(σ(t))`.
#[derive(Clone)]
pub struct SourceFn {
    label: String,
    f: Arc<Ternary>,
}

impl SourceFn {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            f: Arc::new(move |t, u, v| Ok(f(t, u, v))),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c}"), move |_, _, _| c)
    }

    /// Wraps an expression over the variables `t`, `u`, `v`.
    pub fn from_expr(expr: Expr) -> Result<Self> {
        check_vars(&expr, &["t", "u", "v"])?;
        let expr = Expr::from_node(expr.root().clone(), &["t", "u", "v"]);
        Ok(Self {
            label: expr.to_string(),
            f: Arc::new(move |t, u, v| expr.eval_positional(&[t, u, v])),
        })
    }

    pub fn eval(&self, t: f64, u: f64, v: f64) -> Result<f64> {
        (self.f)(t, u, v)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for SourceFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SourceFn({})", self.label)
    }
}

pub(crate) fn check_vars(expr: &Expr, allowed: &[&str]) -> Result<()> {
    match expr
        .variables()
        .into_iter()
        .find(|v| !allowed.contains(&v.as_str()))
    {
        Some(v) => Err(Error::Eval(format!(
            "expression `{expr}` uses `{v}`; allowed variables are {allowed:?}"
        ))),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_interpolates_linearly() {
        let w = UnaryFn::tabulated("w", vec![(-1.0, 0.0), (0.0, 1.0), (1.0, 3.0)]).unwrap();
        assert_eq!(w.eval(0.0).unwrap(), 1.0);
        assert!((w.eval(-0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!((w.eval(0.5).unwrap() - 2.0).abs() < 1e-15);
        assert!(w.eval(1.5).is_err());
    }

    #[test]
    fn tabulated_rejects_unsorted() {
        assert!(UnaryFn::tabulated("w", vec![(0.0, 1.0), (0.0, 2.0)]).is_err());
    }

    #[test]
    fn expression_variables_are_checked() {
        let e = Expr::parse("t + u", &["t", "u"]).unwrap();
        assert!(UnaryFn::from_expr(e, "t").is_err());
        let e = Expr::parse("t*exp(u+2*v)", &["t", "u", "v"]).unwrap();
        let f = SourceFn::from_expr(e).unwrap();
        assert_eq!(f.eval(1.0, 0.0, 0.0).unwrap(), 1.0);
    }
}
