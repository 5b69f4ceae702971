//! Run configuration: a TOML file with `[geometry]`, `[problem]`, `[numerics]`,
//! `[run]` and `[output]` sections.

use std::path::PathBuf;

use serde::Deserialize;
use thermostat_core::expr::Expr;
use thermostat_core::hypothesis::{AnalyticDelta, HypothesisOptions};
use thermostat_core::solver::SolveOptions;
use thermostat_core::{
    problems, BFunctional, Interpolation, ProblemGeometry, ProblemSpec, Quadrature, QuadratureKind,
    SourceFn, UnaryFn,
};

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: Option<GeometrySection>,
    #[serde(default)]
    pub problem: ProblemSection,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub beta: f64,
    pub eta: f64,
    pub r: f64,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub builtin: Option<String>,
    pub name: Option<String>,
    /// Expression in `t`, `u`, `v`.
    pub f: Option<String>,
    pub sigma: Option<String>,
    pub g: Option<String>,
    pub omega: Option<String>,
    /// One of `zero`, `weighted_square`, `weighted_linear`, `constant`.
    pub b_kind: Option<String>,
    pub b_weight: Option<String>,
    pub b_value: Option<f64>,
    /// Lower bound for `f` as an expression in `t` and `rho`.
    pub delta: Option<String>,
    pub eta_rho: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsSection {
    pub n: usize,
    pub n_hist: usize,
    /// `simpson` or `gauss_legendre`.
    pub quadrature: String,
    pub subdivisions: usize,
    pub quadrature_order: usize,
    /// `cubic` or `linear`.
    pub interpolation: String,
    pub max_iterations: usize,
    pub damping: f64,
    pub tolerance: f64,
    pub kernel_samples: usize,
    pub n_box: usize,
    pub seed: u64,
    pub kernel_grid: usize,
}

impl Default for NumericsSection {
    fn default() -> Self {
        let s = SolveOptions::default();
        let h = HypothesisOptions::default();
        Self {
            n: s.n,
            n_hist: s.n_hist,
            quadrature: "simpson".into(),
            subdivisions: s.subdivisions,
            quadrature_order: 4,
            interpolation: "cubic".into(),
            max_iterations: s.max_iterations,
            damping: s.damping,
            tolerance: s.tolerance,
            kernel_samples: h.kernel_samples,
            n_box: h.n_box,
            seed: h.seed,
            kernel_grid: 64,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub rho: Option<f64>,
    pub rhos: Option<Vec<f64>>,
    #[serde(default)]
    pub parallel: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub plot: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            plot: true,
        }
    }
}

/// Everything a command needs, validated.
pub struct Setup {
    pub spec: ProblemSpec,
    pub hypothesis: HypothesisOptions,
    pub solve: SolveOptions,
    pub kernel_grid: usize,
    pub rho: Option<f64>,
    pub rhos: Option<Vec<f64>>,
    pub parallel: bool,
    pub out_dir: PathBuf,
    pub plot: bool,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn parse_expr(key: &str, src: &str, vars: &[&str]) -> Result<Expr, CliError> {
    Expr::parse(src, vars).map_err(|e| config_err(format!("{key} = \"{src}\": {e}")))
}

fn unary(key: &str, src: &str) -> Result<UnaryFn, CliError> {
    UnaryFn::from_expr(parse_expr(key, src, &["t"])?, "t")
        .map_err(|e| config_err(format!("{key}: {e}")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn setup(&self) -> Result<Setup, CliError> {
        let p = &self.problem;
        let builtin = match &p.builtin {
            Some(name) => Some(problems::builtin(name).ok_or_else(|| {
                config_err(format!(
                    "unknown builtin '{name}'; expected one of {:?}",
                    problems::NAMES
                ))
            })?),
            None => None,
        };

        let geometry = match (&self.geometry, &builtin) {
            (Some(g), _) => ProblemGeometry::new(g.beta, g.eta, g.r, g.a, g.b)
                .map_err(|e| config_err(e.to_string()))?,
            (None, Some(b)) => b.spec.geometry,
            (None, None) => {
                return Err(config_err(
                    "[geometry] is required without a builtin problem",
                ))
            }
        };

        let missing = |key: &str| {
            config_err(format!(
                "problem.{key} is required without a builtin problem"
            ))
        };
        let base = builtin.as_ref().map(|b| b.spec.clone());
        let f = match (&p.f, &base) {
            (Some(src), _) => SourceFn::from_expr(parse_expr("f", src, &["t", "u", "v"])?)
                .map_err(|e| config_err(format!("f: {e}")))?,
            (None, Some(s)) => s.f.clone(),
            (None, None) => return Err(missing("f")),
        };
        let pick = |key: &str,
                    value: &Option<String>,
                    fallback: Option<UnaryFn>|
         -> Result<UnaryFn, CliError> {
            match (value, fallback) {
                (Some(src), _) => unary(key, src),
                (None, Some(f)) => Ok(f),
                (None, None) => Err(missing(key)),
            }
        };
        let sigma = pick("sigma", &p.sigma, base.as_ref().map(|s| s.sigma.clone()))?;
        let omega = pick("omega", &p.omega, base.as_ref().map(|s| s.omega.clone()))?;
        let g = pick(
            "g",
            &p.g,
            Some(
                base.as_ref()
                    .map_or(UnaryFn::constant(1.0), |s| s.g.clone()),
            ),
        )?;

        let weight = || -> Result<UnaryFn, CliError> {
            let src = p
                .b_weight
                .as_deref()
                .ok_or_else(|| config_err("problem.b_weight is required for this b_kind"))?;
            unary("b_weight", src)
        };
        let b = match p.b_kind.as_deref() {
            None => base.as_ref().map_or(BFunctional::Zero, |s| s.b.clone()),
            Some("zero") => BFunctional::Zero,
            Some("weighted_square") => BFunctional::WeightedSquare(weight()?),
            Some("weighted_linear") => BFunctional::WeightedLinear(weight()?),
            Some("constant") => {
                let c = p.b_value.ok_or_else(|| {
                    config_err("problem.b_value is required for b_kind = \"constant\"")
                })?;
                BFunctional::constant(c)
            }
            Some(other) => return Err(config_err(format!("unknown b_kind '{other}'"))),
        };

        let name = p
            .name
            .clone()
            .or_else(|| p.builtin.clone())
            .unwrap_or_else(|| "custom".into());
        let spec = ProblemSpec::new(name, geometry, f, sigma, omega, b).with_g(g);

        let customized =
            self.geometry.is_some() || p.f.is_some() || p.sigma.is_some() || p.omega.is_some();
        let analytic_delta = match &p.delta {
            Some(src) => Some(
                AnalyticDelta::from_expr(parse_expr("delta", src, &["rho", "t"])?)
                    .map_err(|e| config_err(format!("delta: {e}")))?,
            ),
            // a builtin bound only holds for the builtin data
            None if !customized => builtin.and_then(|b| b.delta),
            None => None,
        };
        if let Some(eta) = p.eta_rho {
            if eta < 0.0 || eta.is_nan() {
                return Err(config_err(format!("eta_rho = {eta} must be nonnegative")));
            }
        }

        let n = &self.numerics;
        let kind = match n.quadrature.as_str() {
            "simpson" => QuadratureKind::Simpson,
            "gauss_legendre" => QuadratureKind::GaussLegendre(n.quadrature_order),
            other => return Err(config_err(format!("unknown quadrature '{other}'"))),
        };
        let quadrature =
            Quadrature::new(kind, n.subdivisions).map_err(|e| config_err(e.to_string()))?;
        let interpolation = match n.interpolation.as_str() {
            "cubic" => Interpolation::Cubic,
            "linear" => Interpolation::Linear,
            other => return Err(config_err(format!("unknown interpolation '{other}'"))),
        };
        let solve = SolveOptions {
            max_iterations: n.max_iterations,
            damping: n.damping,
            tolerance: n.tolerance,
            n: n.n,
            n_hist: n.n_hist,
            quadrature: kind,
            subdivisions: n.subdivisions,
            interpolation,
            ..SolveOptions::default()
        };
        solve.validate().map_err(|e| config_err(e.to_string()))?;
        thermostat_core::Mesh::new(&geometry, n.n, n.n_hist)
            .map_err(|e| config_err(e.to_string()))?;
        if n.kernel_grid < 1 {
            return Err(config_err("kernel_grid must be positive"));
        }
        let hypothesis = HypothesisOptions {
            kernel_samples: n.kernel_samples,
            n_box: n.n_box,
            seed: n.seed,
            analytic_delta,
            eta_rho: p.eta_rho,
            n: n.n,
            n_hist: n.n_hist,
            quadrature,
        };

        Ok(Setup {
            spec,
            hypothesis,
            solve,
            kernel_grid: n.kernel_grid,
            rho: self.run.rho,
            rhos: self.run.rhos.clone(),
            parallel: self.run.parallel,
            out_dir: self.output.dir.clone(),
            plot: self.output.plot,
        })
    }
}
