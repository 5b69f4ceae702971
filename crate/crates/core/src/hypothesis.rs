//! Numerical checks of the existence hypotheses.
//!
//! Structural conditions on the kernel, the weight `g` and `γ` are sampled
//! directly. For a radius `ρ` the solvability conditions are
//!
//! ```text
//! (a) f(t,u,v) ≥ δ_ρ(t)  on [a,b] whenever max(|u|,|v|) ≤ ρ + ‖ψ‖
//! (b) B[u] ≥ η_ρ          on the cone sphere
//! (c) sup_[a,b] { γ(t) η_ρ + ∫_a^b k(t,s) δ_ρ(s) ds } > 0
//! ```
//!
//! Everything is floating point; nothing here is a certificate.

use std::fmt::{self, Write as _};
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::func::{SourceFn, UnaryFn};
use crate::geometry::ProblemGeometry;
use crate::grid::{Interpolation, Mesh, Quadrature};
use crate::operator::{eval_functional, ProblemSpec};

/// Slack allowed on the sampled kernel inequalities.
pub const KERNEL_TOLERANCE: f64 = 1e-12;
/// Values of the condition (c) supremum at or below this count as zero.
pub const POSITIVITY_GUARD: f64 = 1e-300;
/// Interior points of the `t`-grid on `[a,b]`.
pub const SUP_GRID_POINTS: usize = 1024;

/// The `k`-th element (0-based) of the van der Corput sequence in `base`.
pub fn halton(index: u64, base: u64) -> f64 {
    let mut i = index + 1;
    let mut f = 1.0;
    let mut out = 0.0;
    while i > 0 {
        f /= base as f64;
        out += f * (i % base) as f64;
        i /= base;
    }
    out
}

/// A closed-form `δ_ρ(t)`, given as a function of `(ρ, t)`.
#[derive(Clone)]
pub struct AnalyticDelta {
    label: String,
    f: Arc<dyn Fn(f64, f64) -> Result<f64> + Send + Sync>,
}

impl AnalyticDelta {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::try_new(label, move |rho, t| Ok(f(rho, t)))
    }

    pub fn try_new(
        label: impl Into<String>,
        f: impl Fn(f64, f64) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    /// Wraps an expression over the variables `t` and `rho`.
    pub fn from_expr(expr: crate::expr::Expr) -> Result<Self> {
        crate::func::check_vars(&expr, &["rho", "t"])?;
        let expr = crate::expr::Expr::from_node(expr.root().clone(), &["rho", "t"]);
        Ok(Self::try_new(expr.to_string(), move |rho, t| {
            expr.eval_positional(&[rho, t])
        }))
    }

    pub fn eval(&self, rho: f64, t: f64) -> Result<f64> {
        (self.f)(rho, t)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for AnalyticDelta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AnalyticDelta({})", self.label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelBounds {
    /// `min (Φ(s) − |k(t,s)|)` over `[0,1]²`
    pub envelope_margin: f64,
    /// `min (k(t,s) − c₁ Φ(s))` over `[a,b] × [0,1]`
    pub cone_margin: f64,
    /// `max |k(t,s)|` over `[−r,0] × [0,1]`
    pub history_max: f64,
    pub samples: usize,
}

impl KernelBounds {
    pub fn pass(&self) -> bool {
        self.envelope_margin >= -KERNEL_TOLERANCE
            && self.cone_margin >= -KERNEL_TOLERANCE
            && self.history_max == 0.0
    }
}

/// Samples the kernel inequalities at `n_samples` Halton points per region,
/// starting at offset `seed`, plus the corners and kinks of each region.
pub fn check_kernel_bounds(
    geom: &ProblemGeometry,
    c1: f64,
    n_samples: usize,
    seed: u64,
) -> KernelBounds {
    let (a, b, r) = (geom.a(), geom.b(), geom.r());
    let points = |t_lo: f64, t_hi: f64| -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = (0..n_samples as u64)
            .map(|k| {
                let i = seed + k;
                (t_lo + (t_hi - t_lo) * halton(i, 2), halton(i, 3))
            })
            .collect();
        for t in [t_lo, t_hi, geom.eta().clamp(t_lo, t_hi)] {
            for s in [0.0, geom.eta(), t.clamp(0.0, 1.0), 1.0] {
                pts.push((t, s));
            }
        }
        pts
    };
    let envelope_margin = points(0.0, 1.0)
        .par_iter()
        .map(|&(t, s)| geom.phi_unchecked(s) - geom.kernel_unchecked(t, s).abs())
        .reduce(|| f64::INFINITY, f64::min);
    let cone_margin = points(a, b)
        .par_iter()
        .map(|&(t, s)| geom.kernel_unchecked(t, s) - c1 * geom.phi_unchecked(s))
        .reduce(|| f64::INFINITY, f64::min);
    let history_max = points(-r, 0.0)
        .par_iter()
        .filter(|&&(t, _)| t < 0.0)
        .map(|&(t, s)| geom.kernel_unchecked(t, s).abs())
        .reduce(|| 0.0, f64::max);
    KernelBounds {
        envelope_margin,
        cone_margin,
        history_max,
        samples: n_samples,
    }
}

/// `∫_a^b Φ(s) g(s) ds`.
pub fn check_c4(geom: &ProblemGeometry, g: &UnaryFn, quad: &Quadrature) -> Result<f64> {
    let (a, b) = (geom.a(), geom.b());
    let mut breaks = vec![a, b];
    if a < geom.eta() && geom.eta() < b {
        breaks.insert(1, geom.eta());
    }
    let panels: Vec<f64> = breaks
        .windows(2)
        .flat_map(|w| (0..64).map(move |j| w[0] + (w[1] - w[0]) * j as f64 / 64.0))
        .chain(std::iter::once(b))
        .collect();
    quad.try_integrate(&panels, |s| {
        let gv = g.eval(s)?;
        if gv < 0.0 {
            return Err(Error::NegativeWeight { t: s, value: gv });
        }
        Ok(geom.phi_unchecked(s) * gv)
    })
}

/// A lower bound `δ_ρ` for `f` on `[a,b]`.
#[derive(Debug, Clone)]
pub enum LowerEnvelope {
    Analytic {
        delta: AnalyticDelta,
        rho: f64,
    },
    /// Minimum over a uniform `n_box × n_box` grid of `[−bound, bound]²`.
    Sampled {
        f: SourceFn,
        bound: f64,
        n_box: usize,
    },
}

impl LowerEnvelope {
    pub fn eval(&self, t: f64) -> Result<f64> {
        match self {
            LowerEnvelope::Analytic { delta, rho } => delta.eval(*rho, t),
            LowerEnvelope::Sampled { f, bound, n_box } => {
                let step = 2.0 * bound / (*n_box - 1) as f64;
                let mut min = f64::INFINITY;
                for i in 0..*n_box {
                    let u = -bound + step * i as f64;
                    for j in 0..*n_box {
                        let v = -bound + step * j as f64;
                        let value = f.eval(t, u, v)?;
                        if value < 0.0 {
                            return Err(Error::NegativeSource { t, u, v, value });
                        }
                        min = min.min(value);
                    }
                }
                Ok(min)
            }
        }
    }

    pub fn is_approximate(&self) -> bool {
        matches!(self, LowerEnvelope::Sampled { .. })
    }

    pub fn label(&self) -> String {
        match self {
            LowerEnvelope::Analytic { delta, .. } => format!("analytic {}", delta.label()),
            LowerEnvelope::Sampled { n_box, .. } => {
                format!("approximate (sampled, {n_box}x{n_box} box)")
            }
        }
    }
}

pub fn lower_envelope_delta(
    f: &SourceFn,
    rho: f64,
    psi_norm: f64,
    n_box: usize,
    analytic: Option<&AnalyticDelta>,
) -> Result<LowerEnvelope> {
    let bound = rho + psi_norm;
    if !bound.is_finite() || !(rho > 0.0) {
        return Err(Error::Options(format!(
            "box half-width {bound} must be finite with rho > 0"
        )));
    }
    if let Some(delta) = analytic {
        return Ok(LowerEnvelope::Analytic {
            delta: delta.clone(),
            rho,
        });
    }
    if n_box < 2 {
        return Err(Error::Options("n_box must be at least 2".into()));
    }
    Ok(LowerEnvelope::Sampled {
        f: f.clone(),
        bound,
        n_box,
    })
}

/// The `t`-grid on `[a,b]`: both endpoints and `SUP_GRID_POINTS` interior points.
pub fn sup_grid(geom: &ProblemGeometry) -> Vec<f64> {
    let (a, b) = (geom.a(), geom.b());
    let m = SUP_GRID_POINTS + 1;
    (0..=m)
        .map(|j| {
            if j == m {
                b
            } else {
                a + (b - a) * j as f64 / m as f64
            }
        })
        .collect()
}

/// `sup_t { γ(t) η_ρ + ∫_a^b k(t,s) δ(s) ds }` over [`sup_grid`].
///
/// The `s`-panels are the `t`-grid itself (plus `η`), so every kink of
/// `k(t, ·)` is a panel boundary and `δ` is sampled once.
pub fn eigen_condition_c(
    geom: &ProblemGeometry,
    delta: impl Fn(f64) -> Result<f64> + Sync,
    eta_rho: f64,
) -> Result<f64> {
    let grid = sup_grid(geom);
    let mut panels = grid.clone();
    let eta = geom.eta();
    if geom.a() < eta && eta < geom.b() {
        let pos = panels.partition_point(|&x| x < eta);
        if panels[pos] != eta {
            panels.insert(pos, eta);
        }
    }
    let weighted: Vec<(f64, f64)> = Quadrature::simpson(2)?
        .nodes_weights(&panels)
        .into_par_iter()
        .map(|(s, w)| Ok((s, w * delta(s)?)))
        .collect::<Result<_>>()?;
    Ok(grid
        .par_iter()
        .map(|&t| {
            let integral: f64 = weighted
                .iter()
                .map(|&(s, wd)| wd * geom.kernel_unchecked(t, s))
                .sum();
            geom.gamma_unchecked(t) * eta_rho + integral
        })
        .reduce(|| f64::NEG_INFINITY, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Assumed,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Assumed => "assumed",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionResult {
    pub name: &'static str,
    pub status: Status,
    pub witness: f64,
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct HypothesisOptions {
    pub kernel_samples: usize,
    pub n_box: usize,
    /// Offset into the Halton sequence.
    pub seed: u64,
    pub analytic_delta: Option<AnalyticDelta>,
    /// Lower bound for `B` on the cone sphere; 0 when absent.
    pub eta_rho: Option<f64>,
    pub n: usize,
    pub n_hist: usize,
    pub quadrature: Quadrature,
}

impl Default for HypothesisOptions {
    fn default() -> Self {
        Self {
            kernel_samples: 100_000,
            n_box: 64,
            seed: 0,
            analytic_delta: None,
            eta_rho: None,
            n: 256,
            n_hist: 64,
            quadrature: Quadrature::simpson(2).expect("valid rule"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HypothesisReport {
    pub problem: String,
    pub rho: f64,
    /// `ρ + ‖ψ‖_[−r,1]`
    pub box_bound: f64,
    pub kernel_samples: usize,
    pub n_box: usize,
    pub seed: u64,
    pub conditions: Vec<ConditionResult>,
}

impl HypothesisReport {
    pub fn get(&self, name: &str) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| c.name == name)
    }

    /// No condition failed; assumed conditions are accepted.
    pub fn all_checkable_pass(&self) -> bool {
        self.conditions.iter().all(|c| c.status != Status::Fail)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "problem: {}", self.problem).unwrap();
        writeln!(out, "rho: {}", self.rho).unwrap();
        writeln!(out, "box bound: {}", self.box_bound).unwrap();
        writeln!(
            out,
            "kernel samples: {} (seed {})",
            self.kernel_samples, self.seed
        )
        .unwrap();
        writeln!(out, "envelope grid: {0}x{0}", self.n_box).unwrap();
        for c in &self.conditions {
            writeln!(
                out,
                "{:<4} {:<8} {:>14.6e}  {}",
                c.name,
                c.status.to_string(),
                c.witness,
                c.note
            )
            .unwrap();
        }
        out
    }

    /// One `condition,status,witness` line per condition, after a header.
    pub fn to_kv(&self) -> String {
        let mut out = String::from("condition,status,witness\n");
        for c in &self.conditions {
            writeln!(out, "{},{},{:e}", c.name, c.status, c.witness).unwrap();
        }
        out
    }
}

fn failed(name: &'static str, err: &Error) -> ConditionResult {
    ConditionResult {
        name,
        status: Status::Fail,
        witness: f64::NAN,
        note: err.to_string(),
    }
}

fn spot_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |i| lo + (hi - lo) * i as f64 / n as f64)
}

/// Runs every check for one radius. Failures are recorded, not returned;
/// only invalid options produce an error.
pub fn check_all(
    spec: &ProblemSpec,
    rho: f64,
    options: &HypothesisOptions,
) -> Result<HypothesisReport> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Options(format!("rho = {rho} must be positive")));
    }
    let geom = spec.geometry;
    let constants = geom.cone_constants()?;
    let mesh = Arc::new(Mesh::new(&geom, options.n, options.n_hist)?);
    let mut conditions = Vec::with_capacity(10);

    let psi = spec.psi_on(&mesh, Interpolation::Cubic);
    let psi_norm = psi
        .as_ref()
        .map(|p| p.sup_norm(-geom.r(), 1.0))
        .unwrap_or(Ok(f64::NAN))?;
    let box_bound = rho + psi_norm;

    conditions.push(
        match spot_grid(-geom.r(), 0.0, 64).try_for_each(|t| spec.omega.eval(t).map(drop)) {
            Ok(()) => ConditionResult {
                name: "C1",
                status: Status::Assumed,
                witness: 0.0,
                note: "psi continuous by construction; omega evaluable at 65 history points".into(),
            },
            Err(e) => failed("C1", &e),
        },
    );

    let kb = check_kernel_bounds(&geom, constants.c1, options.kernel_samples, options.seed);
    conditions.push(ConditionResult {
        name: "C2",
        status: if kb.history_max == 0.0 {
            Status::Pass
        } else {
            Status::Fail
        },
        witness: kb.history_max,
        note: "max |k| on the history interval".into(),
    });
    conditions.push(ConditionResult {
        name: "C3",
        status: if kb.pass() {
            Status::Pass
        } else {
            Status::Fail
        },
        witness: kb.envelope_margin.min(kb.cone_margin),
        note: format!(
            "envelope margin {:e}, cone margin {:e}",
            kb.envelope_margin, kb.cone_margin
        ),
    });

    conditions.push(match check_c4(&geom, &spec.g, &options.quadrature) {
        Ok(v) => ConditionResult {
            name: "C4",
            status: if v > 0.0 { Status::Pass } else { Status::Fail },
            witness: v,
            note: "integral of Phi*g over [a,b]".into(),
        },
        Err(e) => failed("C4", &e),
    });

    let c5 = (|| -> Result<f64> {
        let mut min = f64::INFINITY;
        let n_box = options.n_box.max(2);
        for t in spot_grid(0.0, 1.0, 32) {
            for u in spot_grid(-box_bound, box_bound, n_box - 1) {
                for v in spot_grid(-box_bound, box_bound, n_box - 1) {
                    let value = spec.f.eval(t, u, v)?;
                    if value < 0.0 {
                        return Err(Error::NegativeSource { t, u, v, value });
                    }
                    min = min.min(value);
                }
            }
        }
        Ok(min)
    })();
    conditions.push(match c5 {
        Ok(min) => ConditionResult {
            name: "C5",
            status: Status::Assumed,
            witness: min,
            note: "f >= 0 at sampled points; measurability assumed".into(),
        },
        Err(e) => failed("C5", &e),
    });

    let c6 = spot_grid(0.0, 1.0, 256).try_fold(0.0f64, |worst, s| {
        let value = spec.sigma.eval(s)?;
        Ok::<_, Error>(worst.max(-geom.r() - value).max(value - 1.0))
    });
    conditions.push(match c6 {
        Ok(excursion) if excursion <= 0.0 => ConditionResult {
            name: "C6",
            status: Status::Assumed,
            witness: 0.0,
            note: "sigma in [-r,1] at 257 points; continuity assumed".into(),
        },
        Ok(excursion) => ConditionResult {
            name: "C6",
            status: Status::Fail,
            witness: excursion,
            note: "sigma leaves [-r,1]".into(),
        },
        Err(e) => failed("C6", &e),
    });

    let grid = sup_grid(&geom);
    let c7 = grid
        .iter()
        .map(|&t| geom.gamma_unchecked(t) - constants.c2 * geom.gamma_norm())
        .fold(f64::INFINITY, f64::min);
    conditions.push(ConditionResult {
        name: "C7",
        status: if c7 >= -KERNEL_TOLERANCE {
            Status::Pass
        } else {
            Status::Fail
        },
        witness: c7,
        note: "min over [a,b] of gamma - c2 ||gamma||".into(),
    });

    let envelope = lower_envelope_delta(
        &spec.f,
        rho,
        psi_norm,
        options.n_box,
        options.analytic_delta.as_ref(),
    );
    let delta_check = envelope.as_ref().map_err(Clone::clone).and_then(|env| {
        let mut min = f64::INFINITY;
        for t in spot_grid(geom.a(), geom.b(), 32) {
            let d = env.eval(t)?;
            min = min.min(d);
            if env.is_approximate() {
                continue;
            }
            for u in spot_grid(-box_bound, box_bound, 16) {
                for v in spot_grid(-box_bound, box_bound, 16) {
                    let value = spec.f.eval(t, u, v)?;
                    if value < d - 1e-12 * d.abs().max(1.0) {
                        return Ok((min, Some((t, u, v, value, d))));
                    }
                }
            }
        }
        Ok((min, None))
    });
    let envelope_label = envelope
        .as_ref()
        .map(LowerEnvelope::label)
        .unwrap_or_default();
    conditions.push(match delta_check {
        Ok((min, None)) => ConditionResult {
            name: "a",
            status: if min >= 0.0 {
                Status::Pass
            } else {
                Status::Fail
            },
            witness: min,
            note: format!("min delta on [a,b]; {envelope_label}"),
        },
        Ok((min, Some((t, u, v, value, d)))) => ConditionResult {
            name: "a",
            status: Status::Fail,
            witness: min,
            note: format!("f({t}, {u}, {v}) = {value} below delta = {d}"),
        },
        Err(e) => failed("a", &e),
    });

    let eta_rho = options.eta_rho.unwrap_or(0.0);
    let spot_b = psi.and_then(|p| {
        let gamma = crate::grid::GridFunction::from_fn(mesh.clone(), Interpolation::Cubic, |t| {
            geom.gamma_unchecked(t)
        });
        let on_sphere = p.add(&gamma.scale(rho / geom.gamma_norm()))?;
        eval_functional(&spec.b, &on_sphere, &options.quadrature)
    });
    conditions.push(match spot_b {
        Ok(value) if value >= eta_rho && eta_rho >= 0.0 => ConditionResult {
            name: "b",
            status: Status::Assumed,
            witness: eta_rho,
            note: format!(
                "eta_rho {}; B = {value:e} at psi + rho gamma/||gamma||",
                if options.eta_rho.is_some() {
                    "supplied"
                } else {
                    "defaults to 0"
                }
            ),
        },
        Ok(value) => ConditionResult {
            name: "b",
            status: Status::Fail,
            witness: eta_rho,
            note: format!("B = {value:e} below eta_rho at psi + rho gamma/||gamma||"),
        },
        Err(e) => failed("b", &e),
    });

    let c = envelope.and_then(|env| eigen_condition_c(&geom, |s| env.eval(s), eta_rho));
    conditions.push(match c {
        Ok(sup) => ConditionResult {
            name: "c",
            status: if sup > POSITIVITY_GUARD {
                Status::Pass
            } else {
                Status::Fail
            },
            witness: sup,
            note: "sup over [a,b] of gamma*eta_rho + int k delta".into(),
        },
        Err(e) => failed("c", &e),
    });

    Ok(HypothesisReport {
        problem: spec.name.clone(),
        rho,
        box_bound,
        kernel_samples: options.kernel_samples,
        n_box: options.n_box,
        seed: options.seed,
        conditions,
    })
}
