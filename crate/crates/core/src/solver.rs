//! Pairs `(λ_ρ, u_ρ)` with `u_ρ = ψ + λ_ρ F u_ρ` and `‖u_ρ − ψ‖_[0,1] = ρ`.
//!
//! The iteration works on `v = u − ψ`, which stays on the sphere of radius `ρ`
//! in `K₀`:
//!
//! ```text
//! w_k     = F(ψ + v_k)
//! v_{k+1} = normalize_ρ((1 − α) v_k + α ρ w_k / ‖w_k‖)
//! ```
//!
//! At a fixed point `v* = ρ w*/‖w*‖`, so `u = ψ + v*` solves the integral
//! equation with `λ = ρ/‖F u‖_[0,1]`.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::cone::{self, ConeSpec};
use crate::error::{Error, Result};
use crate::func::UnaryFn;
use crate::grid::{GridFunction, Interpolation, Mesh, Quadrature, QuadratureKind};
use crate::operator::{HammersteinOperator, ProblemSpec};

/// Starting direction `v₀/ρ`; only its values on `[0,1]` are used.
#[derive(Debug, Clone, Default)]
pub enum InitialDirection {
    #[default]
    Gamma,
    Function(UnaryFn),
    Grid(GridFunction),
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub max_iterations: usize,
    /// `α ∈ (0, 1]`
    pub damping: f64,
    pub tolerance: f64,
    /// Panels on `[0,1]`.
    pub n: usize,
    /// Panels on `[−r,0]`.
    pub n_hist: usize,
    pub quadrature: QuadratureKind,
    /// Subpanels per mesh interval.
    pub subdivisions: usize,
    pub interpolation: Interpolation,
    /// Admissible cone defect, relative to `max(1, ‖w‖)`.
    pub cone_tolerance: f64,
    pub initial_direction: InitialDirection,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            damping: 0.5,
            tolerance: 1e-10,
            n: 256,
            n_hist: 64,
            quadrature: QuadratureKind::Simpson,
            subdivisions: 2,
            interpolation: Interpolation::Cubic,
            cone_tolerance: cone::DEFAULT_TOLERANCE,
            initial_direction: InitialDirection::Gamma,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Options(format!(
                "damping {} not in (0,1]",
                self.damping
            )));
        }
        if !(self.tolerance > 0.0) || !(self.cone_tolerance > 0.0) {
            return Err(Error::Options("tolerances must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Options("max_iterations must be positive".into()));
        }
        Ok(())
    }

    pub fn quadrature(&self) -> Result<Quadrature> {
        Quadrature::new(self.quadrature, self.subdivisions)
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub rho: f64,
    pub lambda: f64,
    pub u: GridFunction,
    pub psi: GridFunction,
    /// `sup |u − ψ − λ F u|` over the mesh.
    pub fixed_point_residual: f64,
    /// Sup-norm distance between the last two iterates.
    pub last_step: f64,
    pub iterations: usize,
    pub converged: bool,
    pub quadrature: Quadrature,
}

impl SolveResult {
    /// `u − ψ`.
    pub fn deviation(&self) -> GridFunction {
        self.u.sub(&self.psi).expect("same mesh")
    }
}

/// A discretized problem, reusable across values of `ρ`.
pub struct Solver {
    op: HammersteinOperator,
    psi: GridFunction,
    cone: ConeSpec,
    opts: SolveOptions,
}

impl Solver {
    pub fn new(spec: ProblemSpec, opts: SolveOptions) -> Result<Self> {
        opts.validate()?;
        let mesh = Arc::new(Mesh::new(&spec.geometry, opts.n, opts.n_hist)?);
        let psi = spec.psi_on(&mesh, opts.interpolation)?;
        let cone = ConeSpec::from_geometry(&spec.geometry)?;
        let op = HammersteinOperator::new(spec, mesh, opts.quadrature()?)?;
        Ok(Self {
            op,
            psi,
            cone,
            opts,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        self.op.mesh()
    }

    pub fn psi(&self) -> &GridFunction {
        &self.psi
    }

    pub fn operator(&self) -> &HammersteinOperator {
        &self.op
    }

    fn direction(&self, init: &InitialDirection) -> Result<GridFunction> {
        let mesh = self.mesh().clone();
        let interp = self.opts.interpolation;
        let geom = self.op.spec().geometry;
        let d = match init {
            InitialDirection::Gamma => {
                GridFunction::from_fn(mesh, interp, |t| geom.gamma_unchecked(t))
            }
            InitialDirection::Function(f) => {
                GridFunction::try_from_fn(
                    mesh,
                    interp,
                    |t| if t > 0.0 { f.eval(t) } else { Ok(0.0) },
                )?
            }
            InitialDirection::Grid(g) => {
                if !g.same_mesh(&self.psi) {
                    return Err(Error::MeshMismatch);
                }
                g.map(|t, v| if t > 0.0 { v } else { 0.0 })
            }
        };
        if d.unit_norm() == 0.0 {
            return Err(Error::Options("initial direction vanishes on [0,1]".into()));
        }
        Ok(d)
    }

    pub fn solve(&self, rho: f64) -> Result<SolveResult> {
        self.solve_from(rho, &self.opts.initial_direction)
    }

    pub fn solve_from(&self, rho: f64, init: &InitialDirection) -> Result<SolveResult> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::Options(format!("rho = {rho} must be positive")));
        }
        let alpha = self.opts.damping;
        let tol = self.opts.tolerance;
        let d = self.direction(init)?;
        let mut v = d.scale(rho / d.unit_norm());
        let mut last_step = f64::INFINITY;
        let mut best: Option<SolveResult> = None;

        for iteration in 1..=self.opts.max_iterations {
            let u = self.psi.add(&v)?;
            let w = self.op.apply(&u)?;
            let norm = w.unit_norm();
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(Error::DegenerateImage);
            }
            let defect = cone::cone_defect(&w, &self.cone)?.max();
            let allowed = self.opts.cone_tolerance * norm.max(1.0);
            if defect > allowed {
                return Err(Error::ConeViolation {
                    defect,
                    tol: allowed,
                });
            }
            let lambda = rho / norm;
            let target = w.scale(lambda);
            let residual = max_abs_diff(&v, &target);

            let converged = residual <= tol && last_step <= tol;
            let candidate = SolveResult {
                rho,
                lambda,
                u,
                psi: self.psi.clone(),
                fixed_point_residual: residual,
                last_step,
                iterations: iteration,
                converged,
                quadrature: self.op.quadrature().clone(),
            };
            if converged {
                return Ok(candidate);
            }
            if best
                .as_ref()
                .is_none_or(|b| residual < b.fixed_point_residual)
            {
                best = Some(candidate);
            }

            let mixed = v.zip_with(&target, |a, b| (1.0 - alpha) * a + alpha * b)?;
            let next = mixed.scale(rho / mixed.unit_norm());
            last_step = max_abs_diff(&next, &v);
            v = next;
        }
        let mut best = best.expect("at least one iteration");
        best.iterations = self.opts.max_iterations;
        Ok(best)
    }
}

fn max_abs_diff(a: &GridFunction, b: &GridFunction) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Solves for one `ρ` with a fresh discretization.
pub fn bk_iterate(spec: &ProblemSpec, rho: f64, opts: &SolveOptions) -> Result<SolveResult> {
    Solver::new(spec.clone(), opts.clone())?.solve(rho)
}

/// Residuals of a computed pair against the integral equation and the BVP.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    /// `sup_t |u − ψ − λ F u|`
    pub integral_residual: f64,
    /// `max |D²u + λ g f(t, u, u(σ(t)))|` over interior nodes of `(0,1)`
    pub ode_residual: f64,
    /// `|β u'(1) + u(η) − λ B[u]|`, with a one-sided three-point `u'(1)`
    pub bc_residual: f64,
    /// Largest cone defect of `u − ψ`.
    pub cone_defect: f64,
    /// `|‖u − ψ‖_[0,1] − ρ|`
    pub boundary_gap: f64,
    /// `sup_[−r,0] |u − ω|` over history nodes
    pub history_defect: f64,
    /// `λ ∈ (0, ∞)`
    pub lambda_valid: bool,
}

impl VerificationReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let rows: [(&str, f64); 6] = [
            ("integral_residual", self.integral_residual),
            ("ode_residual", self.ode_residual),
            ("bc_residual", self.bc_residual),
            ("cone_defect", self.cone_defect),
            ("boundary_gap", self.boundary_gap),
            ("history_defect", self.history_defect),
        ];
        for (name, value) in rows {
            writeln!(out, "{name:<18} {value:.6e}").unwrap();
        }
        writeln!(out, "{:<18} {}", "lambda_valid", self.lambda_valid).unwrap();
        out
    }
}

pub fn verify_solution(spec: &ProblemSpec, result: &SolveResult) -> Result<VerificationReport> {
    let u = &result.u;
    let mesh = u.mesh().clone();
    let geom = spec.geometry;
    let lambda = result.lambda;
    let op = HammersteinOperator::new(spec.clone(), mesh.clone(), result.quadrature.clone())?;
    let app = op.apply_parts(u)?;
    let psi = spec.psi_on(&mesh, u.interpolation())?;

    let nodes = mesh.nodes();
    let vals = u.values();
    let integral_residual = (0..nodes.len())
        .map(|i| (vals[i] - psi.values()[i] - lambda * app.image.values()[i]).abs())
        .fold(0.0, f64::max);

    let zero = mesh.zero_index();
    let last = nodes.len() - 1;
    let ode_residual = ((zero + 1)..last)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let (h1, h2) = (nodes[i] - nodes[i - 1], nodes[i + 1] - nodes[i]);
            let d2 =
                2.0 / (h1 + h2) * ((vals[i + 1] - vals[i]) / h2 - (vals[i] - vals[i - 1]) / h1);
            let t = nodes[i];
            let deviated = u.eval_unchecked(spec.sigma_at(t)?);
            let source = spec.weighted_source(t, vals[i], deviated)?;
            Ok((d2 + lambda * source).abs())
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let (h1, h2) = (
        nodes[last - 1] - nodes[last - 2],
        nodes[last] - nodes[last - 1],
    );
    let du1 = vals[last - 2] * h2 / (h1 * (h1 + h2)) - vals[last - 1] * (h1 + h2) / (h1 * h2)
        + vals[last] * (h1 + 2.0 * h2) / (h2 * (h1 + h2));
    let u_eta = u.eval_unchecked(geom.eta());
    let bc_residual = (geom.beta() * du1 + u_eta - lambda * app.functional).abs();

    let v = u.sub(&psi)?;
    let cone_spec = ConeSpec::from_geometry(&geom)?;
    let cone_defect = cone::cone_defect(&v, &cone_spec)?.max();
    let boundary_gap = cone::boundary_gap(u, &psi, result.rho)?.abs();

    let mut history_defect: f64 = 0.0;
    for i in 0..=zero {
        history_defect = history_defect.max((vals[i] - spec.omega.eval(nodes[i])?).abs());
    }

    Ok(VerificationReport {
        integral_residual,
        ode_residual,
        bc_residual,
        cone_defect,
        boundary_gap,
        history_defect,
        lambda_valid: lambda > 0.0 && lambda.is_finite(),
    })
}

/// Solutions along a sequence of radii.
#[derive(Debug, Clone)]
pub struct Branch {
    pub points: Vec<(f64, Result<SolveResult>)>,
    /// Warm starting is disabled when the radii are solved concurrently.
    pub parallel: bool,
}

impl Branch {
    pub fn all_converged(&self) -> bool {
        self.points
            .iter()
            .all(|(_, r)| matches!(r, Ok(s) if s.converged))
    }

    /// CSV with columns `rho,lambda,residual,iterations,converged`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rho,lambda,residual,iterations,converged\n");
        for (rho, point) in &self.points {
            match point {
                Ok(s) => writeln!(
                    out,
                    "{},{},{:e},{},{}",
                    rho, s.lambda, s.fixed_point_residual, s.iterations, s.converged
                ),
                Err(_) => writeln!(out, "{rho},NaN,NaN,0,false"),
            }
            .unwrap();
        }
        out
    }
}

/// Solves along increasing `rho_values`.
///
/// Sequentially, each solve starts from the previous converged direction.
/// With `parallel`, every radius starts from the configured initial direction.
pub fn sweep_rho(
    spec: &ProblemSpec,
    rho_values: &[f64],
    opts: &SolveOptions,
    parallel: bool,
) -> Result<Branch> {
    if rho_values.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::Options("radii must be positive".into()));
    }
    if rho_values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Options("radii must be strictly increasing".into()));
    }
    if rho_values.is_empty() {
        return Ok(Branch {
            points: Vec::new(),
            parallel,
        });
    }
    let solver = Solver::new(spec.clone(), opts.clone())?;
    let points = if parallel {
        rho_values
            .par_iter()
            .map(|&rho| (rho, solver.solve(rho)))
            .collect()
    } else {
        let mut init = opts.initial_direction.clone();
        let mut points = Vec::with_capacity(rho_values.len());
        for &rho in rho_values {
            let result = solver.solve_from(rho, &init);
            if let Ok(s) = &result {
                if s.converged {
                    init = InitialDirection::Grid(s.deviation());
                }
            }
            points.push((rho, result));
        }
        points
    };
    Ok(Branch { points, parallel })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems;

    fn small() -> SolveOptions {
        SolveOptions {
            n: 64,
            n_hist: 16,
            ..SolveOptions::default()
        }
    }

    #[test]
    fn options_validation() {
        let bad = SolveOptions {
            damping: 0.0,
            ..SolveOptions::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolveOptions {
            damping: 1.5,
            ..SolveOptions::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolveOptions {
            tolerance: 0.0,
            ..SolveOptions::default()
        };
        assert!(bad.validate().is_err());
        assert!(SolveOptions::default().validate().is_ok());
    }

    #[test]
    fn linear_problem_closed_form() {
        let spec = problems::linear_oracle();
        let r = bk_iterate(&spec, 1.0, &small()).unwrap();
        assert!(r.converged);
        assert!((r.lambda - 512.0 / 81.0).abs() < 1e-8 * 512.0 / 81.0);
        let q_norm = 81.0 / 512.0;
        for (&t, &v) in r.u.mesh().nodes().iter().zip(r.u.values()) {
            let exact = if t > 0.0 {
                (9.0 * t / 16.0 - t * t / 2.0) / q_norm
            } else {
                0.0
            };
            assert!((v - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_image_is_reported() {
        let spec = problems::linear_oracle();
        let spec = ProblemSpec {
            f: crate::func::SourceFn::constant(0.0),
            ..spec
        };
        assert!(matches!(
            bk_iterate(&spec, 1.0, &small()),
            Err(Error::DegenerateImage)
        ));
    }

    #[test]
    fn nonconvergence_returns_best_iterate() {
        let spec = problems::linear_oracle();
        let opts = SolveOptions {
            max_iterations: 3,
            ..small()
        };
        let r = bk_iterate(&spec, 1.0, &opts).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
        assert!(r.fixed_point_residual > 0.0);
    }

    #[test]
    fn rejects_bad_radius_and_direction() {
        let solver = Solver::new(problems::linear_oracle(), small()).unwrap();
        assert!(solver.solve(0.0).is_err());
        assert!(solver.solve(-1.0).is_err());
        let flat = InitialDirection::Function(UnaryFn::constant(0.0));
        assert!(solver.solve_from(1.0, &flat).is_err());
    }

    #[test]
    fn injected_zero_lambda_is_invalid() {
        let spec = problems::linear_oracle();
        let mut r = bk_iterate(&spec, 1.0, &small()).unwrap();
        r.u = r.psi.clone();
        r.lambda = 0.0;
        let report = verify_solution(&spec, &r).unwrap();
        assert_eq!(report.integral_residual, 0.0);
        assert!(!report.lambda_valid);
    }

    #[test]
    fn sweep_validation_and_csv() {
        let spec = problems::linear_oracle();
        assert!(sweep_rho(&spec, &[1.0, 0.5], &small(), false).is_err());
        assert!(sweep_rho(&spec, &[-1.0], &small(), false).is_err());
        let empty = sweep_rho(&spec, &[], &small(), false).unwrap();
        assert!(empty.points.is_empty());
        assert_eq!(empty.to_csv(), "rho,lambda,residual,iterations,converged\n");

        let branch = sweep_rho(&spec, &[1.0, 2.0], &small(), false).unwrap();
        let csv = branch.to_csv();
        let rows: Vec<&str> = csv.lines().collect();
        assert_eq!(rows.len(), 3);
        assert!(rows[1].starts_with("1,6.32098765"));
        assert!(rows[1].ends_with(",true"));
    }
}
