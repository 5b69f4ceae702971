//! The perturbed Hammerstein operator
//!
//! ```text
//! F u(t) = ∫₀¹ k(t,s) g(s) f(s, u(s), u(σ(s))) ds + γ(t) B[u]
//! ```
//!
//! and the boundary functional `B`.
//!
//! The `s`-integral is discretized once per mesh: the quadrature panels are
//! the mesh intervals of `[0,1]`, so the kernel kinks at `s = η` and `s = t`
//! (both mesh nodes) always fall on panel boundaries. The weighted kernel
//! values are precomputed and each application is a matrix–vector product.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::func::{SourceFn, UnaryFn};
use crate::geometry::ProblemGeometry;
use crate::grid::{GridFunction, Mesh, Quadrature};

type CustomFunctional = dyn Fn(&GridFunction) -> Result<f64> + Send + Sync;

/// The functional `B` in the boundary condition `β u'(1) + u(η) = λ B[u]`.
#[derive(Clone, Default)]
pub enum BFunctional {
    #[default]
    Zero,
    /// `∫_{−r}^{1} w(t) u(t)² dt`
    WeightedSquare(UnaryFn),
    /// `∫_{−r}^{1} w(t) u(t) dt`
    WeightedLinear(UnaryFn),
    Custom(String, Arc<CustomFunctional>),
}

impl BFunctional {
    pub fn custom(
        label: impl Into<String>,
        f: impl Fn(&GridFunction) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        BFunctional::Custom(label.into(), Arc::new(f))
    }

    /// `B[u] ≡ c`.
    pub fn constant(c: f64) -> Self {
        Self::custom(format!("{c}"), move |_| Ok(c))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, BFunctional::Zero)
    }

    /// `B[u]` without the sign check.
    pub fn eval_raw(&self, u: &GridFunction, quad: &Quadrature) -> Result<f64> {
        let integral = |w: &UnaryFn, square: bool| -> Result<f64> {
            let mesh = u.mesh();
            let panels = mesh.breakpoints(-mesh.r(), 1.0);
            quad.try_integrate(&panels, |t| {
                let v = u.eval_unchecked(t);
                Ok(w.eval(t)? * if square { v * v } else { v })
            })
        };
        match self {
            BFunctional::Zero => Ok(0.0),
            BFunctional::WeightedSquare(w) => integral(w, true),
            BFunctional::WeightedLinear(w) => integral(w, false),
            BFunctional::Custom(_, f) => f(u),
        }
    }
}

impl fmt::Debug for BFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BFunctional::Zero => f.write_str("Zero"),
            BFunctional::WeightedSquare(w) => write!(f, "WeightedSquare({})", w.label()),
            BFunctional::WeightedLinear(w) => write!(f, "WeightedLinear({})", w.label()),
            BFunctional::Custom(label, _) => write!(f, "Custom({label})"),
        }
    }
}

impl fmt::Display for BFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BFunctional::Zero => f.write_str("0"),
            BFunctional::WeightedSquare(w) => write!(f, "int ({}) u^2 dt", w.label()),
            BFunctional::WeightedLinear(w) => write!(f, "int ({}) u dt", w.label()),
            BFunctional::Custom(label, _) => f.write_str(label),
        }
    }
}

/// `B[u]`, reporting a negative value as an error.
pub fn eval_functional(b: &BFunctional, u: &GridFunction, quad: &Quadrature) -> Result<f64> {
    let value = b.eval_raw(u, quad)?;
    if value < 0.0 {
        return Err(Error::NegativeFunctional(value));
    }
    Ok(value)
}

/// One instance of the boundary value problem.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub geometry: ProblemGeometry,
    pub f: SourceFn,
    pub sigma: UnaryFn,
    pub g: UnaryFn,
    pub omega: UnaryFn,
    pub b: BFunctional,
}

impl ProblemSpec {
    /// A problem with `g ≡ 1`.
    pub fn new(
        name: impl Into<String>,
        geometry: ProblemGeometry,
        f: SourceFn,
        sigma: UnaryFn,
        omega: UnaryFn,
        b: BFunctional,
    ) -> Self {
        Self {
            name: name.into(),
            geometry,
            f,
            sigma,
            g: UnaryFn::constant(1.0),
            omega,
            b,
        }
    }

    pub fn with_g(mut self, g: UnaryFn) -> Self {
        self.g = g;
        self
    }

    /// `σ(s)`, checked against `[−r, 1]`.
    pub fn sigma_at(&self, s: f64) -> Result<f64> {
        let value = self.sigma.eval(s)?;
        let lo = -self.geometry.r();
        if !(lo..=1.0).contains(&value) {
            return Err(Error::DeviationOutOfRange { s, value, lo });
        }
        Ok(value)
    }

    /// `g(s) f(s, u, v)` with the sign conditions on `f` and `g` enforced.
    pub fn weighted_source(&self, s: f64, u: f64, v: f64) -> Result<f64> {
        let fv = self.f.eval(s, u, v)?;
        if fv < 0.0 {
            return Err(Error::NegativeSource {
                t: s,
                u,
                v,
                value: fv,
            });
        }
        let gv = self.g.eval(s)?;
        if gv < 0.0 {
            return Err(Error::NegativeWeight { t: s, value: gv });
        }
        Ok(gv * fv)
    }

    /// `ψ` sampled on the mesh.
    pub fn psi_on(
        &self,
        mesh: &Arc<Mesh>,
        interp: crate::grid::Interpolation,
    ) -> Result<GridFunction> {
        GridFunction::try_from_fn(mesh.clone(), interp, |t| self.geometry.psi(&self.omega, t))
    }
}

/// `u(σ(s))`.
pub fn deviated_value(u: &GridFunction, sigma: &UnaryFn, s: f64) -> Result<f64> {
    let value = sigma.eval(s)?;
    let lo = u.mesh().nodes()[0];
    if !(lo..=1.0).contains(&value) {
        return Err(Error::DeviationOutOfRange { s, value, lo });
    }
    Ok(u.eval_unchecked(value))
}

/// `F` discretized on a fixed mesh and quadrature.
#[derive(Debug, Clone)]
pub struct HammersteinOperator {
    spec: ProblemSpec,
    mesh: Arc<Mesh>,
    quad: Quadrature,
    points: Vec<f64>,
    // deviated arguments σ(s_q), checked once
    deviated: Vec<f64>,
    // row-major, one row per node of [0,1]: w_q k(t_i, s_q)
    kernel: Vec<f64>,
}

/// The pieces of one application of `F`.
#[derive(Debug, Clone)]
pub struct Application {
    pub image: GridFunction,
    pub functional: f64,
}

impl HammersteinOperator {
    pub fn new(spec: ProblemSpec, mesh: Arc<Mesh>, quad: Quadrature) -> Result<Self> {
        let panels = mesh.unit_nodes().to_vec();
        let (points, weights): (Vec<f64>, Vec<f64>) =
            quad.nodes_weights(&panels).into_iter().unzip();
        let deviated = points
            .iter()
            .map(|&s| spec.sigma_at(s))
            .collect::<Result<Vec<_>>>()?;
        let geom = spec.geometry;
        let kernel = mesh
            .unit_nodes()
            .iter()
            .flat_map(|&t| {
                points
                    .iter()
                    .zip(&weights)
                    .map(move |(&s, &w)| w * geom.kernel_unchecked(t, s))
            })
            .collect();
        Ok(Self {
            spec,
            mesh,
            quad,
            points,
            deviated,
            kernel,
        })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn quadrature(&self) -> &Quadrature {
        &self.quad
    }

    /// `g(s) f(s, u(s), u(σ(s)))` at the quadrature points.
    fn source_values(&self, u: &GridFunction) -> Result<Vec<f64>> {
        self.points
            .iter()
            .zip(&self.deviated)
            .map(|(&s, &sd)| {
                self.spec
                    .weighted_source(s, u.eval_unchecked(s), u.eval_unchecked(sd))
            })
            .collect()
    }

    /// `F u` together with `B[u]`.
    pub fn apply_parts(&self, u: &GridFunction) -> Result<Application> {
        if u.mesh().as_ref() != self.mesh.as_ref() {
            return Err(Error::MeshMismatch);
        }
        let y = self.source_values(u)?;
        let functional = eval_functional(&self.spec.b, u, &self.quad)?;
        let geom = self.spec.geometry;
        let zero = self.mesh.zero_index();
        let unit = &self.mesh.nodes()[zero..];
        let mut values = vec![0.0; zero];
        let tail: Vec<f64> = self
            .kernel
            .par_chunks(y.len())
            .zip(unit.par_iter())
            .map(|(row, &t)| {
                let integral: f64 = row.iter().zip(&y).map(|(k, y)| k * y).sum();
                integral + geom.gamma_unchecked(t) * functional
            })
            .collect();
        values.extend(tail);
        let image = GridFunction::new(self.mesh.clone(), values, u.interpolation())?;
        Ok(Application { image, functional })
    }

    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        Ok(self.apply_parts(u)?.image)
    }
}

/// One-shot `F u`; builds the discretization on every call.
pub fn apply_hammerstein(
    spec: &ProblemSpec,
    u: &GridFunction,
    quad: &Quadrature,
) -> Result<GridFunction> {
    HammersteinOperator::new(spec.clone(), u.mesh().clone(), quad.clone())?.apply(u)
}
