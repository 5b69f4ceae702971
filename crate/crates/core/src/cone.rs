//! Membership in the cone
//!
//! ```text
//! K₀ = { v : v = 0 on [−r,0], min_[a,b] v ≥ c ‖v‖_[0,1] }
//! ```
//!
//! and distance to the sphere `∂K_{ψ,ρ} = ψ + { v ∈ K₀ : ‖v‖_[0,1] = ρ }`.

use crate::error::{Error, Result};
use crate::geometry::ProblemGeometry;
use crate::grid::GridFunction;

/// Default membership tolerance at the default mesh resolution.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeSpec {
    pub c: f64,
    pub a: f64,
    pub b: f64,
    pub r: f64,
}

impl ConeSpec {
    pub fn from_geometry(geom: &ProblemGeometry) -> Result<Self> {
        let constants = geom.cone_constants()?;
        Ok(Self {
            c: constants.c,
            a: geom.a(),
            b: geom.b(),
            r: geom.r(),
        })
    }
}

/// How far a function is from `K₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeDefect {
    /// `‖v‖_[−r,0]`
    pub history: f64,
    /// `max(0, c ‖v‖_[0,1] − min_[a,b] v)`
    pub ratio: f64,
}

impl ConeDefect {
    pub fn max(&self) -> f64 {
        self.history.max(self.ratio)
    }
}

pub fn cone_defect(v: &GridFunction, spec: &ConeSpec) -> Result<ConeDefect> {
    let history = v.sup_norm(-spec.r, 0.0)?;
    let norm = v.sup_norm(0.0, 1.0)?;
    let min = v.min_on(spec.a, spec.b)?;
    Ok(ConeDefect {
        history,
        ratio: (spec.c * norm - min).max(0.0),
    })
}

pub fn is_member(v: &GridFunction, spec: &ConeSpec, tol: f64) -> Result<bool> {
    let d = cone_defect(v, spec)?;
    Ok(d.history <= tol && d.ratio <= tol)
}

/// `‖u − ψ‖_[0,1] − ρ`; zero on `∂K_{ψ,ρ}` when `u − ψ ∈ K₀`.
pub fn boundary_gap(u: &GridFunction, psi: &GridFunction, rho: f64) -> Result<f64> {
    if !u.same_mesh(psi) {
        return Err(Error::MeshMismatch);
    }
    Ok(u.sub(psi)?.unit_norm() - rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::UnaryFn;
    use crate::grid::{Interpolation, Mesh};
    use std::sync::Arc;

    fn setup() -> (ProblemGeometry, Arc<Mesh>, ConeSpec) {
        let g = ProblemGeometry::reflection_example();
        let mesh = Arc::new(Mesh::new(&g, 64, 16).unwrap());
        let spec = ConeSpec::from_geometry(&g).unwrap();
        (g, mesh, spec)
    }

    fn gamma(g: &ProblemGeometry, mesh: &Arc<Mesh>) -> GridFunction {
        GridFunction::try_from_fn(mesh.clone(), Interpolation::Cubic, |t| g.gamma(t)).unwrap()
    }

    #[test]
    fn gamma_is_in_the_cone() {
        let (g, mesh, spec) = setup();
        let gam = gamma(&g, &mesh);
        assert_eq!(
            cone_defect(&gam, &spec).unwrap(),
            ConeDefect {
                history: 0.0,
                ratio: 0.0
            }
        );
        assert!(is_member(&gam, &spec, 0.0).unwrap());
    }

    #[test]
    fn zero_and_nonmembers() {
        let (_, mesh, spec) = setup();
        let zero = GridFunction::zeros(mesh.clone(), Interpolation::Cubic);
        assert_eq!(cone_defect(&zero, &spec).unwrap().max(), 0.0);

        let neg = GridFunction::from_fn(mesh.clone(), Interpolation::Cubic, |t| {
            if t > 0.0 {
                -t
            } else {
                0.0
            }
        });
        let d = cone_defect(&neg, &spec).unwrap();
        assert_eq!(d.history, 0.0);
        assert!(d.ratio > 0.0);

        let one = GridFunction::from_fn(mesh, Interpolation::Cubic, |_| 1.0);
        assert!(!is_member(&one, &spec, 1e-9).unwrap());
    }

    #[test]
    fn boundary_gaps() {
        let (g, mesh, _) = setup();
        let omega = UnaryFn::new("sqrt(1+t)", |t: f64| (1.0 + t).sqrt());
        let psi =
            GridFunction::try_from_fn(mesh.clone(), Interpolation::Cubic, |t| g.psi(&omega, t))
                .unwrap();
        assert_eq!(boundary_gap(&psi, &psi, 1.0).unwrap(), -1.0);

        let gam = gamma(&g, &mesh);
        let rho = 0.7;
        let on = psi.add(&gam.scale(rho / g.gamma_norm())).unwrap();
        assert!(boundary_gap(&on, &psi, rho).unwrap().abs() < 1e-15);
        let out = psi.add(&gam.scale(2.0 * rho / g.gamma_norm())).unwrap();
        assert!((boundary_gap(&out, &psi, rho).unwrap() - rho).abs() < 1e-15);

        let other = Arc::new(Mesh::new(&g, 32, 8).unwrap());
        let z = GridFunction::zeros(other, Interpolation::Cubic);
        assert!(matches!(
            boundary_gap(&z, &psi, 1.0),
            Err(Error::MeshMismatch)
        ));
    }

    #[test]
    fn translate_norm_formula() {
        let (g, mesh, _) = setup();
        let omega = UnaryFn::new("sqrt(1+t)", |t: f64| (1.0 + t).sqrt());
        let psi =
            GridFunction::try_from_fn(mesh.clone(), Interpolation::Cubic, |t| g.psi(&omega, t))
                .unwrap();
        for k in [0.0, 0.3, 1.0, 3.0] {
            let u = psi.add(&gamma(&g, &mesh).scale(k)).unwrap();
            let whole = u.sup_norm(-1.0, 1.0).unwrap();
            let split = psi
                .sup_norm(-1.0, 0.0)
                .unwrap()
                .max(u.sup_norm(0.0, 1.0).unwrap());
            assert_eq!(whole, split);
        }
        // ψ itself sits in K_ψ and is negative at t = 1
        assert_eq!(psi.eval(1.0).unwrap(), -1.0);
    }
}
