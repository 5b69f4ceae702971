//! Meshes on `[−r, 1]`, grid functions and quadrature.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::ProblemGeometry;

/// Strictly increasing nodes covering `[−r, 1]`.
///
/// The points `−r, 0, a, b, η, 1` are always nodes, and the mesh is uniform
/// between consecutive markers.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<f64>,
    zero: usize,
    markers: Vec<usize>,
}

impl Mesh {
    /// `n` panels on `[0,1]` (even, at least 8) and `n_hist` panels on `[−r,0]`.
    pub fn new(geom: &ProblemGeometry, n: usize, n_hist: usize) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::Mesh(format!("n = {n} must be even and at least 8")));
        }
        if n_hist < 1 {
            return Err(Error::Mesh("n_hist must be at least 1".into()));
        }
        let r = geom.r();
        let mut nodes: Vec<f64> = (0..n_hist)
            .map(|i| -r + r * i as f64 / n_hist as f64)
            .collect();
        let zero = nodes.len();

        let mut breaks = vec![0.0, geom.a(), geom.b(), geom.eta(), 1.0];
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let counts = allocate_panels(&breaks, n);

        let mut markers = vec![0, zero];
        for (w, &m) in breaks.windows(2).zip(&counts) {
            let (lo, hi) = (w[0], w[1]);
            for j in 0..m {
                nodes.push(lo + (hi - lo) * j as f64 / m as f64);
            }
            markers.push(nodes.len());
        }
        nodes.push(1.0);
        Ok(Self {
            nodes,
            zero,
            markers,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Index of the node `t = 0`.
    pub fn zero_index(&self) -> usize {
        self.zero
    }

    /// Indices of the marker nodes `−r, 0, …, 1` in increasing order.
    pub fn marker_indices(&self) -> &[usize] {
        &self.markers
    }

    pub fn r(&self) -> f64 {
        -self.nodes[0]
    }

    /// Index of the node equal to `t`, if any.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.nodes.binary_search_by(|x| x.total_cmp(&t)).ok()
    }

    /// Nodes of `[0, 1]`.
    pub fn unit_nodes(&self) -> &[f64] {
        &self.nodes[self.zero..]
    }

    /// Nodes lying in `[lo, hi]`, with `lo` and `hi` prepended/appended when
    /// they are not nodes themselves.
    pub fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = vec![lo];
        out.extend(self.nodes.iter().copied().filter(|&x| x > lo && x < hi));
        out.push(hi);
        out
    }

    fn segment(&self, t: f64) -> usize {
        self.nodes
            .partition_point(|&x| x <= t)
            .saturating_sub(1)
            .min(self.nodes.len() - 2)
    }
}

// Largest-remainder split of `n` panels over the segments, at least one each.
fn allocate_panels(breaks: &[f64], n: usize) -> Vec<usize> {
    let ideal: Vec<f64> = breaks
        .windows(2)
        .map(|w| (w[1] - w[0]) * n as f64)
        .collect();
    let mut counts: Vec<usize> = ideal.iter().map(|x| (x.floor() as usize).max(1)).collect();
    loop {
        let total: usize = counts.iter().sum();
        if total == n {
            return counts;
        }
        let deficit = |i: usize| ideal[i] - counts[i] as f64;
        let pick = if total < n {
            (0..counts.len()).max_by(|&i, &j| deficit(i).total_cmp(&deficit(j)))
        } else {
            (0..counts.len())
                .filter(|&i| counts[i] > 1)
                .min_by(|&i, &j| deficit(i).total_cmp(&deficit(j)))
        }
        .expect("non-empty segments");
        if total < n {
            counts[pick] += 1;
        } else {
            counts[pick] -= 1;
        }
    }
}

/// Interpolation between mesh nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    /// Piecewise linear everywhere.
    Linear,
    /// Piecewise cubic Lagrange on `[0,1]` (exact for cubics there),
    /// piecewise linear on the history interval `[−r,0]`.
    #[default]
    Cubic,
}

/// A continuous function on `[−r,1]` given by its nodal values.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
    interp: Interpolation,
}

impl GridFunction {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>, interp: Interpolation) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(Error::Mesh(format!(
                "{} values for {} nodes",
                values.len(),
                mesh.len()
            )));
        }
        Ok(Self {
            mesh,
            values,
            interp,
        })
    }

    pub fn from_fn(mesh: Arc<Mesh>, interp: Interpolation, f: impl Fn(f64) -> f64) -> Self {
        let values = mesh.nodes().iter().map(|&t| f(t)).collect();
        Self {
            mesh,
            values,
            interp,
        }
    }

    pub fn try_from_fn(
        mesh: Arc<Mesh>,
        interp: Interpolation,
        f: impl Fn(f64) -> Result<f64>,
    ) -> Result<Self> {
        let values = mesh.nodes().iter().map(|&t| f(t)).collect::<Result<_>>()?;
        Ok(Self {
            mesh,
            values,
            interp,
        })
    }

    pub fn zeros(mesh: Arc<Mesh>, interp: Interpolation) -> Self {
        let values = vec![0.0; mesh.len()];
        Self {
            mesh,
            values,
            interp,
        }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interp
    }

    pub fn same_mesh(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh) || self.mesh == other.mesh
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = self
            .mesh
            .nodes()
            .iter()
            .zip(&self.values)
            .map(|(&t, &v)| f(t, v))
            .collect();
        Self {
            mesh: self.mesh.clone(),
            values,
            interp: self.interp,
        }
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if !self.same_mesh(other) {
            return Err(Error::MeshMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&x, &y)| f(x, y))
            .collect();
        Ok(Self {
            mesh: self.mesh.clone(),
            values,
            interp: self.interp,
        })
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |x, y| x + y)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |x, y| x - y)
    }

    pub fn scale(&self, k: f64) -> Self {
        self.map(|_, v| k * v)
    }

    /// Value at `t ∈ [−r, 1]` under the interpolation rule.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let lo = self.mesh.nodes[0];
        if !(lo..=1.0).contains(&t) {
            return Err(Error::Domain {
                what: "t",
                value: t,
                lo,
                hi: 1.0,
            });
        }
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        let i = self.mesh.segment(t);
        match self.cubic_stencil(i) {
            Some(j) => {
                let xs = &self.mesh.nodes[j..j + 4];
                let ys = &self.values[j..j + 4];
                lagrange4(xs, ys, t)
            }
            None => {
                let (x0, x1) = (self.mesh.nodes[i], self.mesh.nodes[i + 1]);
                let (y0, y1) = (self.values[i], self.values[i + 1]);
                if t == x1 {
                    return y1;
                }
                y0 + (y1 - y0) * (t - x0) / (x1 - x0)
            }
        }
    }

    // First node of the 4-point stencil for segment i, or None for linear segments.
    fn cubic_stencil(&self, i: usize) -> Option<usize> {
        let zero = self.mesh.zero;
        let last = self.mesh.len() - 1;
        if self.interp == Interpolation::Linear || i < zero || last - zero < 3 {
            return None;
        }
        Some(i.saturating_sub(1).clamp(zero, last - 3))
    }

    /// `(min u, max u)` over `[lo, hi]`, including interior extrema of cubic segments.
    fn extrema(&self, lo: f64, hi: f64) -> Result<(f64, f64)> {
        let first = self.mesh.nodes[0];
        if !(lo < hi) || lo < first || hi > 1.0 {
            return Err(Error::Domain {
                what: "interval end",
                value: if lo < first { lo } else { hi },
                lo: first,
                hi: 1.0,
            });
        }
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut take = |v: f64| {
            min = min.min(v);
            max = max.max(v);
        };
        take(self.eval_unchecked(lo));
        take(self.eval_unchecked(hi));
        let nodes = &self.mesh.nodes;
        for (i, &x) in nodes.iter().enumerate() {
            if x > lo && x < hi {
                take(self.values[i]);
            }
        }
        let first_seg = self.mesh.segment(lo);
        let last_seg = self.mesh.segment(hi);
        for i in first_seg..=last_seg {
            let Some(j) = self.cubic_stencil(i) else {
                continue;
            };
            let (x0, x1) = (nodes[i], nodes[i + 1]);
            let seg_lo = x0.max(lo);
            let seg_hi = x1.min(hi);
            if !(seg_lo < seg_hi) {
                continue;
            }
            let coeffs = monomial_cubic(&nodes[j..j + 4], &self.values[j..j + 4], x0);
            for xi in derivative_roots(&coeffs) {
                let x = x0 + xi;
                if x > seg_lo && x < seg_hi {
                    take(self.eval_unchecked(x));
                }
            }
        }
        Ok((min, max))
    }

    /// `sup |u|` over `[lo, hi]`.
    pub fn sup_norm(&self, lo: f64, hi: f64) -> Result<f64> {
        let (min, max) = self.extrema(lo, hi)?;
        Ok(min.abs().max(max.abs()))
    }

    /// `min u` over `[lo, hi]`.
    pub fn min_on(&self, lo: f64, hi: f64) -> Result<f64> {
        Ok(self.extrema(lo, hi)?.0)
    }

    /// `‖u‖_[0,1]`.
    pub fn unit_norm(&self) -> f64 {
        self.sup_norm(0.0, 1.0).expect("[0,1] is inside the mesh")
    }

    /// Two-column CSV, one row per node.
    pub fn to_csv(&self, value_header: &str) -> String {
        let mut out = format!("t,{value_header}\n");
        for (t, v) in self.mesh.nodes().iter().zip(&self.values) {
            writeln!(out, "{t},{v}").expect("writing to a String");
        }
        out
    }
}

/// Parses two-column numeric CSV with a header row.
pub fn parse_two_column_csv(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(',').map(str::trim);
        let parse = |c: Option<&str>| -> Result<f64> {
            c.and_then(|c| c.parse::<f64>().ok())
                .ok_or_else(|| Error::Eval(format!("bad CSV row {}: `{line}`", lineno + 1)))
        };
        let t = parse(cols.next())?;
        let v = parse(cols.next())?;
        if cols.next().is_some() {
            return Err(Error::Eval(format!(
                "CSV row {} has more than two columns",
                lineno + 1
            )));
        }
        rows.push((t, v));
    }
    Ok(rows)
}

fn lagrange4(xs: &[f64], ys: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        if t == xs[i] {
            return ys[i];
        }
        let mut w = 1.0;
        for j in 0..4 {
            if j != i {
                w *= (t - xs[j]) / (xs[i] - xs[j]);
            }
        }
        acc += w * ys[i];
    }
    acc
}

// Monomial coefficients of the cubic through (xs, ys) in the variable x − origin.
fn monomial_cubic(xs: &[f64], ys: &[f64], origin: f64) -> [f64; 4] {
    let z: Vec<f64> = xs.iter().map(|x| x - origin).collect();
    let mut dd = [ys[0], ys[1], ys[2], ys[3]];
    for level in 1..4 {
        for i in (level..4).rev() {
            dd[i] = (dd[i] - dd[i - 1]) / (z[i] - z[i - level]);
        }
    }
    let mut poly = [dd[3], 0.0, 0.0, 0.0];
    for (degree, k) in (0..3).rev().enumerate() {
        // poly <- poly * (x - z[k]) + dd[k]
        let mut next = [0.0; 4];
        for d in 0..=degree {
            next[d + 1] += poly[d];
            next[d] -= z[k] * poly[d];
        }
        next[0] += dd[k];
        poly = next;
    }
    poly
}

// Real roots of the derivative of c0 + c1 x + c2 x^2 + c3 x^3.
fn derivative_roots(c: &[f64; 4]) -> Vec<f64> {
    let (qa, qb, qc) = (3.0 * c[3], 2.0 * c[2], c[1]);
    let scale = qa.abs().max(qb.abs()).max(qc.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if qa.abs() <= 1e-14 * scale {
        return if qb != 0.0 {
            vec![-qc / qb]
        } else {
            Vec::new()
        };
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (qb + qb.signum() * disc.sqrt());
    let mut roots = vec![q / qa];
    if q != 0.0 {
        roots.push(qc / q);
    }
    roots
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureKind {
    /// Composite Simpson; the subdivision count per panel must be even.
    Simpson,
    /// Gauss–Legendre of the given order on every subpanel.
    GaussLegendre(usize),
}

/// A quadrature kind together with a resolution: each panel handed to
/// [`Quadrature::integrate`] is split into `subdivisions` equal subpanels.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    kind: QuadratureKind,
    subdivisions: usize,
    // reference nodes and weights on [0, 1]
    reference: Vec<(f64, f64)>,
}

impl Quadrature {
    pub fn new(kind: QuadratureKind, subdivisions: usize) -> Result<Self> {
        if subdivisions == 0 {
            return Err(Error::Quadrature("subdivisions must be positive".into()));
        }
        let reference = match kind {
            QuadratureKind::Simpson => {
                if !subdivisions.is_multiple_of(2) {
                    return Err(Error::Quadrature(format!(
                        "Simpson needs an even subdivision count, got {subdivisions}"
                    )));
                }
                Vec::new()
            }
            QuadratureKind::GaussLegendre(order) => {
                if !(1..=64).contains(&order) {
                    return Err(Error::Quadrature(format!(
                        "Gauss-Legendre order {order} not in 1..=64"
                    )));
                }
                gauss_legendre(order)
            }
        };
        Ok(Self {
            kind,
            subdivisions,
            reference,
        })
    }

    pub fn simpson(subdivisions: usize) -> Result<Self> {
        Self::new(QuadratureKind::Simpson, subdivisions)
    }

    pub fn kind(&self) -> QuadratureKind {
        self.kind
    }

    pub fn subdivisions(&self) -> usize {
        self.subdivisions
    }

    /// Nodes and weights over the panels `panels[i]..panels[i+1]`.
    ///
    /// Nodes shared by adjacent Simpson panels are merged.
    pub fn nodes_weights(&self, panels: &[f64]) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        let m = self.subdivisions;
        for w in panels.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let h = (hi - lo) / m as f64;
            let point = |j: usize| {
                if j == m {
                    hi
                } else {
                    lo + (hi - lo) * j as f64 / m as f64
                }
            };
            match self.kind {
                QuadratureKind::Simpson => {
                    for j in 0..=m {
                        let c = if j == 0 || j == m {
                            1.0
                        } else if j % 2 == 1 {
                            4.0
                        } else {
                            2.0
                        };
                        let x = point(j);
                        let wt = c * h / 3.0;
                        match out.last_mut() {
                            Some(last) if j == 0 && last.0 == x => last.1 += wt,
                            _ => out.push((x, wt)),
                        }
                    }
                }
                QuadratureKind::GaussLegendre(_) => {
                    for j in 0..m {
                        let (x0, x1) = (point(j), point(j + 1));
                        for &(xi, wi) in &self.reference {
                            out.push((x0 + (x1 - x0) * xi, (x1 - x0) * wi));
                        }
                    }
                }
            }
        }
        out
    }

    /// Integrates `f` over `[panels[0], panels[last]]`.
    pub fn integrate(&self, panels: &[f64], mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes_weights(panels)
            .into_iter()
            .map(|(x, w)| w * f(x))
            .sum()
    }

    pub fn try_integrate<E>(
        &self,
        panels: &[f64],
        mut f: impl FnMut(f64) -> std::result::Result<f64, E>,
    ) -> std::result::Result<f64, E> {
        let mut acc = 0.0;
        for (x, w) in self.nodes_weights(panels) {
            acc += w * f(x)?;
        }
        Ok(acc)
    }
}

/// A quadrature with fixed panel boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    quad: Quadrature,
    panels: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(quad: Quadrature, panels: Vec<f64>) -> Result<Self> {
        if panels.len() < 2 {
            return Err(Error::Quadrature("need at least one panel".into()));
        }
        if panels.iter().any(|x| !x.is_finite()) || panels.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Quadrature(
                "panel boundaries must be finite and strictly increasing".into(),
            ));
        }
        Ok(Self { quad, panels })
    }

    pub fn panels(&self) -> &[f64] {
        &self.panels
    }

    pub fn integrate(&self, f: impl FnMut(f64) -> f64) -> f64 {
        self.quad.integrate(&self.panels, f)
    }

    /// Integrates an integrand whose derivative jumps at `kinks`; every kink
    /// inside the integration range must be a panel boundary.
    pub fn integrate_with_kinks(&self, kinks: &[f64], f: impl FnMut(f64) -> f64) -> Result<f64> {
        let (lo, hi) = (self.panels[0], self.panels[self.panels.len() - 1]);
        for &k in kinks {
            if k > lo && k < hi && !self.panels.contains(&k) {
                return Err(Error::Quadrature(format!(
                    "kink at {k} lies inside a panel"
                )));
            }
        }
        Ok(self.integrate(f))
    }
}

// Gauss–Legendre nodes and weights mapped to [0, 1].
fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    let n = order;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push(((1.0 - x) / 2.0, w / 2.0));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_mesh(n: usize, n_hist: usize) -> Arc<Mesh> {
        Arc::new(Mesh::new(&ProblemGeometry::reflection_example(), n, n_hist).unwrap())
    }

    #[test]
    fn mesh_contains_markers() {
        let mesh = paper_mesh(16, 4);
        for t in [-1.0, 0.0, 0.125, 0.25, 1.0] {
            assert!(mesh.index_of(t).is_some(), "missing {t}");
        }
        assert_eq!(mesh.unit_nodes().len(), 17);
        assert_eq!(mesh.nodes().len(), 21);
        assert!(mesh.nodes().windows(2).all(|w| w[1] > w[0]));
        // uniform spacing 1/16 for this geometry
        for w in mesh.unit_nodes().windows(2) {
            assert!((w[1] - w[0] - 1.0 / 16.0).abs() < 1e-15);
        }
    }

    #[test]
    fn mesh_rejects_bad_counts() {
        let g = ProblemGeometry::reflection_example();
        assert!(Mesh::new(&g, 7, 4).is_err());
        assert!(Mesh::new(&g, 6, 4).is_err());
        assert!(Mesh::new(&g, 16, 0).is_err());
    }

    #[test]
    fn mesh_first_node_is_minus_r() {
        let g = ProblemGeometry::new(0.25, 0.25, 0.5, 0.125, 0.25).unwrap();
        let mesh = Mesh::new(&g, 8, 2).unwrap();
        assert_eq!(mesh.nodes()[0], -0.5);
        assert_eq!(*mesh.nodes().last().unwrap(), 1.0);
    }

    #[test]
    fn mesh_with_tiny_segments() {
        let g = ProblemGeometry::new(0.3, 0.2, 2.0, 0.01, 0.02).unwrap();
        let mesh = Mesh::new(&g, 8, 3).unwrap();
        assert_eq!(mesh.unit_nodes().len(), 9);
        for t in [0.01, 0.02, 0.2] {
            assert!(mesh.index_of(t).is_some());
        }
    }

    #[test]
    fn interpolation_basics() {
        let mesh = paper_mesh(16, 4);
        let u = GridFunction::from_fn(mesh.clone(), Interpolation::Cubic, |t| t * t);
        for (&t, &v) in mesh.nodes().iter().zip(u.values()) {
            assert_eq!(u.eval(t).unwrap(), v);
        }
        assert!((u.eval(0.1).unwrap() - 0.01).abs() < 1e-6);
        assert!(u.eval(1.0001).is_err());
        assert!(u.eval(-1.5).is_err());

        let lin = GridFunction::from_fn(mesh, Interpolation::Linear, |t| t);
        assert!((lin.eval(0.53).unwrap() - 0.53).abs() < 1e-15);
        assert!((lin.eval(-0.37).unwrap() + 0.37).abs() < 1e-15);
    }

    #[test]
    fn cubic_rule_is_exact_on_cubics() {
        let mesh = paper_mesh(16, 4);
        let p = |t: f64| 1.0 - 2.0 * t + 3.0 * t * t - 5.0 * t * t * t;
        let u = GridFunction::from_fn(mesh, Interpolation::Cubic, p);
        for k in 0..=100 {
            let t = k as f64 / 100.0;
            assert!((u.eval(t).unwrap() - p(t)).abs() < 1e-13, "t={t}");
        }
    }

    #[test]
    fn norms() {
        let mesh = paper_mesh(16, 4);
        let zero = GridFunction::zeros(mesh.clone(), Interpolation::Cubic);
        assert_eq!(zero.sup_norm(-1.0, 1.0).unwrap(), 0.0);

        let u = GridFunction::from_fn(mesh.clone(), Interpolation::Cubic, |t| 1.0 - 2.0 * t);
        assert!((u.sup_norm(0.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((u.min_on(0.0, 1.0).unwrap() + 1.0).abs() < 1e-15);

        let c = GridFunction::from_fn(mesh.clone(), Interpolation::Cubic, |_| 3.0);
        assert_eq!(c.min_on(0.3, 0.7).unwrap(), 3.0);
        assert!(c.sup_norm(0.5, 0.5).is_err());
        assert!(c.sup_norm(-2.0, 0.5).is_err());
    }

    #[test]
    fn norm_refinement_finds_interior_peak() {
        // peak at t = 0.53, between nodes
        let mesh = paper_mesh(16, 4);
        let u = GridFunction::from_fn(mesh, Interpolation::Cubic, |t| {
            1.0 - (t - 0.53) * (t - 0.53)
        });
        let nodal = u.values().iter().cloned().fold(f64::MIN, f64::max);
        assert!(nodal < 1.0 - 1e-4);
        assert!((u.sup_norm(0.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn csv_round_trip() {
        let mesh = paper_mesh(8, 2);
        let u = GridFunction::from_fn(mesh, Interpolation::Cubic, |t| (3.0 * t).sin() / 7.0);
        let csv = u.to_csv("u");
        assert!(csv.starts_with("t,u\n"));
        let rows = parse_two_column_csv(&csv).unwrap();
        assert_eq!(rows.len(), u.values().len());
        for ((t, v), (&tn, &vn)) in rows.iter().zip(u.mesh().nodes().iter().zip(u.values())) {
            assert_eq!(*t, tn);
            assert_eq!(*v, vn);
        }
        assert!(parse_two_column_csv("t,u\n1,2,3\n").is_err());
        assert!(parse_two_column_csv("t,u\n1,x\n").is_err());
    }

    #[test]
    fn simpson_exact_values() {
        let q = Quadrature::simpson(2).unwrap();
        assert!((q.integrate(&[0.0, 1.0], |s| s) - 0.5).abs() < 1e-16);
        let v = q.integrate(&[0.125, 0.25], |s| s * s);
        assert!((v - 7.0 / 1536.0).abs() < 1e-17);
        let q = Quadrature::simpson(4).unwrap();
        let cubic = q.integrate(&[0.0, 0.3, 1.0], |s| s * s * s);
        assert!((cubic - 0.25).abs() < 1e-15);
    }

    #[test]
    fn green_function_integral_with_kink_splits() {
        let g = ProblemGeometry::reflection_example();
        let rule = QuadratureRule::new(Quadrature::simpson(8).unwrap(), vec![0.0, 0.25, 0.5, 1.0])
            .unwrap();
        let v = rule
            .integrate_with_kinks(&[0.25, 0.5], |s| g.kernel(0.5, s).unwrap())
            .unwrap();
        assert!((v - 5.0 / 32.0).abs() < 1e-15);

        let coarse = QuadratureRule::new(Quadrature::simpson(8).unwrap(), vec![0.0, 1.0]).unwrap();
        assert!(coarse.integrate_with_kinks(&[0.25, 0.5], |s| s).is_err());
    }

    #[test]
    fn quadrature_validation() {
        assert!(Quadrature::simpson(3).is_err());
        assert!(Quadrature::simpson(0).is_err());
        assert!(Quadrature::new(QuadratureKind::GaussLegendre(0), 1).is_err());
        let q = Quadrature::simpson(2).unwrap();
        assert!(QuadratureRule::new(q.clone(), vec![0.0]).is_err());
        assert!(QuadratureRule::new(q, vec![0.0, 0.5, 0.5]).is_err());
    }

    #[test]
    fn gauss_legendre_exactness() {
        for order in 1..=12 {
            let q = Quadrature::new(QuadratureKind::GaussLegendre(order), 1).unwrap();
            let deg = 2 * order - 1;
            let v = q.integrate(&[0.0, 1.0], |s| s.powi(deg as i32));
            assert!(
                (v - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14,
                "order {order}"
            );
            let w: f64 = q.nodes_weights(&[0.0, 1.0]).iter().map(|p| p.1).sum();
            assert!((w - 1.0).abs() < 1e-14);
        }
        let q = Quadrature::new(QuadratureKind::GaussLegendre(8), 3).unwrap();
        let v = q.integrate(&[0.0, 0.5, 2.0], f64::exp);
        assert!(
            (v - (2f64.exp() - 1.0)).abs() < 1e-12,
            "{v} {}",
            2f64.exp() - 1.0
        );
    }

    #[test]
    fn simpson_merges_shared_nodes() {
        let q = Quadrature::simpson(2).unwrap();
        let nw = q.nodes_weights(&[0.0, 0.5, 1.0]);
        assert_eq!(nw.len(), 5);
        let total: f64 = nw.iter().map(|p| p.1).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lagrange_and_monomial_agree() {
        let xs = [0.0, 0.1, 0.25, 0.4];
        let ys = [1.0, -0.3, 0.7, 2.0];
        let c = monomial_cubic(&xs, &ys, 0.1);
        for k in 0..20 {
            let t = k as f64 * 0.02;
            let z = t - 0.1;
            let mono = c[0] + z * (c[1] + z * (c[2] + z * c[3]));
            assert!((mono - lagrange4(&xs, &ys, t)).abs() < 1e-12);
        }
    }
}
