//! Continuous piecewise-linear functions on a mesh.

use crate::error::{FracError, Result};
use crate::mesh::{Interval, Mesh, Point};
use crate::real::Real;

/// Relative distance under which a requested cut point snaps to an existing node.
const SNAP: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T> {
    mesh: Mesh<T>,
    values: Vec<T>,
}

impl<T: Real> GridFunction<T> {
    pub fn new(mesh: Mesh<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(FracError::input(
                "values",
                format!("{} values for {} nodes", values.len(), mesh.len()),
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FracError::input("values", format!("non-finite value at node {i}")));
        }
        Ok(GridFunction { mesh, values })
    }

    /// Interpolant of `f` at the mesh nodes.
    pub fn sample(mesh: Mesh<T>, f: impl Fn(&Point<T>) -> Result<T>) -> Result<Self> {
        let values = mesh.points().iter().map(&f).collect::<Result<Vec<_>>>()?;
        Self::new(mesh, values)
    }

    pub fn constant(mesh: Mesh<T>, c: T) -> Result<Self> {
        let n = mesh.len();
        Self::new(mesh, vec![c; n])
    }

    pub fn mesh(&self) -> &Mesh<T> {
        &self.mesh
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn span(&self) -> Interval<T> {
        self.mesh.span()
    }

    /// Value at local coordinate `theta` in `[0, 1]` of element `e`.
    #[inline]
    pub fn at(&self, e: usize, theta: T) -> T {
        self.values[e] * (T::one() - theta) + self.values[e + 1] * theta
    }

    pub fn eval(&self, x: T) -> Result<T> {
        self.eval_point(&Point::in_interval(x, &self.span()))
    }

    pub fn eval_point(&self, p: &Point<T>) -> Result<T> {
        let span = self.span();
        let slack = span.len() * T::lit(SNAP);
        if p.lo < -slack || p.hi < -slack || !p.x.is_finite() {
            return Err(FracError::domain(
                "x",
                format!("{} outside the mesh span [{}, {}]", p.x, span.a, span.b),
            ));
        }
        let q = Point { x: p.x, lo: p.lo.max(T::zero()), hi: p.hi.max(T::zero()) };
        let e = self.mesh.locate(&q).ok_or_else(|| FracError::domain("x", format!("{} outside the mesh", p.x)))?;
        Ok(self.at(e, self.theta(e, &q)))
    }

    /// Local coordinate of `p` in element `e`, from whichever node coordinate is accurate.
    pub(crate) fn theta(&self, e: usize, p: &Point<T>) -> T {
        theta_in(&self.mesh, e, p)
    }

    /// Same function with `c` added.
    pub fn offset(&self, c: T) -> Self {
        GridFunction { mesh: self.mesh.clone(), values: self.values.iter().map(|&v| v + c).collect() }
    }

    pub fn scale(&self, c: T) -> Self {
        GridFunction { mesh: self.mesh.clone(), values: self.values.iter().map(|&v| v * c).collect() }
    }

    /// Pointwise sum; both functions must live on the same mesh.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.mesh != other.mesh {
            return Err(FracError::input("mesh", "functions live on different meshes"));
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| a + b).collect();
        Ok(GridFunction { mesh: self.mesh.clone(), values })
    }

    /// `x -> u((x - shift) / scale)` on the image mesh.
    pub fn push_forward(&self, scale: T, shift: T) -> Result<Self> {
        Ok(GridFunction { mesh: self.mesh.affine(scale, shift)?, values: self.values.clone() })
    }

    /// Same function on the bisected mesh.
    pub fn bisect(&self) -> Self {
        let mesh = self.mesh.bisect();
        let mut values = Vec::with_capacity(mesh.len());
        for w in self.values.windows(2) {
            values.push(w[0]);
            values.push((w[0] + w[1]) * T::lit(0.5));
        }
        values.push(*self.values.last().unwrap());
        GridFunction { mesh, values }
    }

    /// Restriction to `domain`, with the domain endpoints as new boundary nodes.
    pub fn restrict(&self, domain: &Interval<T>) -> Result<Self> {
        let span = self.span();
        let slack = span.len() * T::lit(SNAP);
        if !span.contains(domain, slack) {
            return Err(FracError::domain(
                "domain",
                format!("({}, {}) not inside the mesh span ({}, {})", domain.a, domain.b, span.a, span.b),
            ));
        }
        let c = domain.a.max(span.a);
        let d = domain.b.min(span.b);
        if !(d > c) {
            return Err(FracError::input("domain", "empty domain"));
        }
        if (c - span.a).abs() <= slack && (span.b - d).abs() <= slack {
            return Ok(self.clone());
        }
        let pc = self.cut_point(Point::in_interval(c, &span), true);
        let pd = self.cut_point(Point::in_interval(d, &span), false);
        let (ec, vc) = self.cut_value(&pc)?;
        let (ed, vd) = self.cut_value(&pd)?;
        let sub = Interval::new(pc.x, pd.x)?;
        // shift node coordinates to the new endpoints
        let off_lo = pc.lo;
        let off_hi = pd.hi;
        let reframe = |p: &Point<T>| Point { x: p.x, lo: p.lo - off_lo, hi: p.hi - off_hi };
        let sub_len = pc.to(&pd);
        let mut nodes = vec![Point { x: pc.x, lo: T::zero(), hi: sub_len }];
        let mut values = vec![vc];
        let first = ec.0;
        let last = ed.0;
        for i in first..=last {
            let p = self.mesh.points()[i];
            if pc.to(&p) > T::zero() && p.to(&pd) > T::zero() {
                nodes.push(reframe(&p));
                values.push(self.values[i]);
            }
        }
        nodes.push(Point { x: pd.x, lo: sub_len, hi: T::zero() });
        values.push(vd);
        let mesh = Mesh::from_points(sub, nodes, crate::mesh::Grading::Custom)?;
        Self::new(mesh, values)
    }

    /// Snaps a cut location to a nearby node; returns the node point if snapped.
    fn cut_point(&self, p: Point<T>, left: bool) -> Point<T> {
        let span = self.span();
        let tol = span.len() * T::lit(SNAP);
        if left && p.lo <= tol {
            return self.mesh.points()[0];
        }
        if !left && p.hi <= tol {
            return *self.mesh.points().last().unwrap();
        }
        if let Some(e) = self.mesh.locate(&p) {
            for &i in &[e, e + 1] {
                let q = self.mesh.points()[i];
                if q.to(&p).abs() <= tol * (T::one() + p.x.abs()) {
                    return q;
                }
            }
        }
        p
    }

    /// Returns ((first node index at or right of p, last index at or left of p), value).
    fn cut_value(&self, p: &Point<T>) -> Result<((usize, usize), T)> {
        let e = self.mesh.locate(p).ok_or_else(|| FracError::domain("domain", "cut outside mesh"))?;
        Ok(((e, e + 1), self.at(e, self.theta(e, p))))
    }
}

pub(crate) fn theta_in<T: Real>(mesh: &Mesh<T>, e: usize, p: &Point<T>) -> T {
    let a = mesh.points()[e];
    let b = mesh.points()[e + 1];
    let h = a.to(&b);
    let t = if p.lo <= p.hi { (p.lo - a.lo) / h } else { (a.hi - p.hi) / h };
    t.max(T::zero()).min(T::one())
}
