//! Intervals, meshes and points with boundary-accurate coordinates.
//!
//! Nodes are stored twice: as the distance to the left endpoint and as the
//! distance to the right endpoint. Graded meshes put nodes at distances far
//! below the spacing of floating-point numbers near the right endpoint, and
//! every length or gap is taken from whichever coordinate is small there.

use serde::Serialize;

use crate::error::{FracError, Result};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval<T> {
    pub a: T,
    pub b: T,
}

impl<T: Real> Interval<T> {
    pub fn new(a: T, b: T) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(FracError::input("interval", format!("non-finite endpoints ({a}, {b})")));
        }
        if !(a < b) {
            return Err(FracError::domain("interval", format!("need a < b, got ({a}, {b})")));
        }
        Ok(Interval { a, b })
    }

    pub fn unit() -> Self {
        Interval { a: T::zero(), b: T::one() }
    }

    pub fn len(&self) -> T {
        self.b - self.a
    }

    pub fn contains(&self, other: &Interval<T>, slack: T) -> bool {
        other.a >= self.a - slack && other.b <= self.b + slack
    }

    pub fn midpoint(&self) -> T {
        (self.a + self.b) * T::lit(0.5)
    }
}

/// A location inside a mesh span, with its distances to both span endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point<T> {
    pub x: T,
    /// `x - a`
    pub lo: T,
    /// `b - x`
    pub hi: T,
}

impl<T: Real> Point<T> {
    /// Point on `(0, 1)` from its abscissa.
    pub fn unit(x: T) -> Self {
        Point { x, lo: x, hi: T::one() - x }
    }

    pub fn in_interval(x: T, span: &Interval<T>) -> Self {
        Point { x, lo: x - span.a, hi: span.b - x }
    }

    /// Point at distance `lo` from the left end of `span`.
    pub fn from_left(lo: T, span: &Interval<T>) -> Self {
        Point { x: span.a + lo, lo, hi: span.len() - lo }
    }

    /// Point at distance `hi` from the right end of `span`.
    pub fn from_right(hi: T, span: &Interval<T>) -> Self {
        Point { x: span.b - hi, lo: span.len() - hi, hi }
    }

    /// Distance to the nearer endpoint.
    pub fn delta(&self) -> T {
        self.lo.min(self.hi)
    }

    /// Signed distance `other - self`, evaluated in the better-conditioned coordinate.
    pub fn to(&self, other: &Point<T>) -> T {
        if self.lo.min(other.lo) <= self.hi.min(other.hi) {
            other.lo - self.lo
        } else {
            self.hi - other.hi
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Grading {
    Uniform,
    /// Geometric toward both endpoints with the given ratio in `(0, 1)`.
    Geometric { ratio: f64, depth: usize },
    /// Arbitrary user-supplied nodes.
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh<T> {
    span: Interval<T>,
    nodes: Vec<Point<T>>,
    grading: Grading,
}

impl<T: Real> Mesh<T> {
    /// Mesh from sorted abscissae; first and last must be the span endpoints.
    pub fn from_nodes(xs: &[T]) -> Result<Self> {
        if xs.len() < 2 {
            return Err(FracError::input("mesh", "at least two nodes required"));
        }
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(FracError::input("mesh", "non-finite node"));
        }
        let span = Interval::new(xs[0], xs[xs.len() - 1])?;
        let nodes = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                if i == 0 {
                    Point { x, lo: T::zero(), hi: span.len() }
                } else if i == xs.len() - 1 {
                    Point { x, lo: span.len(), hi: T::zero() }
                } else {
                    Point::in_interval(x, &span)
                }
            })
            .collect();
        Self::from_points(span, nodes, Grading::Custom)
    }

    pub(crate) fn from_points(span: Interval<T>, nodes: Vec<Point<T>>, grading: Grading) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(FracError::input("mesh", "at least two nodes required"));
        }
        for w in nodes.windows(2) {
            let d = w[0].to(&w[1]);
            if !(d > T::zero()) {
                return Err(FracError::input(
                    "mesh",
                    format!("nodes must be strictly increasing (duplicate or reversed near x = {})", w[1].x),
                ));
            }
        }
        Ok(Mesh { span, nodes, grading })
    }

    /// `n` equally spaced nodes.
    pub fn uniform(span: Interval<T>, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(FracError::input("mesh_n", "at least two nodes required"));
        }
        let len = span.len();
        let h = len / T::count(n - 1);
        let nodes = (0..n)
            .map(|i| {
                if 2 * i < n {
                    Point::from_left(h * T::count(i), &span)
                } else {
                    Point::from_right(h * T::count(n - 1 - i), &span)
                }
            })
            .collect();
        Self::from_points(span, nodes, Grading::Uniform)
    }

    /// Geometric grading toward both endpoints: distances `(L/2) r^k`, `k = 0..=depth`,
    /// from each end, plus the endpoints. `2 depth + 3` nodes.
    pub fn geometric(span: Interval<T>, ratio: f64, depth: usize) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(FracError::domain("grading", format!("ratio {ratio} not in (0, 1)")));
        }
        let half = span.len() * T::lit(0.5);
        let r = T::lit(ratio);
        let mut dists = Vec::with_capacity(depth + 1);
        let mut d = half;
        for _ in 0..=depth {
            dists.push(d);
            d = d * r;
        }
        if dists.last().is_none_or(|d| !(*d > T::zero())) {
            return Err(FracError::domain("grading", "depth underflows the scalar type"));
        }
        let mut nodes = Vec::with_capacity(2 * depth + 3);
        nodes.push(Point::from_left(T::zero(), &span));
        for &d in dists.iter().rev() {
            nodes.push(Point::from_left(d, &span));
        }
        for &d in dists.iter().skip(1) {
            nodes.push(Point::from_right(d, &span));
        }
        nodes.push(Point::from_right(T::zero(), &span));
        Self::from_points(span, nodes, Grading::Geometric { ratio, depth })
    }

    /// Geometric mesh with `elements` elements (even, >= 4) for the given ratio.
    pub fn geometric_elements(span: Interval<T>, ratio: f64, elements: usize) -> Result<Self> {
        if elements < 4 || !elements.is_multiple_of(2) {
            return Err(FracError::domain("mesh_n", format!("{elements} elements: need an even count >= 4")));
        }
        Self::geometric(span, ratio, elements / 2 - 1)
    }

    /// Geometric mesh with `elements` elements whose boundary elements have width `innermost`.
    pub fn geometric_to(span: Interval<T>, elements: usize, innermost: f64) -> Result<Self> {
        if elements < 4 || !elements.is_multiple_of(2) {
            return Err(FracError::domain("mesh_n", format!("{elements} elements: need an even count >= 4")));
        }
        let len = span.len().to_f64_lossy();
        if !(innermost > 0.0 && innermost < 0.5 * len) {
            return Err(FracError::domain("innermost", format!("{innermost} not in (0, |span|/2)")));
        }
        let depth = elements / 2 - 1;
        let ratio = ((innermost / (0.5 * len)).ln() / depth as f64).exp();
        Self::geometric(span, ratio, depth)
    }

    /// Image of the mesh under `x -> scale * x + shift` (`scale > 0`).
    pub fn affine(&self, scale: T, shift: T) -> Result<Self> {
        if !(scale > T::zero()) || !scale.is_finite() || !shift.is_finite() {
            return Err(FracError::domain("scale", format!("need a finite positive scale, got {scale}")));
        }
        let span = Interval::new(self.span.a * scale + shift, self.span.b * scale + shift)?;
        let nodes = self
            .nodes
            .iter()
            .map(|p| {
                let lo = p.lo * scale;
                let hi = p.hi * scale;
                let x = if lo <= hi { span.a + lo } else { span.b - hi };
                Point { x, lo, hi }
            })
            .collect();
        Ok(Mesh { span, nodes, grading: self.grading })
    }

    /// Inserts the midpoint of every element (nested refinement).
    pub fn bisect(&self) -> Self {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len() - 1);
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            let lo = (w[0].lo + w[1].lo) * T::lit(0.5);
            let hi = (w[0].hi + w[1].hi) * T::lit(0.5);
            let x = if lo <= hi { self.span.a + lo } else { self.span.b - hi };
            nodes.push(Point { x, lo, hi });
        }
        nodes.push(*self.nodes.last().unwrap());
        Mesh { span: self.span, nodes, grading: Grading::Custom }
    }

    /// Mesh on the same span with extra breakpoints merged in.
    pub fn with_breakpoints(&self, extra: &[Point<T>]) -> Result<Self> {
        let mut all: Vec<Point<T>> = self.nodes.clone();
        for p in extra {
            if p.lo > T::zero() && p.hi > T::zero() {
                all.push(*p);
            }
        }
        all.sort_by(|a, b| {
            let d = a.to(b);
            if d > T::zero() {
                std::cmp::Ordering::Less
            } else if d < T::zero() {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        });
        all.dedup_by(|a, b| a.to(b) == T::zero());
        Self::from_points(self.span, all, Grading::Custom)
    }

    pub fn span(&self) -> Interval<T> {
        self.span
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn points(&self) -> &[Point<T>] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> T {
        self.nodes[i].x
    }

    pub fn xs(&self) -> Vec<T> {
        self.nodes.iter().map(|p| p.x).collect()
    }

    /// Length of element `e` (between nodes `e` and `e + 1`).
    pub fn h(&self, e: usize) -> T {
        self.nodes[e].to(&self.nodes[e + 1])
    }

    /// `x_j - x_i`.
    pub fn dist(&self, i: usize, j: usize) -> T {
        self.nodes[i].to(&self.nodes[j])
    }

    /// Index of the element containing `p` (last element for the right endpoint).
    pub fn locate(&self, p: &Point<T>) -> Option<usize> {
        if p.lo < T::zero() || p.hi < T::zero() {
            return None;
        }
        let n = self.nodes.len();
        // first node strictly to the right of p
        let mut lo = 0usize;
        let mut hi = n - 1;
        if self.nodes[0].to(p) < T::zero() || p.to(&self.nodes[n - 1]) < T::zero() {
            return None;
        }
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.nodes[mid].to(p) >= T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(lo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_short_meshes() {
        assert!(Mesh::from_nodes(&[0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(Mesh::from_nodes(&[0.0]).is_err());
        assert!(Mesh::from_nodes(&[0.0, f64::NAN, 1.0]).is_err());
        assert!(Mesh::<f64>::geometric(Interval::unit(), 1.5, 3).is_err());
        assert!(Interval::new(1.0, 1.0).is_err());
    }

    #[test]
    fn geometric_mesh_resolves_right_end_below_ulp() {
        let m = Mesh::<f64>::geometric(Interval::unit(), 0.5, 100).unwrap();
        assert_eq!(m.len(), 203);
        let n = m.len();
        let h_last = m.h(n - 2);
        assert_eq!(h_last, 0.5f64.powi(101));
        assert_eq!(m.h(0), h_last);
        // the two deepest right nodes coincide in x but not in the right coordinate
        assert_eq!(m.node(n - 2), 1.0);
        assert!(m.dist(n - 3, n - 2) > 0.0);
    }

    #[test]
    fn bisection_is_nested() {
        let m = Mesh::<f64>::geometric(Interval::unit(), 0.5, 5).unwrap();
        let f = m.bisect();
        assert_eq!(f.len(), 2 * m.len() - 1);
        for i in 0..m.len() {
            assert_eq!(f.node(2 * i), m.node(i));
        }
    }

    #[test]
    fn locate_finds_containing_element() {
        let m = Mesh::uniform(Interval::new(0.0, 2.0).unwrap(), 5).unwrap();
        let span = m.span();
        assert_eq!(m.locate(&Point::in_interval(0.7, &span)), Some(1));
        assert_eq!(m.locate(&Point::in_interval(2.0, &span)), Some(3));
        assert_eq!(m.locate(&Point::in_interval(0.0, &span)), Some(0));
        assert_eq!(m.locate(&Point::in_interval(2.5, &span)), None);
    }
}
