//! The log-corrected boundary Hardy functional.
//!
//! Quadrature for `∫ F(x) dx / (δ log^τ(κ/δ))`: every segment between
//! breakpoints is cut geometrically toward the boundary (ratio
//! `grading_ratio`), each cell gets a Gauss rule in `δ`, and a segment that
//! touches the boundary ends in a tail `(0, δ_t)` integrated in the variable
//! `r = log(κ/δ)^(1-τ)`, in which the weight becomes constant.

use crate::config::NumericConfig;
use crate::error::{FracError, Result};
use crate::grid::{theta_in, GridFunction};
use crate::lp::{integral, mean_weights};
use crate::mesh::{Interval, Mesh, Point};
use crate::params::{Centering, HardyWeight};
use crate::quadrature::gauss_unit;
use crate::real::{pairwise_sum, Real};

/// Geometric cells (ratio 1/2 in `ρ`) covering the tail before its final cell.
const TAIL_CELLS: usize = 60;

/// Quadrature node of a boundary rule.
#[derive(Debug, Clone, Copy)]
pub struct RulePoint<T> {
    pub point: Point<T>,
    /// `log(1/δ)`, finite even where `δ` underflows.
    pub log_inv_delta: T,
    /// Weight including `dx / (δ log^τ(κ/δ))`.
    pub weight: T,
    /// Element and local coordinate (grid rules only).
    pub elem: usize,
    pub theta: T,
    /// Index of the tail cell, `None` outside the tail.
    pub tail_cell: Option<usize>,
}

impl<T: Real> RulePoint<T> {
    fn new(point: Point<T>, log_inv_delta: T, weight: T, tail_cell: Option<usize>) -> Self {
        RulePoint { point, log_inv_delta, weight, elem: 0, theta: T::zero(), tail_cell }
    }
}

struct RuleSpec<T> {
    span: Interval<T>,
    kappa: T,
    tau: T,
    cfg: NumericConfig,
    innermost: T,
}

impl<T: Real> RuleSpec<T> {
    fn weight(&self, delta: T) -> T {
        T::one() / (delta * (self.kappa / delta).ln().powf(self.tau))
    }

    /// Rule on the segment `[pa, pb]`, which lies in one half of the span.
    fn segment(&self, pa: &Point<T>, pb: &Point<T>, out: &mut Vec<RulePoint<T>>) {
        if !(pa.to(pb) > T::zero()) {
            return;
        }
        let left = pa.lo + pb.lo <= pa.hi + pb.hi;
        let (d0, d1) = if left { (pa.lo, pb.lo) } else { (pb.hi, pa.hi) };
        let at = |d: T| if left { Point::from_left(d, &self.span) } else { Point::from_right(d, &self.span) };
        let rule = gauss_unit(self.cfg.boundary_points);
        let r = T::lit(self.cfg.grading_ratio);
        let floor = if d0 > T::zero() { d0 } else { (d1 * self.innermost).max(T::min_positive_value() * T::lit(1e6)) };
        let mut hi = d1;
        loop {
            let lo = (hi * r).max(floor);
            // a sliver next to the floor is merged into the previous cell
            let lo = if lo - floor < floor * T::lit(1e-3) { floor } else { lo };
            let len = hi - lo;
            for &(x, w) in rule {
                let d = lo + len * T::lit(x);
                out.push(RulePoint::new(at(d), -d.ln(), T::lit(w) * len * self.weight(d), None));
            }
            if lo <= floor {
                break;
            }
            hi = lo;
        }
        if d0 == T::zero() {
            // ∫_0^floor F dδ/(δ s^τ) = ∫_0^{ρ_t} F dρ / (τ - 1) with ρ = s^(1-τ), s = log(κ/δ)
            let tm1 = self.tau - T::one();
            let rho_t = (self.kappa / floor).ln().powf(-tm1);
            let mut top = rho_t;
            for cell in 0..=TAIL_CELLS {
                let bottom = if cell == TAIL_CELLS { T::zero() } else { top * T::lit(0.5) };
                let len = top - bottom;
                for &(x, w) in rule {
                    let rho = bottom + len * T::lit(x);
                    let s = (rho.ln() * (-T::one() / tm1)).exp().min(T::max_value());
                    let d = self.kappa * (-s).exp();
                    out.push(RulePoint::new(at(d), s - self.kappa.ln(), T::lit(w) * len / tm1, Some(cell)));
                }
                top = bottom;
            }
        }
    }

    /// Segments of `window` between `breaks` and the span midpoint.
    fn build(&self, window: &Interval<T>, breaks: &[Point<T>]) -> Result<Vec<RulePoint<T>>> {
        let (wa, wb, mut pts) = self.breakpoints(window)?;
        for p in breaks {
            if wa.to(p) > T::zero() && p.to(&wb) > T::zero() {
                pts.push(*p);
            }
        }
        sort_points(&mut pts);
        let mut out = Vec::new();
        for w in pts.windows(2) {
            self.segment(&w[0], &w[1], &mut out);
        }
        Ok(out)
    }

    /// Window ends and the interior nodes between them.
    #[allow(clippy::type_complexity)]
    fn breakpoints(&self, window: &Interval<T>) -> Result<(Point<T>, Point<T>, Vec<Point<T>>)> {
        let slack = self.span.len() * T::lit(1e-14);
        if !self.span.contains(window, slack) {
            return Err(FracError::domain(
                "window",
                format!("({}, {}) not inside ({}, {})", window.a, window.b, self.span.a, self.span.b),
            ));
        }
        let wa = if window.a <= self.span.a + slack {
            Point::from_left(T::zero(), &self.span)
        } else {
            Point::in_interval(window.a, &self.span)
        };
        let wb = if window.b >= self.span.b - slack {
            Point::from_right(T::zero(), &self.span)
        } else {
            Point::in_interval(window.b, &self.span)
        };
        if !(wa.to(&wb) > T::zero()) {
            return Err(FracError::input("window", "empty window"));
        }
        let half = self.span.len() * T::lit(0.5);
        let dmax = half.min(wa.delta().max(wb.delta()));
        let dmax = if wa.lo < half && wb.lo > half { half } else { dmax };
        if !((self.kappa / dmax).ln() > T::zero()) {
            return Err(FracError::domain("window", format!("log({}/δ) is not positive for δ up to {dmax}", self.kappa)));
        }
        let mut pts = vec![wa, wb];
        let mid = Point::from_left(half, &self.span);
        if wa.to(&mid) > T::zero() && mid.to(&wb) > T::zero() {
            pts.push(mid);
        }
        Ok((wa, wb, pts))
    }
}

fn sort_points<T: Real>(pts: &mut Vec<Point<T>>) {
    pts.sort_by(|a, b| {
        let d = a.to(b);
        if d > T::zero() {
            std::cmp::Ordering::Less
        } else if d < T::zero() {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Equal
        }
    });
    pts.dedup_by(|a, b| a.to(b) == T::zero());
}

/// Boundary rule for a mesh; every node lies inside a single element.
pub fn grid_rule<T: Real>(mesh: &Mesh<T>, w: &HardyWeight<T>, cfg: &NumericConfig) -> Result<Vec<RulePoint<T>>> {
    cfg.validate()?;
    let spec = RuleSpec { span: mesh.span(), kappa: w.log_scale, tau: w.tau, cfg: *cfg, innermost: T::lit(cfg.innermost_width) };
    let (wa, wb, extra) = spec.breakpoints(&w.window)?;
    let nodes = mesh.points();
    let mut out = Vec::new();
    let mut buf = Vec::new();
    for e in 0..mesh.elements() {
        let (na, nb) = (nodes[e], nodes[e + 1]);
        let a = if na.to(&wa) > T::zero() { wa } else { na };
        let b = if wb.to(&nb) > T::zero() { wb } else { nb };
        if !(a.to(&b) > T::zero()) {
            continue;
        }
        let mut cuts = vec![a, b];
        for p in &extra {
            if a.to(p) > T::zero() && p.to(&b) > T::zero() {
                cuts.push(*p);
            }
        }
        sort_points(&mut cuts);
        for c in cuts.windows(2) {
            buf.clear();
            spec.segment(&c[0], &c[1], &mut buf);
            for rp in &buf {
                out.push(RulePoint { elem: e, theta: theta_in(mesh, e, &rp.point), ..*rp });
            }
        }
    }
    Ok(out)
}

/// Boundary rule on a span for closed-form integrands; `breaks` are extra kink locations.
pub fn analytic_rule<T: Real>(
    span: Interval<T>,
    window: &Interval<T>,
    breaks: &[Point<T>],
    kappa: T,
    tau: T,
    cfg: &NumericConfig,
) -> Result<Vec<RulePoint<T>>> {
    cfg.validate()?;
    let spec = RuleSpec { span, kappa, tau, cfg: *cfg, innermost: T::lit(cfg.innermost_width) };
    spec.build(window, breaks)
}

/// `∫_window F dx / (δ log^τ(κ/δ))` for a closed-form `F(point, log(1/δ))`.
pub fn weighted_integral<T: Real>(
    f: impl Fn(&Point<T>, T) -> Result<T>,
    span: Interval<T>,
    window: &Interval<T>,
    breaks: &[Point<T>],
    kappa: T,
    tau: T,
    cfg: &NumericConfig,
) -> Result<T> {
    let rule = analytic_rule(span, window, breaks, kappa, tau, cfg)?;
    let terms = rule.iter().map(|r| Ok(r.weight * f(&r.point, r.log_inv_delta)?)).collect::<Result<Vec<T>>>()?;
    checked_sum(&rule, &terms, cfg)
}

/// Sums rule terms and rejects sums whose boundary tail does not settle.
///
/// The tail cells shrink geometrically toward the boundary; for an
/// integrable `F` their contributions decay geometrically as well. The sum is
/// flagged when the deeper half of the cells carries more than
/// `divergence_factor - 1` times the rest, or when the deepest geometric cell
/// still contributes more than `1e-6` of the total.
fn checked_sum<T: Real>(rule: &[RulePoint<T>], terms: &[T], cfg: &NumericConfig) -> Result<T> {
    let total = pairwise_sum(terms);
    if !total.is_finite() {
        return Err(FracError::nonconvergent("boundary integral", format!("non-finite value {total}")));
    }
    let mut deep = T::zero();
    let mut last = T::zero();
    for (r, &t) in rule.iter().zip(terms) {
        if let Some(c) = r.tail_cell {
            if c >= TAIL_CELLS / 2 {
                deep = deep + t;
            }
            if c == TAIL_CELLS - 1 {
                last = last + t;
            }
        }
    }
    let shallow = (total - deep).abs();
    if total.abs() > T::zero()
        && (deep.abs() > (T::lit(cfg.divergence_factor) - T::one()) * shallow || last.abs() > T::lit(1e-6) * total.abs())
    {
        return Err(FracError::nonconvergent(
            "boundary integral",
            format!("boundary tail does not decay: total {total}, deep half of tail {deep}, deepest cell {last}"),
        ));
    }
    Ok(total)
}

fn centre<T: Real>(u: &GridFunction<T>, w: &HardyWeight<T>) -> T {
    match w.centering {
        Centering::SubtractMean => integral(u) / u.span().len(),
        Centering::Raw => T::zero(),
    }
}

/// `∫_window |v|^τ δ^(τγ) / log^τ(κ/δ)`.
pub fn hardy_pow<T: Real>(u: &GridFunction<T>, w: &HardyWeight<T>, cfg: &NumericConfig) -> Result<T> {
    let rule = grid_rule(u.mesh(), w, cfg)?;
    // centred values are unchanged by a shift, which makes constants exactly zero
    let shifted;
    let u = if w.centering == Centering::SubtractMean {
        shifted = u.offset(-u.values()[0]);
        &shifted
    } else {
        u
    };
    let c = centre(u, w);
    let terms: Vec<T> = rule.iter().map(|r| r.weight * (u.at(r.elem, r.theta) - c).abs().powf(w.tau)).collect();
    checked_sum(&rule, &terms, cfg)
}

/// `‖ δ^γ v / log(κ/δ) ‖_{L^τ(window)}` with `v` centred as the weight prescribes.
pub fn hardy_weighted_norm<T: Real>(u: &GridFunction<T>, w: &HardyWeight<T>) -> Result<T> {
    hardy_weighted_norm_with(u, w, &NumericConfig::default())
}

pub fn hardy_weighted_norm_with<T: Real>(u: &GridFunction<T>, w: &HardyWeight<T>, cfg: &NumericConfig) -> Result<T> {
    Ok(hardy_pow(u, w, cfg)?.powf(T::one() / w.tau))
}

/// Precomputed rule for repeated evaluation on a fixed mesh.
#[derive(Debug, Clone)]
pub struct HardyForm<T> {
    rule: Vec<RulePoint<T>>,
    mean: Vec<T>,
    weight: HardyWeight<T>,
    n: usize,
}

impl<T: Real> HardyForm<T> {
    pub fn new(mesh: &Mesh<T>, w: &HardyWeight<T>, cfg: &NumericConfig) -> Result<Self> {
        let rule = grid_rule(mesh, w, cfg)?;
        let mean = match w.centering {
            Centering::SubtractMean => mean_weights(mesh),
            Centering::Raw => vec![T::zero(); mesh.len()],
        };
        Ok(HardyForm { rule, mean, weight: *w, n: mesh.len() })
    }

    /// Reference subtracted from every value: `u_0` when centring, else 0.
    fn reference(&self, u: &[T]) -> T {
        match self.weight.centering {
            Centering::SubtractMean => u[0],
            Centering::Raw => T::zero(),
        }
    }

    fn centre(&self, u: &[T], r: T) -> T {
        pairwise_sum(&self.mean.iter().zip(u).map(|(&m, &v)| m * (v - r)).collect::<Vec<_>>())
    }

    /// `∫ |v|^τ w` for node values `u`.
    pub fn value(&self, u: &[T]) -> T {
        let r0 = self.reference(u);
        let c = self.centre(u, r0);
        let tau = self.weight.tau;
        let vals: Vec<T> = self
            .rule
            .iter()
            .map(|r| r.weight * ((u[r.elem] - r0) * (T::one() - r.theta) + (u[r.elem + 1] - r0) * r.theta - c).abs().powf(tau))
            .collect();
        pairwise_sum(&vals)
    }

    /// Value and gradient with respect to the node values.
    pub fn value_gradient(&self, u: &[T]) -> (T, Vec<T>) {
        let r0 = self.reference(u);
        let c = self.centre(u, r0);
        let tau = self.weight.tau;
        let mut g = vec![T::zero(); self.n];
        let mut vals = Vec::with_capacity(self.rule.len());
        let mut gc = T::zero();
        for r in &self.rule {
            let v = (u[r.elem] - r0) * (T::one() - r.theta) + (u[r.elem + 1] - r0) * r.theta - c;
            let a = v.abs();
            vals.push(r.weight * a.powf(tau));
            let d = if a > T::zero() { r.weight * tau * a.powf(tau - T::one()) * v.signum() } else { T::zero() };
            g[r.elem] = g[r.elem] + d * (T::one() - r.theta);
            g[r.elem + 1] = g[r.elem + 1] + d * r.theta;
            gc = gc + d;
        }
        for (gk, &mk) in g.iter_mut().zip(&self.mean) {
            *gk = *gk - gc * mk;
        }
        (pairwise_sum(&vals), g)
    }

    /// Dense `B` (row-major) with `uᵀ B u = ∫ w v^2`; requires `τ = 2`.
    pub fn matrix(&self) -> Result<Vec<T>> {
        if (self.weight.tau - T::lit(2.0)).abs() > T::lit(1e-15) {
            return Err(FracError::Unsupported(format!("quadratic form needs tau = 2, got {}", self.weight.tau)));
        }
        let n = self.n;
        let mut m = vec![T::zero(); n * n];
        let mut b = vec![T::zero(); n];
        let mut total = T::zero();
        for r in &self.rule {
            let (e, t) = (r.elem, r.theta);
            let phi = [T::one() - t, t];
            for a in 0..2 {
                b[e + a] = b[e + a] + r.weight * phi[a];
                for c in 0..2 {
                    m[(e + a) * n + e + c] = m[(e + a) * n + e + c] + r.weight * phi[a] * phi[c];
                }
            }
            total = total + r.weight;
        }
        let mw = &self.mean;
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = m[i * n + j] - mw[i] * b[j] - b[i] * mw[j] + total * mw[i] * mw[j];
            }
        }
        Ok(m)
    }

    pub fn rule(&self) -> &[RulePoint<T>] {
        &self.rule
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_weight_integral_matches_closed_form() {
        // ∫_0^{1/2} dx / (x log^2(2/x)) = 1 / log 4
        let span = Interval::<f64>::unit();
        let half = Interval::new(0.0, 0.5).unwrap();
        let v = weighted_integral(|_, _| Ok(1.0), span, &half, &[], 2.0, 2.0, &NumericConfig::default()).unwrap();
        assert!((v - 1.0 / 4f64.ln()).abs() < 1e-12, "{v}");
        let v3 = weighted_integral(|_, _| Ok(1.0), span, &span, &[], 2.0, 3.0, &NumericConfig::default()).unwrap();
        // 2 ∫_{ln 4}^∞ s^-3 ds
        assert!((v3 - 1.0 / 4f64.ln().powi(2)).abs() < 1e-12, "{v3}");
    }

    #[test]
    fn divergent_integrand_is_reported() {
        let span = Interval::<f64>::unit();
        let r = weighted_integral(
            |_, s| Ok((s + 2f64.ln()).powi(2)),
            span,
            &span,
            &[],
            2.0,
            2.0,
            &NumericConfig::default(),
        );
        assert!(matches!(r, Err(FracError::Nonconvergent { .. })), "{r:?}");
    }

    #[test]
    fn grid_form_matches_norm_and_kills_constants() {
        let m = Mesh::geometric(Interval::unit(), 0.5, 10).unwrap();
        let w = HardyWeight::standard(2.0).unwrap();
        let u = GridFunction::sample(m.clone(), |p| Ok(p.x * p.x - 0.3 * p.x)).unwrap();
        let form = HardyForm::new(&m, &w, &NumericConfig::default()).unwrap();
        let b = form.matrix().unwrap();
        let n = m.len();
        let vals = u.values();
        let mut q = 0.0f64;
        let mut row0 = 0.0f64;
        for i in 0..n {
            row0 += b[i];
            for j in 0..n {
                q += vals[i] * b[i * n + j] * vals[j];
            }
        }
        let h: f64 = hardy_pow(&u, &w, &NumericConfig::default()).unwrap();
        assert!((q - h).abs() < 1e-13 * h);
        assert!((form.value(vals) - h).abs() < 1e-13 * h);
        assert!(row0.abs() < 1e-12);
    }
}
