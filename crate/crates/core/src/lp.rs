//! L^p norms and averages of piecewise-linear functions.

use crate::error::{FracError, Result};
use crate::grid::GridFunction;
use crate::mesh::Interval;
use crate::quadrature::gauss_unit;
use crate::real::{pairwise_sum, Real};

/// `∫_0^h |u|^p` for `u` linear from `u0` to `u1` without a sign change.
fn same_sign_power<T: Real>(u0: T, u1: T, h: T, p: T) -> T {
    let a = u0.abs();
    let b = u1.abs();
    let hi = a.max(b);
    if hi == T::zero() {
        return T::zero();
    }
    if (b - a).abs() > T::lit(1e-3) * hi {
        let pp1 = p + T::one();
        h * (b.powf(pp1) - a.powf(pp1)) / (pp1 * (b - a))
    } else {
        // nearly constant: the integrand is smooth and Gauss is exact to rounding
        let s: Vec<T> = gauss_unit(8)
            .iter()
            .map(|&(x, w)| T::lit(w) * (a + (b - a) * T::lit(x)).powf(p))
            .collect();
        h * pairwise_sum(&s)
    }
}

/// `∫_0^h |u|^p` for `u` linear from `u0` to `u1`.
pub(crate) fn element_power<T: Real>(u0: T, u1: T, h: T, p: T) -> T {
    if (u0 > T::zero() && u1 < T::zero()) || (u0 < T::zero() && u1 > T::zero()) {
        let t = u0 / (u0 - u1);
        same_sign_power(u0, T::zero(), h * t, p) + same_sign_power(T::zero(), u1, h * (T::one() - t), p)
    } else {
        same_sign_power(u0, u1, h, p)
    }
}

/// `∫ |u|^p` over the whole span.
pub fn power_integral<T: Real>(u: &GridFunction<T>, p: T) -> T {
    let v = u.values();
    let m = u.mesh();
    let parts: Vec<T> = (0..m.elements()).map(|e| element_power(v[e], v[e + 1], m.h(e), p)).collect();
    pairwise_sum(&parts)
}

/// `(∫_domain |u|^p)^(1/p)`.
pub fn lp_norm<T: Real>(u: &GridFunction<T>, p: T, domain: &Interval<T>) -> Result<T> {
    if !(p >= T::one()) || !p.is_finite() {
        return Err(FracError::domain("p", format!("{p} must be at least 1")));
    }
    let r = u.restrict(domain)?;
    Ok(power_integral(&r, p).powf(T::one() / p))
}

/// `∫ u` over the whole span (trapezoid rule, exact).
pub fn integral<T: Real>(u: &GridFunction<T>) -> T {
    let v = u.values();
    let m = u.mesh();
    let parts: Vec<T> = (0..m.elements()).map(|e| (v[e] + v[e + 1]) * m.h(e) * T::lit(0.5)).collect();
    pairwise_sum(&parts)
}

/// `(1/|sub|) ∫_sub u`.
pub fn average<T: Real>(u: &GridFunction<T>, sub: &Interval<T>) -> Result<T> {
    let r = u.restrict(sub)?;
    let len = r.span().len();
    if !(len > T::zero()) {
        return Err(FracError::input("sub", "zero-length interval"));
    }
    Ok(integral(&r) / len)
}

/// Node weights `m_k` with `Σ m_k u_k = (1/|span|) ∫ u`.
pub fn mean_weights<T: Real>(u_mesh: &crate::mesh::Mesh<T>) -> Vec<T> {
    let n = u_mesh.len();
    let len = u_mesh.span().len();
    let mut m = vec![T::zero(); n];
    for e in 0..u_mesh.elements() {
        let h = u_mesh.h(e) * T::lit(0.5) / len;
        m[e] = m[e] + h;
        m[e + 1] = m[e + 1] + h;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh;

    #[test]
    fn shifted_linear_l1() {
        let m = Mesh::uniform(Interval::unit(), 4).unwrap();
        let u = GridFunction::sample(m, |p| Ok(p.x - 0.5)).unwrap();
        let v: f64 = lp_norm(&u, 1.0, &Interval::unit()).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn fractional_power_matches_closed_form() {
        let m = Mesh::uniform(Interval::unit(), 2).unwrap();
        let u = GridFunction::sample(m, |p| Ok(p.x)).unwrap();
        let v: f64 = lp_norm(&u, 2.5, &Interval::unit()).unwrap();
        assert!((v - (1.0f64 / 3.5).powf(0.4)).abs() < 1e-14);
    }

    #[test]
    fn averages() {
        let m = Mesh::uniform(Interval::unit(), 3).unwrap();
        let u = GridFunction::sample(m.clone(), |p| Ok(p.x)).unwrap();
        let a: f64 = average(&u, &Interval::new(0.5, 1.0).unwrap()).unwrap();
        assert!((a - 0.75).abs() < 1e-15);
        let w = mean_weights(&m);
        let s: f64 = w.iter().zip(u.values()).map(|(a, b)| a * b).sum();
        assert!((s - 0.5).abs() < 1e-15);
    }
}
