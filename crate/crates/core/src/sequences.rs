//! The density sequence `u_ε`, the linear cutoff `ρ_ε`, and semi-analytic
//! evaluators for their seminorms and weighted functionals.
//!
//! The evaluators work in double precision regardless of the scalar type.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::config::NumericConfig;
use crate::error::{FracError, Result};
use crate::grid::GridFunction;
use crate::hardy::weighted_integral;
use crate::mesh::{Interval, Mesh, Point};
use crate::quadrature::adaptive;
use crate::real::Real;
use crate::special::scaled_e1;

const QUAD_TOL: f64 = 1e-12;
const QUAD_INTERVALS: usize = 4000;
/// `g(x) < 1e-16` beyond this point.
const G_CUTOFF: f64 = 50.0;
/// `e^-t t^2 < 1e-23` beyond this point.
const EXP_CUTOFF: f64 = 60.0;

/// Cutoff parameter `ε ∈ (0, 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Epsilon<T>(T);

impl<T: Real> Epsilon<T> {
    pub fn new(eps: T) -> Result<Self> {
        if !(eps > T::zero() && eps < T::lit(0.5)) {
            return Err(FracError::domain("eps", format!("{eps} not in (0, 1/2)")));
        }
        Ok(Epsilon(eps))
    }

    pub fn get(&self) -> T {
        self.0
    }

    /// `|log ε|`.
    pub fn log_abs(&self) -> T {
        -self.0.ln()
    }
}

type Evaluator<T> = Arc<dyn Fn(&Point<T>, T) -> Result<T> + Send + Sync>;

/// A closed-form function on `(0, 1)`.
///
/// The evaluator receives the point and `log(1/δ)`, so boundary layers can be
/// evaluated where `δ` itself underflows.
#[derive(Clone)]
pub struct AnalyticFunction<T> {
    name: String,
    f: Evaluator<T>,
    breaks: Vec<Point<T>>,
}

impl<T> fmt::Debug for AnalyticFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticFunction").field("name", &self.name).finish()
    }
}

impl<T: Real> AnalyticFunction<T> {
    pub fn new(
        name: impl Into<String>,
        breaks: Vec<Point<T>>,
        f: impl Fn(&Point<T>, T) -> Result<T> + Send + Sync + 'static,
    ) -> Self {
        AnalyticFunction { name: name.into(), f: Arc::new(f), breaks }
    }

    /// Function of the abscissa only.
    pub fn from_x(name: impl Into<String>, f: impl Fn(T) -> Result<T> + Send + Sync + 'static) -> Self {
        Self::new(name, Vec::new(), move |p, _| f(p.x))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Kinks inside `(0, 1)`.
    pub fn breakpoints(&self) -> &[Point<T>] {
        &self.breaks
    }

    pub fn eval(&self, x: T) -> Result<T> {
        self.eval_point(&Point::unit(x))
    }

    pub fn eval_point(&self, p: &Point<T>) -> Result<T> {
        self.eval_layer(p, -p.delta().ln())
    }

    pub fn eval_layer(&self, p: &Point<T>, log_inv_delta: T) -> Result<T> {
        let v = (self.f)(p, log_inv_delta)?;
        if !v.is_finite() {
            return Err(FracError::Eval { x: p.x.to_f64_lossy(), msg: format!("{} is not finite", self.name) });
        }
        Ok(v)
    }

    /// Interpolant at the nodes of `mesh`.
    pub fn sample(&self, mesh: &Mesh<T>) -> Result<GridFunction<T>> {
        let unit = mesh.span() == Interval::unit();
        GridFunction::sample(mesh.clone(), |p| if unit { self.eval_point(p) } else { self.eval(p.x) })
    }

    /// Geometric mesh on `(0, 1)` with the breakpoints inserted.
    pub fn graded_mesh(&self, elements: usize, innermost: f64) -> Result<Mesh<T>> {
        Mesh::geometric_to(Interval::unit(), elements, innermost)?.with_breakpoints(&self.breaks)
    }
}

fn layer_breaks<T: Real>(eps: T) -> Vec<Point<T>> {
    let span = Interval::unit();
    vec![Point::from_left(eps, &span), Point::from_right(eps, &span)]
}

/// `|log ε| / |log δ|` within `ε` of either endpoint, 1 in between.
pub fn make_u_eps<T: Real>(e: Epsilon<T>) -> AnalyticFunction<T> {
    let l = e.log_abs();
    AnalyticFunction::new(format!("u_eps({})", e.get()), layer_breaks(e.get()), move |p, s| {
        if p.lo < T::zero() || p.hi < T::zero() {
            return Err(FracError::Eval { x: p.x.to_f64_lossy(), msg: "outside (0, 1)".into() });
        }
        Ok(if s > l { l / s } else { T::one() })
    })
}

/// Linear ramps of slope `±1/ε` in the boundary layers, 1 in between.
pub fn make_rho_eps<T: Real>(e: Epsilon<T>) -> AnalyticFunction<T> {
    let eps = e.get();
    AnalyticFunction::new(format!("rho_eps({eps})"), layer_breaks(eps), move |p, _| {
        if p.lo < T::zero() || p.hi < T::zero() {
            return Err(FracError::Eval { x: p.x.to_f64_lossy(), msg: "outside (0, 1)".into() });
        }
        Ok((p.delta() / eps).min(T::one()))
    })
}

/// `Σ c_k x^k`.
pub fn make_polynomial<T: Real>(coeffs: Vec<T>) -> AnalyticFunction<T> {
    let name = format!("poly({coeffs:?})");
    AnalyticFunction::from_x(name, move |x| Ok(coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * x + c)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Divergence {
    AtZero,
    AtOne,
    Both,
}

/// A factor `f >= 1` that blows up at the boundary, applied as `f(δ_x)`.
#[derive(Clone)]
pub struct ImprovementWeight<T> {
    name: String,
    f: Arc<dyn Fn(T, T) -> Result<T> + Send + Sync>,
    pub divergence: Divergence,
}

impl<T> fmt::Debug for ImprovementWeight<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImprovementWeight").field("name", &self.name).finish()
    }
}

impl<T: Real> ImprovementWeight<T> {
    /// `f` receives `(δ, log(1/δ))`; values below 1 are clamped to 1.
    pub fn new(
        name: impl Into<String>,
        divergence: Divergence,
        f: impl Fn(T, T) -> Result<T> + Send + Sync + 'static,
    ) -> Self {
        ImprovementWeight { name: name.into(), f: Arc::new(f), divergence }
    }

    /// `f ≡ 1`.
    pub fn one() -> Self {
        Self::new("1", Divergence::Both, |_, _| Ok(T::one()))
    }

    /// `1 + log(1 + log(1/x))`.
    pub fn iterated_log() -> Self {
        Self::new("1+log(1+log(1/x))", Divergence::AtZero, |_, s| Ok(T::one() + (T::one() + s).ln()))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, delta: T, log_inv_delta: T) -> Result<T> {
        let v = (self.f)(delta, log_inv_delta)?;
        if v.is_nan() {
            return Err(FracError::Eval { x: delta.to_f64_lossy(), msg: format!("{} is NaN", self.name) });
        }
        Ok(v.max(T::one()))
    }
}

/// `ū_ε` and `C_ε = ū_ε - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mean<T> {
    pub mean: T,
    pub c_eps: T,
}

/// `ū_ε = 1 - 2ε + 2|log ε| E1(|log ε|)`.
pub fn u_eps_mean<T: Real>(e: Epsilon<T>) -> Mean<T> {
    let eps = e.get().to_f64_lossy();
    let l = -eps.ln();
    // |log ε| E1(|log ε|) = ε |log ε| e^L E1(L); keeps C_ε accurate despite the cancellation
    let c = 2.0 * eps * (l * scaled_e1(l).expect("L > 0") - 1.0);
    Mean { mean: T::lit(1.0 + c), c_eps: T::lit(c) }
}

/// `g(x) = x^2 / (e^x + e^-x - 2)`.
pub fn kernel_g(x: f64) -> f64 {
    let h = 0.5 * x;
    if h.abs() < 1e-8 {
        return 1.0 - x * x / 12.0;
    }
    let r = h / h.sinh();
    r * r
}

/// `∫_0^∞ g`.
pub fn integral_g() -> Result<f64> {
    adaptive(kernel_g, 0.0, G_CUTOFF, 1e-14, 0.0, QUAD_INTERVALS)
}

/// `∫_0^∞ t^2 / (e^t - 1)`.
pub fn integral_bose() -> Result<f64> {
    let f = |t: f64| if t == 0.0 { 0.0 } else { t * t / t.exp_m1() };
    adaptive(f, 0.0, EXP_CUTOFF, 1e-14, 0.0, QUAD_INTERVALS)
}

/// Pieces of `[u_ε]^2_{1/2,2,(0,1)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeminormSq<T> {
    /// Part of `I_ε` with `s > t`.
    pub i1: T,
    /// Part of `I_ε` with `s < t`.
    pub i2: T,
    /// `[u_ε]^2` over one boundary layer, `(0, ε)^2`.
    pub i_eps: T,
    /// One layer against the plateau, one order of integration.
    pub k_eps: T,
    /// Both orders of left layer against right layer.
    pub cross: T,
    /// `2 I_ε + 4 K_ε + cross`.
    pub total: T,
}

/// `[u_ε]^2_{1/2,2,(0,1)}` from the transformed integrals in `s = -log x`.
pub fn u_eps_seminorm_sq<T: Real>(e: Epsilon<T>) -> Result<SeminormSq<T>> {
    let eps = e.get().to_f64_lossy();
    let l = -eps.ln();
    let tol = QUAD_TOL;
    let n = QUAD_INTERVALS;

    // I2 = L ∫_0^1 G(L/r) dr,  G(t) = ∫_0^∞ g(x) / (t+x)^2 dx
    let big_g = |t: f64| adaptive(|x| kernel_g(x) / ((t + x) * (t + x)), 0.0, G_CUTOFF, tol, 0.0, n);
    let i2 = l * try_adaptive(|r| if r == 0.0 { Ok(0.0) } else { big_g(l / r) }, 0.0, 1.0, tol, n)?;

    // I1 = L ∫_0^1 H(L/r) dr,  H(t) = ∫_{max(L-t, -X)}^0 g(x) / (t+x)^2 dx
    let big_h = |t: f64| {
        let lo = (l - t).max(-G_CUTOFF);
        if lo >= 0.0 {
            return Ok(0.0);
        }
        adaptive(|x| kernel_g(x) / ((t + x) * (t + x)), lo, 0.0, tol, 0.0, n)
    };
    let r_kink = l / (l + G_CUTOFF);
    let h_of_r = |r: f64| if r == 0.0 { Ok(0.0) } else { big_h(l / r) };
    let i1 = l * (try_adaptive(h_of_r, 0.0, r_kink, tol, n)? + try_adaptive(h_of_r, r_kink, 1.0, tol, n)?);

    // K = (1-2ε) ∫_0^∞ t^2 / ((t+L)^2 (e^t-1) (1-ε-ε e^-t)) dt
    let k_int = |t: f64| {
        if t == 0.0 {
            return 0.0;
        }
        t * t / ((t + l) * (t + l) * t.exp_m1() * (1.0 - eps - eps * (-t).exp()))
    };
    let mut k = 0.0;
    for w in [0.0, 1.0, 5.0, 20.0, EXP_CUTOFF].windows(2) {
        k += adaptive(k_int, w[0], w[1], tol, 0.0, n)?;
    }
    k *= 1.0 - 2.0 * eps;

    // cross = 2 L^2 ε^2 ∬ (1/(L+a) - 1/(L+b))^2 e^{-a-b} / (1 - ε(e^-a + e^-b))^2
    let cross_inner = |a: f64| {
        adaptive(
            |b: f64| {
                let d = 1.0 / (l + a) - 1.0 / (l + b);
                let den = 1.0 - eps * ((-a).exp() + (-b).exp());
                d * d * (-a - b).exp() / (den * den)
            },
            0.0,
            EXP_CUTOFF,
            1e-10,
            1e-300,
            n,
        )
    };
    let cross = 2.0 * l * l * eps * eps * try_adaptive(cross_inner, 0.0, EXP_CUTOFF, 1e-10, n)?;

    let i = i1 + i2;
    let total = 2.0 * i + 4.0 * k + cross;
    Ok(SeminormSq {
        i1: T::lit(i1),
        i2: T::lit(i2),
        i_eps: T::lit(i),
        k_eps: T::lit(k),
        cross: T::lit(cross),
        total: T::lit(total),
    })
}

/// Adaptive quadrature of a fallible integrand.
fn try_adaptive(f: impl Fn(f64) -> Result<f64>, a: f64, b: f64, tol: f64, n: usize) -> Result<f64> {
    let err = std::cell::RefCell::new(None);
    let v = adaptive(
        |x| match f(x) {
            Ok(v) => v,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        a,
        b,
        tol,
        1e-300,
        n,
    )?;
    match err.into_inner() {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// `∫_0^1 (u_ε - ū_ε)^2 / (δ log^2 δ)` split into its pieces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedFunctional<T> {
    /// Both boundary layers.
    pub layers: T,
    /// The plateau `(ε, 1-ε)`.
    pub plateau: T,
    pub total: T,
}

/// Closed form: each layer gives `1/(3L) + ū C_ε / L`, the plateau `2 C_ε^2 (1/log 2 - 1/L)`.
pub fn u_eps_weighted_functional<T: Real>(e: Epsilon<T>) -> WeightedFunctional<T> {
    let l = e.log_abs().to_f64_lossy();
    let m = u_eps_mean(e);
    let (ubar, c) = (m.mean.to_f64_lossy(), m.c_eps.to_f64_lossy());
    let layers = 2.0 * (1.0 / (3.0 * l) + ubar * c / l);
    let plateau = 2.0 * c * c * (1.0 / std::f64::consts::LN_2 - 1.0 / l);
    WeightedFunctional { layers: T::lit(layers), plateau: T::lit(plateau), total: T::lit(layers + plateau) }
}

/// Limit of `|log ε| W(ε)` as `ε -> 0`, extrapolated linearly in `1/|log ε|` from two values.
pub fn weighted_functional_limit(e1: Epsilon<f64>, e2: Epsilon<f64>) -> Result<f64> {
    let (l1, l2) = (e1.log_abs(), e2.log_abs());
    if (l1 - l2).abs() < 1e-12 * l1.max(l2) {
        return Err(FracError::domain("eps", "two distinct values are needed"));
    }
    let (y1, y2) = (l1 * u_eps_weighted_functional(e1).total, l2 * u_eps_weighted_functional(e2).total);
    // y = a + b / L
    let (x1, x2) = (1.0 / l1, 1.0 / l2);
    Ok(y1 - (y2 - y1) / (x2 - x1) * x1)
}

/// `∫_0^1 f(δ)^2 (u - ū)^2 / (δ log^2(κ/δ))` by boundary-graded quadrature.
pub fn weighted_functional_quadrature<T: Real>(
    u: &AnalyticFunction<T>,
    mean: T,
    f: &ImprovementWeight<T>,
    kappa: T,
    cfg: &NumericConfig,
) -> Result<T> {
    let span = Interval::unit();
    weighted_integral(
        |p, s| {
            let v = u.eval_layer(p, s)? - mean;
            let fv = f.eval(p.delta(), s)?;
            Ok(fv * fv * v * v)
        },
        span,
        &span,
        u.breakpoints(),
        kappa,
        T::lit(2.0),
        cfg,
    )
}

/// `‖(u_ε - ū_ε) / (δ^(1/2) log(2/δ))‖^2_{L^2(0,1)}` in closed form up to one smooth integral.
pub fn u_eps_hardy_sq<T: Real>(e: Epsilon<T>) -> Result<T> {
    let l = e.log_abs().to_f64_lossy();
    let m = u_eps_mean(e);
    let (ubar, c) = (m.mean.to_f64_lossy(), m.c_eps.to_f64_lossy());
    let ln2 = std::f64::consts::LN_2;
    // left layer in r = L / log(1/x): ∫_0^1 (r - ū)^2 L / (L + r ln 2)^2 dr
    let layer = adaptive(|r| (r - ubar) * (r - ubar) * l / ((l + r * ln2) * (l + r * ln2)), 0.0, 1.0, 1e-14, 0.0, QUAD_INTERVALS)?;
    let plateau = 2.0 * c * c * (1.0 / (2.0 * ln2) - 1.0 / (l + ln2));
    Ok(T::lit(2.0 * layer + plateau))
}

/// `[u_ε]^2 / ∫ f(δ)^2 (u_ε - ū_ε)^2 / (δ log^2 δ)`.
pub fn optimality_ratio<T: Real>(e: Epsilon<T>, f: &ImprovementWeight<T>, cfg: &NumericConfig) -> Result<T> {
    let num = u_eps_seminorm_sq(e)?.total;
    let u = make_u_eps(e);
    let mean = u_eps_mean(e).mean;
    ratio_guarded(num, weighted_functional_quadrature(&u, mean, f, T::one(), cfg)?)
}

/// Ratio with the 0/0 guard used by the optimality harness.
pub fn ratio_guarded<T: Real>(num: T, den: T) -> Result<T> {
    if !(num > T::zero()) {
        return Err(FracError::input("u", format!("numerator {num} vanishes (constant function?)")));
    }
    if !(den > T::zero()) {
        return Err(FracError::input("u", format!("denominator {den} vanishes")));
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn u_eps_profile() {
        let e = Epsilon::new(1e-3f64).unwrap();
        let u = make_u_eps(e);
        assert_eq!(u.eval(0.5).unwrap(), 1.0);
        assert!((u.eval(1e-6).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(u.eval(1e-3).unwrap(), 1.0);
        assert!((u.eval_point(&Point::from_right(1e-6, &Interval::unit())).unwrap() - 0.5).abs() < 1e-15);
        assert!(Epsilon::new(0.5).is_err());
    }

    #[test]
    fn rho_eps_profile() {
        let r = make_rho_eps(Epsilon::new(0.1f64).unwrap());
        assert!((r.eval(0.05).unwrap() - 0.5).abs() < 1e-15);
        assert!((r.eval(1.0 - 0.025).unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(r.eval(0.5).unwrap(), 1.0);
    }

    #[test]
    fn mean_defect_is_small_and_negative() {
        for eps in [1e-2f64, 1e-3, 1e-6, 1e-8] {
            let m = u_eps_mean(Epsilon::new(eps).unwrap());
            assert!(m.c_eps < 0.0 && m.c_eps.abs() < 2.0 * eps);
        }
    }
}
