//! Gauss–Legendre rules and a small adaptive Gauss–Kronrod integrator.

use std::sync::OnceLock;

use crate::error::{FracError, Result};
use crate::real::{pairwise_sum, Real};

pub const MAX_GAUSS_ORDER: usize = 64;

static RULES: OnceLock<Vec<Vec<(f64, f64)>>> = OnceLock::new();

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[0, 1]`.
///
/// Nodes come from Newton iteration on the Legendre recurrence and are
/// accurate to a few ulps for every supported order.
pub fn gauss_unit(n: usize) -> &'static [(f64, f64)] {
    assert!((1..=MAX_GAUSS_ORDER).contains(&n), "Gauss order {n} out of range");
    &RULES.get_or_init(|| (0..=MAX_GAUSS_ORDER).map(legendre_rule).collect())[n]
}

fn legendre_rule(n: usize) -> Vec<(f64, f64)> {
    if n == 0 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(n);
    let nf = n as f64;
    for i in 0..n {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = ((std::f64::consts::PI * (i as f64 + 0.75)) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1,1] -> [0,1]
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss order that integrates a function with a pole at distance `dist`
/// from an interval of length `len` to roughly machine precision.
pub fn order_for_separation(dist: f64, len: f64) -> usize {
    if len <= 0.0 {
        return 1;
    }
    let delta = 1.0 + 2.0 * dist / len;
    let rho = delta + (delta * delta - 1.0).max(0.0).sqrt();
    let ln_rho = rho.ln().max(1e-3);
    let n = (36.0 / (2.0 * ln_rho)).ceil() as usize + 1;
    n.clamp(2, 16)
}

/// Composite Gauss–Legendre on `[a, b]` with `panels` equal panels.
pub fn composite<T: Real>(f: impl Fn(T) -> T, a: T, b: T, n: usize, panels: usize) -> T {
    let rule = gauss_unit(n);
    let width = (b - a) / T::count(panels);
    let mut parts = Vec::with_capacity(panels);
    for k in 0..panels {
        let lo = a + width * T::count(k);
        let s: Vec<T> = rule.iter().map(|&(x, w)| T::lit(w) * f(lo + width * T::lit(x))).collect();
        parts.push(pairwise_sum(&s) * width);
    }
    pairwise_sum(&parts)
}

// 7-point Gauss / 15-point Kronrod on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<T: Real>(f: &impl Fn(T) -> T, a: T, b: T) -> (T, T) {
    let half = (b - a) * T::lit(0.5);
    let center = (a + b) * T::lit(0.5);
    let fc = f(center);
    let mut resk = fc * T::lit(WGK[7]);
    let mut resg = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let s = f(center - dx) + f(center + dx);
        resk = resk + T::lit(WGK[j]) * s;
        if j % 2 == 1 {
            resg = resg + T::lit(WG[j / 2]) * s;
        }
    }
    (resk * half, ((resk - resg) * half).abs())
}

/// Adaptive Gauss–Kronrod integration of a smooth integrand on `[a, b]`.
///
/// Bisects the interval with the largest error estimate until the total
/// estimate drops below `max(abs_tol, rel_tol * |I|)`.
pub fn adaptive<T: Real>(
    f: impl Fn(T) -> T,
    a: T,
    b: T,
    rel_tol: T,
    abs_tol: T,
    max_intervals: usize,
) -> Result<T> {
    let (v, e) = gk15(&f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    loop {
        let total: T = pairwise_sum(&intervals.iter().map(|iv| iv.2).collect::<Vec<_>>());
        let err: T = pairwise_sum(&intervals.iter().map(|iv| iv.3).collect::<Vec<_>>());
        if !total.is_finite() {
            return Err(FracError::nonconvergent(
                "adaptive quadrature",
                format!("non-finite partial sum on [{a}, {b}]"),
            ));
        }
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        if intervals.len() >= max_intervals {
            return Err(FracError::nonconvergent(
                "adaptive quadrature",
                format!(
                    "{} intervals on [{a}, {b}], value {total}, error estimate {err}",
                    intervals.len()
                ),
            ));
        }
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |acc, (i, iv)| if iv.3 > acc.1 { (i, iv.3) } else { acc });
        let (lo, hi, _, _) = intervals.swap_remove(idx);
        let mid = (lo + hi) * T::lit(0.5);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
        // keep the reduction order independent of the split history
        intervals.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    }
}
