//! Exponential integral.

use crate::error::{FracError, Result};
use crate::real::Real;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `E1(z) = ∫_z^∞ e^(-t)/t dt` for `z > 0`.
pub fn exp_integral_e1<T: Real>(z: T) -> Result<T> {
    if !(z > T::zero()) || !z.is_finite() {
        return Err(FracError::domain("z", format!("E1 needs z > 0, got {z}")));
    }
    Ok(T::lit(e1_f64(z.to_f64_lossy())))
}

/// `e^z E1(z)`, finite for large `z`.
pub fn scaled_e1<T: Real>(z: T) -> Result<T> {
    if !(z > T::zero()) || !z.is_finite() {
        return Err(FracError::domain("z", format!("E1 needs z > 0, got {z}")));
    }
    let zf = z.to_f64_lossy();
    Ok(T::lit(if zf <= 1.0 { zf.exp() * e1_series(zf) } else { e1_cf_scaled(zf) }))
}

fn e1_f64(z: f64) -> f64 {
    if z <= 1.0 {
        e1_series(z)
    } else {
        (-z).exp() * e1_cf_scaled(z)
    }
}

fn e1_series(z: f64) -> f64 {
    // -γ - ln z - Σ (-z)^k / (k k!)
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        term *= -z / k as f64;
        let add = term / k as f64;
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - z.ln() - sum
}

/// Continued fraction for `e^z E1(z)`, modified Lentz.
fn e1_cf_scaled(z: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = z + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}
