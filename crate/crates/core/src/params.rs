//! Exponent and weight parameters.

use serde::Serialize;

use crate::error::{FracError, Result};
use crate::mesh::Interval;
use crate::real::Real;

const CRITICAL_TOL: f64 = 1e-12;

/// Seminorm exponents `(s, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FracParams<T> {
    pub s: T,
    pub p: T,
    /// Set when `s p = 1`.
    pub critical: bool,
}

impl<T: Real> FracParams<T> {
    pub fn new(s: T, p: T) -> Result<Self> {
        if !(s > T::zero() && s < T::one()) {
            return Err(FracError::domain("s", format!("{s} not in (0, 1)")));
        }
        if !(p > T::one()) || !p.is_finite() {
            return Err(FracError::domain("p", format!("{p} must exceed 1")));
        }
        let critical = (s * p - T::one()).abs().to_f64_lossy() <= CRITICAL_TOL;
        Ok(FracParams { s, p, critical })
    }

    /// The critical pair `(1/p, p)`.
    pub fn critical(p: T) -> Result<Self> {
        let mut fp = Self::new(T::one() / p, p)?;
        fp.critical = true;
        Ok(fp)
    }

    /// Fails unless `s p = 1`.
    pub fn require_critical(&self) -> Result<()> {
        if self.critical {
            Ok(())
        } else {
            Err(FracError::domain("s", format!("s p = {} but the critical case needs s p = 1", self.s * self.p)))
        }
    }

    /// Exponent of `|x - y|` in the kernel denominator, `1 + s p`.
    pub fn kernel_exponent(&self) -> T {
        T::one() + self.s * self.p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Centering {
    /// `v = u - (u)_(0,1)`
    SubtractMean,
    /// `v = u`
    Raw,
}

/// The weight `δ^(τγ) / log^τ(κ/δ)` with `1 + τγ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardyWeight<T> {
    pub tau: T,
    pub gamma: T,
    pub window: Interval<T>,
    pub centering: Centering,
    /// `κ` in `log(κ/δ)`; 2 unless stated otherwise.
    pub log_scale: T,
}

impl<T: Real> HardyWeight<T> {
    pub fn new(tau: T, gamma: T, window: Interval<T>, centering: Centering) -> Result<Self> {
        if !(tau > T::one()) || !tau.is_finite() {
            return Err(FracError::domain("tau", format!("{tau} must exceed 1")));
        }
        if !(gamma < T::zero()) {
            return Err(FracError::domain("gamma", format!("{gamma} must be negative")));
        }
        if (T::one() + tau * gamma).abs().to_f64_lossy() > CRITICAL_TOL {
            return Err(FracError::domain(
                "gamma",
                format!("1 + tau*gamma = {} but must vanish", T::one() + tau * gamma),
            ));
        }
        Ok(HardyWeight { tau, gamma, window, centering, log_scale: T::lit(2.0) })
    }

    /// Weight with `γ = -1/τ` on the whole unit interval, mean-centred.
    pub fn standard(tau: T) -> Result<Self> {
        Self::new(tau, -T::one() / tau, Interval::unit(), Centering::SubtractMean)
    }

    pub fn with_window(mut self, window: Interval<T>) -> Self {
        self.window = window;
        self
    }

    pub fn with_centering(mut self, centering: Centering) -> Self {
        self.centering = centering;
        self
    }

    pub fn with_log_scale(mut self, kappa: T) -> Result<Self> {
        // log(κ/δ) must stay positive for δ <= 1/2
        if !(kappa > T::lit(0.5)) {
            return Err(FracError::domain("log_scale", format!("{kappa} must exceed 1/2")));
        }
        self.log_scale = kappa;
        Ok(self)
    }

    /// Checks `γ ∈ [-s, 0)`, which together with `1 + τγ = 0` and `s p = 1` means `τ >= p`.
    pub fn check_against(&self, params: &FracParams<T>) -> Result<()> {
        let slack = T::lit(CRITICAL_TOL);
        if self.gamma < -params.s - slack {
            return Err(FracError::domain(
                "tau",
                format!("gamma = {} below -s = {} (tau = {} < p = {})", self.gamma, -params.s, self.tau, params.p),
            ));
        }
        Ok(())
    }

    /// Weight value at distance `delta` from the boundary.
    pub fn eval(&self, delta: T) -> T {
        T::one() / (delta * (self.log_scale / delta).ln().powf(self.tau))
    }
}
