//! Fractional Sobolev seminorms and log-corrected boundary Hardy functionals
//! on intervals at the critical exponent `s p = 1`.
//!
//! ```
//! use frachardy::*;
//!
//! let mesh = Mesh64::uniform(Interval::unit(), 128)?;
//! let u = GridFunction64::sample(mesh, |p| Ok(p.x * p.x))?;
//! let s = gagliardo_seminorm(&u, &FracParams::critical(2.0)?, &Interval::unit())?;
//! let h = hardy_weighted_norm(&u, &HardyWeight::standard(2.0)?)?;
//! assert!((s - (7.0f64 / 6.0).sqrt()).abs() < 1e-3 && h > 0.0);
//! # Ok::<(), FracError>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod config;
pub mod error;
pub mod estimator;
pub mod grid;
pub mod hardy;
pub mod lp;
pub mod mesh;
pub mod params;
pub mod prooflab;
pub mod quadrature;
pub mod real;
pub mod seminorm;
pub mod sequences;
pub mod special;

pub use config::NumericConfig;
pub use error::{FracError, Result};
pub use grid::GridFunction;
pub use mesh::{Grading, Interval, Mesh, Point};
pub use params::{Centering, FracParams, HardyWeight};
pub use real::Real;
pub use hardy::{hardy_weighted_norm, hardy_weighted_norm_with, HardyForm};
pub use lp::{average, lp_norm};
pub use seminorm::{gagliardo_seminorm, gagliardo_seminorm_with};

pub type Interval64 = Interval<f64>;
pub type Mesh64 = Mesh<f64>;
pub type GridFunction64 = GridFunction<f64>;
pub type FracParams64 = FracParams<f64>;
pub type HardyWeight64 = HardyWeight<f64>;
