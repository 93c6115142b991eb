//! Numeric tolerance record shared by the quadrature routines.

use serde::{Deserialize, Serialize};

/// Tolerances and discretization knobs of the quadrature engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NumericConfig {
    /// Target relative accuracy of boundary-weighted integrals.
    pub rel_tol: f64,
    /// Geometric grading ratio of boundary quadrature cells (in (0,1)).
    pub grading_ratio: f64,
    /// Innermost boundary cell width, relative to the element touching the boundary.
    pub innermost_width: f64,
    /// Maximum recursive subdivisions of a near-singular element pair.
    pub max_refinement_depth: usize,
    /// Growth factor between successive refinements that flags divergence.
    pub divergence_factor: f64,
    /// Gauss points per boundary quadrature cell.
    pub boundary_points: usize,
    /// Gauss points per half of the Duffy-split touching element pairs.
    pub duffy_points: usize,
    /// Separated element pairs are split until gap >= ratio * element length.
    pub separation_ratio: f64,
}

impl Default for NumericConfig {
    fn default() -> Self {
        NumericConfig {
            rel_tol: 1e-8,
            grading_ratio: 0.5,
            innermost_width: 1e-14,
            max_refinement_depth: 48,
            divergence_factor: 4.0,
            boundary_points: 10,
            duffy_points: 12,
            separation_ratio: 1.0,
        }
    }
}

impl NumericConfig {
    pub fn validate(&self) -> crate::Result<()> {
        use crate::FracError;
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-2) {
            return Err(FracError::domain("rel_tol", format!("{} not in (0, 1e-2]", self.rel_tol)));
        }
        if !(self.grading_ratio > 0.0 && self.grading_ratio < 1.0) {
            return Err(FracError::domain(
                "grading_ratio",
                format!("{} not in (0, 1)", self.grading_ratio),
            ));
        }
        if !(self.innermost_width > 0.0 && self.innermost_width < 1.0) {
            return Err(FracError::domain(
                "innermost_width",
                format!("{} not in (0, 1)", self.innermost_width),
            ));
        }
        if self.boundary_points < 2 || self.duffy_points < 2 {
            return Err(FracError::domain("points", "quadrature orders must be at least 2"));
        }
        if !(self.divergence_factor > 1.0) {
            return Err(FracError::domain("divergence_factor", "must exceed 1"));
        }
        if !(self.separation_ratio >= 0.25) {
            return Err(FracError::domain("separation_ratio", "must be at least 0.25"));
        }
        Ok(())
    }
}
