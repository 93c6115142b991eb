//! Discrete estimates of the best constant in the boundary Hardy inequality.
//!
//! At `p = τ = 2` both sides are quadratic forms in the node values and the
//! constant is the top eigenvalue of a generalized eigenproblem. Otherwise the
//! quotient is maximized by preconditioned gradient ascent.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::NumericConfig;
use crate::error::{FracError, Result};
use crate::grid::GridFunction;
use crate::hardy::{hardy_weighted_norm_with, HardyForm};
use crate::lp::mean_weights;
use crate::mesh::{Interval, Mesh};
use crate::params::{FracParams, HardyWeight};
use crate::seminorm::{gagliardo_seminorm_with, seminorm_pow, seminorm_pow_gradient, stiffness_matrix};

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITER: usize = 10_000;
const DENSE_LIMIT: usize = 1025;

/// `uᵀ A u = [u]^2` and `uᵀ B u = ∫ w (u - ū)^2` over the mesh nodes.
#[derive(Debug, Clone)]
pub struct QuadraticForms {
    pub mesh: Mesh<f64>,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

fn require_quadratic(w: &HardyWeight<f64>, params: &FracParams<f64>) -> Result<()> {
    params.require_critical()?;
    if (params.p - 2.0).abs() > 1e-15 || (w.tau - 2.0).abs() > 1e-15 {
        return Err(FracError::Unsupported(format!(
            "quadratic forms need p = tau = 2, got p = {}, tau = {}",
            params.p, w.tau
        )));
    }
    Ok(())
}

fn require_unit(mesh: &Mesh<f64>) -> Result<()> {
    if mesh.span() != Interval::unit() {
        return Err(FracError::domain("mesh", "the constant estimator works on (0, 1)"));
    }
    Ok(())
}

fn symmetric(n: usize, data: Vec<f64>) -> DMatrix<f64> {
    let m = DMatrix::from_row_slice(n, n, &data);
    (&m + m.transpose()) * 0.5
}

pub fn assemble_forms(mesh: &Mesh<f64>, w: &HardyWeight<f64>, params: &FracParams<f64>) -> Result<QuadraticForms> {
    require_quadratic(w, params)?;
    require_unit(mesh)?;
    let cfg = NumericConfig::default();
    let n = mesh.len();
    let a = symmetric(n, stiffness_matrix(mesh, params, &cfg)?);
    let b = symmetric(n, HardyForm::new(mesh, w, &cfg)?.matrix()?);
    Ok(QuadraticForms { mesh: mesh.clone(), a, b })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Refinement {
    pub node_count: usize,
    pub estimate: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartReport {
    pub index: usize,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Estimates of the best constant `C` (not `C^2`), one per mesh.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantEstimate {
    pub refinements: Vec<Refinement>,
    /// Quadratic path: the last relative increment is below `1e-3`.
    /// Gradient path: the best restart met its stopping rule.
    pub converged: bool,
    /// Aitken Δ² limit of the last three estimates when the increments shrink geometrically.
    pub extrapolated: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub restarts: Vec<RestartReport>,
    /// Node values of the maximizer on the finest mesh, normalized to unit Euclidean norm.
    #[serde(skip)]
    pub maximizer: Vec<f64>,
}

impl ConstantEstimate {
    pub fn finest(&self) -> f64 {
        self.refinements.last().map_or(f64::NAN, |r| r.estimate)
    }
}

/// `A + α 1 1ᵀ / n`: positive definite on all of `R^n`, unchanged on mean-zero vectors.
fn shifted(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let alpha = a.diagonal().iter().sum::<f64>() / n as f64;
    a.map(|v| v + alpha / n as f64)
}

fn factor(a: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(shifted(a)).ok_or_else(|| FracError::nonconvergent("cholesky", "seminorm form is not positive definite off constants"))
}

/// Top eigenpair of `(B, A)` off constants by power iteration on `Ã⁻¹ B`.
fn power_top(
    f: &QuadraticForms,
    chol: &Cholesky<f64, Dyn>,
    start: DVector<f64>,
) -> Result<(f64, DVector<f64>, f64)> {
    let at = shifted(&f.a);
    let norm = |x: &DVector<f64>| x.dot(&(&at * x)).sqrt();
    let mut x = &start / norm(&start);
    let mut rho = x.dot(&(&f.b * &x));
    for it in 0..POWER_MAX_ITER {
        let y = chol.solve(&(&f.b * &x));
        let ny = norm(&y);
        if !(ny > 0.0) || !ny.is_finite() {
            return Err(FracError::nonconvergent("power iteration", format!("iterate vanished at step {it}")));
        }
        x = y / ny;
        let next = x.dot(&(&f.b * &x));
        if (next - rho).abs() <= POWER_TOL * next.abs() {
            let bx = &f.b * &x;
            let residual = (&bx - (&at * &x) * next).norm() / bx.norm();
            return Ok((next, x, residual));
        }
        rho = next;
    }
    Err(FracError::nonconvergent(
        "power iteration",
        format!("no convergence in {POWER_MAX_ITER} steps, last Rayleigh quotient {rho}"),
    ))
}

/// Top generalized eigenvalue of `(B, A)` off constants by a dense solve.
pub fn dense_top_eigenvalue(f: &QuadraticForms) -> Result<f64> {
    let chol = factor(&f.a)?;
    let l_inv = chol
        .l()
        .solve_lower_triangular(&DMatrix::identity(f.a.nrows(), f.a.nrows()))
        .ok_or_else(|| FracError::nonconvergent("cholesky", "singular factor"))?;
    let m = &l_inv * &f.b * l_inv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    Ok(SymmetricEigen::new(m).eigenvalues.iter().cloned().fold(f64::MIN, f64::max))
}

fn prolong(coarse: &Mesh<f64>, values: &DVector<f64>, fine: &Mesh<f64>) -> Result<DVector<f64>> {
    let g = GridFunction::new(coarse.clone(), values.iter().cloned().collect())?;
    let v = fine.points().iter().map(|p| g.eval_point(p)).collect::<Result<Vec<_>>>()?;
    Ok(DVector::from_vec(v))
}

fn check_nested(coarse: &Mesh<f64>, fine: &Mesh<f64>) -> Result<()> {
    let fp = fine.points();
    let mut j = 0;
    for (i, p) in coarse.points().iter().enumerate() {
        while j < fp.len() && fp[j].to(p) > 0.0 && fp[j].to(p).abs() > 1e-12 * p.delta().max(1e-300) {
            j += 1;
        }
        if j == fp.len() || fp[j].to(p).abs() > 1e-12 * p.delta().max(1e-300) {
            return Err(FracError::domain("mesh_sequence", format!("coarse node {i} at {} is not a node of the finer mesh", p.x)));
        }
    }
    Ok(())
}

fn aitken(est: &[f64]) -> Option<f64> {
    let [e0, e1, e2] = est.get(est.len().checked_sub(3)?..)?.try_into().ok()?;
    let (d1, d2) = (e1 - e0, e2 - e1);
    if d1 > 0.0 && d2 > 0.0 && d2 < d1 {
        let r = d2 / d1;
        Some(e2 + d2 * r / (1.0 - r))
    } else {
        None
    }
}

/// Best constant at `p = τ = 2` on each of a sequence of nested meshes.
///
/// Each solve is warm-started from the previous maximizer; below
/// `DENSE_LIMIT` nodes the power-iteration value is raised to the dense
/// eigenvalue when that is larger, so nested estimates stay monotone.
pub fn best_constant_quadratic(
    mesh_sequence: &[Mesh<f64>],
    w: &HardyWeight<f64>,
    params: &FracParams<f64>,
) -> Result<ConstantEstimate> {
    require_quadratic(w, params)?;
    if mesh_sequence.is_empty() {
        return Err(FracError::input("mesh_sequence", "empty"));
    }
    for pair in mesh_sequence.windows(2) {
        check_nested(&pair[0], &pair[1])?;
    }
    let mut refinements = Vec::new();
    let mut prev: Option<(Mesh<f64>, DVector<f64>)> = None;
    for mesh in mesh_sequence {
        let forms = assemble_forms(mesh, w, params)?;
        let chol = factor(&forms.a)?;
        let start = match &prev {
            Some((m, v)) => prolong(m, v, mesh)?,
            None => {
                // the weight peaks at both ends: a log profile is a good start
                DVector::from_iterator(mesh.len(), mesh.points().iter().map(|p| {
                    let d = p.delta().max(1e-300);
                    (2.0 / d).ln().ln() * if p.lo < p.hi { 1.0 } else { 0.5 }
                }))
            }
        };
        let mean = DVector::from_vec(mean_weights(mesh));
        let start = start.add_scalar(-mean.dot(&start));
        let (mut rho, x, residual) = power_top(&forms, &chol, start)?;
        if mesh.len() <= DENSE_LIMIT {
            rho = rho.max(dense_top_eigenvalue(&forms)?);
        }
        refinements.push(Refinement { node_count: mesh.len(), estimate: rho.sqrt(), residual });
        prev = Some((mesh.clone(), x));
    }
    let est: Vec<f64> = refinements.iter().map(|r| r.estimate).collect();
    let converged = match est.len() {
        0 | 1 => false,
        k => (est[k - 1] - est[k - 2]).abs() < 1e-3 * est[k - 1],
    };
    let (_, x) = prev.expect("non-empty sequence");
    let maximizer = x.normalize().iter().cloned().collect();
    Ok(ConstantEstimate { extrapolated: aitken(&est), refinements, converged, restarts: Vec::new(), maximizer })
}

/// Default nested sequence: `elements` graded geometrically with ratio 1/2 to
/// both ends, then bisected `refinements` times.
pub fn nested_meshes(elements: usize, refinements: usize) -> Result<Vec<Mesh<f64>>> {
    let mut m = Mesh::geometric_elements(Interval::unit(), 0.5, elements)?;
    let mut out = vec![m.clone()];
    for _ in 0..refinements {
        m = m.bisect();
        out.push(m.clone());
    }
    Ok(out)
}

/// `R(u) = |w^(1/τ)(u - ū)|_τ / [u]_{s,p}` on a fixed mesh.
pub struct Quotient {
    mesh: Mesh<f64>,
    hardy: HardyForm<f64>,
    params: FracParams<f64>,
    tau: f64,
    cfg: NumericConfig,
}

impl Quotient {
    pub fn new(mesh: &Mesh<f64>, w: &HardyWeight<f64>, params: &FracParams<f64>) -> Result<Self> {
        params.require_critical()?;
        w.check_against(params)?;
        let cfg = NumericConfig::default();
        Ok(Quotient { mesh: mesh.clone(), hardy: HardyForm::new(mesh, w, &cfg)?, params: *params, tau: w.tau, cfg })
    }

    fn grid(&self, u: &[f64]) -> Result<GridFunction<f64>> {
        GridFunction::new(self.mesh.clone(), u.to_vec())
    }

    pub fn value(&self, u: &[f64]) -> Result<f64> {
        let s = seminorm_pow(&self.grid(u)?, &self.params, &self.cfg)?;
        Ok(self.hardy.value(u).powf(1.0 / self.tau) / s.powf(1.0 / self.params.p))
    }

    /// `R` and `∇R`; the gradient is orthogonal to `u` and to constants.
    pub fn value_gradient(&self, u: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (s, gs) = seminorm_pow_gradient(&self.grid(u)?, &self.params, &self.cfg)?;
        let (h, gh) = self.hardy.value_gradient(u);
        if !(s > 0.0) || !(h > 0.0) {
            return Err(FracError::input("u", "quotient undefined for a constant function"));
        }
        let r = h.powf(1.0 / self.tau) / s.powf(1.0 / self.params.p);
        let g = gh
            .iter()
            .zip(&gs)
            .map(|(a, b)| r * (a / (self.tau * h) - b / (self.params.p * s)))
            .collect();
        Ok((r, g))
    }
}

/// Final quotient, iterate, iteration count and convergence flag of one restart.
type AscentRun = (f64, DVector<f64>, usize, bool);

#[derive(Debug, Clone, Copy)]
pub struct AscentOptions {
    /// Initial trial step of each line search, relative to the preconditioned direction.
    pub step: f64,
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        AscentOptions { step: 1.0, max_iter: 400, restarts: 8, seed: 0 }
    }
}

struct Ascent<'a> {
    q: &'a Quotient,
    chol: &'a Cholesky<f64, Dyn>,
    mean: DVector<f64>,
    step: f64,
    max_iter: usize,
}

impl Ascent<'_> {
    fn project(&self, u: DVector<f64>) -> DVector<f64> {
        let u = u.add_scalar(-self.mean.dot(&u));
        let n = u.norm();
        u / n
    }

    /// Nonlinear conjugate gradient (Polak-Ribière+) in the metric of the
    /// shifted `p = 2` seminorm form, Armijo backtracking on `log R`.
    fn run(&self, start: DVector<f64>) -> Result<AscentRun> {
        let mut u = self.project(start);
        let (mut r, g) = self.q.value_gradient(u.as_slice())?;
        let mut g = DVector::from_vec(g) / r;
        let mut z = self.chol.solve(&g);
        let mut d = z.clone();
        let mut gz = g.dot(&z);
        for it in 0..self.max_iter {
            let mut slope = g.dot(&d);
            if !(slope > 0.0) {
                d = z.clone();
                slope = gz;
            }
            if gz <= 1e-26 {
                return Ok((r, u, it, true));
            }
            // scale the trial step to a fixed relative change of u
            let mut t = self.step * 0.1 * u.norm() / d.norm().max(1e-300);
            let f0 = r.ln();
            let mut accepted = None;
            for _ in 0..60 {
                let trial = self.project(&u + &d * t);
                if let Ok(rt) = self.q.value(trial.as_slice()) {
                    if rt.is_finite() && rt.ln() >= f0 + 1e-4 * t * slope {
                        accepted = Some((rt, trial));
                        break;
                    }
                }
                t *= 0.5;
            }
            let Some((rt, trial)) = accepted else {
                // no ascent at working precision: stationary unless far from it
                return if it > 0 { Ok((r, u, it, gz < 1e-12)) } else { Err(FracError::Optimization(format!("line search failed at start, |g| = {}", gz.sqrt()))) };
            };
            let (rn, gn) = self.q.value_gradient(trial.as_slice())?;
            let gn = DVector::from_vec(gn) / rn;
            let zn = self.chol.solve(&gn);
            let gzn = gn.dot(&zn);
            let beta = ((gzn - gn.dot(&z)) / gz).max(0.0);
            d = &zn + &d * beta;
            let gain = (rt - r) / r;
            u = trial;
            r = rn;
            g = gn;
            z = zn;
            gz = gzn;
            if gain < 1e-15 && it > 10 {
                return Ok((r, u, it + 1, true));
            }
        }
        Ok((r, u, self.max_iter, false))
    }
}

/// Best constant for general `(p, τ)` by multi-start preconditioned ascent.
///
/// Restarts run in parallel; the highest quotient wins, ties within `1e-12`
/// go to the lowest restart index.
pub fn best_constant_general(
    p: f64,
    tau: f64,
    w: &HardyWeight<f64>,
    mesh: &Mesh<f64>,
    opts: &AscentOptions,
) -> Result<ConstantEstimate> {
    if (w.tau - tau).abs() > 1e-15 {
        return Err(FracError::domain("tau", format!("weight has tau = {}, requested {tau}", w.tau)));
    }
    let params = FracParams::critical(p)?;
    if tau < p {
        return Err(FracError::domain("tau", format!("need tau >= p, got tau = {tau}, p = {p}")));
    }
    if opts.restarts == 0 || opts.max_iter == 0 || !(opts.step > 0.0) {
        return Err(FracError::input("opts", "restarts, max_iter and step must be positive"));
    }
    require_unit(mesh)?;
    let q = Quotient::new(mesh, w, &params)?;
    let metric = DMatrix::from_row_slice(
        mesh.len(),
        mesh.len(),
        &stiffness_matrix(mesh, &FracParams::critical(2.0)?, &NumericConfig::default())?,
    );
    let chol = factor(&((&metric + metric.transpose()) * 0.5))?;
    let ascent = Ascent { q: &q, chol: &chol, mean: DVector::from_vec(mean_weights(mesh)), step: opts.step, max_iter: opts.max_iter };
    let n = mesh.len();
    let runs: Vec<Result<AscentRun>> = (0..opts.restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(k as u64));
            ascent.run(DVector::from_fn(n, |_, _| rng.gen_range(-1.0..=1.0)))
        })
        .collect();
    let mut restarts = Vec::new();
    let mut best: Option<(usize, f64, DVector<f64>, bool)> = None;
    let mut last_err = None;
    for (k, run) in runs.into_iter().enumerate() {
        match run {
            Ok((r, u, iterations, converged)) => {
                restarts.push(RestartReport { index: k, value: r, iterations, converged });
                if best.as_ref().is_none_or(|b| r > b.1 + 1e-12 * b.1) {
                    best = Some((k, r, u, converged));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let Some((_, r, u, converged)) = best else {
        return Err(last_err.unwrap_or_else(|| FracError::Optimization("no restart succeeded".into())));
    };
    let (_, g) = q.value_gradient(u.as_slice())?;
    let residual = DVector::from_vec(g).norm() / r;
    Ok(ConstantEstimate {
        refinements: vec![Refinement { node_count: n, estimate: r, residual }],
        converged,
        extrapolated: None,
        restarts,
        maximizer: u.iter().cloned().collect(),
    })
}

/// `C [u]_{s,p} - |w^(1/τ)(u - ū)|_τ` over the span of `u`.
pub fn verify_inequality(u: &GridFunction<f64>, c: f64, w: &HardyWeight<f64>, params: &FracParams<f64>) -> Result<f64> {
    let cfg = NumericConfig::default();
    let semi = gagliardo_seminorm_with(u, params, &u.span(), &cfg)?;
    Ok(c * semi - hardy_weighted_norm_with(u, w, &cfg)?)
}
