//! Numerical checks of the lemmas and of each step of the dyadic proof chain.
//!
//! Constants are empirical: the smallest value making a step hold on the
//! functions actually tested.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::NumericConfig;
use crate::error::{FracError, Result};
use crate::grid::GridFunction;
use crate::hardy::hardy_pow;
use crate::lp::{average, integral, power_integral};
use crate::mesh::{Interval, Mesh};
use crate::params::{Centering, FracParams, HardyWeight};
use crate::real::Real;
use crate::seminorm::{gagliardo_seminorm_with, seminorm_pow};

/// Deepest annulus index accepted by the dyadic report.
pub const MIN_DEPTH: i32 = -40;

const FIT_GRID: usize = 32;
const FIT_LO: f64 = 1e-3;
const FIT_HI: f64 = 1e3;

fn check_elementary_params(tau: f64, lambda: f64) -> Result<()> {
    if !(tau > 1.0) || !tau.is_finite() {
        return Err(FracError::domain("tau", format!("{tau} must exceed 1")));
    }
    if !(lambda > 1.0) || !lambda.is_finite() {
        return Err(FracError::domain("lambda", format!("{lambda} must exceed 1")));
    }
    Ok(())
}

/// `sup_x ((1+x)^τ - D x^τ)`, attained at `x0 = 1/(D^(1/(τ-1)) - 1)`, times `(D-1)^(τ-1)`.
fn elementary_peak(d: f64, tau: f64) -> f64 {
    let root = d.powf(1.0 / (tau - 1.0)) - 1.0;
    if !(root > 0.0) {
        return (tau - 1.0).powf(tau - 1.0);
    }
    d * ((d - 1.0) / root).powf(tau - 1.0)
}

/// Smallest admissible `C(Λ, τ)` in `(|a|+|b|)^τ <= D|a|^τ + C/(D-1)^(τ-1) |b|^τ`.
///
/// Grid supremum over `10^4` log-spaced `x ∈ [1e-6, 1e6]` and `10^3` values of
/// `D ∈ (1, Λ)`, refined with the exact inner maximum in `x` (golden-section
/// search in `D` plus the endpoint `D = Λ`), clamped below by `(Λ-1)^(τ-1)`.
pub fn empirical_c_elementary(lambda: f64, tau: f64) -> Result<f64> {
    check_elementary_params(tau, lambda)?;
    const NX: usize = 10_000;
    const ND: usize = 1_000;
    let xs: Vec<f64> = (0..NX).map(|i| 10f64.powf(-6.0 + 12.0 * i as f64 / (NX - 1) as f64)).collect();
    let ds: Vec<f64> = (1..=ND).map(|j| 1.0 + (lambda - 1.0) * j as f64 / (ND + 1) as f64).collect();
    let grid_best = ds
        .par_iter()
        .map(|&d| {
            let f = (d - 1.0).powf(tau - 1.0);
            xs.iter().map(|&x| ((1.0 + x).powf(tau) - d * x.powf(tau)) * f).fold(f64::MIN, f64::max)
        })
        .reduce(|| f64::MIN, f64::max);
    let (mut best_d, mut best) = (lambda, elementary_peak(lambda, tau));
    for &d in &ds {
        let v = elementary_peak(d, tau);
        if v > best {
            best = v;
            best_d = d;
        }
    }
    // golden-section polish around the best grid point
    let step = (lambda - 1.0) / (ND + 1) as f64;
    let (mut a, mut b) = ((best_d - step).max(1.0 + 1e-15), (best_d + step).min(lambda));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if elementary_peak(c, tau) > elementary_peak(d, tau) {
            b = d;
        } else {
            a = c;
        }
    }
    best = best.max(elementary_peak(0.5 * (a + b), tau));
    Ok(best.max(grid_best).max((lambda - 1.0).powf(tau - 1.0)))
}

/// `D|a|^τ + C/(D-1)^(τ-1) |b|^τ - (|a|+|b|)^τ` for a given constant.
pub fn elementary_margin(a: f64, b: f64, tau: f64, d: f64, c: f64) -> f64 {
    let (a, b) = (a.abs(), b.abs());
    d * a.powf(tau) + c / (d - 1.0).powf(tau - 1.0) * b.powf(tau) - (a + b).powf(tau)
}

/// Margin of the elementary inequality with `C = empirical_c_elementary(Λ, τ)`.
pub fn check_elementary_inequality(a: f64, b: f64, tau: f64, lambda: f64, d: f64) -> Result<f64> {
    check_elementary_params(tau, lambda)?;
    if !(d > 1.0 && d < lambda) {
        return Err(FracError::domain("D", format!("{d} not in (1, {lambda})")));
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(FracError::input("a, b", "non-finite"));
    }
    let c = empirical_c_elementary(lambda, tau)?;
    Ok(elementary_margin(a, b, tau, d, c))
}

/// `Σ m_i^λ - (Σ m_i)^λ`.
pub fn check_power_sum(m: &[f64], lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(FracError::domain("lambda", format!("{lambda} not in (0, 1]")));
    }
    if let Some(v) = m.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(FracError::domain("m", format!("entry {v} is not a finite non-negative number")));
    }
    let lhs: f64 = m.iter().map(|v| v.powf(lambda)).sum();
    Ok(lhs - m.iter().sum::<f64>().powf(lambda))
}

fn nonzero_seminorm<T: Real>(v: T, what: &'static str) -> Result<T> {
    if !(v > T::zero()) {
        return Err(FracError::input(what, "seminorm vanishes (constant function)"));
    }
    Ok(v)
}

/// `|(u)_F - (u)_E| min(|E|,|F|) / (|E ∪ F| [u]_{E∪F})` for adjacent `E`, `F`.
pub fn average_transfer_ratio<T: Real>(
    u: &GridFunction<T>,
    e: &Interval<T>,
    f: &Interval<T>,
    params: &FracParams<T>,
) -> Result<T> {
    if (e.b - f.a).abs() > T::lit(1e-12) * (T::one() + e.b.abs()) {
        return Err(FracError::domain("F", format!("E = ({}, {}) and F = ({}, {}) are not adjacent", e.a, e.b, f.a, f.b)));
    }
    let union = Interval::new(e.a, f.b)?;
    let semi = nonzero_seminorm(gagliardo_seminorm_with(u, params, &union, &NumericConfig::default())?, "u")?;
    let jump = (average(u, f)? - average(u, e)?).abs();
    Ok(jump * e.len().min(f.len()) / (union.len() * semi))
}

/// `(⨍_D |u - (u)_D|^τ)^(1/τ) / [u]_{s,p,D}` with `D = (λr, λR)`.
pub fn scaled_sobolev_ratio<T: Real>(
    u: &GridFunction<T>,
    lam: T,
    r: T,
    big_r: T,
    tau: T,
    params: &FracParams<T>,
) -> Result<T> {
    if !(lam > T::zero()) {
        return Err(FracError::domain("lambda", format!("{lam} must be positive")));
    }
    if !(r > T::zero() && big_r > r) {
        return Err(FracError::domain("r", format!("need 0 < r < R, got r = {r}, R = {big_r}")));
    }
    if !(tau > T::zero()) {
        return Err(FracError::domain("tau", format!("{tau} must be positive")));
    }
    let d = Interval::new(lam * r, lam * big_r)?;
    let sub = u.restrict(&d)?;
    let semi = nonzero_seminorm(seminorm_pow(&sub, params, &NumericConfig::default())?, "u")?.powf(T::one() / params.p);
    let len = sub.span().len();
    let centred = sub.offset(-integral(&sub) / len);
    Ok((power_integral(&centred, tau) / len).powf(T::one() / tau) / semi)
}

/// `(∫_0^a |u - (u)_(0,a)|^p)^(1/p) / [u]_{s,p,(0,a)}`.
pub fn poincare_ratio<T: Real>(u: &GridFunction<T>, a: T, params: &FracParams<T>) -> Result<T> {
    if !(a > T::zero()) {
        return Err(FracError::domain("a", format!("{a} must be positive")));
    }
    let sub = u.restrict(&Interval::new(T::zero(), a)?)?;
    let semi = nonzero_seminorm(seminorm_pow(&sub, params, &NumericConfig::default())?, "u")?.powf(T::one() / params.p);
    let len = sub.span().len();
    let centred = sub.offset(-integral(&sub) / len);
    Ok(power_integral(&centred, params.p).powf(T::one() / params.p) / semi)
}

/// Outcome of a randomized lemma suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaSummary {
    pub lemma_id: String,
    pub trials: usize,
    /// Trials with margin below `-1e-9`, or with a non-finite ratio.
    pub violations: usize,
    #[serde(rename = "empirical_C")]
    pub empirical_c: Option<f64>,
    pub worst_margin: Option<f64>,
}

const VIOLATION: f64 = -1e-9;

/// Random `(a, b, D)` with `a, b ∈ [-10, 10]` and `D ∈ (1, Λ)` against `C(Λ, τ)`.
pub fn elementary_trials(lambda: f64, tau: f64, trials: usize, seed: u64) -> Result<LemmaSummary> {
    let c = empirical_c_elementary(lambda, tau)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    let mut violations = 0;
    for _ in 0..trials {
        let a = rng.gen_range(-10.0..=10.0);
        let b = rng.gen_range(-10.0..=10.0);
        let d = 1.0 + (lambda - 1.0) * rng.gen_range(f64::EPSILON..1.0);
        if !(d > 1.0 && d < lambda) {
            continue;
        }
        let m = elementary_margin(a, b, tau, d, c);
        violations += usize::from(!(m >= VIOLATION));
        worst = worst.min(m);
    }
    Ok(LemmaSummary {
        lemma_id: format!("elementary_inequality(lambda={lambda},tau={tau})"),
        trials,
        violations,
        empirical_c: Some(c),
        worst_margin: Some(worst),
    })
}

/// Random lists of length `1..=20` with entries in `[0, 1000]` and `λ ∈ (0, 1]`.
pub fn power_sum_trials(trials: usize, seed: u64) -> Result<LemmaSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    let mut violations = 0;
    for _ in 0..trials {
        let len = rng.gen_range(1..=20);
        let m: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..=1e3)).collect();
        let lam = 1.0 - rng.gen_range(0.0..1.0);
        let margin = check_power_sum(&m, lam)?;
        violations += usize::from(!(margin >= VIOLATION));
        worst = worst.min(margin);
    }
    Ok(LemmaSummary { lemma_id: "power_sum".into(), trials, violations, empirical_c: None, worst_margin: Some(worst) })
}

fn random_pl(rng: &mut ChaCha8Rng, span: Interval<f64>, nodes: usize) -> Result<GridFunction<f64>> {
    let mut xs: Vec<f64> = (0..nodes - 2).map(|_| span.a + span.len() * rng.gen_range(0.02..0.98)).collect();
    xs.push(span.a);
    xs.push(span.b);
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * span.len());
    let vals = (0..xs.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    GridFunction::new(Mesh::from_nodes(&xs)?, vals)
}

fn ratio_summary(id: &str, trials: usize, ratios: Vec<Result<f64>>) -> LemmaSummary {
    let mut sup: f64 = 0.0;
    let mut violations = 0;
    for r in ratios {
        match r {
            Ok(v) if v.is_finite() => sup = sup.max(v),
            Ok(_) => violations += 1,
            Err(e) if e.is_numerical() => violations += 1,
            // constant samples are outside the lemma
            Err(_) => {}
        }
    }
    LemmaSummary { lemma_id: id.into(), trials, violations, empirical_c: Some(sup), worst_margin: None }
}

/// Empirical sup of the average-transfer ratio over random functions and adjacent pairs in `(0, 2)`.
pub fn average_transfer_trials(trials: usize, seed: u64, params: &FracParams<f64>) -> LemmaSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ratios = (0..trials)
        .map(|_| {
            let u = random_pl(&mut rng, Interval::new(0.0, 2.0)?, 10)?;
            let a = rng.gen_range(0.0..0.9);
            let b = rng.gen_range(a + 0.05..1.5);
            let c = rng.gen_range(b + 0.05..2.0);
            average_transfer_ratio(&u, &Interval::new(a, b)?, &Interval::new(b, c)?, params)
        })
        .collect();
    ratio_summary("average_transfer", trials, ratios)
}

/// Empirical sup of the scaled Sobolev ratio on `(λ, 2λ)` with `λ = 2^k`, `k ∈ -10..=0`.
pub fn scaled_sobolev_trials(trials: usize, seed: u64, tau: f64, params: &FracParams<f64>) -> LemmaSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ratios = (0..trials)
        .map(|_| {
            let lam = 2f64.powi(rng.gen_range(-10..=0));
            let u = random_pl(&mut rng, Interval::new(0.5 * lam, 3.0 * lam)?, 10)?;
            scaled_sobolev_ratio(&u, lam, 1.0, 2.0, tau, params)
        })
        .collect();
    ratio_summary("scaled_sobolev", trials, ratios)
}

/// Empirical sup of the Poincaré ratio on `(0, a)`.
pub fn poincare_trials(trials: usize, seed: u64, params: &FracParams<f64>) -> LemmaSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ratios = (0..trials)
        .map(|_| {
            let a = rng.gen_range(0.1..1.0);
            let u = random_pl(&mut rng, Interval::new(0.0, 1.0)?, 10)?;
            poincare_ratio(&u, a, params)
        })
        .collect();
    ratio_summary("poincare", trials, ratios)
}

/// `D_τ^k = ((-k)/(-k - 1/2))^(τ-1)` for `k <= -2`.
pub fn d_tau(k: i32, tau: f64) -> Result<f64> {
    if k > -2 {
        return Err(FracError::domain("k", format!("D_tau^k needs k <= -2, got {k}")));
    }
    let mk = -(k as f64);
    Ok((mk / (mk - 0.5)).powf(tau - 1.0))
}

/// `A_k = [2^k, 2^(k+1))`.
pub fn annulus(k: i32) -> Result<Interval<f64>> {
    if !(MIN_DEPTH - 1..=-1).contains(&k) {
        return Err(FracError::domain("k", format!("annulus index {k} outside [{}, -1]", MIN_DEPTH)));
    }
    Interval::new(2f64.powi(k), 2f64.powi(k + 1))
}

/// One dyadic annulus.
#[derive(Debug, Clone, Serialize)]
pub struct DyadicRow {
    pub k: i32,
    pub length: f64,
    /// `(u)_{A_k}`
    pub avg: f64,
    /// `[u]_{s,p,A_k}`
    pub semi: f64,
    /// `[u]_{s,p,A_k ∪ A_(k+1)}`, absent for `k = -1`.
    pub pair_semi: Option<f64>,
    /// `∫_{A_k} δ^(τγ) |u|^τ / log^τ(2/δ)`
    pub weighted: f64,
    /// `(2^-k ∫_{A_k} |u - (u)_{A_k}|^τ)^(1/τ) / [u]_{A_k}`
    pub sobolev_ratio: f64,
    pub d_tau: Option<f64>,
}

/// Per-function inputs of every step, from which constants and margins follow.
#[derive(Debug, Clone, Serialize)]
pub struct DyadicQuantities {
    pub depth: i32,
    pub tau: f64,
    pub p: f64,
    pub rows: Vec<DyadicRow>,
    /// `[u]_{s,p,(0,1)}`
    pub seminorm: f64,
    /// `|u|_{p,(0,1)}`
    pub lp_norm: f64,
    /// `∫_{2^m}^{1/2} δ^(τγ) |u|^τ / log^τ(2/δ)` over the whole window at once.
    pub weighted_window: f64,
}

/// Empirical constants of the steps that carry one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DyadicConstants {
    /// Scaled Sobolev step on each annulus.
    pub sobo: f64,
    /// `Σ weighted_k <= C1 Σ avg_k^τ/(-k)^τ + C2 [u]^τ`.
    pub split: (f64, f64),
    /// `|avg_k|^τ <= D_k |avg_(k+1)|^τ + C (-k)^(τ-1) [u]^τ_{A_k ∪ A_(k+1)}`.
    pub recursion: f64,
    /// `Σ |avg_k|^τ/(-k)^(τ-1) <= C1 |avg_(-1)|^τ + C2 [u]^τ`.
    pub ss: (f64, f64),
    /// `(∫_{2^m}^{1/2} ...)^(p/τ) <= C'' |u|_p^p + C' [u]^p`.
    pub m: (f64, f64),
}

/// `RHS - LHS` of each step with given constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DyadicMargins {
    /// Smallest per-annulus margin of the scaled Sobolev step.
    pub sobo: f64,
    /// `Σ_k [u]^τ_{A_k} <= [u]^τ` (disjoint squares, power-sum lemma).
    pub annuli_sum: f64,
    /// `Σ_k [u]^τ_{A_k ∪ A_(k+1)} <= 2^(τ/p) [u]^τ` (double cover).
    pub overlap_sum: f64,
    pub split: f64,
    /// Smallest per-annulus margin.
    pub recursion: f64,
    /// Telescoped form, with `C(τ) = (3/2)^(1-τ)` and the recursion constant.
    pub telescope: f64,
    pub ss: f64,
    /// `2 |u|_p - |(u)_(A_(-1))|`
    pub ee: f64,
    pub m: f64,
    /// Whole-window weighted integral against the annulus sum (relative difference).
    pub window_consistency: f64,
}

impl DyadicMargins {
    /// Smallest margin over all steps (consistency excluded).
    pub fn worst(&self) -> f64 {
        [self.sobo, self.annuli_sum, self.overlap_sum, self.split, self.recursion, self.telescope, self.ss, self.ee, self.m]
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DyadicReport {
    pub quantities: DyadicQuantities,
    pub constants: DyadicConstants,
    pub margins: DyadicMargins,
}

/// Annulus quantities, constants and margins for one function on `(0, 1)`.
pub fn dyadic_chain_report(
    u: &GridFunction<f64>,
    m: i32,
    w: &HardyWeight<f64>,
    params: &FracParams<f64>,
) -> Result<DyadicReport> {
    let q = dyadic_quantities(u, m, w, params)?;
    let constants = fit_constants(std::slice::from_ref(&q))?;
    let margins = dyadic_margins(&q, &constants);
    Ok(DyadicReport { quantities: q, constants, margins })
}

/// Per-annulus quantities of one function.
pub fn dyadic_quantities(
    u: &GridFunction<f64>,
    m: i32,
    w: &HardyWeight<f64>,
    params: &FracParams<f64>,
) -> Result<DyadicQuantities> {
    if !(MIN_DEPTH..=-2).contains(&m) {
        return Err(FracError::domain("depth", format!("{m} outside [{MIN_DEPTH}, -2]")));
    }
    params.require_critical()?;
    w.check_against(params)?;
    if u.span() != Interval::unit() {
        return Err(FracError::domain("u", "the dyadic chain needs a function on (0, 1)"));
    }
    let cfg = NumericConfig::default();
    let tau = w.tau;
    let p = params.p;
    check_resolution(u.mesh(), m)?;
    let raw = w.with_centering(Centering::Raw);
    let ks: Vec<i32> = (m..=-1).collect();
    let rows = ks
        .par_iter()
        .map(|&k| -> Result<DyadicRow> {
            let a = annulus(k)?;
            let sub = u.restrict(&a)?;
            let len = a.len();
            let avg = integral(&sub) / len;
            let semi = seminorm_pow(&sub, params, &cfg)?.powf(1.0 / p);
            let osc = power_integral(&sub.offset(-avg), tau);
            let sobolev_ratio = if semi > 0.0 {
                (osc / len).powf(1.0 / tau) / semi
            } else if osc > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            let weighted = hardy_pow(u, &raw.with_window(a), &cfg)?;
            let (pair_semi, dk) = if k <= -2 {
                let pair = Interval::new(a.a, 2f64.powi(k + 2))?;
                (Some(gagliardo_seminorm_with(u, params, &pair, &cfg)?), Some(d_tau(k, tau)?))
            } else {
                (None, None)
            };
            Ok(DyadicRow { k, length: len, avg, semi, pair_semi, weighted, sobolev_ratio, d_tau: dk })
        })
        .collect::<Result<Vec<_>>>()?;
    let seminorm = seminorm_pow(u, params, &cfg)?.powf(1.0 / p);
    let lp_norm = power_integral(u, p).powf(1.0 / p);
    let window = Interval::new(2f64.powi(m), 0.5)?;
    let weighted_window = hardy_pow(u, &raw.with_window(window), &cfg)?;
    Ok(DyadicQuantities { depth: m, tau, p, rows, seminorm, lp_norm, weighted_window })
}

/// Every element meeting `A_k` must be no longer than `|A_k|`.
fn check_resolution(mesh: &Mesh<f64>, m: i32) -> Result<()> {
    for k in m..=-1 {
        let a = annulus(k)?;
        for e in 0..mesh.elements() {
            let (x0, x1) = (mesh.node(e), mesh.node(e + 1));
            if x1 > a.a && x0 < a.b && mesh.h(e) > a.len() {
                return Err(FracError::Resolution {
                    annulus: k,
                    msg: format!("element [{x0}, {x1}] is longer than |A_{k}| = {}", a.len()),
                });
            }
        }
    }
    Ok(())
}

struct StepTerms {
    split: (f64, f64, f64),
    ss: (f64, f64, f64),
    m: (f64, f64, f64),
}

fn step_terms(q: &DyadicQuantities) -> StepTerms {
    let tau = q.tau;
    let inner = || q.rows.iter().filter(|r| r.k <= -2);
    let last = q.rows.iter().find(|r| r.k == -1).expect("row k = -1");
    let semi_tau = q.seminorm.powf(tau);
    let lhs3: f64 = inner().map(|r| r.weighted).sum();
    let a3: f64 = inner().map(|r| r.avg.abs().powf(tau) / (-(r.k as f64)).powf(tau)).sum();
    let lhs_ss: f64 = inner().map(|r| r.avg.abs().powf(tau) / (-(r.k as f64)).powf(tau - 1.0)).sum();
    let lhs_m = q.weighted_window.powf(q.p / tau);
    StepTerms {
        split: (lhs3, a3, semi_tau),
        ss: (lhs_ss, last.avg.abs().powf(tau), semi_tau),
        m: (lhs_m, q.lp_norm.powf(q.p), q.seminorm.powf(q.p)),
    }
}

fn fit_grid() -> Vec<f64> {
    (0..FIT_GRID)
        .map(|i| FIT_LO * (FIT_HI / FIT_LO).powf(i as f64 / (FIT_GRID - 1) as f64))
        .collect()
}

/// Lexicographically smallest `(C1, C2)` on the log grid with `lhs <= C1 a + C2 b` for all samples.
fn fit_pair(samples: &[(f64, f64, f64)], step: &'static str) -> Result<(f64, f64)> {
    let grid = fit_grid();
    for &c1 in &grid {
        for &c2 in &grid {
            if samples.iter().all(|&(lhs, a, b)| lhs <= c1 * a + c2 * b) {
                return Ok((c1, c2));
            }
        }
    }
    Err(FracError::Optimization(format!(
        "no constants in [{FIT_LO}, {FIT_HI}]^2 make step {step} hold on the population"
    )))
}

/// Empirical constants over a population of functions.
pub fn fit_constants(population: &[DyadicQuantities]) -> Result<DyadicConstants> {
    if population.is_empty() {
        return Err(FracError::input("population", "empty"));
    }
    let terms: Vec<StepTerms> = population.iter().map(step_terms).collect();
    let mut sobo: f64 = 0.0;
    let mut recursion: f64 = 0.0;
    for q in population {
        for (i, r) in q.rows.iter().enumerate() {
            sobo = sobo.max(r.sobolev_ratio);
            if let (Some(ps), Some(dk)) = (r.pair_semi, r.d_tau) {
                let next = &q.rows[i + 1];
                let excess = r.avg.abs().powf(q.tau) - dk * next.avg.abs().powf(q.tau);
                if excess > 0.0 {
                    let scale = (-(r.k as f64)).powf(q.tau - 1.0) * ps.powf(q.tau);
                    recursion = recursion.max(if scale > 0.0 { excess / scale } else { f64::INFINITY });
                }
            }
        }
    }
    Ok(DyadicConstants {
        sobo,
        split: fit_pair(&terms.iter().map(|t| t.split).collect::<Vec<_>>(), "split")?,
        recursion,
        ss: fit_pair(&terms.iter().map(|t| t.ss).collect::<Vec<_>>(), "ss")?,
        m: fit_pair(&terms.iter().map(|t| t.m).collect::<Vec<_>>(), "m")?,
    })
}

/// Margins of every step with the given constants.
pub fn dyadic_margins(q: &DyadicQuantities, c: &DyadicConstants) -> DyadicMargins {
    let tau = q.tau;
    let t = step_terms(q);
    let semi_tau = q.seminorm.powf(tau);
    let mut sobo = f64::INFINITY;
    let mut recursion = f64::INFINITY;
    let mut annuli = 0.0;
    let mut overlap = 0.0;
    let mut lhs_tel = 0.0;
    for (i, r) in q.rows.iter().enumerate() {
        let osc = r.sobolev_ratio * r.semi;
        sobo = sobo.min(c.sobo * r.semi - osc);
        annuli += r.semi.powf(tau);
        let mk = -(r.k as f64);
        if let (Some(ps), Some(dk)) = (r.pair_semi, r.d_tau) {
            overlap += ps.powf(tau);
            let next = q.rows[i + 1].avg.abs().powf(tau);
            let lhs = r.avg.abs().powf(tau);
            recursion = recursion.min(dk * next + c.recursion * mk.powf(tau - 1.0) * ps.powf(tau) - lhs);
            lhs_tel += if r.k == q.depth {
                lhs / mk.powf(tau - 1.0)
            } else {
                (mk.powf(1.0 - tau) - (mk + 0.5).powf(1.0 - tau)) * lhs
            };
        }
    }
    let last = q.rows.last().expect("row k = -1");
    let rhs_tel = 1.5f64.powf(1.0 - tau) * last.avg.abs().powf(tau)
        + c.recursion * q.rows.iter().filter_map(|r| r.pair_semi).map(|s| s.powf(tau)).sum::<f64>();
    let sum_weighted: f64 = q.rows.iter().filter(|r| r.k <= -2).map(|r| r.weighted).sum();
    DyadicMargins {
        sobo,
        annuli_sum: semi_tau - annuli,
        overlap_sum: 2f64.powf(tau / q.p) * semi_tau - overlap,
        split: c.split.0 * t.split.1 + c.split.1 * t.split.2 - t.split.0,
        recursion,
        telescope: rhs_tel - lhs_tel,
        ss: c.ss.0 * t.ss.1 + c.ss.1 * t.ss.2 - t.ss.0,
        ee: 2.0 * q.lp_norm - last.avg.abs(),
        m: c.m.0 * t.m.1 + c.m.1 * t.m.2 - t.m.0,
        window_consistency: (q.weighted_window - sum_weighted).abs() / q.weighted_window.abs().max(f64::MIN_POSITIVE),
    }
}

/// Random functions on `mesh` from a fixed seed.
///
/// With `knot_depth = None` the node values are i.i.d. uniform on `[-1, 1]`.
/// With `Some(d)` the uniform values sit at knots `x = 2^(-j/2)`,
/// `j = 0..=2d`, interpolated linearly in `log x` and held constant below the
/// deepest knot, which keeps the oscillation per annulus of order one.
pub fn random_population(
    mesh: &Mesh<f64>,
    count: usize,
    knot_depth: Option<u32>,
    seed: u64,
) -> Result<Vec<GridFunction<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match knot_depth {
        None => (0..count)
            .map(|_| {
                let vals = (0..mesh.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                GridFunction::new(mesh.clone(), vals)
            })
            .collect(),
        Some(0) => Err(FracError::domain("knot_depth", "must be positive")),
        Some(d) => {
            let knots = 2 * d as usize + 1;
            (0..count)
                .map(|_| {
                    let vals: Vec<f64> = (0..knots).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                    GridFunction::sample(mesh.clone(), |q| {
                        let t = (-2.0 * q.x.log2()).clamp(0.0, (knots - 1) as f64);
                        let j = (t.floor() as usize).min(knots - 2);
                        let th = t - j as f64;
                        Ok((1.0 - th) * vals[j] + th * vals[j + 1])
                    })
                })
                .collect()
        }
    }
}

/// Constants fitted over a population and the margins of each member.
#[derive(Debug, Clone, Serialize)]
pub struct PopulationReport {
    pub constants: DyadicConstants,
    pub margins: Vec<DyadicMargins>,
    pub worst_margin: f64,
}

pub fn dyadic_population(
    functions: &[GridFunction<f64>],
    m: i32,
    w: &HardyWeight<f64>,
    params: &FracParams<f64>,
) -> Result<PopulationReport> {
    let qs = functions
        .iter()
        .map(|u| dyadic_quantities(u, m, w, params))
        .collect::<Result<Vec<_>>>()?;
    let constants = fit_constants(&qs)?;
    let margins: Vec<DyadicMargins> = qs.iter().map(|q| dyadic_margins(q, &constants)).collect();
    let worst_margin = margins.iter().map(|m| m.worst()).fold(f64::INFINITY, f64::min);
    Ok(PopulationReport { constants, margins, worst_margin })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elementary_constant_for_tau_two_is_lambda() {
        let c = empirical_c_elementary(2.0, 2.0).unwrap();
        assert!((c - 2.0).abs() < 1e-9, "{c}");
        let m = check_elementary_inequality(1.0, 1.0, 2.0, 2.0, 1.5).unwrap();
        assert!((m - 1.5).abs() < 1e-8);
        assert!(check_elementary_inequality(1.0, 1.0, 2.0, 2.0, 2.5).is_err());
    }

    #[test]
    fn power_sum_examples() {
        assert_eq!(check_power_sum(&[3.0, 4.0], 1.0).unwrap(), 0.0);
        let v = check_power_sum(&[1.0, 1.0], 0.5).unwrap();
        assert!((v - (2.0 - 2f64.sqrt())).abs() < 1e-15);
        assert!(check_power_sum(&[-1.0], 0.5).is_err());
    }

    #[test]
    fn d_tau_values() {
        assert!((d_tau(-2, 2.0).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!(d_tau(-1, 2.0).is_err());
        assert_eq!(annulus(-1).unwrap(), Interval::new(0.5, 1.0).unwrap());
    }
}
