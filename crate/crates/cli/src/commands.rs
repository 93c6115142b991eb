use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use frachardy::estimator::{best_constant_general, best_constant_quadratic, AscentOptions, ConstantEstimate};
use frachardy::prooflab::{self, dyadic_chain_report};
use frachardy::sequences::*;
use frachardy::{gagliardo_seminorm_with, hardy_weighted_norm_with, Centering, FracParams, HardyWeight, Interval, Mesh};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::expr::parse;
use crate::output::{write_csv, write_json, Cell};
use crate::spec::{build_mesh, FunctionSpec};

#[derive(Debug, Parser)]
#[command(name = "frachardy", version, about = "Fractional seminorms and log-corrected boundary Hardy functionals at sp = 1")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Gagliardo seminorm of a function over an interval.
    Seminorm(SeminormArgs),
    /// Weighted boundary norm, seminorm and their ratio on (0, 1).
    Hardy(HardyArgs),
    /// Seminorm decomposition of a sequence family over a list of ε.
    Sweep(SweepArgs),
    /// Weighted functional of u_ε with its rescaling and a quadrature cross-check.
    WeightedSweep(WeightedSweepArgs),
    /// Seminorm over the f-weighted functional for u_ε.
    Optimality(OptimalityArgs),
    /// Discrete best constant on a sequence of graded meshes.
    EstimateConstant(EstimateArgs),
    /// Randomized suites for the elementary lemmas.
    VerifyLemmas(VerifyArgs),
    /// Dyadic annulus decomposition and step margins.
    DyadicReport(DyadicArgs),
}

fn pair(param: &'static str, v: &[f64]) -> CliResult<Interval<f64>> {
    match v {
        [a, b] => Interval::new(*a, *b).map_err(|e| CliError::param(param, e.to_string())),
        _ => Err(CliError::param(param, format!("expected A,B, got {} values", v.len()))),
    }
}

#[derive(Debug, Args)]
pub struct SeminormArgs {
    #[arg(long = "fn")]
    pub function: String,
    #[arg(long)]
    pub s: f64,
    #[arg(long)]
    pub p: f64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,1")]
    pub interval: Vec<f64>,
    #[arg(long = "mesh-n")]
    pub mesh_n: Option<usize>,
    /// Geometric grading ratio toward both ends (uniform when absent).
    #[arg(long)]
    pub grading: Option<f64>,
}

#[derive(Debug, Args)]
pub struct HardyArgs {
    #[arg(long = "fn")]
    pub function: String,
    #[arg(long)]
    pub tau: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: f64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub window: Option<Vec<f64>>,
    /// Do not subtract the mean over (0, 1).
    #[arg(long)]
    pub raw: bool,
    /// Exponent of the seminorm; `s = 1/p`.
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long = "mesh-n")]
    pub mesh_n: Option<usize>,
    #[arg(long)]
    pub grading: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Family {
    #[value(name = "u_eps")]
    UEps,
    #[value(name = "rho_eps")]
    RhoEps,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps: Vec<f64>,
    #[arg(long = "fn-family", value_enum, default_value = "u_eps")]
    pub family: Family,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct WeightedSweepArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OptimalityArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps: Vec<f64>,
    /// Improvement weight as an expression in `x`, evaluated at the boundary distance.
    #[arg(long)]
    pub improvement: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub tau: f64,
    /// Element counts; at p = tau = 2 each must double the previous one.
    #[arg(long = "mesh-n", value_delimiter = ',', required = true)]
    pub mesh_n: Vec<usize>,
    #[arg(long)]
    pub grading: Option<f64>,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long = "max-iter", default_value_t = 400)]
    pub max_iter: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub trials: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DyadicArgs {
    #[arg(long = "fn")]
    pub function: String,
    #[arg(long, allow_negative_numbers = true)]
    pub depth: i32,
    #[arg(long, default_value_t = 2.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long = "mesh-n")]
    pub mesh_n: Option<usize>,
    /// Output file; `.json` gives the full report, anything else the annulus table as CSV.
    #[arg(long)]
    pub out: PathBuf,
}

fn epsilons(v: &[f64]) -> CliResult<Vec<Epsilon<f64>>> {
    v.iter().map(|&e| Epsilon::new(e).map_err(|err| CliError::param("eps", err.to_string()))).collect()
}

fn say(out: &mut dyn Write, text: String) -> CliResult<()> {
    writeln!(out, "{text}").map_err(|source| CliError::Io { path: "<stdout>".into(), source })
}

pub fn execute(cmd: &Command, cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    match cmd {
        Command::Seminorm(a) => seminorm(a, cfg, out),
        Command::Hardy(a) => hardy(a, cfg, out),
        Command::Sweep(a) => sweep(a, cfg),
        Command::WeightedSweep(a) => weighted_sweep(a, cfg, out),
        Command::Optimality(a) => optimality(a, cfg),
        Command::EstimateConstant(a) => estimate(a, cfg),
        Command::VerifyLemmas(a) => verify(a, cfg),
        Command::DyadicReport(a) => dyadic(a, cfg, out),
    }
}

fn seminorm(a: &SeminormArgs, cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let spec: FunctionSpec = a.function.parse()?;
    let params = FracParams::new(a.s, a.p)?;
    let domain = pair("interval", &a.interval)?;
    let elements = a.mesh_n.unwrap_or(cfg.mesh_elements);
    let f = spec.resolve()?;
    let u = f.on(&build_mesh(domain, elements, a.grading)?)?;
    let v = gagliardo_seminorm_with(&u, &params, &domain, &cfg.numeric())?;
    say(out, format!("{v:?}"))
}

fn hardy(a: &HardyArgs, cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let spec: FunctionSpec = a.function.parse()?;
    let params = FracParams::critical(a.p)?;
    let centering = if a.raw { Centering::Raw } else { Centering::SubtractMean };
    let window = match &a.window {
        Some(w) => pair("window", w)?,
        None => Interval::unit(),
    };
    let w = HardyWeight::new(a.tau, a.gamma, window, centering)?;
    w.check_against(&params)?;
    let elements = a.mesh_n.unwrap_or(cfg.mesh_elements);
    let grading = a.grading.unwrap_or(cfg.grading_ratio);
    let u = spec.resolve()?.on(&build_mesh(Interval::unit(), elements, Some(grading))?)?;
    if u.span() != Interval::unit() {
        return Err(CliError::param("fn", "the weighted norm needs a function on (0, 1)"));
    }
    let ncfg = cfg.numeric();
    let lhs = hardy_weighted_norm_with(&u, &w, &ncfg)?;
    let semi = gagliardo_seminorm_with(&u, &params, &Interval::unit(), &ncfg)?;
    say(out, format!("lhs {lhs:?}"))?;
    say(out, format!("seminorm {semi:?}"))?;
    say(out, format!("ratio {:?}", if semi > 0.0 { lhs / semi } else { f64::NAN }))
}

pub const SWEEP_COLUMNS: [&str; 8] = [
    "epsilon",
    "seminorm_sq",
    "seminorm_sq_times_logeps",
    "i_eps",
    "k_eps",
    "mean_ceps",
    "weighted_functional",
    "weighted_times_logeps",
];

fn sweep(a: &SweepArgs, cfg: &RunConfig) -> CliResult<()> {
    let eps = epsilons(&a.eps)?;
    let path = cfg.resolve(&a.out);
    let ncfg = cfg.numeric();
    let mut rows = Vec::new();
    for e in eps {
        let l = e.log_abs();
        let row: Vec<Cell> = match a.family {
            Family::UEps => {
                let s = u_eps_seminorm_sq(e)?;
                let w = u_eps_weighted_functional(e).total;
                vec![e.get().into(), s.total.into(), (s.total * l).into(), s.i_eps.into(), s.k_eps.into(), u_eps_mean(e).c_eps.into(), w.into(), (w * l).into()]
            }
            Family::RhoEps => {
                // ρ_ε is piecewise linear with kinks at ε and 1-ε: three elements represent it exactly
                let f = make_rho_eps(e);
                let mesh = Mesh::uniform(Interval::unit(), 3)?.with_breakpoints(f.breakpoints())?;
                let g = f.sample(&mesh)?;
                let semi = gagliardo_seminorm_with(&g, &FracParams::critical(2.0)?, &Interval::unit(), &ncfg)?.powi(2);
                let w = weighted_functional_quadrature(&f, 1.0 - e.get(), &ImprovementWeight::one(), 1.0, &ncfg)?;
                vec![e.get().into(), semi.into(), (semi * l).into(), Cell::Empty, Cell::Empty, (-e.get()).into(), w.into(), (w * l).into()]
            }
        };
        rows.push(row);
    }
    write_csv(&path, &SWEEP_COLUMNS, &rows)
}

pub const WEIGHTED_COLUMNS: [&str; 8] =
    ["epsilon", "log_abs_eps", "weighted_functional", "layers", "plateau", "weighted_times_logeps", "quadrature", "relative_difference"];

fn weighted_sweep(a: &WeightedSweepArgs, cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let eps = epsilons(&a.eps)?;
    let path = cfg.resolve(&a.out);
    let ncfg = cfg.numeric();
    let mut rows = Vec::new();
    for &e in &eps {
        let l = e.log_abs();
        let w = u_eps_weighted_functional(e);
        let q = weighted_functional_quadrature(&make_u_eps(e), u_eps_mean(e).mean, &ImprovementWeight::one(), 1.0, &ncfg)?;
        rows.push(vec![
            e.get().into(),
            l.into(),
            w.total.into(),
            w.layers.into(),
            w.plateau.into(),
            (w.total * l).into(),
            q.into(),
            ((q - w.total).abs() / w.total).into(),
        ]);
    }
    write_csv(&path, &WEIGHTED_COLUMNS, &rows)?;
    let mut sorted = eps.clone();
    sorted.sort_by(|x, y| x.get().total_cmp(&y.get()));
    if sorted.len() >= 2 {
        let limit = weighted_functional_limit(sorted[0], sorted[1])?;
        say(out, format!("limit {limit:?}"))?;
        say(out, format!("limit_over_one_layer {:?}", limit * 3.0))?;
    }
    Ok(())
}

pub const OPTIMALITY_COLUMNS: [&str; 5] = ["epsilon", "seminorm_sq", "denominator", "ratio", "improvement_at_eps"];

fn optimality(a: &OptimalityArgs, cfg: &RunConfig) -> CliResult<()> {
    let eps = epsilons(&a.eps)?;
    let expr = parse(&a.improvement)?;
    let path = cfg.resolve(&a.out);
    let ncfg = cfg.numeric();
    let name = expr.to_string();
    let e2 = expr.clone();
    // x is the boundary distance; below the smallest normal double it is held there
    let f = ImprovementWeight::new(name, Divergence::AtZero, move |d: f64, _| e2.eval(d.max(f64::MIN_POSITIVE)));
    let mut rows = Vec::new();
    for e in eps {
        let num = u_eps_seminorm_sq(e)?.total;
        let den = weighted_functional_quadrature(&make_u_eps(e), u_eps_mean(e).mean, &f, 1.0, &ncfg)?;
        let ratio = ratio_guarded(num, den)?;
        rows.push(vec![e.get().into(), num.into(), den.into(), ratio.into(), f.eval(e.get(), e.log_abs())?.into()]);
    }
    write_csv(&path, &OPTIMALITY_COLUMNS, &rows)
}

#[derive(Debug, Serialize)]
pub struct EstimateDocument {
    pub mesh_nodes: Vec<usize>,
    pub estimates: Vec<f64>,
    pub residuals: Vec<f64>,
    pub extrapolated: Option<f64>,
}

impl From<&ConstantEstimate> for EstimateDocument {
    fn from(e: &ConstantEstimate) -> Self {
        EstimateDocument {
            mesh_nodes: e.refinements.iter().map(|r| r.node_count).collect(),
            estimates: e.refinements.iter().map(|r| r.estimate).collect(),
            residuals: e.refinements.iter().map(|r| r.residual).collect(),
            extrapolated: e.extrapolated,
        }
    }
}

fn estimate(a: &EstimateArgs, cfg: &RunConfig) -> CliResult<()> {
    let params = FracParams::critical(a.p)?;
    let w = HardyWeight::standard(a.tau)?;
    w.check_against(&params)?;
    let ratio = a.grading.unwrap_or(cfg.grading_ratio);
    let path = cfg.resolve(&a.out);
    let quadratic = (a.p - 2.0).abs() < 1e-15 && (a.tau - 2.0).abs() < 1e-15;
    let doc = if quadratic {
        let mut meshes = vec![Mesh::geometric_elements(Interval::unit(), ratio, a.mesh_n[0])?];
        for pair in a.mesh_n.windows(2) {
            if pair[1] != 2 * pair[0] {
                return Err(CliError::param("mesh-n", format!("nested meshes must double: {} then {}", pair[0], pair[1])));
            }
            let next = meshes.last().expect("non-empty").bisect();
            meshes.push(next);
        }
        EstimateDocument::from(&best_constant_quadratic(&meshes, &w, &params)?)
    } else {
        let opts = AscentOptions { restarts: a.restarts, max_iter: a.max_iter, seed: cfg.seed, ..AscentOptions::default() };
        let mut doc = EstimateDocument { mesh_nodes: vec![], estimates: vec![], residuals: vec![], extrapolated: None };
        for &n in &a.mesh_n {
            let mesh = Mesh::geometric_elements(Interval::unit(), ratio, n)?;
            let e = best_constant_general(a.p, a.tau, &w, &mesh, &opts)?;
            let d = EstimateDocument::from(&e);
            doc.mesh_nodes.extend(d.mesh_nodes);
            doc.estimates.extend(d.estimates);
            doc.residuals.extend(d.residuals);
        }
        doc
    };
    write_json(&path, &doc)
}

/// `(Λ, τ)` pairs exercised by the elementary-inequality suite.
pub const ELEMENTARY_CASES: [(f64, f64); 4] = [(2.0, 2.0), (2.0, 3.0), (1.5, 1.5), (4.0, 2.5)];

/// Trials of the ratio lemmas are capped; each needs seminorms of a random function.
pub const RATIO_TRIALS: usize = 2000;

pub fn lemma_suite(trials: usize, seed: u64) -> CliResult<Vec<prooflab::LemmaSummary>> {
    let params = FracParams::critical(2.0)?;
    let mut out = Vec::new();
    for (i, &(lam, tau)) in ELEMENTARY_CASES.iter().enumerate() {
        out.push(prooflab::elementary_trials(lam, tau, trials, seed.wrapping_add(i as u64))?);
    }
    out.push(prooflab::power_sum_trials(trials, seed.wrapping_add(100))?);
    let rt = trials.min(RATIO_TRIALS);
    out.push(prooflab::average_transfer_trials(rt, seed.wrapping_add(200), &params));
    out.push(prooflab::scaled_sobolev_trials(rt, seed.wrapping_add(300), 2.0, &params));
    out.push(prooflab::poincare_trials(rt, seed.wrapping_add(400), &params));
    Ok(out)
}

fn verify(a: &VerifyArgs, cfg: &RunConfig) -> CliResult<()> {
    if a.trials == 0 {
        return Err(CliError::param("trials", "must be positive"));
    }
    let path = cfg.resolve(&a.out);
    write_json(&path, &lemma_suite(a.trials, a.seed.unwrap_or(cfg.seed))?)
}

pub const DYADIC_COLUMNS: [&str; 8] = ["k", "length", "avg", "semi", "pair_semi", "weighted", "sobolev_ratio", "d_tau"];

fn dyadic(a: &DyadicArgs, cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let spec: FunctionSpec = a.function.parse()?;
    if a.depth > -2 || a.depth < prooflab::MIN_DEPTH {
        return Err(CliError::param("depth", format!("{} not in [{}, -2]", a.depth, prooflab::MIN_DEPTH)));
    }
    let params = FracParams::critical(a.p)?;
    let w = HardyWeight::standard(a.tau)?;
    w.check_against(&params)?;
    let elements = a.mesh_n.unwrap_or(cfg.mesh_elements);
    let path = cfg.resolve(&a.out);
    let mesh = Mesh::geometric_to(Interval::unit(), elements, 2f64.powi(a.depth) * 1e-3)?;
    let u = spec.resolve()?.on(&mesh)?;
    let report = dyadic_chain_report(&u, a.depth, &w, &params)?;
    if path.extension().is_some_and(|e| e == "json") {
        write_json(&path, &report)?;
    } else {
        let rows: Vec<Vec<Cell>> = report
            .quantities
            .rows
            .iter()
            .map(|r| {
                vec![
                    Cell::Int(r.k as i64),
                    r.length.into(),
                    r.avg.into(),
                    r.semi.into(),
                    r.pair_semi.into(),
                    r.weighted.into(),
                    r.sobolev_ratio.into(),
                    r.d_tau.into(),
                ]
            })
            .collect();
        write_csv(&path, &DYADIC_COLUMNS, &rows)?;
    }
    say(out, format!("worst_margin {:?}", report.margins.worst()))
}
