//! Function specifications accepted by `--fn`.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use frachardy::sequences::{make_polynomial, make_rho_eps, make_u_eps, AnalyticFunction, Epsilon};
use frachardy::{GridFunction64, Interval, Interval64, Mesh, Mesh64};

use crate::error::{CliError, CliResult};
use crate::expr::{parse, parse_function_expr};

/// `u_eps:E`, `rho_eps:E`, `poly:c0,c1,...` (ascending powers), `samples:PATH`
/// (CSV of `x,value` lines), or an expression in `x` (optionally `expr:`-prefixed).
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    UEps(f64),
    RhoEps(f64),
    Poly(Vec<f64>),
    Expr(String),
    Samples(PathBuf),
}

fn number(param: &'static str, s: &str) -> CliResult<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| CliError::param(param, format!("'{s}' is not a finite number")))
}

impl FromStr for FunctionSpec {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let s = s.trim();
        if let Some(e) = s.strip_prefix("u_eps:") {
            let v = number("fn", e)?;
            Epsilon::new(v)?;
            Ok(FunctionSpec::UEps(v))
        } else if let Some(e) = s.strip_prefix("rho_eps:") {
            let v = number("fn", e)?;
            Epsilon::new(v)?;
            Ok(FunctionSpec::RhoEps(v))
        } else if let Some(c) = s.strip_prefix("poly:") {
            let coeffs = c.split(',').map(|t| number("fn", t)).collect::<CliResult<Vec<_>>>()?;
            Ok(FunctionSpec::Poly(coeffs))
        } else if let Some(p) = s.strip_prefix("samples:") {
            if p.is_empty() {
                return Err(CliError::param("fn", "samples: needs a path"));
            }
            Ok(FunctionSpec::Samples(PathBuf::from(p)))
        } else {
            let text = s.strip_prefix("expr:").unwrap_or(s);
            if text.trim().is_empty() {
                return Err(CliError::param("fn", "empty expression"));
            }
            parse(text)?;
            Ok(FunctionSpec::Expr(text.into()))
        }
    }
}

/// A specification made concrete.
pub enum Resolved {
    Analytic(AnalyticFunction<f64>),
    Grid(GridFunction64),
}

impl FunctionSpec {
    pub fn resolve(&self) -> CliResult<Resolved> {
        Ok(match self {
            FunctionSpec::UEps(e) => Resolved::Analytic(make_u_eps(Epsilon::new(*e)?)),
            FunctionSpec::RhoEps(e) => Resolved::Analytic(make_rho_eps(Epsilon::new(*e)?)),
            FunctionSpec::Poly(c) => Resolved::Analytic(make_polynomial(c.clone())),
            FunctionSpec::Expr(t) => Resolved::Analytic(parse_function_expr(t)?),
            FunctionSpec::Samples(p) => Resolved::Grid(read_samples(p)?),
        })
    }
}

impl Resolved {
    /// The function on `mesh`; sample files keep their own nodes.
    pub fn on(&self, mesh: &Mesh64) -> CliResult<GridFunction64> {
        match self {
            Resolved::Analytic(f) => {
                let m = if mesh.span() == Interval::unit() { mesh.with_breakpoints(f.breakpoints())? } else { mesh.clone() };
                Ok(f.sample(&m)?)
            }
            Resolved::Grid(g) => Ok(g.clone()),
        }
    }
}

pub fn read_samples(path: &Path) -> CliResult<GridFunction64> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        let parsed = (parts.len() == 2).then(|| (parts[0].trim().parse::<f64>(), parts[1].trim().parse::<f64>()));
        match parsed {
            Some((Ok(x), Ok(v))) => {
                xs.push(x);
                vs.push(v);
            }
            // a header line is allowed before the first sample
            _ if xs.is_empty() && i == 0 => {}
            _ => return Err(CliError::param("fn", format!("{}: line {} is not 'x,value'", path.display(), i + 1))),
        }
    }
    let mesh = Mesh::from_nodes(&xs)?;
    Ok(GridFunction64::new(mesh, vs)?)
}

/// Uniform mesh with `elements` elements, or geometric toward both ends with ratio `grading`.
pub fn build_mesh(span: Interval64, elements: usize, grading: Option<f64>) -> CliResult<Mesh64> {
    if elements == 0 {
        return Err(CliError::param("mesh-n", "must be positive"));
    }
    Ok(match grading {
        None => Mesh::uniform(span, elements + 1)?,
        Some(r) => Mesh::geometric_elements(span, r, elements)?,
    })
}
