#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use frachardy_cli::{parse, ParseError};

pub enum Want {
    /// Value at x = 0.25.
    Value(f64),
    /// Syntax error: byte offset and expected-token set.
    Syntax(usize, &'static [&'static str]),
    Unknown(usize),
    BadNumber(usize),
}

pub struct Vector {
    pub text: &'static str,
    pub want: Want,
}

const ATOM: &[&str] = &["(", "-", "function", "number", "x"];
const TOP: &[&str] = &["*", "+", "-", "/", "^", "end of input"];
const INNER: &[&str] = &[")", "*", "+", "-", "/", "^"];
const AFTER_MINUS: &[&str] = &["(", "function", "number", "x"];
const LEXER: &[&str] = &["(", ")", "*", "+", "-", "/", "^", "function", "number", "x"];

macro_rules! v {
    ($t:expr, $w:expr) => {
        Vector { text: $t, want: $w }
    };
}

pub const VECTORS: [Vector; 40] = [
    v!("x", Want::Value(0.25)),
    v!("2^3^2", Want::Value(512.0)),
    v!("log(1/x)", Want::Value(1.3862943611198906)),
    v!("-x^2", Want::Value(0.0625)),
    v!("1+2*3", Want::Value(7.0)),
    v!("(1+2)*3", Want::Value(9.0)),
    v!("8/4/2", Want::Value(1.0)),
    v!("2-3-4", Want::Value(-5.0)),
    v!("exp(0)", Want::Value(1.0)),
    v!("sqrt(x)", Want::Value(0.5)),
    v!("abs(-x)", Want::Value(0.25)),
    v!("sin(0)+cos(0)", Want::Value(1.0)),
    v!("1e2", Want::Value(100.0)),
    v!("1.5e-1*x", Want::Value(0.0375)),
    v!("  x  *  4 ", Want::Value(1.0)),
    v!("-(x)", Want::Value(-0.25)),
    v!("2^-1", Want::Value(0.5)),
    v!("x*-2", Want::Value(-0.5)),
    v!("log(exp(x))", Want::Value(0.25)),
    v!("((x))", Want::Value(0.25)),
    v!("", Want::Syntax(0, ATOM)),
    v!("x+", Want::Syntax(2, ATOM)),
    v!("(x", Want::Syntax(2, INNER)),
    v!("x)", Want::Syntax(1, TOP)),
    v!("foo(x)", Want::Unknown(0)),
    v!("log x", Want::Syntax(4, &["("])),
    v!("2**3", Want::Syntax(2, ATOM)),
    v!("--x", Want::Syntax(1, AFTER_MINUS)),
    v!("x 2", Want::Syntax(2, TOP)),
    v!("1e", Want::Syntax(1, TOP)),
    v!("x^", Want::Syntax(2, ATOM)),
    v!("sqrt()", Want::Syntax(5, ATOM)),
    v!("()", Want::Syntax(1, ATOM)),
    v!("x $ 1", Want::Syntax(2, LEXER)),
    v!("pi", Want::Unknown(0)),
    v!("X", Want::Unknown(0)),
    v!("1.2.3", Want::Syntax(3, TOP)),
    v!("sin(x", Want::Syntax(5, INNER)),
    v!("x*(2+)", Want::Syntax(5, ATOM)),
    v!(".", Want::BadNumber(0)),
];

pub fn check_vector(v: &Vector) -> Result<(), String> {
    let got = parse(v.text);
    let fail = |msg: String| Err(format!("{:?}: {msg}", v.text));
    match (&v.want, got) {
        (Want::Value(want), Ok(e)) => match e.eval(0.25) {
            Ok(y) if (y - want).abs() <= 1e-12 * want.abs().max(1.0) => Ok(()),
            other => fail(format!("value {other:?}, want {want}")),
        },
        (Want::Syntax(off, set), Err(ParseError::Syntax { offset, expected, .. })) => {
            let want: BTreeSet<&str> = set.iter().copied().collect();
            if offset == *off && expected == want {
                Ok(())
            } else {
                fail(format!("syntax at {offset} expecting {expected:?}, want {off} {want:?}"))
            }
        }
        (Want::Unknown(off), Err(ParseError::UnknownIdentifier { offset, .. })) if offset == *off => Ok(()),
        (Want::BadNumber(off), Err(ParseError::Number { offset, .. })) if offset == *off => Ok(()),
        (_, other) => fail(format!("unexpected outcome {other:?}")),
    }
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_frachardy")
}

/// Runs the binary in `dir` with an optional config file.
pub fn frachardy(dir: &Path, config: Option<&Path>, args: &[&str]) -> Output {
    let mut cmd = Command::new(bin());
    cmd.current_dir(dir).args(args).env_remove("FRACHARDY_CONFIG");
    if let Some(c) = config {
        cmd.env("FRACHARDY_CONFIG", c);
    }
    cmd.output().expect("spawn frachardy")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Composite 5-point Gauss over `panels` equal panels of each cut interval.
pub fn gauss_cuts(f: impl Fn(f64) -> f64, cuts: &[f64], panels: usize) -> f64 {
    let mut sum = 0.0;
    for w in cuts.windows(2) {
        let h = (w[1] - w[0]) / panels as f64;
        for k in 0..panels {
            let m = w[0] + (k as f64 + 0.5) * h;
            sum += GL5.iter().map(|(x, wt)| wt * 0.5 * h * f(m + 0.5 * h * x)).sum::<f64>();
        }
    }
    sum
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
