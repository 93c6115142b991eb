#![allow(dead_code)]

use frachardy::{GridFunction64, Interval64, Mesh64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// 5-point Gauss-Legendre on [-1, 1], written out independently of the library tables
const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Composite 5-point Gauss over `panels` equal panels.
pub fn gauss(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut sum = 0.0;
    for k in 0..panels {
        let m = a + (k as f64 + 0.5) * h;
        for (x, w) in GL5 {
            sum += w * 0.5 * h * f(m + 0.5 * h * x);
        }
    }
    sum
}

/// Composite Gauss over the break points `cuts`.
pub fn gauss_cuts(f: impl Fn(f64) -> f64, cuts: &[f64], panels: usize) -> f64 {
    cuts.windows(2).map(|w| gauss(&f, w[0], w[1], panels)).sum()
}

/// Geometric cuts `a, a r, a r^2, ...` down to `floor`, in increasing order, ending at `a`.
pub fn geometric_cuts(a: f64, floor: f64, r: f64) -> Vec<f64> {
    let mut v = vec![a];
    while *v.last().unwrap() * r > floor {
        let x = *v.last().unwrap() * r;
        v.push(x);
    }
    v.push(0.0);
    v.reverse();
    v
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random piecewise-linear function on `span` with `n` nodes.
pub fn random_pl(rng: &mut ChaCha8Rng, span: Interval64, n: usize) -> GridFunction64 {
    let mut xs: Vec<f64> = (0..n - 2).map(|_| rng.gen_range(span.a..span.b)).collect();
    xs.push(span.a);
    xs.push(span.b);
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * span.len());
    let vals = (0..xs.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    GridFunction64::new(Mesh64::from_nodes(&xs).unwrap(), vals).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
