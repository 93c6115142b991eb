//! Exact values, golden values and independent quadrature oracles.

#![allow(clippy::excessive_precision)]

mod common;

use common::*;
use frachardy::prooflab::*;
use frachardy::sequences::*;
use frachardy::special::exp_integral_e1;
use frachardy::*;

fn unit() -> Interval64 {
    Interval::unit()
}

fn critical2() -> FracParams64 {
    FracParams::critical(2.0).unwrap()
}

#[test]
fn seminorm_of_linear_function_is_one() {
    for mesh in [
        Mesh::uniform(unit(), 128).unwrap(),
        Mesh::geometric(unit(), 0.5, 40).unwrap(),
        Mesh::from_nodes(&[0.0, 0.1, 0.15, 0.7, 1.0]).unwrap(),
    ] {
        let u = GridFunction::sample(mesh, |q| Ok(q.x)).unwrap();
        let v = gagliardo_seminorm(&u, &critical2(), &unit()).unwrap();
        assert!((v - 1.0).abs() < 1e-10, "{v}");
    }
}

#[test]
fn seminorm_of_square() {
    let u = GridFunction::sample(Mesh::uniform(unit(), 512).unwrap(), |q| Ok(q.x * q.x)).unwrap();
    let v = gagliardo_seminorm(&u, &critical2(), &unit()).unwrap();
    assert!((v - (7.0f64 / 6.0).sqrt()).abs() < 1e-4, "{v}");
}

#[test]
fn seminorm_of_linear_on_sub_interval() {
    // integrand ≡ 1 over (a, b)^2
    let u = GridFunction::sample(Mesh::uniform(Interval::new(-1.0, 3.0).unwrap(), 17).unwrap(), |q| Ok(2.0 * q.x)).unwrap();
    let v = gagliardo_seminorm(&u, &critical2(), &Interval::new(0.25, 2.0).unwrap()).unwrap();
    assert!((v - 2.0 * 1.75).abs() < 1e-10);
}

#[test]
fn seminorm_constant_is_zero() {
    let u = GridFunction::constant(Mesh::uniform(unit(), 9).unwrap(), 5.0).unwrap();
    assert_eq!(gagliardo_seminorm(&u, &critical2(), &unit()).unwrap(), 0.0);
}

#[test]
fn general_p_matches_direct_double_integral() {
    // u = x^2 on 64 elements, p = 3, s = 1/3: oracle integrates |x + y|^3 |x - y|^(3-2) exactly on the square
    let p = FracParams::critical(3.0).unwrap();
    let u = GridFunction::sample(Mesh::uniform(unit(), 257).unwrap(), |q| Ok(q.x * q.x)).unwrap();
    let v = gagliardo_seminorm(&u, &p, &unit()).unwrap().powi(3);
    let inner = |x: f64| gauss_cuts(|y| (x + y).powi(3) * (x - y).abs(), &[0.0, x, 1.0], 20);
    let oracle = gauss(inner, 0.0, 1.0, 200);
    assert!(rel(v, oracle) < 1e-3, "{v} vs {oracle}");
}

#[test]
fn lp_and_average_examples() {
    let m = Mesh::uniform(unit(), 33).unwrap();
    let two = GridFunction::constant(m.clone(), 2.0).unwrap();
    assert!((lp_norm(&two, 3.0, &unit()).unwrap() - 2.0).abs() < 1e-14);
    let x = GridFunction::sample(m.clone(), |q| Ok(q.x)).unwrap();
    assert!((lp_norm(&x, 2.0, &unit()).unwrap() - (1.0f64 / 3.0).sqrt()).abs() < 1e-14);
    let xh = GridFunction::sample(m, |q| Ok(q.x - 0.5)).unwrap();
    assert!((lp_norm(&xh, 1.0, &unit()).unwrap() - 0.25).abs() < 1e-14);
    assert!((average(&x, &unit()).unwrap() - 0.5).abs() < 1e-15);
    assert!((average(&x, &Interval::new(0.5, 1.0).unwrap()).unwrap() - 0.75).abs() < 1e-15);
    assert!((average(&two, &Interval::new(0.3, 0.31).unwrap()).unwrap() - 2.0).abs() < 1e-14);
}

#[test]
fn hardy_of_constant_is_zero() {
    let u = GridFunction::constant(Mesh::uniform(unit(), 9).unwrap(), 7.0).unwrap();
    assert_eq!(hardy_weighted_norm(&u, &HardyWeight::standard(2.0).unwrap()).unwrap(), 0.0);
}

#[test]
fn hardy_of_linear_function_golden() {
    // 50-digit oracle: ∫_0^1 (x - 1/2)^2 / (δ log^2(2/δ)) dx, δ = min(x, 1-x)
    const V1: f64 = 0.441_881_165_117_635_3;
    let u = GridFunction::sample(Mesh::geometric(unit(), 0.5, 20).unwrap(), |q| Ok(q.x)).unwrap();
    let h = hardy_weighted_norm(&u, &HardyWeight::standard(2.0).unwrap()).unwrap();
    assert!(rel(h, V1) < 1e-9, "{h}");
    // independent check by the substitution δ = 2 e^(-t)
    let f = |t: f64| {
        let d = 2.0 * (-t).exp();
        (0.5 - d).powi(2) / (t * t)
    };
    let mut cuts = vec![(4.0f64).ln()];
    cuts.extend((1..=40).map(|k| 1.5 * 1.4f64.powi(k)).take_while(|&t| t < 1e6));
    cuts.push(1e6);
    let oracle = 2.0 * gauss_cuts(f, &cuts, 8);
    let tail = 2.0 * 0.25 / 1e6;
    assert!(rel(h * h, oracle + tail) < 1e-7, "{} vs {}", h * h, oracle + tail);
}

#[test]
fn exponential_integral_oracles() {
    let series = |z: f64| {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..10_000_000u64 {
            term *= z / k as f64;
            let add = if k % 2 == 1 { term / k as f64 } else { -term / k as f64 };
            sum += add;
            if term / (k as f64) < 1e-20 {
                break;
            }
        }
        -0.577_215_664_901_532_9 - z.ln() + sum
    };
    assert!((exp_integral_e1(1.0f64).unwrap() - series(1.0)).abs() < 1e-12);
    assert!((exp_integral_e1(1.0f64).unwrap() - 0.219_383_93).abs() < 1e-8);
    assert!(rel(exp_integral_e1(0.3f64).unwrap(), series(0.3)) < 1e-12);
    // backward continued fraction with a fixed, generous depth
    let cf = |z: f64| {
        let mut t = 0.0;
        for k in (1..400).rev() {
            let k = k as f64;
            t = k / (1.0 + k / (z + t));
        }
        (-z).exp() / (z + t)
    };
    assert!(rel(exp_integral_e1(10.0f64).unwrap(), cf(10.0)) < 1e-10);
    assert!(rel(exp_integral_e1(10.0f64).unwrap(), 4.15697e-6) < 1e-5);
    let z = 50.0f64;
    let prod = z * z.exp() * exp_integral_e1(z).unwrap();
    assert!((prod - 1.0).abs() < 2.1e-2);
    assert!((prod - (1.0 - 1.0 / z + 2.0 / (z * z) - 6.0 / z.powi(3))).abs() < 24.0 / z.powi(4));
    assert!(exp_integral_e1(0.0f64).is_err());
    assert!(exp_integral_e1(-1.0f64).is_err());
}

/// `2 ∫_0^ε |log ε| / |log x| dx - 2ε` by graded Gauss quadrature in `x`.
fn c_eps_oracle(eps: f64) -> f64 {
    let l = -eps.ln();
    let cuts = geometric_cuts(eps, 1e-300, 0.25);
    2.0 * gauss_cuts(|x| if x > 0.0 { -l / x.ln() } else { 0.0 }, &cuts, 4) - 2.0 * eps
}

#[test]
fn mean_correction_matches_direct_quadrature() {
    let e = Epsilon::new(1e-3f64).unwrap();
    let c = u_eps_mean(e).c_eps;
    let oracle = c_eps_oracle(1e-3);
    assert!(rel(c, oracle) < 1e-8, "{c} vs {oracle}");
    assert!(c < 0.0);
    for eps in [1e-2f64, 1e-4, 1e-6, 1e-8, 1e-12] {
        let m = u_eps_mean(Epsilon::new(eps).unwrap());
        assert!(m.c_eps < 0.0 && m.c_eps.abs() < 2.0 * eps);
        assert!((m.mean - 1.0 - m.c_eps).abs() < 1e-15);
    }
    let e8 = Epsilon::new(1e-8f64).unwrap();
    let asym = u_eps_mean(e8).c_eps.abs() * e8.log_abs() / 2e-8;
    assert!((asym - 1.0).abs() < 0.1, "{asym}");
}

#[test]
fn internal_constants() {
    let zeta3: f64 = (1..200_000u64).map(|n| 2.0 / (n as f64).powi(3)).sum::<f64>() + 1.0 / (200_000f64).powi(2);
    assert!((integral_bose().unwrap() - zeta3).abs() < 1e-8);
    assert!((integral_bose().unwrap() - 2.404_113_806_319_188_5).abs() < 1e-8);
    let g = gauss(kernel_g, 0.0, 80.0, 4000);
    assert!((integral_g().unwrap() - g).abs() < 1e-10);
    assert!((integral_g().unwrap() - std::f64::consts::PI.powi(2) / 3.0).abs() < 1e-8);
}

/// One-sided `∫_0^ε (1 - u_ε)^2 ∫_ε^(1-ε) dy/(y-x)^2 dx`, inner integral exact, outer in `s = -log x`.
fn k_eps_oracle(eps: f64) -> f64 {
    let l = -eps.ln();
    let f = |s: f64| {
        let x = (-s).exp();
        let gap = -eps * (-(s - l)).exp_m1();
        (1.0 - l / s).powi(2) * (1.0 / gap - 1.0 / (1.0 - eps - x)) * x
    };
    let cuts: Vec<f64> = [0.0, 0.01, 0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0].iter().map(|t| l + t).collect();
    gauss_cuts(f, &cuts, 60)
}

#[test]
fn boundary_cross_term_matches_oracle() {
    for eps in [1e-3f64, 1e-5] {
        let e = Epsilon::new(eps).unwrap();
        let k = u_eps_seminorm_sq(e).unwrap().k_eps;
        let oracle = k_eps_oracle(eps);
        assert!(rel(k, oracle) < 1e-7, "eps {eps}: {k} vs {oracle}");
    }
}

#[test]
fn seminorm_of_u_eps_matches_sampled_quadrature() {
    let e = Epsilon::new(1e-3f64).unwrap();
    let total = u_eps_seminorm_sq(e).unwrap().total;
    let u = make_u_eps(e);
    let g = u.sample(&u.graded_mesh(4096, 1e-280).unwrap()).unwrap();
    let direct = gagliardo_seminorm(&g, &critical2(), &unit()).unwrap().powi(2);
    assert!(rel(direct, total) < 0.02, "{direct} vs {total}");
}

#[test]
fn hardy_of_u_eps_matches_semi_analytic() {
    let e = Epsilon::new(1e-3f64).unwrap();
    let reference = u_eps_hardy_sq(e).unwrap().sqrt();
    let u = make_u_eps(e);
    let g = u.sample(&u.graded_mesh(8192, 1e-280).unwrap()).unwrap();
    let h = hardy_weighted_norm(&g, &HardyWeight::standard(2.0).unwrap()).unwrap();
    assert!(rel(h, reference) < 1e-3, "{h} vs {reference}");
}

#[test]
fn weighted_functional_matches_quadrature() {
    for eps in [1e-3f64, 1e-4] {
        let e = Epsilon::new(eps).unwrap();
        let closed = u_eps_weighted_functional(e).total;
        let quad = weighted_functional_quadrature(&make_u_eps(e), u_eps_mean(e).mean, &ImprovementWeight::one(), 1.0, &NumericConfig::default()).unwrap();
        assert!(rel(quad, closed) < 1e-8, "{quad} vs {closed}");
    }
}

#[test]
fn elementary_constant_closed_form() {
    // sup over D of D ((D-1)/(D^(1/(τ-1)) - 1))^(τ-1) is attained at D = Λ for these parameters
    let exact = |lam: f64, tau: f64| lam * ((lam - 1.0) / (lam.powf(1.0 / (tau - 1.0)) - 1.0)).powf(tau - 1.0);
    for (lam, tau) in [(2.0, 2.0), (2.0, 3.0), (1.5, 1.5), (4.0, 2.5)] {
        let c = empirical_c_elementary(lam, tau).unwrap();
        assert!(rel(c, exact(lam, tau)) < 1e-9, "{lam} {tau}: {c}");
    }
}

#[test]
fn elementary_inequality_examples() {
    let c = empirical_c_elementary(2.0, 2.0).unwrap();
    let m = check_elementary_inequality(1.0, 1.0, 2.0, 2.0, 1.5).unwrap();
    assert!((m - (1.5 + 2.0 * c - 4.0)).abs() < 1e-12);
    let m = check_elementary_inequality(0.0, 1.0, 3.0, 2.0, 1.5).unwrap();
    let c3 = empirical_c_elementary(2.0, 3.0).unwrap();
    assert!((m - (c3 / 0.25 - 1.0)).abs() < 1e-12 && m >= 0.0);
    let m = check_elementary_inequality(1.0, 0.0, 2.5, 3.0, 2.0).unwrap();
    assert!((m - 1.0).abs() < 1e-12);
    assert!(empirical_c_elementary(1.01, 2.0).unwrap().is_finite());
    assert!(check_elementary_inequality(1.0, 1.0, 0.5, 2.0, 1.5).is_err());
    assert!(check_elementary_inequality(1.0, 1.0, 2.0, 1.0, 1.5).is_err());
}

#[test]
fn lemma_ratio_examples() {
    let p = critical2();
    let u = GridFunction::sample(Mesh::uniform(Interval::new(0.0, 2.0).unwrap(), 9).unwrap(), |q| Ok(q.x)).unwrap();
    let r = average_transfer_ratio(&u, &Interval::new(0.0, 1.0).unwrap(), &Interval::new(1.0, 2.0).unwrap(), &p).unwrap();
    assert!((r - 0.25).abs() < 1e-12);
    let u = GridFunction::sample(Mesh::uniform(Interval::new(0.0, 3.0).unwrap(), 13).unwrap(), |q| Ok(q.x)).unwrap();
    let r = scaled_sobolev_ratio(&u, 1.0, 1.0, 2.0, 2.0, &p).unwrap();
    assert!((r - (1.0f64 / 12.0).sqrt()).abs() < 1e-12);
    let r = poincare_ratio(&u, 1.0, &p).unwrap();
    assert!((r - (1.0f64 / 12.0).sqrt()).abs() < 1e-12);
    let c = GridFunction::constant(Mesh::uniform(Interval::new(0.0, 3.0).unwrap(), 5).unwrap(), 1.0).unwrap();
    assert!(poincare_ratio(&c, 1.0, &p).is_err());
    assert!(scaled_sobolev_ratio(&c, 1.0, 1.0, 2.0, 2.0, &p).is_err());
    assert!(average_transfer_ratio(&c, &Interval::new(0.0, 1.0).unwrap(), &Interval::new(1.0, 2.0).unwrap(), &p).is_err());
    assert!(average_transfer_ratio(&u, &Interval::new(0.0, 1.0).unwrap(), &Interval::new(1.5, 2.0).unwrap(), &p).is_err());
}

#[test]
fn dyadic_report_for_linear_function() {
    let p = critical2();
    let w = HardyWeight::standard(2.0).unwrap();
    let u = GridFunction::sample(Mesh::geometric_to(unit(), 256, 1e-6).unwrap(), |q| Ok(q.x)).unwrap();
    let r = dyadic_chain_report(&u, -10, &w, &p).unwrap();
    let ee = 2.0 * (1.0f64 / 3.0).sqrt() - 0.75;
    assert!((r.margins.ee - ee).abs() < 1e-12, "{}", r.margins.ee);
    assert_eq!(r.quantities.rows.len(), 10);
    let last = r.quantities.rows.last().unwrap();
    assert!((last.avg - 0.75).abs() < 1e-14 && (last.length - 0.5).abs() < 1e-15);
    // on each annulus u is linear: ratio is sqrt(1/12) and the seminorm is the length
    for row in &r.quantities.rows {
        assert!((row.semi - row.length).abs() < 1e-12 * row.length);
        assert!((row.sobolev_ratio - (1.0f64 / 12.0).sqrt()).abs() < 1e-9);
    }
    assert!(r.margins.worst() >= -1e-9);
    assert!(r.margins.window_consistency < 1e-8);
}

#[test]
fn dyadic_report_rejects_coarse_mesh_and_deep_index() {
    let p = critical2();
    let w = HardyWeight::standard(2.0).unwrap();
    let u = GridFunction::sample(Mesh::uniform(unit(), 65).unwrap(), |q| Ok(q.x)).unwrap();
    match dyadic_chain_report(&u, -10, &w, &p) {
        Err(FracError::Resolution { annulus, .. }) => assert_eq!(annulus, -10),
        other => panic!("{other:?}"),
    }
    assert!(dyadic_chain_report(&u, -41, &w, &p).is_err());
    assert!(dyadic_chain_report(&u, -1, &w, &p).is_err());
    for k in -30..=-2 {
        let d = d_tau(k, 2.0).unwrap();
        assert!(d > 1.0 && d <= 2.0);
    }
}
