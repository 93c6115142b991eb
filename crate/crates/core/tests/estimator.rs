//! Best-constant estimation at p = τ = 2 and for general exponents.

mod common;

use common::{rel, rng};
use frachardy::estimator::*;
use frachardy::sequences::{make_u_eps, Epsilon};
use frachardy::*;
use nalgebra::DVector;
use rand::Rng;

fn setup() -> (FracParams64, HardyWeight64) {
    (FracParams::critical(2.0).unwrap(), HardyWeight::standard(2.0).unwrap())
}

#[test]
fn forms_match_functionals() {
    let (p, w) = setup();
    let mesh = Mesh::geometric_elements(Interval::unit(), 0.5, 512).unwrap();
    let f = assemble_forms(&mesh, &w, &p).unwrap();
    let x = DVector::from_vec(mesh.xs());
    let one = DVector::from_element(mesh.len(), 1.0);
    assert!((x.dot(&(&f.a * &x)) - 1.0).abs() < 1e-10);
    assert!(one.dot(&(&f.b * &one)).abs() < 1e-12);
    assert!((&f.a * &one).amax() < 1e-10 && (&f.b * &one).amax() < 1e-10);
    let u = GridFunction::new(mesh, x.iter().cloned().collect()).unwrap();
    let h = hardy_weighted_norm(&u, &w).unwrap();
    assert!(rel(x.dot(&(&f.b * &x)), h * h) < 1e-6);
    assert!(f.a.is_square() && (&f.a - f.a.transpose()).amax() == 0.0);
}

#[test]
fn forms_reject_other_exponents() {
    let mesh = Mesh::uniform(Interval::unit(), 9).unwrap();
    let p3 = FracParams::critical(3.0).unwrap();
    let w3 = HardyWeight::standard(3.0).unwrap();
    assert!(matches!(assemble_forms(&mesh, &w3, &p3), Err(FracError::Unsupported(_))));
    let p2 = FracParams::critical(2.0).unwrap();
    assert!(matches!(assemble_forms(&mesh, &w3, &p2), Err(FracError::Unsupported(_))));
    let noncrit = FracParams::new(0.4, 2.0).unwrap();
    assert!(assemble_forms(&mesh, &HardyWeight::standard(2.0).unwrap(), &noncrit).is_err());
}

#[test]
fn nested_estimates_and_inequality() {
    let (p, w) = setup();
    let meshes = nested_meshes(64, 3).unwrap();
    let est = best_constant_quadratic(&meshes, &w, &p).unwrap();
    let e: Vec<f64> = est.refinements.iter().map(|r| r.estimate).collect();
    assert_eq!(est.refinements.iter().map(|r| r.node_count).collect::<Vec<_>>(), vec![65, 129, 257, 513]);
    assert!(e.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{e:?}");
    let c = est.finest();
    assert!(c.is_finite() && c > 0.0);

    let finest = meshes.last().unwrap();
    let f = assemble_forms(finest, &w, &p).unwrap();
    let mut r = rng(11);
    for _ in 0..200 {
        let v = DVector::from_fn(finest.len(), |_, _| r.gen_range(-1.0..1.0));
        let v = v.add_scalar(-v.mean());
        assert!(v.dot(&(&f.b * &v)) <= c * c * v.dot(&(&f.a * &v)) + 1e-9);
    }
    let x = GridFunction::sample(finest.clone(), |q| Ok(q.x)).unwrap();
    assert!(verify_inequality(&x, c, &w, &p).unwrap() >= -1e-9);
    let ue = make_u_eps(Epsilon::new(1e-3).unwrap()).sample(finest).unwrap();
    assert!(verify_inequality(&ue, c, &w, &p).unwrap() >= -1e-9);
    let k = GridFunction::constant(finest.clone(), 3.0).unwrap();
    assert_eq!(verify_inequality(&k, c, &w, &p).unwrap(), 0.0);
    // the maximizer attains the estimate
    let m = GridFunction::new(finest.clone(), est.maximizer.clone()).unwrap();
    assert!(verify_inequality(&m, c, &w, &p).unwrap().abs() < 1e-6);
}

#[test]
fn nested_check_rejects_unrelated_meshes() {
    let (p, w) = setup();
    let a = Mesh::uniform(Interval::unit(), 9).unwrap();
    let b = Mesh::uniform(Interval::unit(), 12).unwrap();
    assert!(best_constant_quadratic(&[a, b], &w, &p).is_err());
}

#[test]
fn general_ascent_matches_eigenvalue() {
    let (p, w) = setup();
    let mesh = nested_meshes(64, 0).unwrap().remove(0);
    let quad = best_constant_quadratic(std::slice::from_ref(&mesh), &w, &p).unwrap().finest();
    let opts = AscentOptions { restarts: 3, ..Default::default() };
    let gen = best_constant_general(2.0, 2.0, &w, &mesh, &opts).unwrap();
    assert!(rel(gen.finest(), quad) < 1e-6, "{} vs {}", gen.finest(), quad);
    assert_eq!(gen.restarts.len(), 3);
    assert!(gen.restarts.iter().all(|r| r.value <= gen.finest() * (1.0 + 1e-12)));
}

#[test]
fn general_ascent_other_exponents() {
    let w = HardyWeight::standard(3.0).unwrap();
    let mesh = Mesh::geometric_elements(Interval::unit(), 0.5, 24).unwrap();
    let opts = AscentOptions { restarts: 2, max_iter: 150, ..Default::default() };
    let a = best_constant_general(2.0, 3.0, &w, &mesh, &opts).unwrap();
    let b = best_constant_general(2.0, 3.0, &w, &mesh, &opts).unwrap();
    assert_eq!(a, b);
    assert!(a.finest() > 0.0 && a.finest().is_finite());
    assert!(best_constant_general(3.0, 2.0, &HardyWeight::standard(2.0).unwrap(), &mesh, &opts).is_err());
    assert!(best_constant_general(2.0, 2.0, &w, &mesh, &opts).is_err());
}

#[test]
fn gradient_matches_central_differences() {
    let mesh = Mesh::geometric_elements(Interval::unit(), 0.5, 16).unwrap();
    let mut r = rng(5);
    for (p, tau) in [(2.0, 2.0), (2.0, 3.0), (1.5, 2.5), (3.0, 3.0)] {
        let q = Quotient::new(&mesh, &HardyWeight::standard(tau).unwrap(), &FracParams::critical(p).unwrap()).unwrap();
        for _ in 0..5 {
            let u: Vec<f64> = (0..mesh.len()).map(|_| r.gen_range(-1.0..1.0)).collect();
            let (_, g) = q.value_gradient(&u).unwrap();
            let fd: Vec<f64> = (0..u.len())
                .map(|k| {
                    let (mut a, mut b) = (u.clone(), u.clone());
                    a[k] += 1e-6;
                    b[k] -= 1e-6;
                    (q.value(&a).unwrap() - q.value(&b).unwrap()) / 2e-6
                })
                .collect();
            let err = g.iter().zip(&fd).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            let norm = fd.iter().map(|y| y * y).sum::<f64>().sqrt();
            assert!(err / norm < 1e-4, "p {p} tau {tau}: {}", err / norm);
        }
    }
}
