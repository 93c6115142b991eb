//! Gagliardo seminorms of piecewise-linear functions.
//!
//! The double integral is split into element pairs. Each pair contributes a
//! finite sum of terms `w |c · u_loc|^p`, where `u_loc` are the four node
//! values of the two elements. The diagonal block is integrated in closed
//! form, touching elements use a Duffy split around the shared vertex, and
//! separated pieces use tensor Gauss rules after bisecting the larger piece
//! until the gap is comparable to its length. The weights and coefficient
//! vectors do not depend on `u`, so the discrete seminorm is an exact
//! weighted l^p norm of a linear image of the node values.

use rayon::prelude::*;

use crate::config::NumericConfig;
use crate::error::{FracError, Result};
use crate::grid::GridFunction;
use crate::mesh::{Interval, Mesh};
use crate::params::FracParams;
use crate::quadrature::{gauss_unit, order_for_separation};
use crate::real::{pairwise_sum, Real};

const ROW_CHUNK: usize = 16;

struct PairEngine<'a, T> {
    mesh: &'a Mesh<T>,
    sp: T,
    /// `p - 1 - s p`
    q: T,
    closed_form: bool,
    cfg: NumericConfig,
}

impl<'a, T: Real> PairEngine<'a, T> {
    fn new(mesh: &'a Mesh<T>, params: &FracParams<T>, cfg: &NumericConfig) -> Result<Self> {
        cfg.validate()?;
        let sp = params.s * params.p;
        let q = params.p - T::one() - sp;
        let closed_form = (params.p - T::lit(2.0)).abs() < T::lit(1e-15) && (sp - T::one()).abs() < T::lit(1e-15);
        Ok(PairEngine { mesh, sp, q, closed_form, cfg: *cfg })
    }

    /// Node indices the coefficient vectors of pair `(i, j)` refer to.
    #[inline]
    fn indices(i: usize, j: usize) -> [usize; 4] {
        [i, i + 1, j, j + 1]
    }

    /// Emits `(w, c)` for the ordered element pair `i <= j`, both orders of integration included.
    fn pair(&self, i: usize, j: usize, emit: &mut impl FnMut(T, [T; 4])) {
        let zero = T::zero();
        let one = T::one();
        let two = T::lit(2.0);
        if i == j {
            let h = self.mesh.h(i);
            let w = two * h.powf(one - self.sp) / ((self.q + one) * (self.q + two));
            emit(w, [-one, one, zero, zero]);
            return;
        }
        if j == i + 1 {
            self.touching(i, j, emit);
            return;
        }
        self.separated(i, zero, one, j, zero, one, 0, emit);
    }

    fn touching(&self, i: usize, j: usize, emit: &mut impl FnMut(T, [T; 4])) {
        let zero = T::zero();
        let one = T::one();
        let two = T::lit(2.0);
        let hi = self.mesh.h(i);
        let hj = self.mesh.h(j);
        let hm = hi.min(hj);
        // coefficients are scaled by hm so that weights and coefficients stay O(1)
        let (ri, rj) = (hm / hi, hm / hj);
        let scale = hm.powf(one - self.sp);
        if self.closed_form {
            // ∫∫_{[0,hm]^2} (m1 a + m2 b)^2 / (a+b)^2 = hm^2 [(m1+m2)^2/4 + (3/4 - ln 2)(m1-m2)^2]
            emit(two * T::lit(0.25), [-ri, ri, -rj, rj]);
            emit(two * (T::lit(0.75) - T::LN_2()), [-ri, ri, rj, -rj]);
        } else {
            let rule = gauss_unit(self.cfg.duffy_points);
            let half = T::lit(0.5);
            let qp2 = self.q + two;
            for side in 0..2 {
                for &(xg, wg) in rule {
                    let t = half * (T::count(side) + T::lit(xg));
                    // R / hm with R = hm / max(t, 1-t)
                    let r = one / t.max(one - t);
                    let w = two * half * T::lit(wg) * r.powf(qp2) / qp2 * scale;
                    emit(w, [-t * ri, t * ri, -(one - t) * rj, (one - t) * rj]);
                }
            }
        }
        if hi > hm {
            self.separated(i, zero, one - hm / hi, j, zero, one, 0, emit);
        } else if hj > hm {
            self.separated(i, zero, one, j, hm / hj, one, 0, emit);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn separated(&self, i: usize, t0: T, t1: T, j: usize, f0: T, f1: T, depth: usize, emit: &mut impl FnMut(T, [T; 4])) {
        let half = T::lit(0.5);
        let hi = self.mesh.h(i);
        let hj = self.mesh.h(j);
        let lx = hi * (t1 - t0);
        let ly = hj * (f1 - f0);
        let base = if j == i + 1 { T::zero() } else { self.mesh.dist(i + 1, j) };
        let gap = base + hi * (T::one() - t1) + hj * f0;
        let big = lx.max(ly);
        // the slack keeps exact ties (uniform meshes) on one side under rounding
        if gap < T::lit(self.cfg.separation_ratio * (1.0 - 1e-9)) * big && depth < self.cfg.max_refinement_depth {
            if lx >= ly {
                let tm = (t0 + t1) * half;
                self.separated(i, t0, tm, j, f0, f1, depth + 1, emit);
                self.separated(i, tm, t1, j, f0, f1, depth + 1, emit);
            } else {
                let fm = (f0 + f1) * half;
                self.separated(i, t0, t1, j, f0, fm, depth + 1, emit);
                self.separated(i, t0, t1, j, fm, f1, depth + 1, emit);
            }
            return;
        }
        let g = gap.to_f64_lossy();
        let nx = order_for_separation(g, lx.to_f64_lossy());
        let ny = order_for_separation(g, ly.to_f64_lossy());
        let one_m_sp = T::one() - self.sp;
        for &(xa, wa) in gauss_unit(nx) {
            let xa = T::lit(xa);
            let th = t0 + (t1 - t0) * xa;
            let dx = lx * (T::one() - xa);
            for &(yb, wb) in gauss_unit(ny) {
                let yb = T::lit(yb);
                let ph = f0 + (f1 - f0) * yb;
                let d = gap + dx + ly * yb;
                // 2 lx ly / d^(1+sp), arranged to avoid underflow for tiny pieces
                let w = T::lit(2.0 * wa * wb) * (lx / d) * (ly / d) * d.powf(one_m_sp);
                emit(w, [T::one() - th, th, ph - T::one(), -ph]);
            }
        }
    }

    fn elements(&self) -> usize {
        self.mesh.elements()
    }
}

#[inline]
fn dot<T: Real>(c: &[T; 4], idx: &[usize; 4], u: &[T]) -> T {
    c[0] * u[idx[0]] + c[1] * u[idx[1]] + c[2] * u[idx[2]] + c[3] * u[idx[3]]
}

#[inline]
fn abs_pow<T: Real>(v: T, p: T, square: bool) -> T {
    if square {
        v * v
    } else {
        v.abs().powf(p)
    }
}

/// `[u]^p` over the whole span of `u`.
pub fn seminorm_pow<T: Real>(u: &GridFunction<T>, params: &FracParams<T>, cfg: &NumericConfig) -> Result<T> {
    let eng = PairEngine::new(u.mesh(), params, cfg)?;
    // shifting by a node value makes constants exactly zero
    let vals: Vec<T> = u.values().iter().map(|&v| v - u.values()[0]).collect();
    let vals = &vals[..];
    let p = params.p;
    let square = (p - T::lit(2.0)).abs() < T::lit(1e-15);
    let ne = eng.elements();
    let rows: Vec<T> = (0..ne)
        .into_par_iter()
        .map(|i| {
            let mut parts = Vec::with_capacity(ne - i);
            for j in i..ne {
                let idx = PairEngine::<T>::indices(i, j);
                let mut acc = T::zero();
                eng.pair(i, j, &mut |w, c| acc = acc + w * abs_pow(dot(&c, &idx, vals), p, square));
                parts.push(acc);
            }
            pairwise_sum(&parts)
        })
        .collect();
    let total = pairwise_sum(&rows);
    if !total.is_finite() {
        return Err(FracError::nonconvergent("seminorm", format!("non-finite value {total}")));
    }
    Ok(total)
}

/// `[u]^p` together with its gradient with respect to the node values.
pub fn seminorm_pow_gradient<T: Real>(
    u: &GridFunction<T>,
    params: &FracParams<T>,
    cfg: &NumericConfig,
) -> Result<(T, Vec<T>)> {
    let eng = PairEngine::new(u.mesh(), params, cfg)?;
    let vals: Vec<T> = u.values().iter().map(|&v| v - u.values()[0]).collect();
    let vals = &vals[..];
    let n = vals.len();
    let p = params.p;
    let ne = eng.elements();
    let chunks: Vec<(T, Vec<T>)> = (0..ne.div_ceil(ROW_CHUNK))
        .into_par_iter()
        .map(|ch| {
            let mut grad = vec![T::zero(); n];
            let mut parts = Vec::new();
            for i in ch * ROW_CHUNK..((ch + 1) * ROW_CHUNK).min(ne) {
                for j in i..ne {
                    let idx = PairEngine::<T>::indices(i, j);
                    let mut acc = T::zero();
                    eng.pair(i, j, &mut |w, c| {
                        let v = dot(&c, &idx, vals);
                        let a = v.abs();
                        acc = acc + w * a.powf(p);
                        // d/du |c.u|^p = p |c.u|^(p-2) (c.u) c
                        let g = if a > T::zero() { w * p * a.powf(p - T::one()) * v.signum() } else { T::zero() };
                        for k in 0..4 {
                            grad[idx[k]] = grad[idx[k]] + g * c[k];
                        }
                    });
                    parts.push(acc);
                }
            }
            (pairwise_sum(&parts), grad)
        })
        .collect();
    let value = pairwise_sum(&chunks.iter().map(|c| c.0).collect::<Vec<_>>());
    let mut grad = vec![T::zero(); n];
    for (_, g) in &chunks {
        for k in 0..n {
            grad[k] = grad[k] + g[k];
        }
    }
    Ok((value, grad))
}

/// Dense matrix `A` (row-major, `n x n` over mesh nodes) with `uᵀ A u = [u]^2` for `p = 2`.
pub fn stiffness_matrix<T: Real>(mesh: &Mesh<T>, params: &FracParams<T>, cfg: &NumericConfig) -> Result<Vec<T>> {
    if (params.p - T::lit(2.0)).abs() > T::lit(1e-15) {
        return Err(FracError::Unsupported(format!("quadratic form needs p = 2, got p = {}", params.p)));
    }
    let eng = PairEngine::new(mesh, params, cfg)?;
    let n = mesh.len();
    let ne = eng.elements();
    let chunks: Vec<Vec<T>> = (0..ne.div_ceil(ROW_CHUNK))
        .into_par_iter()
        .map(|ch| {
            let mut a = vec![T::zero(); n * n];
            for i in ch * ROW_CHUNK..((ch + 1) * ROW_CHUNK).min(ne) {
                for j in i..ne {
                    let idx = PairEngine::<T>::indices(i, j);
                    let mut loc = [[T::zero(); 4]; 4];
                    eng.pair(i, j, &mut |w, c| {
                        for r in 0..4 {
                            for s in 0..4 {
                                loc[r][s] = loc[r][s] + w * c[r] * c[s];
                            }
                        }
                    });
                    for r in 0..4 {
                        for s in 0..4 {
                            let k = idx[r] * n + idx[s];
                            a[k] = a[k] + loc[r][s];
                        }
                    }
                }
            }
            a
        })
        .collect();
    let mut a = vec![T::zero(); n * n];
    for c in &chunks {
        for k in 0..n * n {
            a[k] = a[k] + c[k];
        }
    }
    Ok(a)
}

/// `[u]_{s,p,domain}` with the default numeric configuration.
pub fn gagliardo_seminorm<T: Real>(u: &GridFunction<T>, params: &FracParams<T>, domain: &Interval<T>) -> Result<T> {
    gagliardo_seminorm_with(u, params, domain, &NumericConfig::default())
}

pub fn gagliardo_seminorm_with<T: Real>(
    u: &GridFunction<T>,
    params: &FracParams<T>,
    domain: &Interval<T>,
    cfg: &NumericConfig,
) -> Result<T> {
    let r = u.restrict(domain)?;
    let v = seminorm_pow(&r, params, cfg)?;
    Ok(v.max(T::zero()).powf(T::one() / params.p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2() -> FracParams<f64> {
        FracParams::critical(2.0).unwrap()
    }

    #[test]
    fn linear_function_has_unit_seminorm() {
        for m in [
            Mesh::uniform(Interval::unit(), 9).unwrap(),
            Mesh::geometric(Interval::unit(), 0.5, 12).unwrap(),
            Mesh::from_nodes(&[0.0, 1e-9, 0.3, 0.31, 1.0]).unwrap(),
        ] {
            let u = GridFunction::sample(m, |p| Ok(p.x)).unwrap();
            let v = gagliardo_seminorm(&u, &p2(), &Interval::unit()).unwrap();
            assert!((v - 1.0).abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn closed_form_touching_pair_matches_duffy_rule() {
        // p = 2 with a tiny perturbation takes the general Duffy path
        let m = Mesh::from_nodes(&[0.0, 0.3, 0.35, 1.0]).unwrap();
        let u = GridFunction::new(m, vec![0.2, -1.0, 0.7, 0.1]).unwrap();
        let cfg = NumericConfig { duffy_points: 24, ..Default::default() };
        let exact = seminorm_pow(&u, &p2(), &cfg).unwrap();
        let pert = FracParams { s: 0.5, p: 2.0 + 1e-14, critical: true };
        let general = seminorm_pow(&u, &pert, &cfg).unwrap();
        assert!((exact - general).abs() < 1e-10 * exact, "{exact} {general}");
    }

    #[test]
    fn gradient_and_matrix_agree_with_value() {
        let m = Mesh::geometric(Interval::unit(), 0.5, 4).unwrap();
        let vals: Vec<f64> = (0..m.len()).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.3).collect();
        let u = GridFunction::new(m.clone(), vals.clone()).unwrap();
        let cfg = NumericConfig::default();
        let v = seminorm_pow(&u, &p2(), &cfg).unwrap();
        let (v2, g) = seminorm_pow_gradient(&u, &p2(), &cfg).unwrap();
        let a = stiffness_matrix(&m, &p2(), &cfg).unwrap();
        let n = m.len();
        let mut quad = 0.0;
        for r in 0..n {
            let mut row = 0.0;
            for c in 0..n {
                quad += vals[r] * a[r * n + c] * vals[c];
                row += a[r * n + c];
                assert!((a[r * n + c] - a[c * n + r]).abs() < 1e-12);
            }
            assert!(row.abs() < 1e-10);
            assert!((g[r] - 2.0 * (0..n).map(|c| a[r * n + c] * vals[c]).sum::<f64>()).abs() < 1e-9);
        }
        assert!((v - v2).abs() < 1e-12 * v);
        assert!((v - quad).abs() < 1e-10 * v);
    }
}
