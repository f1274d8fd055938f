//! Abreu scalar curvature, the toric Mabuchi functional and its proximal map.
//!
//! With q = x(1 − x) = 1/u₀″ and p_i = 1 + q_i·(D²φ)_i, the discrete functional is
//!
//! M_a(u) = −2 + a/2 − h Σ_{interior} log p_i + φ(0) + φ(1) − a ∫ φ,
//!
//! where −∫ log u₀″ = −2 and the linear part of u₀ are taken exactly. Its
//! gradient in the trapezoid metric is S − a at every node, with
//! S = −(1/u″)″ by central differences at interior nodes and the one-sided
//! boundary stencil S(0) = 2(h − w₁)/h² (which encodes w′(0) = 1).

use crate::banded::SymBand;
use crate::error::{Error, Result};
use crate::functional::{check_lambda, Functional};

use super::{grid, integrate, l2_norm, split_affine, trapezoid_weights, SymplecticPotential, ToricConfig, ToricSpace};

pub const PROX_MAX_ITER: usize = 100;
/// Bound on the metric norm of the prox objective gradient.
pub const PROX_TOL: f64 = 1e-10;
/// Accepted residual once Newton stagnates at the rounding floor of the
/// fourth-order stencil (relative to 1 + λ).
pub const PROX_STALL_TOL: f64 = 1e-8;

fn interior_q(n: usize) -> Vec<f64> {
    grid(n).into_iter().map(|x| x * (1.0 - x)).collect()
}

fn second_differences(phi: &[f64]) -> Vec<f64> {
    let n = phi.len() - 1;
    let inv_h2 = (n * n) as f64;
    let mut d2 = vec![0.0; n + 1];
    for i in 1..n {
        d2[i] = (phi[i - 1] - 2.0 * phi[i] + phi[i + 1]) * inv_h2;
    }
    d2
}

/// p_i = u″_i / u₀″_i at interior nodes (index 0 and N unused).
fn hessian_ratio(q: &[f64], d2: &[f64]) -> Result<Vec<f64>> {
    let n = q.len() - 1;
    let mut p = vec![1.0; n + 1];
    for i in 1..n {
        p[i] = 1.0 + q[i] * d2[i];
        if !(p[i] > 0.0) {
            return Err(Error::Domain {
                node: i,
                reason: format!("u'' = {:.6e} is not positive", p[i] / q[i]),
            });
        }
    }
    Ok(p)
}

/// w = 1/u″ at every node, with the exact boundary values w(0) = w(1) = 0.
pub fn inverse_second_derivative(u: &SymplecticPotential) -> Result<Vec<f64>> {
    let n = u.n();
    let q = interior_q(n);
    let p = hessian_ratio(&q, &second_differences(u.residual_part()))?;
    let mut w = vec![0.0; n + 1];
    for i in 1..n {
        w[i] = q[i] / p[i];
    }
    Ok(w)
}

fn curvature_from_w(w: &[f64]) -> Vec<f64> {
    let n = w.len() - 1;
    let h = 1.0 / n as f64;
    let inv_h2 = (n * n) as f64;
    let mut s = vec![0.0; n + 1];
    for i in 1..n {
        s[i] = -(w[i - 1] - 2.0 * w[i] + w[i + 1]) * inv_h2;
    }
    s[0] = 2.0 * (h - w[1]) * inv_h2;
    s[n] = 2.0 * (h - w[n - 1]) * inv_h2;
    s
}

/// Scalar curvature S = −(1/u″)″ at every grid node.
pub fn scalar_curvature(u: &SymplecticPotential) -> Result<Vec<f64>> {
    Ok(curvature_from_w(&inverse_second_derivative(u)?))
}

/// L_a(f) = f(0) + f(1) − a ∫₀¹ f dx.
pub fn linear_part(f: &[f64], a: f64) -> f64 {
    f[0] + f[f.len() - 1] - a * integrate(f)
}

/// The toric Mabuchi functional M_a(u).
pub fn mabuchi_toric(u: &SymplecticPotential, a: f64) -> Result<f64> {
    let n = u.n();
    let h = 1.0 / n as f64;
    let q = interior_q(n);
    let p = hessian_ratio(&q, &second_differences(u.residual_part()))?;
    let entropy: f64 = -h * p[1..n].iter().map(|v| v.ln()).sum::<f64>();
    // Linear part split along the stored decomposition; ∫ of the residual is zero
    // up to rounding but is kept for exactness.
    let (c, b) = u.affine();
    let phi = u.residual_part();
    let linear = (2.0 * c + b - a * (c + 0.5 * b)) + linear_part(phi, a);
    Ok(-2.0 + 0.5 * a + entropy + linear)
}

/// Calabi energy (∫ (S − a)² dx)^{1/2}.
pub fn calabi_energy_toric(u: &SymplecticPotential, a: f64) -> Result<f64> {
    let s = scalar_curvature(u)?;
    let dev: Vec<f64> = s.iter().map(|v| v - a).collect();
    Ok(l2_norm(&dev))
}

/// −L_a(f) / ‖f‖ for a discretely convex direction f.
pub fn toric_ray_ratio(f: &[f64], a: f64) -> Result<f64> {
    let norm = l2_norm(f);
    if !(norm > 0.0) {
        return Err(Error::input("ray direction is zero"));
    }
    let d2 = second_differences(f);
    let n = f.len() - 1;
    if let Some(i) = (1..n).find(|&i| d2[i] < -1e-9 * (1.0 + norm)) {
        return Err(Error::input(format!(
            "ray direction is not convex at node {i} (f'' = {:.3e})",
            d2[i]
        )));
    }
    Ok(-linear_part(f, a) / norm)
}

/// argmin_v ½ d₂(v, u)² + λ M_a(v) by damped Newton on the grid samples.
///
/// The Hessian is diagonal plus h·D²ᵀ diag(w²) D², a symmetric pentadiagonal
/// matrix. Steps are backtracked to keep u″ > 0 and to decrease the objective.
/// The increment is kept as an affine part plus a remainder, so that affine
/// motion never reaches the curvature stencil.
pub fn toric_prox(u: &SymplecticPotential, lambda: f64, a: f64) -> Result<SymplecticPotential> {
    check_lambda(lambda)?;
    let n = u.n();
    let h = 1.0 / n as f64;
    let inv_h2 = (n * n) as f64;
    let weights = trapezoid_weights(n);
    let x = grid(n);
    let q = interior_q(n);
    let base_d2 = second_differences(u.residual_part());
    hessian_ratio(&q, &base_d2)?;

    let ratio_at = |rest: &[f64]| -> Result<Vec<f64>> {
        let dd = second_differences(rest);
        let d2: Vec<f64> = base_d2.iter().zip(&dd).map(|(x, y)| x + y).collect();
        hessian_ratio(&q, &d2)
    };
    let assemble =
        |c: f64, b: f64, rest: &[f64]| -> Vec<f64> { rest.iter().zip(&x).map(|(r, xi)| c + b * xi + r).collect() };

    let (mut dc, mut db, mut rest) = (0.0, 0.0, vec![0.0; n + 1]);
    let mut p = ratio_at(&rest)?;
    let mut polished = false;
    let mut residual = f64::INFINITY;
    let mut stagnant = 0;
    for _ in 0..PROX_MAX_ITER {
        let w: Vec<f64> = (0..=n)
            .map(|i| if i == 0 || i == n { 0.0 } else { q[i] / p[i] })
            .collect();
        let s = curvature_from_w(&w);
        let delta = assemble(dc, db, &rest);
        let g: Vec<f64> = (0..=n).map(|j| weights[j] * (delta[j] + lambda * (s[j] - a))).collect();
        let previous = residual;
        residual = g.iter().zip(&weights).map(|(gj, wj)| gj * gj / wj).sum::<f64>().sqrt();
        stagnant = if residual > 0.5 * previous { stagnant + 1 } else { 0 };
        let converged = residual <= PROX_TOL || (residual <= PROX_STALL_TOL * (1.0 + lambda) && stagnant >= 2);
        if converged {
            if polished || residual == 0.0 || residual > PROX_TOL {
                let phi: Vec<f64> = u.residual_part().iter().zip(&rest).map(|(x, y)| x + y).collect();
                let (c, b) = u.affine();
                return Ok(SymplecticPotential::from_parts(c + dc, b + db, phi));
            }
            polished = true;
        }

        let mut hess = SymBand::zeros(n + 1, 2);
        for (j, wj) in weights.iter().enumerate() {
            hess.add(j, j, *wj);
        }
        let stencil = [inv_h2, -2.0 * inv_h2, inv_h2];
        for (i, wi) in w.iter().enumerate().take(n).skip(1) {
            let coef = lambda * h * wi * wi;
            for (ka, va) in stencil.iter().enumerate() {
                for (kb, vb) in stencil.iter().enumerate().skip(ka) {
                    hess.add(i - 1 + ka, i - 1 + kb, coef * va * vb);
                }
            }
        }
        let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
        let step = hess.solve(&neg_g)?;
        let slope: f64 = g.iter().zip(&step).map(|(x, y)| x * y).sum();
        let (sc, sb, srest) = split_affine(&step);
        let step = assemble(sc, sb, &srest);

        // Rounding floor of the objective difference.
        let scale = weights.iter().zip(&delta).map(|(w, d)| w * d * d).sum::<f64>()
            + lambda * (2.0 + h * p[1..n].iter().map(|v| v.ln().abs()).sum::<f64>());
        let floor = 64.0 * f64::EPSILON * scale;

        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = rest.iter().zip(&srest).map(|(r, s)| r + alpha * s).collect();
            if let Ok(p_trial) = ratio_at(&trial) {
                // Objective change computed term by term to avoid cancellation.
                let quad: f64 = (0..=n)
                    .map(|j| 0.5 * weights[j] * alpha * step[j] * (2.0 * delta[j] + alpha * step[j]))
                    .sum();
                let ent: f64 = -h * (1..n).map(|i| (p_trial[i] / p[i]).ln()).sum::<f64>();
                let lin = alpha * (step[0] + step[n])
                    - a * alpha * step.iter().zip(&weights).map(|(s, w)| s * w).sum::<f64>();
                let change = quad + lambda * (ent + lin);
                if change <= 1e-4 * alpha * slope + floor {
                    dc += alpha * sc;
                    db += alpha * sb;
                    rest = trial;
                    p = p_trial;
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < 1e-14 {
                return Err(Error::numerical("toric prox line search stalled", residual));
            }
        }
    }
    Err(Error::numerical(
        format!("toric prox did not converge in {PROX_MAX_ITER} Newton steps"),
        residual,
    ))
}

/// M_a as a functional on the flat toric space.
#[derive(Debug, Clone, PartialEq)]
pub struct ToricMabuchi {
    config: ToricConfig,
    schedule: Vec<f64>,
}

impl ToricMabuchi {
    /// Resolvent steps for slope estimation; the fourth-order stiffness of M_a
    /// needs much smaller steps than the generic default.
    pub const SLOPE_SCHEDULE: [f64; 3] = [1e-5, 5e-6, 2.5e-6];

    pub fn new(config: ToricConfig) -> Self {
        ToricMabuchi {
            config,
            schedule: Self::SLOPE_SCHEDULE.to_vec(),
        }
    }

    pub fn config(&self) -> ToricConfig {
        self.config
    }
}

impl Functional<ToricSpace> for ToricMabuchi {
    fn name(&self) -> String {
        format!("mabuchi(a={})", self.config.a)
    }

    fn value(&self, space: &ToricSpace, x: &SymplecticPotential) -> Result<f64> {
        crate::geodesic::GeodesicSpace::check(space, x)?;
        match mabuchi_toric(x, self.config.a) {
            Ok(v) => Ok(v),
            Err(Error::Domain { .. }) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    }

    fn prox(&self, space: &ToricSpace, x: &SymplecticPotential, lambda: f64) -> Result<SymplecticPotential> {
        crate::geodesic::GeodesicSpace::check(space, x)?;
        toric_prox(x, lambda, self.config.a)
    }

    fn analytic_slope(&self, _space: &ToricSpace, x: &SymplecticPotential) -> Option<f64> {
        calabi_energy_toric(x, self.config.a).ok()
    }

    fn analytic_slope_label(&self) -> &'static str {
        "calabi_energy"
    }

    fn slope_schedule(&self) -> Vec<f64> {
        self.schedule.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toric::{grid, DEFAULT_GRID};

    fn u0() -> SymplecticPotential {
        SymplecticPotential::guillemin(DEFAULT_GRID)
    }

    fn profile(f: impl Fn(f64) -> f64) -> Vec<f64> {
        grid(DEFAULT_GRID).into_iter().map(f).collect()
    }

    #[test]
    fn guillemin_has_constant_curvature_two() {
        let s = scalar_curvature(&u0()).unwrap();
        for v in s {
            assert!((v - 2.0).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn constants_do_not_change_curvature() {
        let shifted = u0().translate(&profile(|_| 1.0), 0.7);
        assert_eq!(scalar_curvature(&shifted).unwrap(), scalar_curvature(&u0()).unwrap());
    }

    #[test]
    fn mabuchi_at_guillemin() {
        assert!((mabuchi_toric(&u0(), 2.0).unwrap() + 1.0).abs() < 1e-12);
        for &(a, c) in &[(2.0, 0.3), (3.0, 1.5), (1.0, -2.0)] {
            let m0 = mabuchi_toric(&u0(), a).unwrap();
            let m = mabuchi_toric(&u0().translate(&profile(|_| 1.0), c), a).unwrap();
            assert!((m - (m0 + c * (2.0 - a))).abs() < 1e-12);
        }
    }

    #[test]
    fn calabi_energy_at_guillemin() {
        assert!(calabi_energy_toric(&u0(), 2.0).unwrap() <= 5e-3);
        assert!((calabi_energy_toric(&u0(), 3.0).unwrap() - 1.0).abs() <= 5e-3);
    }

    #[test]
    fn linear_parts() {
        assert!(linear_part(&profile(|x| x), 2.0).abs() < 1e-14);
        assert!((linear_part(&profile(|x| x * x), 2.0) - 1.0 / 3.0).abs() < 1e-5);
        assert!((linear_part(&profile(|_| 1.0), 3.0) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn ray_ratios() {
        assert!((toric_ray_ratio(&profile(|_| 1.0), 3.0).unwrap() - 1.0).abs() < 1e-14);
        assert!(toric_ray_ratio(&profile(|x| x), 2.0).unwrap().abs() < 1e-14);
        let r = toric_ray_ratio(&profile(|x| x * x), 2.0).unwrap();
        assert!((r + (1.0 / 3.0) * 5f64.sqrt()).abs() < 1e-4);
        assert!(toric_ray_ratio(&profile(|x| -x * x), 2.0).is_err());
        assert!(toric_ray_ratio(&profile(|_| 0.0), 2.0).is_err());
    }

    #[test]
    fn nonconvex_potential_is_a_domain_error() {
        let bad = u0().translate(&profile(|x| -10.0 * x * x), 1.0);
        assert!(matches!(scalar_curvature(&bad), Err(Error::Domain { .. })));
        assert!(matches!(mabuchi_toric(&bad, 2.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn guillemin_is_stationary_for_a_two() {
        let p = toric_prox(&u0(), 0.5, 2.0).unwrap();
        assert!(toric_distance(&p, &u0()) < 1e-10);
        let shifted = u0().translate(&profile(|_| 1.0), 0.4);
        let p = toric_prox(&shifted, 0.5, 2.0).unwrap();
        assert!(toric_distance(&p, &shifted) < 1e-10);
    }

    fn toric_distance(a: &SymplecticPotential, b: &SymplecticPotential) -> f64 {
        crate::toric::toric_distance(a, b).unwrap()
    }

    #[test]
    fn prox_for_a_three_translates_by_lambda() {
        let p = toric_prox(&u0(), 0.25, 3.0).unwrap();
        let expected = u0().translate(&profile(|_| 1.0), 0.25);
        assert!(toric_distance(&p, &expected) < 1e-10);
    }

    #[test]
    fn prox_satisfies_optimality() {
        let start = u0().translate(&profile(|x| (std::f64::consts::PI * x).sin()), 0.1);
        for &lambda in &[1e-4, 1e-2, 1.0] {
            let p = toric_prox(&start, lambda, 2.0).unwrap();
            // ∇: (p − u) + λ (S(p) − a) = 0 in the metric.
            let s = scalar_curvature(&p).unwrap();
            let diff = p.difference(&start);
            let r: Vec<f64> = diff.iter().zip(&s).map(|(d, s)| d + lambda * (s - 2.0)).collect();
            assert!(
                l2_norm(&r) <= PROX_STALL_TOL * (1.0 + lambda),
                "λ={lambda} residual {}",
                l2_norm(&r)
            );
        }
    }
}
