//! Rate coverage, ergodic spectral efficiency and their closed-form bounds
//! for a tagged user with a fixed interferer geometry.
//!
//! Coverage formulas assume the interference-limited regime and ignore
//! `snr_db`. The ergodic expressions include the noise term unless
//! `snr_db` is `None`.

mod jet;
pub mod quadrature;
mod special;

use serde::{Deserialize, Serialize};

pub use jet::Jet;
pub use special::digamma;

use crate::channel::ScenarioParams;
use crate::error::{invalid, Result};
use crate::topology::Point2D;

const QUAD_TOL: f64 = 1e-9;

/// Serving distance and interferer distance ratios `ρ_j = ‖d_j‖ / ‖d₀‖`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedGeometry {
    pub d0: f64,
    pub ratios: Vec<f64>,
}

impl FixedGeometry {
    pub fn new(d0: f64, ratios: Vec<f64>) -> Result<Self> {
        if !(d0 > 0.0 && d0.is_finite()) {
            return invalid(format!("serving distance must be positive, got {d0}"));
        }
        if let Some(r) = ratios.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return invalid(format!("distance ratios must be positive, got {r}"));
        }
        Ok(Self { d0, ratios })
    }

    /// Geometry seen by a user at `user` served from `serving` with the given
    /// interfering sites.
    pub fn from_positions(user: &Point2D, serving: &Point2D, interferers: &[Point2D]) -> Result<Self> {
        let d0 = user.dist(serving);
        Self::new(d0, interferers.iter().map(|d| user.dist(d) / d0).collect())
    }

    fn weights(&self, beta: f64) -> Vec<f64> {
        self.ratios.iter().map(|r| r.powf(-beta)).collect()
    }
}

/// `∏_j (1 + s ρ_j^{−β})^{−K}` expanded to `order` around `s`.
pub fn laplace_interference_jet(s: f64, geom: &FixedGeometry, k: usize, beta: f64, order: usize) -> Jet {
    let t = Jet::variable(s, order);
    geom.weights(beta)
        .iter()
        .fold(Jet::constant(1.0, order), |acc, &w| {
            let factor = t.scale(w).add_const(1.0).recip().powi(k);
            &acc * &factor
        })
}

/// Laplace transform of the out-of-cluster interference at `s ≥ 0`.
pub fn laplace_interference(s: f64, geom: &FixedGeometry, k: usize, beta: f64) -> f64 {
    geom.weights(beta)
        .iter()
        .map(|w| (1.0 + s * w).powi(-(k as i32)))
        .product()
}

/// Surrogate: nearest interferer kept exactly, the rest
/// replaced by their mean-field exponential.
pub fn laplace_interference_approx_jet(s: f64, geom: &FixedGeometry, k: usize, beta: f64, order: usize) -> Jet {
    let t = Jet::variable(s, order);
    let w = geom.weights(beta);
    let Some(imin) = (0..geom.ratios.len()).min_by(|&a, &b| geom.ratios[a].total_cmp(&geom.ratios[b])) else {
        return Jet::constant(1.0, order);
    };
    let rest: f64 = w.iter().enumerate().filter(|&(j, _)| j != imin).map(|(_, x)| x).sum();
    let near = t.scale(w[imin]).add_const(1.0).recip();
    let far = t.scale(-rest).exp();
    (&near * &far).powi(k)
}

fn check_dims(params: &ScenarioParams) -> Result<()> {
    if params.k == 0 || params.n < 2 * params.k {
        return invalid(format!("need K ≥ 1 and N ≥ 2K, got N = {}, K = {}", params.n, params.k));
    }
    if params.l == 0 {
        return invalid("L must be at least 1");
    }
    if !(params.gamma >= 0.0) {
        return invalid("rate threshold must be non-negative");
    }
    Ok(())
}

/// `Σ_{m=0}^{M} (−s)ᵐ cₘ` with `cₘ` the Taylor coefficients of `L` at `s = 2^γ − 1`.
fn coverage_sum(params: &ScenarioParams, jet_at: impl Fn(f64, usize) -> Jet) -> Result<f64> {
    check_dims(params)?;
    let s = params.gamma.exp2() - 1.0;
    let order = params.n - 2 * params.k;
    let jet = jet_at(s, order);
    let mut term = 1.0;
    let mut sum = 0.0;
    for c in &jet.c {
        sum += term * c;
        term *= -s;
    }
    Ok(sum.clamp(0.0, 1.0))
}

/// `P[log₂(1 + SIR) > γ]` for the tagged user.
pub fn rate_coverage_exact(geom: &FixedGeometry, params: &ScenarioParams) -> Result<f64> {
    coverage_sum(params, |s, m| laplace_interference_jet(s, geom, params.k, params.beta, m))
}

/// Coverage with the single-dominant-interferer approximation of the transform.
pub fn rate_coverage_approx(geom: &FixedGeometry, params: &ScenarioParams) -> Result<f64> {
    coverage_sum(params, |s, m| laplace_interference_approx_jet(s, geom, params.k, params.beta, m))
}

/// `(1/L) E[log₂(1 + SINR)]` by numerical integration.
pub fn ergodic_se_exact(geom: &FixedGeometry, params: &ScenarioParams) -> Result<f64> {
    check_dims(params)?;
    let noise = params.noise_term(geom.d0);
    if geom.ratios.is_empty() && noise == 0.0 {
        return invalid("spectral efficiency is unbounded without interference or noise");
    }
    let dof = params.dof() as f64;
    let k = params.k as i32;
    let w = geom.weights(params.beta);
    let integrand = |z: f64| -> f64 {
        let signal = if z < 1e-300 {
            dof
        } else {
            -(-dof * z.ln_1p()).exp_m1() / z
        };
        let laplace: f64 = w.iter().map(|x| (1.0 + z * x).powi(-k)).product();
        (-z * noise).exp() * laplace * signal
    };
    // z = c·t/(1 − t) with c the reciprocal mean interference-plus-noise,
    // which puts the bulk of the integrand near t = 1/2.
    let c = 1.0 / (noise + params.k as f64 * w.iter().sum::<f64>());
    let mapped = |t: f64| {
        let u = 1.0 - t;
        c * integrand(c * t / u) / (u * u)
    };
    let nats = quadrature::integrate(mapped, 0.0, 1.0, QUAD_TOL)?;
    Ok(nats * std::f64::consts::LOG2_E / params.l as f64)
}

/// Jensen-type lower bound on the ergodic spectral efficiency.
pub fn ergodic_se_lower(geom: &FixedGeometry, params: &ScenarioParams) -> Result<f64> {
    check_dims(params)?;
    let interference: f64 = geom.weights(params.beta).iter().sum::<f64>() * params.k as f64;
    let denom = interference + params.noise_term(geom.d0);
    let signal = digamma(params.dof() as f64)?.exp();
    Ok((signal / denom).ln_1p() * std::f64::consts::LOG2_E / params.l as f64)
}

/// Lower bound on the typical user's ergodic spectral efficiency when BSs
/// form a homogeneous Poisson process and every BS outside the serving pair
/// interferes. The bound does not depend on the process density.
pub fn ergodic_se_ppp_lower(n: usize, k: usize, l: usize, beta: f64) -> Result<f64> {
    if k == 0 || n < 2 * k || l == 0 {
        return invalid(format!("need K ≥ 1, N ≥ 2K and L ≥ 1, got N = {n}, K = {k}, L = {l}"));
    }
    if !(beta >= 2.0 && beta.is_finite()) {
        return invalid(format!("path-loss exponent must be at least 2, got {beta}"));
    }
    let gain = (beta * beta - 4.0) / (8.0 * k as f64) * digamma((n + 1 - 2 * k) as f64)?.exp();
    Ok(gain.ln_1p() * std::f64::consts::LOG2_E / l as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng as _;
    use rand_distr::{Distribution, Gamma};

    fn params(n: usize, k: usize, gamma: f64) -> ScenarioParams {
        ScenarioParams {
            n,
            k,
            gamma,
            l: 1,
            snr_db: None,
            ..ScenarioParams::default()
        }
    }

    fn geom(ratios: &[f64]) -> FixedGeometry {
        FixedGeometry::new(100.0, ratios.to_vec()).unwrap()
    }

    #[test]
    fn laplace_values() {
        let g = geom(&[2.0]);
        assert_eq!(laplace_interference(0.0, &g, 1, 4.0), 1.0);
        assert!((laplace_interference(1.0, &g, 1, 4.0) - 16.0 / 17.0).abs() < 1e-15);
        let two = geom(&[2.0, 3.0]);
        let prod = laplace_interference(0.7, &geom(&[2.0]), 2, 4.0) * laplace_interference(0.7, &geom(&[3.0]), 2, 4.0);
        assert!((laplace_interference(0.7, &two, 2, 4.0) - prod).abs() < 1e-15);
        let j = laplace_interference_jet(0.7, &two, 2, 4.0, 3);
        assert!((j.value() - prod).abs() < 1e-15);
    }

    #[test]
    fn coverage_hand_values() {
        let g = geom(&[2.0]);
        assert_eq!(rate_coverage_exact(&g, &params(3, 1, 0.0)).unwrap(), 1.0);
        assert!((rate_coverage_exact(&g, &params(2, 1, 1.0)).unwrap() - 16.0 / 17.0).abs() < 1e-14);
        let want = 16.0 / 17.0 + 16.0 / 289.0;
        assert!((rate_coverage_exact(&g, &params(3, 1, 1.0)).unwrap() - want).abs() < 1e-14);
        assert!((want - 0.996_540).abs() < 5e-7);
    }

    #[test]
    fn approx_equals_exact_for_one_interferer() {
        let g = geom(&[1.7]);
        for (n, k) in [(2, 1), (3, 1), (4, 2), (7, 2)] {
            for gamma in [0.0, 0.5, 1.0, 3.0] {
                let p = params(n, k, gamma);
                let a = rate_coverage_approx(&g, &p).unwrap();
                let e = rate_coverage_exact(&g, &p).unwrap();
                assert!((a - e).abs() < 1e-13);
            }
        }
        assert_eq!(rate_coverage_approx(&geom(&[1.5, 2.5]), &params(4, 1, 0.0)).unwrap(), 1.0);
    }

    /// Independent Monte-Carlo: g₀ ~ Gamma(N − 2K + 1), g_j ~ Gamma(K).
    fn mc_coverage(g: &FixedGeometry, p: &ScenarioParams, trials: usize, seed: u64) -> f64 {
        let mut r = rng::stream(seed, "test", 0);
        let sig = Gamma::new(p.dof() as f64, 1.0).unwrap();
        let int = Gamma::new(p.k as f64, 1.0).unwrap();
        let thr = p.gamma.exp2() - 1.0;
        let hits = (0..trials)
            .filter(|_| {
                let g0 = sig.sample(&mut r);
                let i: f64 = g.ratios.iter().map(|x| x.powf(-p.beta) * int.sample(&mut r)).sum();
                g0 > thr * i
            })
            .count();
        hits as f64 / trials as f64
    }

    #[test]
    fn coverage_matches_monte_carlo() {
        let g = geom(&[1.3, 1.9, 2.4, 3.5]);
        for (n, k) in [(2, 1), (3, 1), (4, 2), (6, 2)] {
            for gamma in [0.5, 1.0, 2.0] {
                let p = params(n, k, gamma);
                let trials = 200_000;
                let mc = mc_coverage(&g, &p, trials, (n * 10 + k) as u64);
                let an = rate_coverage_exact(&g, &p).unwrap();
                let se = (an * (1.0 - an) / trials as f64).sqrt();
                assert!((mc - an).abs() < 4.0 * se + 1e-4, "N={n} K={k} γ={gamma}: {an} vs {mc}");
            }
        }
    }

    #[test]
    fn coverage_derivatives_match_finite_differences() {
        let mut r = rng::stream(11, "test", 0);
        for _ in 0..10 {
            let ratios: Vec<f64> = (0..r.random_range(1..6)).map(|_| 1.0 + 3.0 * r.random::<f64>()).collect();
            let g = geom(&ratios);
            let k = r.random_range(1..3);
            let s = 0.5 + 2.0 * r.random::<f64>();
            let jet = laplace_interference_jet(s, &g, k, 4.0, 5);
            let f = |x: f64| laplace_interference(x, &g, k, 4.0);
            // Central differences of increasing order with step h.
            let h: f64 = 0.02;
            for m in 1..=5usize {
                let mut fd = 0.0;
                for i in 0..=m {
                    let binom = (0..i).fold(1.0, |b, j| b * (m - j) as f64 / (j + 1) as f64);
                    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                    fd += sign * binom * f(s + (m as f64 / 2.0 - i as f64) * h);
                }
                fd /= h.powi(m as i32);
                let want = jet.derivative(m);
                assert!((fd - want).abs() < 1e-2 * want.abs().max(1e-3), "m={m}: {fd} vs {want}");
            }
        }
    }

    #[test]
    fn exact_se_noise_only_closed_form() {
        // E[log₂(1 + X)] for X ~ Exp(1) is log₂e · e · E₁(1).
        let e1_of_1 = 0.219_383_934_395_520_3;
        let want = std::f64::consts::LOG2_E * std::f64::consts::E * e1_of_1;
        let p = ScenarioParams {
            n: 2,
            k: 1,
            l: 1,
            snr_db: Some(0.0),
            ..ScenarioParams::default()
        };
        let g = FixedGeometry::new(1.0, vec![]).unwrap();
        let v = ergodic_se_exact(&g, &p).unwrap();
        assert!((v - want).abs() < 1e-8, "{v} vs {want}");
        assert!((v - 0.8604).abs() < 1e-4);
    }

    #[test]
    fn exact_se_matches_monte_carlo() {
        let g = geom(&[1.4, 2.2]);
        let p = params(4, 1, 1.0);
        let mut r = rng::stream(12, "test", 0);
        let sig = Gamma::new(p.dof() as f64, 1.0).unwrap();
        let int = Gamma::new(1.0, 1.0).unwrap();
        let n = 400_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| {
                let i: f64 = g.ratios.iter().map(|x| x.powf(-4.0) * int.sample(&mut r)).sum();
                (1.0 + sig.sample(&mut r) / i).log2()
            })
            .collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let v = ergodic_se_exact(&g, &p).unwrap();
        assert!((v - mean).abs() < 4.0 * (var / n as f64).sqrt(), "{v} vs {mean}");
    }

    #[test]
    fn weaker_interference_raises_se() {
        let p = params(3, 1, 1.0);
        let a = ergodic_se_exact(&geom(&[1.5, 2.0]), &p).unwrap();
        let b = ergodic_se_exact(&geom(&[1.8, 2.4]), &p).unwrap();
        assert!(b > a);
    }

    #[test]
    fn lower_bound_values() {
        let v = ergodic_se_lower(&geom(&[1.0]), &params(3, 1, 1.0)).unwrap();
        let want = (1.0 + (1.0 - 0.577_215_664_901_532_9f64).exp()).log2();
        assert!((v - want).abs() < 1e-13);
        assert!((v - 1.3370).abs() < 1e-4);
        let noisy = ScenarioParams {
            snr_db: Some(0.0),
            ..params(3, 1, 1.0)
        };
        let g = FixedGeometry::new(1.0, vec![]).unwrap();
        assert!((ergodic_se_lower(&g, &noisy).unwrap() - want).abs() < 1e-13);
        let halved = ScenarioParams { l: 2, ..params(3, 1, 1.0) };
        assert!((ergodic_se_lower(&geom(&[1.0]), &halved).unwrap() - v / 2.0).abs() < 1e-15);
    }

    #[test]
    fn ppp_bound_values() {
        assert_eq!(ergodic_se_ppp_lower(3, 1, 4, 2.0).unwrap(), 0.0);
        let v = ergodic_se_ppp_lower(3, 1, 4, 4.0).unwrap();
        let want = 0.25 * (1.0 + 1.5 * (1.0 - 0.577_215_664_901_532_9f64).exp()).log2();
        assert!((v - want).abs() < 1e-14);
        assert!((v - 0.4295).abs() < 1e-4);
        assert!(ergodic_se_ppp_lower(3, 1, 4, 1.9).is_err());
        assert!(ergodic_se_ppp_lower(3, 2, 4, 4.0).is_err());
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(FixedGeometry::new(0.0, vec![]).is_err());
        assert!(FixedGeometry::new(1.0, vec![-1.0]).is_err());
        let g = FixedGeometry::from_positions(&Point2D::new(0., 0.), &Point2D::new(3., 4.), &[Point2D::new(0., 10.)]).unwrap();
        assert_eq!(g.d0, 5.0);
        assert_eq!(g.ratios, vec![2.0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn coverage_is_a_decreasing_probability(
            ratios in prop::collection::vec(1.0f64..5.0, 1..8),
            n in 2usize..8,
            gammas in prop::collection::vec(0.0f64..8.0, 2..6),
        ) {
            let k = 1 + (n >= 4) as usize;
            let g = geom(&ratios);
            let mut gammas = gammas;
            gammas.sort_by(f64::total_cmp);
            let mut prev = 1.0;
            for gamma in gammas {
                let c = rate_coverage_exact(&g, &params(n, k, gamma)).unwrap();
                prop_assert!((0.0..=1.0).contains(&c));
                prop_assert!(c <= prev + 1e-12);
                prev = c;
            }
        }

        #[test]
        fn lower_bound_never_exceeds_exact(
            ratios in prop::collection::vec(1.0f64..6.0, 0..8),
            n in 2usize..9,
            snr_db in prop::option::of(-10.0f64..60.0),
            d0 in 10.0f64..300.0,
        ) {
            let k = if n >= 6 { 2 } else { 1 };
            prop_assume!(!(ratios.is_empty() && snr_db.is_none()));
            let p = ScenarioParams { snr_db, ..params(n, k, 1.0) };
            let g = FixedGeometry::new(d0, ratios).unwrap();
            let lo = ergodic_se_lower(&g, &p).unwrap();
            let ex = ergodic_se_exact(&g, &p).unwrap();
            prop_assert!(lo <= ex, "{} > {}", lo, ex);
        }
    }
}
