//! Rayleigh fading, zero-forcing coordinated beamforming, SINR and pilot
//! overhead.
//!
//! Beamformers act on the transpose channel: a user with channel `h` receives
//! `hᵀv`. The constraint `cᵀv = 0` is orthogonality of `v` to `conj(c)` in the
//! Hermitian inner product, so the optimal unit `v` is the normalized
//! projection of `conj(h)` onto the complement of the conjugated constraints.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;

/// Scalar parameters shared by analysis and simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    /// Antennas per BS.
    pub n: usize,
    /// Users per BS per cluster.
    pub k: usize,
    pub beta: f64,
    /// `None` drops thermal noise entirely (interference-limited).
    pub snr_db: Option<f64>,
    /// Rate threshold in bits/s/Hz.
    pub gamma: f64,
    /// Resource count used in the pre-log.
    pub l: usize,
    pub delta_ec: usize,
    pub k_per_bs: usize,
    pub mmse: f64,
    /// Coherence block length in symbols.
    pub l_b: f64,
    pub overhead_enabled: bool,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            n: 3,
            k: 1,
            beta: 4.0,
            snr_db: Some(100.0),
            gamma: 1.0,
            l: 4,
            delta_ec: 4,
            k_per_bs: 40,
            mmse: 0.1,
            l_b: 100.0,
            overhead_enabled: false,
        }
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return invalid("K must be at least 1");
        }
        if self.n < 2 * self.k {
            return invalid(format!("zero-forcing needs N ≥ 2K, got N = {}, K = {}", self.n, self.k));
        }
        if !(self.beta > 2.0 && self.beta.is_finite()) {
            return invalid(format!("path-loss exponent must exceed 2, got {}", self.beta));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return invalid(format!("rate threshold must be finite and ≥ 0, got {}", self.gamma));
        }
        if self.snr_db.is_some_and(|s| !s.is_finite()) {
            return invalid("SNR must be finite (omit it for the interference-limited mode)");
        }
        if self.l == 0 {
            return invalid("L must be at least 1");
        }
        if self.delta_ec == 0 {
            return invalid("delta_ec must be at least 1");
        }
        if !(self.mmse > 0.0 && self.mmse <= 1.0) {
            return invalid(format!("MMSE must lie in (0, 1], got {}", self.mmse));
        }
        if !(self.l_b > 0.0 && self.l_b.is_finite()) {
            return invalid(format!("coherence block must be positive, got {}", self.l_b));
        }
        Ok(())
    }

    pub fn snr_linear(&self) -> f64 {
        self.snr_db.map_or(f64::INFINITY, |db| 10f64.powf(db / 10.0))
    }

    /// `‖d₀‖^β · K / SNR`; zero in the interference-limited mode.
    pub fn noise_term(&self, d0: f64) -> f64 {
        match self.snr_db {
            None => 0.0,
            Some(_) => d0.powf(self.beta) * self.k as f64 / self.snr_linear(),
        }
    }

    /// Shape of the desired-gain Gamma law, `N − 2K + 1`.
    pub fn dof(&self) -> usize {
        self.n + 1 - 2 * self.k
    }
}

/// One circularly-symmetric `CN(0, 1)` vector.
pub fn draw_fading<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<C64> {
    (0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        })
        .collect()
}

/// Hermitian inner product `⟨a, b⟩ = Σ conj(aᵢ) bᵢ`.
fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Removes the components along the orthonormal `basis` (two passes).
fn project_out(v: &mut [C64], basis: &[Vec<C64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = inner(q, v);
            for (x, y) in v.iter_mut().zip(q) {
                *x -= c * y;
            }
        }
    }
}

/// Orthonormal basis of the span of `vectors`; fails if they are not
/// linearly independent to working precision.
fn orthonormalize(vectors: impl IntoIterator<Item = Vec<C64>>) -> Result<Vec<Vec<C64>>> {
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for mut v in vectors {
        let before = norm(&v);
        project_out(&mut v, &basis);
        let after = norm(&v);
        if !(after > 1e-10 * before) {
            return Err(Error::RankDeficient);
        }
        v.iter_mut().for_each(|x| *x /= after);
        basis.push(v);
    }
    Ok(basis)
}

/// Unit-norm beamformer maximizing `|hᵀv|²` subject to `cᵀv = 0` for every
/// constraint channel `c`.
pub fn zf_cbf(h: &[C64], constraints: &[Vec<C64>]) -> Result<Vec<C64>> {
    let n = h.len();
    if constraints.len() >= n {
        return invalid(format!("{} constraints leave no freedom with {n} antennas", constraints.len()));
    }
    if constraints.iter().any(|c| c.len() != n) {
        return invalid("constraint channel length differs from antenna count");
    }
    let basis = orthonormalize(constraints.iter().map(|c| c.iter().map(C64::conj).collect()))?;
    let mut v: Vec<C64> = h.iter().map(C64::conj).collect();
    let before = norm(&v);
    project_out(&mut v, &basis);
    let len = norm(&v);
    if !(len > 1e-10 * before) {
        return Err(Error::RankDeficient);
    }
    v.iter_mut().for_each(|x| *x /= len);
    Ok(v)
}

/// `hᵀv`.
pub fn apply(h: &[C64], v: &[C64]) -> C64 {
    h.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Isotropic `N × K` matrix with orthonormal columns.
pub fn isotropic_frame<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<Vec<C64>> {
    assert!(k <= n, "frame wider than the space");
    loop {
        if let Ok(frame) = orthonormalize((0..k).map(|_| draw_fading(n, rng))) {
            return frame;
        }
    }
}

/// Effective gains of one trial: desired `g₀ = |hᵀv|²` and per-interferer
/// `g_j = ‖h_jᵀ V_j‖²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDraw {
    pub g0: f64,
    pub g: Vec<f64>,
}

/// How a trial's gains are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainModel {
    /// Draw channel vectors and build the beamformers explicitly.
    #[default]
    Vector,
    /// Draw the gains from their Gamma laws directly.
    Gamma,
}

/// Gains for a user whose beamformer is nulled toward `n_constraints` other
/// channels, with `n_interferers` BSs each sending `k` isotropic streams.
pub fn draw_gains<R: Rng + ?Sized>(
    model: GainModel,
    n: usize,
    k: usize,
    n_constraints: usize,
    n_interferers: usize,
    rng: &mut R,
) -> Result<ChannelDraw> {
    if n_constraints >= n || k == 0 || k > n {
        return invalid(format!(
            "cannot beamform with N = {n}, K = {k} and {n_constraints} constraints"
        ));
    }
    match model {
        GainModel::Vector => {
            let g0 = loop {
                let h = draw_fading(n, rng);
                let cons: Vec<Vec<C64>> = (0..n_constraints).map(|_| draw_fading(n, rng)).collect();
                match zf_cbf(&h, &cons) {
                    Ok(v) => break apply(&h, &v).norm_sqr(),
                    Err(Error::RankDeficient) => continue,
                    Err(e) => return Err(e),
                }
            };
            let g = (0..n_interferers)
                .map(|_| {
                    let h = draw_fading(n, rng);
                    isotropic_frame(n, k, rng)
                        .iter()
                        .map(|v| apply(&h, v).norm_sqr())
                        .sum()
                })
                .collect();
            Ok(ChannelDraw { g0, g })
        }
        GainModel::Gamma => {
            let desired = Gamma::new((n - n_constraints) as f64, 1.0).expect("positive shape");
            let interf = Gamma::new(k as f64, 1.0).expect("positive shape");
            Ok(ChannelDraw {
                g0: desired.sample(rng),
                g: (0..n_interferers).map(|_| interf.sample(rng)).collect(),
            })
        }
    }
}

/// Gains for a user of a coordinated pair: `2K − 1` nulling constraints.
pub fn draw_pair_gains<R: Rng + ?Sized>(
    model: GainModel,
    params: &ScenarioParams,
    n_interferers: usize,
    rng: &mut R,
) -> Result<ChannelDraw> {
    draw_gains(model, params.n, params.k, 2 * params.k - 1, n_interferers, rng)
}

/// `g₀ / (Σ ρ_j^{−β} g_j + noise_term)`.
pub fn sinr(draw: &ChannelDraw, ratios: &[f64], beta: f64, noise_term: f64) -> f64 {
    debug_assert_eq!(draw.g.len(), ratios.len());
    let interference: f64 = ratios.iter().zip(&draw.g).map(|(r, g)| r.powf(-beta) * g).sum();
    let denom = interference + noise_term;
    if denom == 0.0 {
        f64::INFINITY
    } else {
        draw.g0 / denom
    }
}

/// Fraction `α` of the coherence block spent on pilots.
pub fn pilot_overhead(params: &ScenarioParams, sinr_estimate: f64) -> Result<f64> {
    if !(params.mmse > 0.0 && params.mmse <= 1.0) {
        return invalid(format!("MMSE must lie in (0, 1], got {}", params.mmse));
    }
    if !(params.l_b > 0.0) {
        return invalid("coherence block must be positive");
    }
    if !(sinr_estimate >= 0.0) {
        return invalid(format!("SINR estimate must be non-negative, got {sinr_estimate}"));
    }
    let raw = (1.0 / sinr_estimate) * (1.0 / params.mmse - 1.0);
    let eta = if raw.is_finite() { raw.floor().max(1.0) } else { f64::INFINITY };
    let alpha = 2.0 * eta * params.n as f64 / params.l_b;
    if alpha >= 1.0 {
        return Err(Error::Overhead(alpha));
    }
    Ok(alpha)
}
