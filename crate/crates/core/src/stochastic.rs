//! Seeded discrete price processes.
//!
//! Two processes drive everything else in the crate:
//!
//! * the additive random walk `p_n = p0 + p0·σ·Σ ξ_i`, `ξ_i = ±1` with
//!   probability `p_up` / `1 - p_up`, used for the first-passage studies;
//! * geometric Brownian motion with one step per block, either with the
//!   binary multiplicative update `p ← p·(1 + μ + σ·ξ)` (the default) or the
//!   exact log-normal update `p ← p·exp(μ - σ²/2 + σ·z)`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, invalid, Error, Result};
use crate::rng::{rng_from_seed, SimRng};
use crate::stats::{sample_variance_about, MeanEstimate};

/// Parameters of the additive random walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkParams {
    pub p0: f64,
    /// Step size relative to `p0`.
    pub sigma: f64,
    pub p_up: f64,
    pub n_steps: usize,
    pub seed: u64,
}

impl WalkParams {
    pub fn new(p0: f64, sigma: f64, p_up: f64, n_steps: usize, seed: u64) -> Self {
        Self {
            p0,
            sigma,
            p_up,
            n_steps,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("p0", self.p0)?;
        ensure_non_negative("sigma", self.sigma)?;
        ensure_finite("p_up", self.p_up)?;
        if !(0.0..=1.0).contains(&self.p_up) {
            return Err(invalid(
                "p_up",
                format!("must lie in [0, 1], got {}", self.p_up),
            ));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Shape of the per-step GBM shock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IncrementKind {
    /// `±1` with equal probability, applied multiplicatively.
    #[default]
    Binary,
    /// Standard normal, applied through the exact log-normal solution.
    Gaussian,
}

impl std::str::FromStr for IncrementKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(Self::Binary),
            "gaussian" => Ok(Self::Gaussian),
            other => Err(invalid(
                "increment",
                format!("expected `binary` or `gaussian`, got `{other}`"),
            )),
        }
    }
}

impl std::fmt::Display for IncrementKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Binary => "binary",
            Self::Gaussian => "gaussian",
        })
    }
}

/// Parameters of a geometric Brownian motion with unit time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmParams {
    pub p0: f64,
    /// Per-step relative drift.
    pub mu: f64,
    /// Per-step relative volatility.
    pub sigma: f64,
    pub n_steps: usize,
    pub seed: u64,
    pub increment: IncrementKind,
}

impl GbmParams {
    pub fn new(p0: f64, mu: f64, sigma: f64, n_steps: usize, seed: u64) -> Self {
        Self {
            p0,
            mu,
            sigma,
            n_steps,
            seed,
            increment: IncrementKind::Binary,
        }
    }

    pub fn with_increment(mut self, increment: IncrementKind) -> Self {
        self.increment = increment;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("p0", self.p0)?;
        ensure_finite("mu", self.mu)?;
        ensure_non_negative("sigma", self.sigma)?;
        if self.increment == IncrementKind::Binary && 1.0 + self.mu - self.sigma <= 0.0 {
            return Err(invalid(
                "sigma",
                format!(
                    "binary increments need 1 + mu - sigma > 0 to keep prices positive (mu={}, sigma={})",
                    self.mu, self.sigma
                ),
            ));
        }
        Ok(())
    }
}

/// The parameter record a path was generated from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PathParams {
    Walk(WalkParams),
    Gbm(GbmParams),
}

impl PathParams {
    pub fn p0(&self) -> f64 {
        match self {
            Self::Walk(w) => w.p0,
            Self::Gbm(g) => g.p0,
        }
    }

    pub fn n_steps(&self) -> usize {
        match self {
            Self::Walk(w) => w.n_steps,
            Self::Gbm(g) => g.n_steps,
        }
    }
}

/// A realized price trajectory of `n_steps + 1` prices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PricePath {
    pub prices: Vec<f64>,
    pub params: PathParams,
}

impl PricePath {
    pub fn initial(&self) -> f64 {
        self.prices[0]
    }

    pub fn terminal(&self) -> f64 {
        *self
            .prices
            .last()
            .expect("paths hold at least the initial price")
    }

    pub fn displacement(&self) -> f64 {
        self.terminal() - self.initial()
    }
}

/// Step-by-step generator for the additive walk.
///
/// The price after `n` steps is computed as `p0 + p0·σ·S_n` from the integer
/// partial sum `S_n`, so no rounding error accumulates along long paths.
#[derive(Debug, Clone)]
pub struct RandomWalk {
    rng: SimRng,
    p0: f64,
    step: f64,
    p_up: f64,
    position: i64,
}

impl RandomWalk {
    pub fn new(params: &WalkParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            rng: rng_from_seed(params.seed),
            p0: params.p0,
            step: params.p0 * params.sigma,
            p_up: params.p_up,
            position: 0,
        })
    }

    /// Net number of up-steps so far.
    pub fn position(&self) -> i64 {
        self.position
    }

    pub fn price(&self) -> f64 {
        self.p0 + self.step * self.position as f64
    }

    /// Advances one step and returns the new price.
    pub fn advance(&mut self) -> f64 {
        if self.rng.random_bool(self.p_up) {
            self.position += 1;
        } else {
            self.position -= 1;
        }
        self.price()
    }
}

/// Step-by-step generator for geometric Brownian motion.
#[derive(Debug, Clone)]
pub struct GbmProcess {
    rng: SimRng,
    price: f64,
    mu: f64,
    sigma: f64,
    log_drift: f64,
    increment: IncrementKind,
}

impl GbmProcess {
    pub fn new(params: &GbmParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            rng: rng_from_seed(params.seed),
            price: params.p0,
            mu: params.mu,
            sigma: params.sigma,
            log_drift: params.mu - 0.5 * params.sigma * params.sigma,
            increment: params.increment,
        })
    }

    pub fn price(&self) -> f64 {
        self.price
    }

    pub fn advance(&mut self) -> f64 {
        match self.increment {
            IncrementKind::Binary => {
                let xi = if self.rng.random_bool(0.5) { 1.0 } else { -1.0 };
                self.price *= 1.0 + self.mu + self.sigma * xi;
            }
            IncrementKind::Gaussian => {
                let z: f64 = self.rng.sample(StandardNormal);
                self.price *= (self.log_drift + self.sigma * z).exp();
            }
        }
        self.price
    }
}

pub fn gen_random_walk(params: &WalkParams) -> Result<PricePath> {
    let mut walk = RandomWalk::new(params)?;
    let mut prices = Vec::with_capacity(params.n_steps + 1);
    prices.push(walk.price());
    prices.extend((0..params.n_steps).map(|_| walk.advance()));
    Ok(PricePath {
        prices,
        params: PathParams::Walk(*params),
    })
}

pub fn gen_gbm_path(params: &GbmParams) -> Result<PricePath> {
    let mut gbm = GbmProcess::new(params)?;
    let mut prices = Vec::with_capacity(params.n_steps + 1);
    prices.push(gbm.price());
    prices.extend((0..params.n_steps).map(|_| gbm.advance()));
    Ok(PricePath {
        prices,
        params: PathParams::Gbm(*params),
    })
}

/// Terminal-displacement statistics of a path ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathStats {
    pub n_paths: usize,
    pub n_steps: usize,
    /// Mean of `p_n - p_0` with its standard error.
    pub mean_displacement: MeanEstimate,
    /// Unbiased sample variance of `p_n - p_0`.
    pub displacement_variance: f64,
    /// Standard error of the sample variance.
    pub variance_std_error: f64,
    pub mean_per_step: f64,
    pub variance_per_step: f64,
}

/// Statistics of `p_n - p_0` over an ensemble sharing `p0` and step count.
pub fn path_stats(ensemble: &[PricePath]) -> Result<PathStats> {
    let first = ensemble
        .first()
        .ok_or(Error::EmptyEnsemble("path_stats needs at least one path"))?;
    let n_steps = first.prices.len() - 1;
    let p0 = first.initial();
    if let Some(odd) = ensemble
        .iter()
        .find(|p| p.prices.len() - 1 != n_steps || p.initial() != p0)
    {
        return Err(invalid(
            "ensemble",
            format!(
                "paths must share p0 and step count: expected ({p0}, {n_steps}), found ({}, {})",
                odd.initial(),
                odd.prices.len() - 1
            ),
        ));
    }
    let d: Vec<f64> = ensemble.iter().map(PricePath::displacement).collect();
    let mean_displacement = MeanEstimate::from_samples(&d)?;
    let n = d.len() as f64;
    let var = sample_variance_about(&d, mean_displacement.mean);
    // se(s²)² ≈ (m4 - s⁴ (n-3)/(n-1)) / n
    let variance_std_error = if d.len() > 3 {
        let m4 = d
            .iter()
            .map(|x| (x - mean_displacement.mean).powi(4))
            .sum::<f64>()
            / n;
        ((m4 - var * var * (n - 3.0) / (n - 1.0)) / n)
            .max(0.0)
            .sqrt()
    } else {
        0.0
    };
    let per_step = |x: f64| {
        if n_steps == 0 {
            0.0
        } else {
            x / n_steps as f64
        }
    };
    Ok(PathStats {
        n_paths: d.len(),
        n_steps,
        mean_displacement,
        displacement_variance: var,
        variance_std_error,
        mean_per_step: per_step(mean_displacement.mean),
        variance_per_step: per_step(var),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_seed;

    fn walk_ensemble(p_up: f64, sigma: f64, n: usize, runs: u64, master: u64) -> Vec<PricePath> {
        (0..runs)
            .map(|i| {
                gen_random_walk(&WalkParams::new(
                    1.0,
                    sigma,
                    p_up,
                    n,
                    derive_seed(master, i),
                ))
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn zero_step_walk() {
        let p = gen_random_walk(&WalkParams::new(1.0, 0.02, 0.5, 0, 1)).unwrap();
        assert_eq!(p.prices, vec![1.0]);
    }

    #[test]
    fn zero_volatility_walk_is_constant() {
        let p = gen_random_walk(&WalkParams::new(1.0, 0.0, 0.5, 100, 1)).unwrap();
        assert_eq!(p.prices.len(), 101);
        assert!(p.prices.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn walk_follows_lattice() {
        let p = gen_random_walk(&WalkParams::new(2.0, 0.01, 0.5, 500, 3)).unwrap();
        for w in p.prices.windows(2) {
            assert!(((w[1] - w[0]).abs() - 0.02).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_up_walk() {
        let p = gen_random_walk(&WalkParams::new(1.0, 0.02, 1.0, 10, 5)).unwrap();
        assert_eq!(p.terminal(), 1.0 + 0.02 * 10.0);
    }

    #[test]
    fn invalid_walk_parameters() {
        for bad in [
            WalkParams::new(0.0, 0.02, 0.5, 10, 0),
            WalkParams::new(1.0, -0.1, 0.5, 10, 0),
            WalkParams::new(1.0, 0.02, 1.5, 10, 0),
            WalkParams::new(1.0, f64::NAN, 0.5, 10, 0),
        ] {
            assert!(matches!(
                gen_random_walk(&bad),
                Err(Error::InvalidParameter { .. })
            ));
        }
    }

    #[test]
    fn gbm_constant_without_noise_or_drift() {
        let p = gen_gbm_path(&GbmParams::new(1.0, 0.0, 0.0, 50, 9)).unwrap();
        assert_eq!(p.prices.len(), 51);
        assert!(p.prices.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn gbm_rejects_non_positive_binary_factor() {
        let bad = GbmParams::new(1.0, 0.0, 1.0, 10, 0);
        assert!(gen_gbm_path(&bad).is_err());
        // The gaussian update is always positive.
        assert!(gen_gbm_path(&bad.with_increment(IncrementKind::Gaussian)).is_ok());
    }

    #[test]
    fn gbm_gaussian_paths_stay_positive() {
        let p = gen_gbm_path(
            &GbmParams::new(1.0, -0.05, 0.5, 2000, 4).with_increment(IncrementKind::Gaussian),
        )
        .unwrap();
        assert!(p.prices.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn paths_are_bitwise_reproducible() {
        let w = WalkParams::new(1.0, 0.02, 0.5, 1000, 77);
        assert_eq!(gen_random_walk(&w).unwrap(), gen_random_walk(&w).unwrap());
        for kind in [IncrementKind::Binary, IncrementKind::Gaussian] {
            let g = GbmParams::new(1.0, 1e-4, 1e-3, 1000, 77).with_increment(kind);
            let a = gen_gbm_path(&g).unwrap();
            let b = gen_gbm_path(&g).unwrap();
            assert!(a
                .prices
                .iter()
                .zip(&b.prices)
                .all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        assert_ne!(
            gen_random_walk(&w).unwrap().prices,
            gen_random_walk(&w.with_seed(78)).unwrap().prices
        );
    }

    #[test]
    fn stats_of_constant_ensemble() {
        let paths = walk_ensemble(0.5, 0.0, 20, 10, 1);
        let s = path_stats(&paths).unwrap();
        assert_eq!(s.displacement_variance, 0.0);
        assert_eq!(s.mean_displacement.mean, 0.0);
    }

    #[test]
    fn stats_reject_empty_and_mixed_ensembles() {
        assert!(matches!(path_stats(&[]), Err(Error::EmptyEnsemble(_))));
        let mut paths = walk_ensemble(0.5, 0.02, 10, 3, 1);
        paths.push(gen_random_walk(&WalkParams::new(1.0, 0.02, 0.5, 11, 0)).unwrap());
        assert!(path_stats(&paths).is_err());
    }

    #[test]
    fn symmetric_walk_has_zero_mean_displacement() {
        let s = path_stats(&walk_ensemble(0.5, 0.02, 1000, 4000, 11)).unwrap();
        assert!(s.mean_displacement.mean.abs() < 3.0 * s.mean_displacement.std_error);
    }

    #[test]
    fn asymmetric_walk_mean_displacement() {
        // E[p_n - p0] = p0 σ n (2 p_up - 1) = 0.01 · 1000 · 0.2 = 2
        let s = path_stats(&walk_ensemble(0.6, 0.01, 1000, 4000, 12)).unwrap();
        let m = s.mean_displacement;
        assert!((m.mean - 2.0).abs() < 3.0 * m.std_error, "{m:?}");
        assert!((s.mean_per_step - 0.002).abs() < 3.0 * m.std_error / 1000.0);
    }

    #[test]
    fn walk_variance_law_single_length() {
        // p0² σ² n = 0.0004 · 10⁴ = 4
        let s = path_stats(&walk_ensemble(0.5, 0.02, 10_000, 10_000, 13)).unwrap();
        assert!(
            (s.displacement_variance - 4.0).abs() < 3.0 * s.variance_std_error,
            "{s:?}"
        );
    }
}
