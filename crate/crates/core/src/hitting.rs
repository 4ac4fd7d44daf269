//! First-passage ("hitting") times of the additive random walk.
//!
//! A run stops at the first step `n` with `p_n >= p0 + upper` or
//! `p_n <= p0 - lower`; runs that reach neither boundary within
//! `max_steps` are censored and kept out of the mean.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::rng::derive_seed;
use crate::stats::linear_fit;
use crate::stochastic::{RandomWalk, WalkParams};

/// Default censoring cap.
pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;

/// Price offsets, relative to `p0`, at which a run stops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdSpec {
    pub upper: Option<f64>,
    pub lower: Option<f64>,
    pub max_steps: u64,
}

impl ThresholdSpec {
    pub fn symmetric(delta_p: f64) -> Self {
        Self {
            upper: Some(delta_p),
            lower: Some(delta_p),
            max_steps: DEFAULT_MAX_STEPS,
        }
    }

    pub fn upper_only(delta_p: f64) -> Self {
        Self {
            upper: Some(delta_p),
            lower: None,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }

    pub fn with_max_steps(mut self, max_steps: u64) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.upper.is_none() && self.lower.is_none() {
            return Err(invalid("thresholds", "at least one threshold is required"));
        }
        for (name, t) in [("upper", self.upper), ("lower", self.lower)] {
            if let Some(t) = t {
                ensure_finite(name, t)?;
                if t < 0.0 {
                    return Err(invalid(name, format!("offset must be >= 0, got {t}")));
                }
            }
        }
        if self.max_steps < 1 {
            return Err(invalid("max_steps", "must be >= 1"));
        }
        Ok(())
    }
}

/// Outcome of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HitOutcome {
    Hit(u64),
    Censored,
}

impl HitOutcome {
    pub fn steps(self) -> Option<u64> {
        match self {
            Self::Hit(n) => Some(n),
            Self::Censored => None,
        }
    }
}

/// First step at which the walk reaches either threshold.
///
/// A zero-volatility walk never moves, so with both thresholds strictly
/// away from `p0` it is reported censored without stepping.
pub fn first_hit(walk: &WalkParams, spec: &ThresholdSpec) -> Result<HitOutcome> {
    spec.validate()?;
    let mut path = RandomWalk::new(walk)?;
    let upper = spec.upper.map(|d| walk.p0 + d);
    let lower = spec.lower.map(|d| walk.p0 - d);
    let reached = |p: f64| upper.is_some_and(|u| p >= u) || lower.is_some_and(|l| p <= l);

    if reached(path.price()) {
        return Ok(HitOutcome::Hit(0));
    }
    if walk.sigma == 0.0 {
        return Ok(HitOutcome::Censored);
    }
    for n in 1..=spec.max_steps {
        if reached(path.advance()) {
            return Ok(HitOutcome::Hit(n));
        }
    }
    Ok(HitOutcome::Censored)
}

/// Ensemble hitting-time estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HittingEstimate {
    /// Mean over uncensored runs; NaN when every run was censored.
    pub mean_steps: f64,
    pub std_error: f64,
    pub n_runs: usize,
    pub censored_count: usize,
}

impl HittingEstimate {
    /// False when no run hit a threshold.
    pub fn is_usable(&self) -> bool {
        self.censored_count < self.n_runs
    }

    pub fn censored_fraction(&self) -> f64 {
        self.censored_count as f64 / self.n_runs as f64
    }

    fn from_outcomes(outcomes: &[HitOutcome]) -> Self {
        let hits: Vec<f64> = outcomes
            .iter()
            .filter_map(|o| o.steps())
            .map(|n| n as f64)
            .collect();
        let censored_count = outcomes.len() - hits.len();
        let (mean_steps, std_error) = if hits.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            let n = hits.len() as f64;
            let mean = hits.iter().sum::<f64>() / n;
            let se = if hits.len() > 1 {
                (hits.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
            } else {
                0.0
            };
            (mean, se)
        };
        Self {
            mean_steps,
            std_error,
            n_runs: outcomes.len(),
            censored_count,
        }
    }
}

/// Runs `n_runs` independent walks; run `i` uses seed `derive_seed(walk.seed, i)`.
///
/// Runs execute in parallel; the result does not depend on scheduling.
pub fn estimate_hitting_time(
    walk: &WalkParams,
    spec: &ThresholdSpec,
    n_runs: usize,
) -> Result<HittingEstimate> {
    if n_runs < 1 {
        return Err(invalid("n_runs", "must be >= 1"));
    }
    walk.validate()?;
    spec.validate()?;
    let outcomes = (0..n_runs as u64)
        .into_par_iter()
        .map(|i| first_hit(&walk.with_seed(derive_seed(walk.seed, i)), spec))
        .collect::<Result<Vec<_>>>()?;
    Ok(HittingEstimate::from_outcomes(&outcomes))
}

/// Which thresholds a sweep moves along its grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    /// Both thresholds equal the grid value.
    Symmetric,
    /// Upper threshold follows the grid; the template's lower one stays.
    Upper,
    /// Lower threshold follows the grid; the template's upper one stays.
    Lower,
}

impl std::str::FromStr for SweepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" => Ok(Self::Symmetric),
            "upper" => Ok(Self::Upper),
            "lower" => Ok(Self::Lower),
            other => Err(invalid(
                "mode",
                format!("expected symmetric, upper or lower, got `{other}`"),
            )),
        }
    }
}

impl std::fmt::Display for SweepMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Symmetric => "symmetric",
            Self::Upper => "upper",
            Self::Lower => "lower",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub delta_p: f64,
    pub estimate: HittingEstimate,
}

/// One estimate per grid value; grid point `j` uses master seed
/// `derive_seed(walk.seed, j)`.
pub fn sweep_thresholds(
    walk: &WalkParams,
    template: &ThresholdSpec,
    mode: SweepMode,
    grid: &[f64],
    n_runs: usize,
) -> Result<Vec<SweepPoint>> {
    if grid.len() < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            got: grid.len(),
        });
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid(
            "grid",
            "threshold grid must be strictly increasing",
        ));
    }
    grid.iter()
        .enumerate()
        .map(|(j, &delta_p)| {
            let spec = match mode {
                SweepMode::Symmetric => ThresholdSpec {
                    upper: Some(delta_p),
                    lower: Some(delta_p),
                    ..*template
                },
                SweepMode::Upper => ThresholdSpec {
                    upper: Some(delta_p),
                    ..*template
                },
                SweepMode::Lower => ThresholdSpec {
                    lower: Some(delta_p),
                    ..*template
                },
            };
            let point_walk = walk.with_seed(derive_seed(walk.seed, j as u64));
            let estimate = estimate_hitting_time(&point_walk, &spec, n_runs)?;
            Ok(SweepPoint { delta_p, estimate })
        })
        .collect()
}

/// `y = amplitude · x^exponent`, fitted in log–log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub amplitude: f64,
    pub r_squared: f64,
}

pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            got: points.len(),
        });
    }
    if let Some(&(x, y)) = points
        .iter()
        .find(|(x, y)| !(*x > 0.0 && *y > 0.0) || !x.is_finite() || !y.is_finite())
    {
        return Err(invalid(
            "points",
            format!("power-law fit needs positive finite values, got ({x}, {y})"),
        ));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let line = linear_fit(&logs)?;
    Ok(PowerLawFit {
        exponent: line.slope,
        amplitude: line.intercept.exp(),
        r_squared: line.r_squared,
    })
}

/// Fits the usable points of a sweep table.
pub fn fit_sweep(points: &[SweepPoint]) -> Result<PowerLawFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.estimate.is_usable())
        .map(|p| (p.delta_p, p.estimate.mean_steps))
        .collect();
    fit_power_law(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn walk(p_up: f64, seed: u64) -> WalkParams {
        WalkParams::new(1.0, 0.02, p_up, 0, seed)
    }

    #[test]
    fn threshold_at_start_hits_immediately() {
        let spec = ThresholdSpec::upper_only(0.0);
        assert_eq!(first_hit(&walk(0.5, 1), &spec).unwrap(), HitOutcome::Hit(0));
    }

    #[test]
    fn deterministic_walk_hits_after_k_steps() {
        for k in 1..=40u64 {
            let spec = ThresholdSpec::upper_only(1.0 * 0.02 * k as f64);
            assert_eq!(
                first_hit(&walk(1.0, k), &spec).unwrap(),
                HitOutcome::Hit(k),
                "k={k}"
            );
        }
    }

    #[test]
    fn deterministic_estimate_has_zero_error() {
        let spec = ThresholdSpec::symmetric(0.02 * 7.0);
        let est = estimate_hitting_time(&walk(1.0, 3), &spec, 50).unwrap();
        assert_eq!(est.mean_steps, 7.0);
        assert_eq!(est.std_error, 0.0);
        assert_eq!(est.censored_count, 0);
    }

    #[test]
    fn frozen_walk_is_censored() {
        let w = WalkParams::new(1.0, 0.0, 0.5, 0, 1);
        assert_eq!(
            first_hit(&w, &ThresholdSpec::symmetric(0.1)).unwrap(),
            HitOutcome::Censored
        );
        let est = estimate_hitting_time(&w, &ThresholdSpec::symmetric(0.1), 10).unwrap();
        assert!(!est.is_usable());
        assert!(est.mean_steps.is_nan());
        assert_eq!(est.censored_fraction(), 1.0);
    }

    #[test]
    fn downward_walk_never_reaches_upper_threshold() {
        let spec = ThresholdSpec::upper_only(0.1).with_max_steps(1000);
        assert_eq!(
            first_hit(&walk(0.0, 1), &spec).unwrap(),
            HitOutcome::Censored
        );
    }

    #[test]
    fn invalid_specs() {
        let none = ThresholdSpec {
            upper: None,
            lower: None,
            max_steps: 10,
        };
        assert!(first_hit(&walk(0.5, 1), &none).is_err());
        assert!(first_hit(
            &walk(0.5, 1),
            &ThresholdSpec::symmetric(0.1).with_max_steps(0)
        )
        .is_err());
        assert!(first_hit(&walk(0.5, 1), &ThresholdSpec::symmetric(-0.1)).is_err());
        assert!(estimate_hitting_time(&walk(0.5, 1), &ThresholdSpec::symmetric(0.1), 0).is_err());
    }

    #[test]
    fn censored_runs_stay_out_of_the_mean() {
        // Short cap: some symmetric-walk runs to a far upper threshold are censored.
        let spec = ThresholdSpec::upper_only(0.2).with_max_steps(200);
        let w = walk(0.5, 21);
        let est = estimate_hitting_time(&w, &spec, 2000).unwrap();
        assert!(est.censored_count > 0 && est.is_usable());
        assert!(est.mean_steps <= 200.0);
        let outcomes: Vec<_> = (0..2000)
            .map(|i| first_hit(&w.with_seed(derive_seed(w.seed, i)), &spec).unwrap())
            .collect();
        let hits: Vec<f64> = outcomes
            .iter()
            .filter_map(|o| o.steps())
            .map(|s| s as f64)
            .collect();
        assert_eq!(hits.len(), 2000 - est.censored_count);
        assert_eq!(est.mean_steps, hits.iter().sum::<f64>() / hits.len() as f64);
    }

    #[test]
    fn estimates_do_not_depend_on_thread_count() {
        let spec = ThresholdSpec::symmetric(0.15);
        let w = walk(0.5, 5);
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| estimate_hitting_time(&w, &spec, 3000).unwrap());
        let parallel = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| estimate_hitting_time(&w, &spec, 3000).unwrap());
        assert_eq!(serial.mean_steps.to_bits(), parallel.mean_steps.to_bits());
        assert_eq!(serial.std_error.to_bits(), parallel.std_error.to_bits());
    }

    #[test]
    fn sweep_validates_grid() {
        let t = ThresholdSpec::symmetric(0.1);
        assert!(sweep_thresholds(
            &walk(0.5, 1),
            &t,
            SweepMode::Symmetric,
            &[0.1, 0.2, 0.3],
            10
        )
        .is_err());
        assert!(sweep_thresholds(
            &walk(0.5, 1),
            &t,
            SweepMode::Symmetric,
            &[0.1, 0.2, 0.2, 0.3],
            10
        )
        .is_err());
    }

    #[test]
    fn sweep_moves_the_requested_threshold() {
        // Deterministic up-walk: only the upper threshold matters.
        let t = ThresholdSpec {
            upper: Some(10.0),
            lower: Some(0.1),
            max_steps: 1000,
        };
        let grid = [0.1, 0.2, 0.3, 0.4];
        let pts = sweep_thresholds(&walk(1.0, 1), &t, SweepMode::Upper, &grid, 5).unwrap();
        let steps: Vec<f64> = pts.iter().map(|p| p.estimate.mean_steps).collect();
        assert_eq!(steps, vec![5.0, 10.0, 15.0, 20.0]);
        let pts = sweep_thresholds(&walk(1.0, 1), &t, SweepMode::Lower, &grid, 5).unwrap();
        assert!(pts.iter().all(|p| p.estimate.mean_steps == 500.0));
    }

    #[test]
    fn exact_power_laws() {
        let quad: Vec<_> = (1..=6)
            .map(|i| (i as f64 * 0.1, 3.0 * (i as f64 * 0.1).powi(2)))
            .collect();
        let fit = fit_power_law(&quad).unwrap();
        assert_relative_eq!(fit.exponent, 2.0, max_relative = 1e-12);
        assert_relative_eq!(fit.amplitude, 3.0, max_relative = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, max_relative = 1e-12);

        let lin: Vec<_> = (1..=5).map(|i| (i as f64, 7.0 * i as f64)).collect();
        let fit = fit_power_law(&lin).unwrap();
        assert_relative_eq!(fit.exponent, 1.0, max_relative = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn power_law_rejects_bad_points() {
        assert!(fit_power_law(&[(1.0, 1.0), (2.0, 4.0), (3.0, 9.0)]).is_err());
        assert!(fit_power_law(&[(1.0, 1.0), (2.0, 0.0), (3.0, 9.0), (4.0, 16.0)]).is_err());
        assert!(fit_power_law(&[(-1.0, 1.0), (2.0, 4.0), (3.0, 9.0), (4.0, 16.0)]).is_err());
    }
}
