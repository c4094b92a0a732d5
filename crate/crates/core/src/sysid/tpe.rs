//! Univariate tree-structured Parzen estimator on the unit cube.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::rng::Rng;

use super::space::{ParamSpace, SimParams};
use super::TrialRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TpeConfig {
    /// Share of the budget sampled uniformly before modelling starts.
    pub startup_fraction: f64,
    /// Quantile splitting good from bad trials.
    pub gamma: f64,
    /// Draws from l(x) scored per suggestion.
    pub candidates: usize,
}

impl Default for TpeConfig {
    fn default() -> Self {
        Self {
            startup_fraction: 0.1,
            gamma: 0.25,
            candidates: 24,
        }
    }
}

impl TpeConfig {
    pub fn startup_trials(&self, budget: usize) -> usize {
        ((self.startup_fraction * budget as f64).ceil() as usize).max(1)
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

/// Mixture of Gaussians truncated to [0, 1], one component per observation
/// plus a broad prior.
struct Parzen {
    mu: Vec<f64>,
    sigma: Vec<f64>,
    log_mass: Vec<f64>,
}

impl Parzen {
    fn fit(points: &[f64]) -> Self {
        let mut mu: Vec<f64> = points.to_vec();
        mu.push(0.5);
        mu.sort_by(f64::total_cmp);
        let n = mu.len();
        let min_sigma = 1.0 / (100.0f64).min(1.0 + n as f64);
        let sigma: Vec<f64> = (0..n)
            .map(|i| {
                let left = if i == 0 { mu[0] } else { mu[i] - mu[i - 1] };
                let right = if i + 1 == n { 1.0 - mu[i] } else { mu[i + 1] - mu[i] };
                left.max(right).clamp(min_sigma, 1.0)
            })
            .collect();
        // The prior keeps its full width wherever it landed in the sort.
        let prior = mu.iter().position(|&m| m == 0.5).unwrap();
        let mut sigma = sigma;
        sigma[prior] = 1.0;
        let log_mass = mu
            .iter()
            .zip(&sigma)
            .map(|(&m, &s)| (normal_cdf((1.0 - m) / s) - normal_cdf(-m / s)).ln())
            .collect();
        Self { mu, sigma, log_mass }
    }

    fn sample(&self, rng: &mut Rng) -> f64 {
        let k = rng.random_range(0..self.mu.len());
        let (m, s) = (self.mu[k], self.sigma[k]);
        let mut x = m;
        for _ in 0..100 {
            let z: f64 = StandardNormal.sample(rng);
            x = m + s * z;
            if (0.0..=1.0).contains(&x) {
                return x;
            }
        }
        x.clamp(0.0, 1.0)
    }

    fn log_pdf(&self, x: f64) -> f64 {
        let terms: Vec<f64> = self
            .mu
            .iter()
            .zip(&self.sigma)
            .zip(&self.log_mass)
            .map(|((&m, &s), &lm)| {
                let z = (x - m) / s;
                -0.5 * z * z - s.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() - lm
            })
            .collect();
        let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = terms.iter().map(|t| (t - top).exp()).sum();
        top + (sum / self.mu.len() as f64).ln()
    }
}

/// Suggests the next point in `[0,1]^dim` from `(point, objective)` history.
/// Lower objectives are better; non-finite ones count as bad trials.
pub fn suggest_unit(
    history: &[(Vec<f64>, f64)],
    dim: usize,
    n_startup: usize,
    cfg: &TpeConfig,
    rng: &mut Rng,
) -> Vec<f64> {
    if history.len() < n_startup.max(2) {
        return (0..dim).map(|_| rng.random::<f64>()).collect();
    }
    let mut order: Vec<usize> = (0..history.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = history[a].1;
        let fb = history[b].1;
        let key = |f: f64| if f.is_finite() { f } else { f64::INFINITY };
        key(fa).total_cmp(&key(fb)).then(a.cmp(&b))
    });
    let n_good = ((cfg.gamma * history.len() as f64).ceil() as usize).clamp(1, history.len() - 1);
    let (good, bad) = order.split_at(n_good);

    let models: Vec<(Parzen, Parzen)> = (0..dim)
        .map(|d| {
            let l: Vec<f64> = good.iter().map(|&i| history[i].0[d]).collect();
            let g: Vec<f64> = bad.iter().map(|&i| history[i].0[d]).collect();
            (Parzen::fit(&l), Parzen::fit(&g))
        })
        .collect();

    let mut best = Vec::new();
    let mut best_score = f64::NEG_INFINITY;
    for _ in 0..cfg.candidates.max(1) {
        let x: Vec<f64> = models.iter().map(|(l, _)| l.sample(rng)).collect();
        let score: f64 = x
            .iter()
            .zip(&models)
            .map(|(&xi, (l, g))| l.log_pdf(xi) - g.log_pdf(xi))
            .sum();
        if best.is_empty() || score > best_score {
            best_score = score;
            best = x;
        }
    }
    best
}

/// TPE suggestion in physical units from a trial log.
pub fn tpe_suggest(
    history: &[TrialRecord],
    space: &ParamSpace,
    n_startup: usize,
    cfg: &TpeConfig,
    rng: &mut Rng,
) -> SimParams {
    let hist: Vec<(Vec<f64>, f64)> = history
        .iter()
        .map(|t| (space.normalize(&t.params), t.primary()))
        .collect();
    space.denormalize(&suggest_unit(&hist, space.dim(), n_startup, cfg, rng))
}
