//! (μ/μ_w, λ) CMA-ES on the unit cube.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

use crate::rng::Rng;

use super::SysidError;

#[derive(Debug, Clone)]
pub struct CmaEs {
    dim: usize,
    lambda: usize,
    weights: Vec<f64>,
    mueff: f64,
    cc: f64,
    cs: f64,
    c1: f64,
    cmu: f64,
    damps: f64,
    chi_n: f64,
    mean: DVector<f64>,
    sigma: f64,
    cov: DMatrix<f64>,
    pc: DVector<f64>,
    ps: DVector<f64>,
    basis: DMatrix<f64>,
    scale: DVector<f64>,
    generation: usize,
    /// Covariance resets caused by numerical degeneracy.
    pub resets: usize,
    pub last_diagnostic: Option<String>,
}

impl CmaEs {
    /// `lambda = None` picks the default population 4 + ⌊3 ln d⌋.
    pub fn new(mean: &[f64], sigma: f64, lambda: Option<usize>) -> Result<Self, SysidError> {
        let dim = mean.len();
        if dim == 0 || !(sigma > 0.0) {
            return Err(SysidError::InvalidConfig("CMA-ES needs dim ≥ 1 and sigma > 0".into()));
        }
        let lambda = lambda.unwrap_or(4 + (3.0 * (dim as f64).ln()).floor() as usize);
        if lambda < 2 {
            return Err(SysidError::InvalidConfig("CMA-ES population must be at least 2".into()));
        }
        let mu = lambda / 2;
        let raw: Vec<f64> = (0..mu)
            .map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - ((i + 1) as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mueff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let n = dim as f64;
        let cc = (4.0 + mueff / n) / (n + 4.0 + 2.0 * mueff / n);
        let cs = (mueff + 2.0) / (n + mueff + 5.0);
        let c1 = 2.0 / ((n + 1.3).powi(2) + mueff);
        let cmu = (1.0 - c1).min(2.0 * (mueff - 2.0 + 1.0 / mueff) / ((n + 2.0).powi(2) + mueff));
        let damps = 1.0 + 2.0 * (0.0f64).max(((mueff - 1.0) / (n + 1.0)).sqrt() - 1.0) + cs;
        let chi_n = n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
        Ok(Self {
            dim,
            lambda,
            weights,
            mueff,
            cc,
            cs,
            c1,
            cmu,
            damps,
            chi_n,
            mean: DVector::from_column_slice(mean),
            sigma,
            cov: DMatrix::identity(dim, dim),
            pc: DVector::zeros(dim),
            ps: DVector::zeros(dim),
            basis: DMatrix::identity(dim, dim),
            scale: DVector::from_element(dim, 1.0),
            generation: 0,
            resets: 0,
            last_diagnostic: None,
        })
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    /// Draws λ points inside `[0,1]^d`. Out-of-bounds draws are resampled
    /// up to 100 times, then clamped.
    pub fn ask(&self, rng: &mut Rng) -> Vec<Vec<f64>> {
        (0..self.lambda)
            .map(|_| {
                let mut x = DVector::zeros(self.dim);
                for _ in 0..100 {
                    let z = DVector::from_fn(self.dim, |_, _| StandardNormal.sample(rng));
                    let y = &self.basis * z.component_mul(&self.scale);
                    x = &self.mean + y * self.sigma;
                    if x.iter().all(|v| (0.0..=1.0).contains(v)) {
                        return x.as_slice().to_vec();
                    }
                }
                x.iter().map(|v| v.clamp(0.0, 1.0)).collect()
            })
            .collect()
    }

    /// Updates the distribution from one evaluated generation.
    pub fn tell(&mut self, xs: &[Vec<f64>], fs: &[f64]) -> Result<(), SysidError> {
        if xs.len() != self.lambda || fs.len() != self.lambda {
            return Err(SysidError::InvalidConfig(format!(
                "expected {} evaluated samples, got {}",
                self.lambda,
                xs.len()
            )));
        }
        let mut order: Vec<usize> = (0..self.lambda).collect();
        let key = |f: f64| if f.is_nan() { f64::INFINITY } else { f };
        order.sort_by(|&a, &b| key(fs[a]).total_cmp(&key(fs[b])).then(a.cmp(&b)));

        let old = self.mean.clone();
        let ys: Vec<DVector<f64>> = order[..self.weights.len()]
            .iter()
            .map(|&i| (DVector::from_column_slice(&xs[i]) - &old) / self.sigma)
            .collect();
        let mut step = DVector::zeros(self.dim);
        for (w, y) in self.weights.iter().zip(&ys) {
            step += y * *w;
        }
        self.mean = &old + &step * self.sigma;

        // C^{-1/2} · step
        let inv_sqrt = {
            let d_inv = self.scale.map(|s| 1.0 / s);
            &self.basis * DMatrix::from_diagonal(&d_inv) * self.basis.transpose()
        };
        let n = self.dim as f64;
        self.ps = &self.ps * (1.0 - self.cs) + (&inv_sqrt * &step) * (self.cs * (2.0 - self.cs) * self.mueff).sqrt();
        let gen = (self.generation + 1) as f64;
        let ps_norm = self.ps.norm();
        let hsig = ps_norm / (1.0 - (1.0 - self.cs).powf(2.0 * gen)).sqrt() / self.chi_n < 1.4 + 2.0 / (n + 1.0);
        let hs = if hsig { 1.0 } else { 0.0 };
        self.pc = &self.pc * (1.0 - self.cc) + &step * (hs * (self.cc * (2.0 - self.cc) * self.mueff).sqrt());

        let mut rank_mu = DMatrix::zeros(self.dim, self.dim);
        for (w, y) in self.weights.iter().zip(&ys) {
            rank_mu += y * y.transpose() * *w;
        }
        let delta = (1.0 - hs) * self.cc * (2.0 - self.cc);
        self.cov = &self.cov * (1.0 - self.c1 - self.cmu + self.c1 * delta)
            + &self.pc * self.pc.transpose() * self.c1
            + rank_mu * self.cmu;
        self.sigma *= ((self.cs / self.damps) * (ps_norm / self.chi_n - 1.0)).exp();
        self.sigma = self.sigma.min(1.0);
        self.generation += 1;
        self.decompose();
        Ok(())
    }

    fn decompose(&mut self) {
        let sym = (&self.cov + self.cov.transpose()) * 0.5;
        let eig = (sym.iter().all(|v| v.is_finite()) && self.sigma.is_finite() && self.sigma > 0.0)
            .then(|| SymmetricEigen::new(sym.clone()))
            .filter(|e| e.eigenvalues.iter().all(|&v| v.is_finite() && v > 1e-300));
        if let Some(eig) = eig {
            self.cov = sym;
            self.scale = eig.eigenvalues.map(f64::sqrt);
            self.basis = eig.eigenvectors;
        } else {
            self.resets += 1;
            self.last_diagnostic = Some(format!(
                "covariance degenerate at generation {}; reset to identity",
                self.generation
            ));
            self.cov = DMatrix::identity(self.dim, self.dim);
            self.basis = DMatrix::identity(self.dim, self.dim);
            self.scale = DVector::from_element(self.dim, 1.0);
            self.pc.fill(0.0);
            self.ps.fill(0.0);
            if !(self.sigma.is_finite() && self.sigma > 0.0) {
                self.sigma = 0.3;
            }
        }
    }
}

/// One generation of samples from the current CMA-ES state.
pub fn cmaes_suggest(state: &CmaEs, rng: &mut Rng) -> Vec<Vec<f64>> {
    state.ask(rng)
}
