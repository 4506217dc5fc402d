//! (μ/μ_w, λ)-CMA-ES with cumulative step-size adaptation and rank-one plus
//! rank-μ covariance updates, using the standard default learning rates.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Strategy constants derived from the dimension and population size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub dim: usize,
    pub lambda: usize,
    pub mu: usize,
    pub weights: Vec<f64>,
    pub mu_eff: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    pub c_c: f64,
    pub c_1: f64,
    pub c_mu: f64,
    pub chi_n: f64,
}

impl Strategy {
    pub fn new(dim: usize, lambda: usize) -> Self {
        let n = dim as f64;
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu)
            .map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - (i as f64).ln())
            .collect();
        let sum: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / sum).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (n + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
        let c_1 = 2.0 / ((n + 1.3).powi(2) + mu_eff);
        let c_mu = (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0).powi(2) + mu_eff));
        let chi_n = n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
        Self {
            dim,
            lambda,
            mu,
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            chi_n,
        }
    }
}

/// Complete, resumable search state.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CmaEs {
    pub strategy: Strategy,
    pub mean: DVector<f64>,
    pub sigma: f64,
    pub cov: DMatrix<f64>,
    pub p_sigma: DVector<f64>,
    pub p_c: DVector<f64>,
    /// Eigenvectors of `cov` (columns).
    pub basis: DMatrix<f64>,
    /// Square roots of the eigenvalues of `cov`.
    pub scales: DVector<f64>,
    pub generation: usize,
    pub evaluations: usize,
    rng: ChaCha8Rng,
    /// Steps y = B D z of the last `ask`, in candidate order.
    #[serde(default)]
    pending: Vec<DVector<f64>>,
}

impl CmaEs {
    pub fn new(mean: &[f64], sigma: f64, lambda: usize, seed: u64) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 {
            return Err(SimError::config("optimizer.mean", "dimension must be positive"));
        }
        if lambda < 2 {
            return Err(SimError::config("optimizer.lambda", "must be at least 2"));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(SimError::config("optimizer.sigma0", "must be finite and > 0"));
        }
        Ok(Self {
            strategy: Strategy::new(dim, lambda),
            mean: DVector::from_column_slice(mean),
            sigma,
            cov: DMatrix::identity(dim, dim),
            p_sigma: DVector::zeros(dim),
            p_c: DVector::zeros(dim),
            basis: DMatrix::identity(dim, dim),
            scales: DVector::from_element(dim, 1.0),
            generation: 0,
            evaluations: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            pending: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.strategy.dim
    }

    /// Draw λ candidates.
    pub fn ask(&mut self) -> Vec<DVector<f64>> {
        let n = self.dim();
        let bd = &self.basis * DMatrix::from_diagonal(&self.scales);
        self.pending = (0..self.strategy.lambda)
            .map(|_| {
                let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut self.rng));
                &bd * z
            })
            .collect();
        self.pending
            .iter()
            .map(|y| &self.mean + self.sigma * y)
            .collect()
    }

    /// Update the distribution from the fitness of the candidates returned by
    /// the preceding `ask` (lower is better).
    pub fn tell(&mut self, fitness: &[f64]) -> Result<()> {
        let s = self.strategy.clone();
        if fitness.len() != s.lambda || self.pending.len() != s.lambda {
            return Err(SimError::config(
                "optimizer",
                format!("tell expects {} fitness values after ask", s.lambda),
            ));
        }
        let n = s.dim as f64;
        let mut order: Vec<usize> = (0..s.lambda).collect();
        // NaN sorts last so it never drives the update.
        order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]));
        let ys = std::mem::take(&mut self.pending);
        let mut y_w = DVector::zeros(s.dim);
        for (k, &i) in order.iter().take(s.mu).enumerate() {
            y_w += s.weights[k] * &ys[i];
        }
        self.mean += self.sigma * &y_w;

        // C^{-1/2} y_w = B D^{-1} Bᵀ y_w.
        let inv_scales = self.scales.map(|d| 1.0 / d);
        let c_inv_sqrt_y = &self.basis * DMatrix::from_diagonal(&inv_scales) * self.basis.transpose() * &y_w;
        self.p_sigma = (1.0 - s.c_sigma) * &self.p_sigma
            + (s.c_sigma * (2.0 - s.c_sigma) * s.mu_eff).sqrt() * c_inv_sqrt_y;
        let g = (self.generation + 1) as f64;
        let ps_norm = self.p_sigma.norm();
        let h_sigma = ps_norm / (1.0 - (1.0 - s.c_sigma).powf(2.0 * g)).sqrt()
            < (1.4 + 2.0 / (n + 1.0)) * s.chi_n;
        let h = if h_sigma { 1.0 } else { 0.0 };
        self.p_c = (1.0 - s.c_c) * &self.p_c + h * (s.c_c * (2.0 - s.c_c) * s.mu_eff).sqrt() * &y_w;

        let mut rank_mu = DMatrix::zeros(s.dim, s.dim);
        for (k, &i) in order.iter().take(s.mu).enumerate() {
            rank_mu += s.weights[k] * &ys[i] * ys[i].transpose();
        }
        let delta_h = (1.0 - h) * s.c_c * (2.0 - s.c_c);
        self.cov = (1.0 - s.c_1 - s.c_mu) * &self.cov
            + s.c_1 * (&self.p_c * self.p_c.transpose() + delta_h * &self.cov)
            + s.c_mu * rank_mu;
        self.cov = 0.5 * (&self.cov + self.cov.transpose());

        self.sigma *= ((s.c_sigma / s.d_sigma) * (ps_norm / s.chi_n - 1.0)).exp();
        self.generation += 1;
        self.evaluations += s.lambda;
        self.decompose()
    }

    fn decompose(&mut self) -> Result<()> {
        let eig = SymmetricEigen::new(self.cov.clone());
        if eig.eigenvalues.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(SimError::config(
                "optimizer",
                format!("covariance lost positive definiteness at generation {}", self.generation),
            ));
        }
        self.basis = eig.eigenvectors;
        self.scales = eig.eigenvalues.map(f64::sqrt);
        Ok(())
    }

    /// Smallest eigenvalue of the covariance.
    pub fn min_eigenvalue(&self) -> f64 {
        self.scales.iter().map(|d| d * d).fold(f64::INFINITY, f64::min)
    }
}
