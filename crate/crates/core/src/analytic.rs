//! Exact-nuisance fixture with closed-form conditional means.
//!
//! `X1 = s + U` with `U` drawn from `N(m, 1)` truncated to `[-T, T]`,
//! `X2 ~ N(0, 1)` is independent, the selection index is `c + (x1 - s)^2`
//! and the errors are bivariate normal. The truncation keeps the propensity
//! away from 1; the shift makes functions of `x1` such as `sin(x1)^2` vary
//! within a level set of the propensity. Given `pi(X) = p` the draw `U` sits
//! at `+r` or `-r` with `r = sqrt(Phi^-1(p) - c)`, so
//!
//! * `mu_x1(p) = s + r tanh(m r)`, `mu_x2(p) = 0`
//! * `mu_y(p)  = p mu_x(p)'b - rho phi(Phi^-1(p))`
//!
//! Below the support (`Phi^-1(p) < c`) the map is continued analytically as
//! `-a tan(m a)` with `a = sqrt(c - Phi^-1(p))`, which keeps perturbed
//! propensities well defined.

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::data::{Dataset, Observation};
use crate::dgp::{draw_errors, std_normal_cdf, ErrorLaw};
use crate::error::{Error, Result};
use crate::moments::NuisanceValues;
use crate::seed::Seed;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticNormal {
    pub c: f64,
    pub rho: f64,
    pub beta: Vec<f64>,
    /// `m`
    pub mean_u: f64,
    /// `T`
    pub bound_u: f64,
    /// `s`
    pub shift: f64,
}

impl Default for AnalyticNormal {
    fn default() -> Self {
        AnalyticNormal { c: -0.5, rho: 0.5, beta: vec![1.0, 1.0], mean_u: 0.5, bound_u: 1.2, shift: std::f64::consts::FRAC_PI_4 }
    }
}

/// A sample together with its true propensities.
#[derive(Debug, Clone)]
pub struct AnalyticSample {
    pub dataset: Dataset,
    pub pi: Vec<f64>,
}

fn std_normal() -> Normal {
    Normal::standard()
}

impl AnalyticNormal {
    pub fn index(&self, x: &[f64]) -> f64 {
        self.c + (x[0] - self.shift).powi(2)
    }

    pub fn propensity(&self, x: &[f64]) -> f64 {
        std_normal_cdf(self.index(x))
    }

    /// `E[Y | X = x]`.
    pub fn conditional_y(&self, x: &[f64]) -> f64 {
        let h = self.index(x);
        let xb: f64 = x.iter().zip(&self.beta).map(|(a, b)| a * b).sum();
        std_normal_cdf(h) * xb - self.rho * std_normal().pdf(h)
    }

    /// `(mu_x1, d mu_x1 / dp)` at any `p` in `(0, 1)`.
    pub fn mu_x1(&self, p: f64) -> (f64, f64) {
        let z = std_normal().inverse_cdf(p);
        let s = z - self.c;
        let m = self.mean_u;
        let (value, ds) = if s.abs() < 1e-12 {
            (m * s, m)
        } else if s > 0.0 {
            let r = s.sqrt();
            let t = (m * r).tanh();
            (r * t, 0.5 * (t / r + m * (1.0 - t * t)))
        } else {
            let a = (-s).sqrt();
            let t = (m * a).tan();
            (-a * t, 0.5 * (t / a + m * (1.0 + t * t)))
        };
        (self.shift + value, ds / std_normal().pdf(z))
    }

    /// Exact nuisances at propensity `p`, with the true coefficients as
    /// `beta_init`.
    pub fn values_at(&self, p: f64) -> Result<NuisanceValues> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::invalid(format!("propensity {p} outside (0, 1)")));
        }
        let z = std_normal().inverse_cdf(p);
        let (m1, dm1) = self.mu_x1(p);
        let mu_x = vec![m1, 0.0];
        let dmu_x = vec![dm1, 0.0];
        let xb = m1 * self.beta[0];
        let dxb = dm1 * self.beta[0];
        let mu_y = p * xb - self.rho * std_normal().pdf(z);
        let dmu_y = xb + p * dxb + self.rho * z;
        Ok(NuisanceValues { p, mu_x, mu_y, dmu_x, dmu_y, beta_init: self.beta.clone() })
    }

    pub fn sample(&self, n: usize, seed: Seed) -> Result<AnalyticSample> {
        let mut rng = seed.rng();
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let a = loop {
                    let u = self.mean_u + rng.sample::<f64, _>(StandardNormal);
                    if u.abs() <= self.bound_u {
                        break self.shift + u;
                    }
                };
                let b: f64 = rng.sample(StandardNormal);
                vec![a, b]
            })
            .collect();
        let (eps, u) = draw_errors(ErrorLaw::Normal, self.rho, n, &mut rng);
        let mut obs = Vec::with_capacity(n);
        let mut pi = Vec::with_capacity(n);
        for ((x, e), u) in x.into_iter().zip(eps).zip(u) {
            let d = self.index(&x) >= e;
            let y = if d { x.iter().zip(&self.beta).map(|(a, b)| a * b).sum::<f64>() + u } else { 0.0 };
            pi.push(self.propensity(&x));
            obs.push(Observation { y, d, x });
        }
        let dataset = Dataset::new(obs, Dataset::default_names(2))?;
        Ok(AnalyticSample { dataset, pi })
    }

    /// Exact nuisances at every row, optionally shifting the propensity by
    /// `t * delta(x)`.
    pub fn exact_values<F>(&self, sample: &AnalyticSample, t: f64, delta: F) -> Result<Vec<NuisanceValues>>
    where
        F: Fn(&[f64]) -> f64,
    {
        sample
            .dataset
            .observations()
            .iter()
            .zip(&sample.pi)
            .map(|(obs, &p)| self.values_at(p + t * delta(&obs.x)))
            .collect()
    }

    /// Sample average over `X` of `E[f(W) | X]` for a moment `f` that is
    /// affine in `(y, d)`, with the propensity shifted by `t * delta(x)`.
    /// Outcome and selection noise drop out, leaving only the nuisance error.
    pub fn conditional_moment_mean<D, F>(&self, sample: &AnalyticSample, t: f64, delta: D, f: F) -> Result<Vec<f64>>
    where
        D: Fn(&[f64]) -> f64,
        F: Fn(&Observation, &NuisanceValues) -> Vec<f64>,
    {
        let values = self.exact_values(sample, t, delta)?;
        let k = sample.dataset.dim_x();
        let mut acc = vec![0.0; k];
        for ((obs, nv), &p) in sample.dataset.observations().iter().zip(&values).zip(&sample.pi) {
            let y = self.conditional_y(&obs.x);
            let on = f(&Observation { y, d: true, x: obs.x.clone() }, nv);
            let off = f(&Observation { y, d: false, x: obs.x.clone() }, nv);
            for j in 0..k {
                acc[j] += p * on[j] + (1.0 - p) * off[j];
            }
        }
        let n = sample.dataset.len() as f64;
        Ok(acc.into_iter().map(|a| a / n).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conditional_mean_matches_two_point_law() {
        let model = AnalyticNormal::default();
        for &u in &[0.3, 1.1, -0.7, 1.15] {
            let p = model.propensity(&[model.shift + u, 0.0]);
            let r = u.abs();
            let m = model.mean_u;
            let up = std_normal().pdf(r - m);
            let down = std_normal().pdf(-r - m);
            let expect = model.shift + (r * up - r * down) / (up + down);
            assert!((model.mu_x1(p).0 - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn propensity_stays_inside_the_unit_interval() {
        let model = AnalyticNormal::default();
        let sample = model.sample(100_000, Seed::new(1)).unwrap();
        let hi = sample.pi.iter().cloned().fold(0.0, f64::max);
        assert!(hi < 0.83 && sample.dataset.observations().iter().all(|o| (o.x[0] - model.shift).abs() <= 1.2));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let model = AnalyticNormal::default();
        let h = 1e-6;
        for &p in &[0.2, 0.3085, 0.31, 0.5, 0.8, 0.95] {
            let fd = (model.mu_x1(p + h).0 - model.mu_x1(p - h).0) / (2.0 * h);
            assert!((model.mu_x1(p).1 - fd).abs() < 1e-5, "p={p}");
            let a = model.values_at(p + h).unwrap();
            let b = model.values_at(p - h).unwrap();
            let fd_y = (a.mu_y - b.mu_y) / (2.0 * h);
            assert!((model.values_at(p).unwrap().dmu_y - fd_y).abs() < 1e-5, "p={p}");
        }
    }

    #[test]
    fn regression_mean_matches_conditional_average() {
        let model = AnalyticNormal::default();
        let sample = model.sample(200_000, Seed::new(3)).unwrap();
        let target = 0.6;
        let (mut sum, mut count) = (0.0, 0.0);
        for (obs, &p) in sample.dataset.observations().iter().zip(&sample.pi) {
            if (p - target).abs() < 0.005 {
                sum += obs.y;
                count += 1.0;
            }
        }
        let mu_y = model.values_at(target).unwrap().mu_y;
        assert!(count > 500.0);
        assert!((sum / count - mu_y).abs() < 0.1, "{} vs {mu_y}", sum / count);
    }
}
