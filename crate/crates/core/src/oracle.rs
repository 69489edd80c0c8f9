//! Constructive identification of the coefficients from exact conditional
//! means, on models where every object has a closed form.
//!
//! With `m0(x) = x'b + g(pi0(x))`, two continuous covariates `k`, `j` satisfy
//!
//! `d_k m0 d_j pi0 - d_j m0 d_k pi0 = d_j pi0 b_k - d_k pi0 b_j`
//!
//! at every point. Stacking two points gives a 2x2 system whose matrix
//! `Upsilon` is singular exactly when the ratio `d_k pi0 / d_j pi0` does not
//! move, as with any single-index `f(x'eta)` propensity.

use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::dgp::std_normal_cdf;
use crate::error::{Error, Result};

pub const DET_TOLERANCE: f64 = 1e-8;
pub const PIVOT_TOLERANCE: f64 = 1e-8;

/// Selection index `h(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Index {
    /// `c + x1 + x1^2 - x2 - x2^2 + x3 x4 - x5 x6`
    Benchmark { c: f64 },
    /// `c + x'eta`
    Linear { c: f64, eta: Vec<f64> },
}

/// Map from index to propensity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    Probit,
    Logit,
    Linear,
}

impl Index {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Index::Benchmark { c } => {
                c + x[0] + x[0] * x[0] - x[1] - x[1] * x[1] + x[2] * x[3] - x[4] * x[5]
            }
            Index::Linear { c, eta } => c + x.iter().zip(eta).map(|(a, b)| a * b).sum::<f64>(),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Index::Benchmark { .. } => {
                let mut g = vec![0.0; x.len()];
                g[0] = 1.0 + 2.0 * x[0];
                g[1] = -1.0 - 2.0 * x[1];
                g[2] = x[3];
                g[3] = x[2];
                g[4] = -x[5];
                g[5] = -x[4];
                g
            }
            Index::Linear { eta, .. } => eta.clone(),
        }
    }
}

impl Link {
    pub fn value(self, h: f64) -> f64 {
        match self {
            Link::Probit => std_normal_cdf(h),
            Link::Logit => 1.0 / (1.0 + (-h).exp()),
            Link::Linear => h,
        }
    }

    pub fn derivative(self, h: f64) -> f64 {
        match self {
            Link::Probit => Normal::standard().pdf(h),
            Link::Logit => {
                let p = Link::Logit.value(h);
                p * (1.0 - p)
            }
            Link::Linear => 1.0,
        }
    }
}

/// Selection model with `g(v) = -rho phi(Phi^-1(v)) / v`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticModel {
    pub index: Index,
    pub link: Link,
    pub beta: Vec<f64>,
    pub rho: f64,
}

impl AnalyticModel {
    /// Benchmark design with normal errors and unit coefficients.
    pub fn benchmark(c: f64, rho: f64) -> Self {
        AnalyticModel { index: Index::Benchmark { c }, link: Link::Probit, beta: vec![1.0; 10], rho }
    }

    pub fn pi(&self, x: &[f64]) -> f64 {
        self.link.value(self.index.value(x))
    }

    pub fn grad_pi(&self, x: &[f64]) -> Vec<f64> {
        let s = self.link.derivative(self.index.value(x));
        self.index.gradient(x).into_iter().map(|g| s * g).collect()
    }

    pub fn g(&self, v: f64) -> f64 {
        if v >= 1.0 || self.rho == 0.0 {
            return 0.0;
        }
        let z = Normal::standard().inverse_cdf(v);
        -self.rho * Normal::standard().pdf(z) / v
    }

    /// `g'(v) = rho (z / v + phi(z) / v^2)` with `z = Phi^-1(v)`.
    pub fn g_derivative(&self, v: f64) -> f64 {
        if self.rho == 0.0 {
            return 0.0;
        }
        let z = Normal::standard().inverse_cdf(v);
        self.rho * (z / v + Normal::standard().pdf(z) / (v * v))
    }

    /// `m(x) = x'b + g(pi(x))`.
    pub fn m(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.beta).map(|(a, b)| a * b).sum::<f64>() + self.g(self.pi(x))
    }

    pub fn grad_m(&self, x: &[f64]) -> Vec<f64> {
        let slope = self.g_derivative(self.pi(x));
        self.beta.iter().zip(self.grad_pi(x)).map(|(b, dp)| b + slope * dp).collect()
    }
}

/// Embed the continuous block with the discrete covariates at zero.
fn at_continuous(model: &AnalyticModel, xc: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; model.beta.len()];
    x[..xc.len()].copy_from_slice(xc);
    x
}

/// `Upsilon` for the pair `(k, j)` at the two points.
pub fn upsilon(model: &AnalyticModel, xc: &[f64], xc_tilde: &[f64], k: usize, j: usize) -> [[f64; 2]; 2] {
    let a = model.grad_pi(&at_continuous(model, xc));
    let b = model.grad_pi(&at_continuous(model, xc_tilde));
    [[a[j], -a[k]], [b[j], -b[k]]]
}

pub fn upsilon_det(model: &AnalyticModel, xc: &[f64], xc_tilde: &[f64], k: usize, j: usize) -> f64 {
    let u = upsilon(model, xc, xc_tilde, k, j);
    u[0][0] * u[1][1] - u[0][1] * u[1][0]
}

pub fn oracle_beta_pair(
    model: &AnalyticModel,
    xc: &[f64],
    xc_tilde: &[f64],
    k: usize,
    j: usize,
) -> Result<(f64, f64)> {
    let u = upsilon(model, xc, xc_tilde, k, j);
    let det = u[0][0] * u[1][1] - u[0][1] * u[1][0];
    if det.abs() < DET_TOLERANCE {
        return Err(Error::AssumptionViolation(format!(
            "det Upsilon = {det:.3e} for covariates ({k}, {j}); the propensity gradient ratio does not vary"
        )));
    }
    let lhs = |xp: &[f64]| {
        let x = at_continuous(model, xp);
        let dm = model.grad_m(&x);
        let dp = model.grad_pi(&x);
        dm[k] * dp[j] - dm[j] * dp[k]
    };
    let (r0, r1) = (lhs(xc), lhs(xc_tilde));
    let bk = (r0 * u[1][1] - u[0][1] * r1) / det;
    let bj = (u[0][0] * r1 - u[1][0] * r0) / det;
    Ok((bk, bj))
}

pub fn oracle_beta_remaining(model: &AnalyticModel, xc: &[f64], k_pivot: usize, beta_k: f64, l: usize) -> Result<f64> {
    let x = at_continuous(model, xc);
    let dp = model.grad_pi(&x);
    if dp[k_pivot].abs() < PIVOT_TOLERANCE {
        return Err(Error::invalid(format!("propensity slope in covariate {k_pivot} vanishes at the pivot point")));
    }
    let dm = model.grad_m(&x);
    Ok((dm[l] * dp[k_pivot] - dm[k_pivot] * dp[l] + dp[l] * beta_k) / dp[k_pivot])
}

/// Coefficient of discrete covariate `k` from one point where only that
/// discrete covariate is switched on.
pub fn oracle_beta_discrete(
    model: &AnalyticModel,
    xc: &[f64],
    beta_c: &[f64],
    k: usize,
    x_dk: f64,
) -> Result<f64> {
    if x_dk == 0.0 {
        return Err(Error::invalid("discrete covariate value must be nonzero"));
    }
    let mut x = at_continuous(model, xc);
    x[k] = x_dk;
    let p = model.pi(&x);
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::AssumptionViolation(format!("propensity {p} outside the support of the continuous block")));
    }
    let xb: f64 = xc.iter().zip(beta_c).map(|(a, b)| a * b).sum();
    Ok((model.m(&x) - xb - model.g(p)) / x_dk)
}

pub fn oracle_recover_g(model: &AnalyticModel, grid: &[f64]) -> Result<Vec<f64>> {
    grid.iter()
        .map(|&v| {
            if v > 0.0 && v <= 1.0 {
                Ok(model.g(v))
            } else {
                Err(Error::invalid(format!("grid value {v} outside (0, 1]")))
            }
        })
        .collect()
}

/// Full coefficient vector for a model whose first `n_cont` covariates are
/// continuous and the rest discrete.
pub fn oracle_beta(model: &AnalyticModel, xc: &[f64], xc_tilde: &[f64], n_cont: usize) -> Result<Vec<f64>> {
    if n_cont < 2 || xc.len() != n_cont || xc_tilde.len() != n_cont {
        return Err(Error::invalid("need at least two continuous covariates and matching points"));
    }
    let (b0, b1) = oracle_beta_pair(model, xc, xc_tilde, 0, 1)?;
    let mut beta = vec![b0, b1];
    for l in 2..n_cont {
        beta.push(oracle_beta_remaining(model, xc, 0, b0, l)?);
    }
    let beta_c = beta.clone();
    for k in n_cont..model.beta.len() {
        beta.push(oracle_beta_discrete(model, xc, &beta_c, k, 1.0)?);
    }
    Ok(beta)
}
