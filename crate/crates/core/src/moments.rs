//! Per-observation moment algebra.
//!
//! With `e = x - mu_x(p)` the residual covariate:
//!
//! * Robinson moment: `r0 = p e (y - mu_y(p) - p e'b)`
//! * correction:      `alpha = -p e (mu_y'(p) - p mu_x'(p)' b_init)`
//! * orthogonal:      `psi = p e (y - mu_y(p) - d e'b) + alpha (d - p)`
//!
//! `psi` places `d` rather than `p` on the coefficient term, which absorbs
//! the direct effect of the propensity on the moment.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Observation};
use crate::error::{Error, Result};
use crate::linalg::add_outer;

/// Nuisance estimates evaluated at one observation.
#[derive(Debug, Clone, PartialEq)]
pub struct NuisanceValues {
    pub p: f64,
    pub mu_x: Vec<f64>,
    pub mu_y: f64,
    pub dmu_x: Vec<f64>,
    pub dmu_y: f64,
    pub beta_init: Vec<f64>,
}

impl NuisanceValues {
    #[inline]
    pub fn residual_x(&self, obs: &Observation) -> Vec<f64> {
        obs.x.iter().zip(&self.mu_x).map(|(x, m)| x - m).collect()
    }

    /// `mu_y'(p) - p mu_x'(p)' b_init`
    #[inline]
    pub fn correction_slope(&self) -> f64 {
        self.dmu_y - self.p * dot(&self.dmu_x, &self.beta_init)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Contribution to the Robinson partialling-out moment.
pub fn robinson_contribution(obs: &Observation, nv: &NuisanceValues, beta: &[f64]) -> Vec<f64> {
    let e = nv.residual_x(obs);
    let resid = obs.y - nv.mu_y - nv.p * dot(&e, beta);
    e.iter().map(|ek| nv.p * ek * resid).collect()
}

/// First-step influence correction `alpha(x)`, evaluated at the initial
/// coefficient estimate carried in `nv`.
pub fn alpha_correction(obs: &Observation, nv: &NuisanceValues) -> Vec<f64> {
    let slope = nv.correction_slope();
    obs.x
        .iter()
        .zip(&nv.mu_x)
        .map(|(x, m)| -nv.p * (x - m) * slope)
        .collect()
}

/// Orthogonal moment contribution.
pub fn psi_contribution(obs: &Observation, nv: &NuisanceValues, beta: &[f64]) -> Vec<f64> {
    let e = nv.residual_x(obs);
    let d = obs.d_f64();
    let resid = obs.y - nv.mu_y - d * dot(&e, beta);
    let weight = d - nv.p;
    let slope = nv.correction_slope();
    e.iter()
        .map(|ek| nv.p * ek * resid - nv.p * ek * slope * weight)
        .collect()
}

/// The four linear estimating equations built from the orthogonal moment.
///
/// * `F1`: solve the full orthogonal moment in `b`.
/// * `F2`: direct-effect term at the initial estimate, indirect term in `b`.
/// * `F3`: direct-effect term in `b`, indirect term at the initial estimate.
/// * `F4`: both correction terms at the initial estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formulation {
    F1,
    F2,
    F3,
    F4,
}

impl Formulation {
    pub const ALL: [Formulation; 4] = [Formulation::F1, Formulation::F2, Formulation::F3, Formulation::F4];
}

/// Builds `(J, b)` with `J beta = b`, both averaged over observations.
pub fn assemble_normal_equations(
    dataset: &Dataset,
    values: &[NuisanceValues],
    formulation: Formulation,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = dataset.len();
    if values.len() != n {
        return Err(Error::invalid("one set of nuisance values per observation required"));
    }
    let k = dataset.dim_x();
    let mut j = DMatrix::zeros(k, k);
    let mut b = DVector::zeros(k);
    let mut row = vec![0.0; k];
    for (obs, nv) in dataset.observations().iter().zip(values) {
        let e = nv.residual_x(obs);
        let p = nv.p;
        let d = obs.d_f64();
        let w = d - p;
        let base = obs.y - nv.mu_y;
        let rhs = match formulation {
            Formulation::F1 => {
                for (r, (ek, dk)) in row.iter_mut().zip(e.iter().zip(&nv.dmu_x)) {
                    *r = d * ek - p * w * dk;
                }
                add_outer(&mut j, p, &e, &row);
                base - w * nv.dmu_y
            }
            Formulation::F2 => {
                for (r, (ek, dk)) in row.iter_mut().zip(e.iter().zip(&nv.dmu_x)) {
                    *r = ek - w * dk;
                }
                add_outer(&mut j, p * p, &e, &row);
                base - w * (nv.dmu_y + dot(&e, &nv.beta_init))
            }
            Formulation::F3 => {
                add_outer(&mut j, p * d, &e, &e);
                base - w * nv.correction_slope()
            }
            Formulation::F4 => {
                add_outer(&mut j, p * p, &e, &e);
                for (r, (ek, dk)) in row.iter_mut().zip(e.iter().zip(&nv.dmu_x)) {
                    *r = ek - p * dk;
                }
                base - w * (nv.dmu_y + dot(&row, &nv.beta_init))
            }
        };
        for (bk, ek) in b.iter_mut().zip(&e) {
            *bk += p * ek * rhs;
        }
    }
    let inv_n = 1.0 / n as f64;
    Ok((j * inv_n, b * inv_n))
}

/// Normal equations of the plain partialling-out estimator, weights `p^2`.
pub fn assemble_robinson_equations(
    dataset: &Dataset,
    values: &[NuisanceValues],
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = dataset.len();
    if values.len() != n {
        return Err(Error::invalid("one set of nuisance values per observation required"));
    }
    let k = dataset.dim_x();
    let mut j = DMatrix::zeros(k, k);
    let mut b = DVector::zeros(k);
    for (obs, nv) in dataset.observations().iter().zip(values) {
        let e = nv.residual_x(obs);
        add_outer(&mut j, nv.p * nv.p, &e, &e);
        let rhs = obs.y - nv.mu_y;
        for (bk, ek) in b.iter_mut().zip(&e) {
            *bk += nv.p * ek * rhs;
        }
    }
    let inv_n = 1.0 / n as f64;
    Ok((j * inv_n, b * inv_n))
}

/// Averages a per-observation moment over the dataset.
pub fn mean_moment<F>(dataset: &Dataset, values: &[NuisanceValues], f: F) -> Vec<f64>
where
    F: Fn(&Observation, &NuisanceValues) -> Vec<f64>,
{
    let k = dataset.dim_x();
    let mut acc = vec![0.0; k];
    for (obs, nv) in dataset.observations().iter().zip(values) {
        for (a, v) in acc.iter_mut().zip(f(obs, nv)) {
            *a += v;
        }
    }
    let n = dataset.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}
