//! Sandwich covariance `M^{-1} S M^{-1} / n`.

use nalgebra::DMatrix;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{add_outer, inverse_guarded, symmetrize};
use crate::moments::{psi_contribution, robinson_contribution, NuisanceValues};

/// Which moment the covariance is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentKind {
    /// `psi`, Jacobian `mean d p e e'`.
    Orthogonal,
    /// Robinson moment, Jacobian `mean p^2 e e'`.
    Robinson,
}

/// Covariance from a Jacobian and per-observation moment contributions.
pub fn sandwich(m: &DMatrix<f64>, contributions: &[Vec<f64>]) -> Result<(DMatrix<f64>, f64)> {
    let n = contributions.len();
    if n == 0 {
        return Err(Error::invalid("no moment contributions"));
    }
    let k = m.nrows();
    let mut s = DMatrix::zeros(k, k);
    for c in contributions {
        add_outer(&mut s, 1.0, c, c);
    }
    s /= n as f64;
    let (m_inv, cond) = inverse_guarded(m, "variance Jacobian")?;
    let cov = &m_inv * s * m_inv.transpose() / n as f64;
    Ok((symmetrize(&cov), cond))
}

pub fn jacobian(ds: &Dataset, values: &[NuisanceValues], kind: MomentKind) -> DMatrix<f64> {
    let k = ds.dim_x();
    let mut m = DMatrix::zeros(k, k);
    for (obs, nv) in ds.observations().iter().zip(values) {
        let e = nv.residual_x(obs);
        let w = match kind {
            MomentKind::Orthogonal => obs.d_f64() * nv.p,
            MomentKind::Robinson => nv.p * nv.p,
        };
        add_outer(&mut m, w, &e, &e);
    }
    m / ds.len() as f64
}

/// Returns the symmetrized covariance and the condition number of the Jacobian.
pub fn estimate_variance(
    ds: &Dataset,
    values: &[NuisanceValues],
    beta: &[f64],
    kind: MomentKind,
) -> Result<(DMatrix<f64>, f64)> {
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::invalid("coefficient estimate is not finite"));
    }
    let m = jacobian(ds, values, kind);
    let contributions: Vec<Vec<f64>> = ds
        .observations()
        .iter()
        .zip(values)
        .map(|(obs, nv)| match kind {
            MomentKind::Orthogonal => psi_contribution(obs, nv, beta),
            MomentKind::Robinson => robinson_contribution(obs, nv, beta),
        })
        .collect();
    sandwich(&m, &contributions)
}
