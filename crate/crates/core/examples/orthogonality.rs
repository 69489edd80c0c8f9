//! Sensitivity of the orthogonal and Robinson moments to a perturbed
//! propensity, with the other nuisances held at their true functions.

use selcorr::analytic::AnalyticNormal;
use selcorr::moments::{psi_contribution, robinson_contribution};
use selcorr::Seed;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn main() -> selcorr::Result<()> {
    let model = AnalyticNormal::default();
    let sample = model.sample(100_000, Seed::new(4))?;
    let delta = |x: &[f64]| 0.05 * x[0].sin();
    let beta = model.beta.clone();
    println!("{:>6} {:>12} {:>12}", "t", "orthogonal", "robinson");
    for t in [0.1, 0.05, 0.025] {
        let orth = model.conditional_moment_mean(&sample, t, delta, |o, v| psi_contribution(o, v, &beta))?;
        let rob = model.conditional_moment_mean(&sample, t, delta, |o, v| robinson_contribution(o, v, &beta))?;
        println!("{t:>6.2} {:>12.3e} {:>12.3e}", norm(&orth), norm(&rob));
    }
    Ok(())
}
