//! The four linear forms of the orthogonal moment on exact nuisances.

use selcorr::analytic::AnalyticNormal;
use selcorr::linalg::solve_guarded;
use selcorr::moments::{assemble_normal_equations, Formulation};
use selcorr::Seed;

fn main() -> selcorr::Result<()> {
    let model = AnalyticNormal::default();
    let sample = model.sample(100_000, Seed::new(12))?;
    let values = model.exact_values(&sample, 0.0, |_| 0.0)?;
    for f in Formulation::ALL {
        let (j, b) = assemble_normal_equations(&sample.dataset, &values, f)?;
        let (beta, cond) = solve_guarded(&j, &b, "formulation")?;
        println!("{f:?}: beta = ({:.4}, {:.4}), condition {cond:.1}", beta[0], beta[1]);
    }
    Ok(())
}
