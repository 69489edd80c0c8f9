//! Cross-fitted nuisances on the exact-nuisance fixture: fold-level initial
//! estimates and fit diagnostics.

use selcorr::analytic::AnalyticNormal;
use selcorr::data::partition_folds;
use selcorr::estimators::fit_nuisances;
use selcorr::learners::{Clip, ForestHyperparams};
use selcorr::Seed;

fn main() -> selcorr::Result<()> {
    let model = AnalyticNormal::default();
    let sample = model.sample(4000, Seed::new(8))?;
    let partition = partition_folds(4000, 5, &mut Seed::new(9).rng())?;
    let hp = ForestHyperparams::new(100, 5, 2);
    let ns = fit_nuisances(&sample.dataset, &partition, &hp, Clip::default(), Seed::new(10))?;
    for (l, b) in ns.beta_init.iter().enumerate() {
        println!("fold {l}: beta_l = ({:.3}, {:.3})", b[0], b[1]);
    }
    for (k, v) in &ns.diagnostics {
        println!("{k} = {v:.4}");
    }
    Ok(())
}
