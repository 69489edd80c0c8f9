//! Cross-validated tuning of the propensity forest on a benchmark sample,
//! and the in-sample versus held-out fit of the chosen forest.

use selcorr::dgp::{generate_sample, Preset};
use selcorr::learners::{cv_mse, default_grid, fit_forest_on_rows, tune_forest_cv, Clip, Features};
use selcorr::montecarlo::ensure_calibrated;
use selcorr::Seed;

fn main() -> selcorr::Result<()> {
    let design = ensure_calibrated(&Preset::Benchmark.design(1000))?;
    let ds = generate_sample(&design, Seed::new(5))?;
    let x = Features::from_dataset(&ds);
    let d: Vec<f64> = ds.observations().iter().map(|o| o.d_f64()).collect();
    let rows: Vec<usize> = (0..ds.len()).collect();
    let clip = Clip::default();
    let grid = default_grid(ds.dim_x());
    for hp in &grid {
        let mse = cv_mse(&x, &d, &rows, hp, 5, clip, Seed::new(6))?;
        println!("min_leaf {:>2}  max_features {:>2}  cv mse {:.4}", hp.min_leaf, hp.max_features, mse);
    }
    let best = tune_forest_cv(&x, &d, &rows, &grid, 5, clip, Seed::new(6))?;
    println!("chosen: min_leaf {} max_features {}", best.min_leaf, best.max_features);
    let (train, test): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| i % 2 == 0);
    let model = fit_forest_on_rows(&x, &d, &train, &best, clip, Seed::new(7))?;
    let mse = |r: &[usize]| {
        let (p, _) = model.predict_rows(&x, r);
        r.iter().zip(&p).map(|(&i, p)| (d[i] - p).powi(2)).sum::<f64>() / r.len() as f64
    };
    println!("in-sample mse {:.4}, held-out mse {:.4}", mse(&train), mse(&test));
    Ok(())
}
