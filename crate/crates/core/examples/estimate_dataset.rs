//! Draws one benchmark sample and fits all four estimators on it.
//!
//! `cargo run --release --example estimate_dataset -- [n] [seed]`

use selcorr::cli::render_coefficients;
use selcorr::dgp::{generate_sample, Preset};
use selcorr::estimators::{estimate_all, EstimatorConfig};
use selcorr::learners::ForestHyperparams;
use selcorr::montecarlo::ensure_calibrated;
use selcorr::Seed;

fn main() -> selcorr::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(1000, |s| s.parse().expect("n"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));
    let design = ensure_calibrated(&Preset::Benchmark.design(n))?;
    let ds = generate_sample(&design, Seed::new(seed))?;
    let config = EstimatorConfig::default().with_seed(seed).with_hyperparams(ForestHyperparams::new(200, 1, 10));
    let fits = estimate_all(&ds, &config)
        .into_iter()
        .map(|(_, r)| r)
        .collect::<selcorr::Result<Vec<_>>>()?;
    println!("c = {:.5}, selected share {:.3}\n", design.c.unwrap_or(0.0), ds.selection_rate());
    print!("{}", render_coefficients(ds.column_names(), &fits));
    Ok(())
}
