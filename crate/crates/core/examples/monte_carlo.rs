//! Small Monte Carlo panel for one preset, rendered like the simulation
//! tables.
//!
//! `cargo run --release --example monte_carlo -- [preset] [n] [reps] [repeated]`

use selcorr::dgp::Preset;
use selcorr::estimators::EstimatorConfig;
use selcorr::learners::ForestHyperparams;
use selcorr::montecarlo::{render_table, run_design, summarize, TableFormat};
use selcorr::{EstimatorTag, Seed};

fn main() -> selcorr::Result<()> {
    let mut args = std::env::args().skip(1);
    let preset = args.next().map_or(Preset::Benchmark, |s| Preset::from_name(&s).expect("preset name"));
    let n: usize = args.next().map_or(500, |s| s.parse().expect("n"));
    let reps: usize = args.next().map_or(10, |s| s.parse().expect("reps"));
    let mut design = preset.design(n);
    design.repeated = args.next().is_some_and(|s| s == "repeated");
    let config = EstimatorConfig::default().with_hyperparams(ForestHyperparams::new(200, 1, 10));
    let records = run_design(&design, &EstimatorTag::ALL, reps, &config, Seed::new(2024))?;
    let summary = summarize(&records, &design.beta, 1.96)?;
    print!("{}", render_table(&[summary], TableFormat::Markdown)?);
    Ok(())
}
