//! Index constants that hit each preset's censoring target.

use selcorr::dgp::{calibrate_constant, generate_sample, Preset};
use selcorr::Seed;

fn main() -> selcorr::Result<()> {
    println!("{:<12} {:>9} {:>8} {:>10}", "preset", "c", "target", "censored");
    for preset in Preset::ALL {
        let design = preset.design(20_000);
        let c = calibrate_constant(&design, Seed::new(design.seed))?;
        let ds = generate_sample(&design.clone().with_c(c), Seed::new(99))?;
        println!("{:<12} {:>9.5} {:>8.2} {:>10.3}", preset.name(), c, design.censor_target, 1.0 - ds.selection_rate());
    }
    Ok(())
}
