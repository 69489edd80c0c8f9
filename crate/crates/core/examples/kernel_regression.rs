//! Nadaraya-Watson fit with rule-of-thumb bandwidth and analytic slope on
//! `y = sin(pi p) + noise`.

use rand::Rng;
use rand_distr::StandardNormal;
use selcorr::learners::KernelFit;
use selcorr::Seed;

fn main() -> selcorr::Result<()> {
    let mut rng = Seed::new(3).rng();
    let p: Vec<f64> = (0..2000).map(|_| rng.random_range(0.0..1.0)).collect();
    let y: Vec<f64> = p
        .iter()
        .map(|&v| (std::f64::consts::PI * v).sin() + 0.2 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let fit = KernelFit::with_rule_of_thumb(p, y)?;
    println!("bandwidth {:.4}", fit.bandwidth());
    println!("{:>5} {:>9} {:>9} {:>9} {:>9}", "p", "fit", "true", "slope", "true");
    for q in [0.1, 0.25, 0.5, 0.75, 0.9] {
        let w = std::f64::consts::PI;
        println!("{q:>5.2} {:>9.4} {:>9.4} {:>9.4} {:>9.4}", fit.eval(q), (w * q).sin(), fit.derivative(q), w * (w * q).cos());
    }
    Ok(())
}
