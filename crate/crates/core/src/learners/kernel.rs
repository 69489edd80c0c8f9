//! Univariate Nadaraya-Watson regression with a Gaussian kernel.

use crate::error::{Error, Result};

/// Bandwidths never fall below this value.
pub const BANDWIDTH_FLOOR: f64 = 1e-3;

/// Denominators below this trigger the nearest-neighbour fallback.
pub const DENOMINATOR_FLOOR: f64 = 1e-300;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[inline]
pub fn gaussian_kernel(u: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * u * u).exp()
}

/// `1.06 * sd(inputs) * m^(-1/5)`, floored at [`BANDWIDTH_FLOOR`].
pub fn rule_of_thumb_bandwidth(inputs: &[f64], m: usize) -> f64 {
    let sd = sample_sd(inputs);
    let h = 1.06 * sd * (m.max(1) as f64).powf(-0.2);
    if h.is_finite() && h > BANDWIDTH_FLOOR {
        h
    } else {
        BANDWIDTH_FLOOR
    }
}

fn sample_sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let ss: f64 = v.iter().map(|x| (x - mean).powi(2)).sum();
    (ss / (n - 1.0)).sqrt()
}

/// Value and slope of a kernel fit at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEval {
    pub value: f64,
    pub derivative: f64,
    pub fallback: bool,
}

/// A single-target Nadaraya-Watson fit.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFit {
    inputs: Vec<f64>,
    targets: Vec<f64>,
    bandwidth: f64,
}

impl KernelFit {
    pub fn new(inputs: Vec<f64>, targets: Vec<f64>, bandwidth: f64) -> Result<Self> {
        if inputs.is_empty() || inputs.len() != targets.len() {
            return Err(Error::invalid("kernel fit needs equal-length, nonempty inputs and targets"));
        }
        if !(bandwidth > 0.0) {
            return Err(Error::invalid("bandwidth must be positive"));
        }
        Ok(KernelFit { inputs, targets, bandwidth })
    }

    /// Fit with the rule-of-thumb bandwidth computed from the inputs.
    pub fn with_rule_of_thumb(inputs: Vec<f64>, targets: Vec<f64>) -> Result<Self> {
        let h = rule_of_thumb_bandwidth(&inputs, inputs.len());
        Self::new(inputs, targets, h)
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn eval_full(&self, p: f64) -> KernelEval {
        let w = Weights::compute(&self.inputs, self.bandwidth, p);
        w.apply(&self.targets)
    }

    pub fn eval(&self, p: f64) -> f64 {
        self.eval_full(p).value
    }

    pub fn derivative(&self, p: f64) -> f64 {
        self.eval_full(p).derivative
    }
}

/// Kernel weights at a query point, reusable across targets.
struct Weights {
    k: Vec<f64>,
    uk: Vec<f64>,
    sum_k: f64,
    sum_uk: f64,
    nearest: usize,
    bandwidth: f64,
}

impl Weights {
    fn compute(inputs: &[f64], h: f64, p: f64) -> Self {
        let mut k = Vec::with_capacity(inputs.len());
        let mut uk = Vec::with_capacity(inputs.len());
        let (mut sum_k, mut sum_uk) = (0.0, 0.0);
        let mut nearest = 0;
        let mut best = f64::INFINITY;
        for (j, &pj) in inputs.iter().enumerate() {
            let u = (pj - p) / h;
            let kj = gaussian_kernel(u);
            k.push(kj);
            uk.push(u * kj);
            sum_k += kj;
            sum_uk += u * kj;
            let dist = (pj - p).abs();
            if dist < best {
                best = dist;
                nearest = j;
            }
        }
        Weights { k, uk, sum_k, sum_uk, nearest, bandwidth: h }
    }

    // A(p) = sum k z / h, B(p) = sum k / h; A' = sum u k z / h^2, B' = sum u k / h^2.
    fn apply(&self, targets: &[f64]) -> KernelEval {
        let b = self.sum_k / self.bandwidth;
        if b < DENOMINATOR_FLOOR {
            return KernelEval {
                value: targets[self.nearest],
                derivative: 0.0,
                fallback: true,
            };
        }
        let (mut sz, mut suz) = (0.0, 0.0);
        for ((kj, ukj), z) in self.k.iter().zip(&self.uk).zip(targets) {
            sz += kj * z;
            suz += ukj * z;
        }
        let value = sz / self.sum_k;
        let derivative = (suz * self.sum_k - sz * self.sum_uk) / (self.bandwidth * self.sum_k * self.sum_k);
        KernelEval { value, derivative, fallback: false }
    }
}

/// Several targets regressed on the same generated inputs. Targets sharing a
/// bandwidth share one pass over the kernel weights.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBundle {
    inputs: Vec<f64>,
    targets: Vec<Vec<f64>>,
    bandwidths: Vec<f64>,
}

impl KernelBundle {
    pub fn new(inputs: Vec<f64>, targets: Vec<Vec<f64>>, bandwidths: Vec<f64>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::invalid("kernel bundle needs at least one input"));
        }
        if targets.len() != bandwidths.len() || targets.iter().any(|t| t.len() != inputs.len()) {
            return Err(Error::invalid("kernel bundle targets and bandwidths misaligned"));
        }
        if bandwidths.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::invalid("bandwidth must be positive"));
        }
        Ok(KernelBundle { inputs, targets, bandwidths })
    }

    /// Each target gets the rule-of-thumb bandwidth computed on the inputs.
    pub fn with_rule_of_thumb(inputs: Vec<f64>, targets: Vec<Vec<f64>>) -> Result<Self> {
        let h = rule_of_thumb_bandwidth(&inputs, inputs.len());
        let bandwidths = vec![h; targets.len()];
        Self::new(inputs, targets, bandwidths)
    }

    pub fn n_targets(&self) -> usize {
        self.targets.len()
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    pub fn target_fit(&self, t: usize) -> KernelFit {
        KernelFit {
            inputs: self.inputs.clone(),
            targets: self.targets[t].clone(),
            bandwidth: self.bandwidths[t],
        }
    }

    /// Evaluates every target at `p`.
    pub fn eval_all(&self, p: f64) -> Vec<KernelEval> {
        let mut out = Vec::with_capacity(self.targets.len());
        let mut cached: Option<Weights> = None;
        for (t, &h) in self.targets.iter().zip(&self.bandwidths) {
            if cached.as_ref().is_none_or(|w| w.bandwidth != h) {
                cached = Some(Weights::compute(&self.inputs, h, p));
            }
            out.push(cached.as_ref().expect("weights computed").apply(t));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::Seed;
    use proptest::prelude::*;
    use rand::Rng;

    /// Independent double-loop Nadaraya-Watson evaluation.
    fn brute_nw(inputs: &[f64], targets: &[f64], h: f64, p: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..inputs.len() {
            let w = (1.0 / h) * (-(((inputs[j] - p) / h).powi(2)) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
            num += w * targets[j];
            den += w;
        }
        num / den
    }

    fn central_difference(fit: &KernelFit, p: f64, step: f64) -> f64 {
        (fit.eval(p + step) - fit.eval(p - step)) / (2.0 * step)
    }

    #[test]
    fn bandwidth_formula() {
        // Unit sd at m = 1 gives the bare constant.
        let unit: Vec<f64> = vec![-1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()];
        assert!((rule_of_thumb_bandwidth(&unit, 1) - 1.06).abs() < 1e-12);
        assert_eq!(rule_of_thumb_bandwidth(&[0.4; 10], 10), BANDWIDTH_FLOOR);
        // sd = 0.25, m = 1024: 1.06 * 0.25 / 4 = 0.06625
        let quarter = [0.5 - 0.25 / 2f64.sqrt(), 0.5 + 0.25 / 2f64.sqrt()];
        assert!((rule_of_thumb_bandwidth(&quarter, 1024) - 0.06625).abs() < 1e-12);
    }

    #[test]
    fn constant_targets() {
        let fit = KernelFit::new(vec![0.1, 0.4, 0.7], vec![3.0; 3], 0.2).unwrap();
        for p in [0.0, 0.3, 0.9] {
            assert!((fit.eval(p) - 3.0).abs() < 1e-14);
            assert!(fit.derivative(p).abs() < 1e-12);
        }
    }

    #[test]
    fn single_point_fit() {
        let fit = KernelFit::new(vec![0.3], vec![7.5], 0.1).unwrap();
        assert_eq!(fit.eval(0.3), 7.5);
    }

    #[test]
    fn matches_brute_force() {
        let inputs = vec![0.12, 0.35, 0.41, 0.66, 0.93];
        let targets = vec![1.0, -2.0, 0.5, 3.0, 1.5];
        let fit = KernelFit::new(inputs.clone(), targets.clone(), 0.15).unwrap();
        for p in [0.2, 0.5, 0.8] {
            assert!((fit.eval(p) - brute_nw(&inputs, &targets, 0.15, p)).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_derivative_matches_finite_difference() {
        let (a, z, h) = (0.3, 1.2, 0.25);
        let fit = KernelFit::new(vec![-a, a], vec![-z, z], h).unwrap();
        // m(p) = z tanh(a p / h^2), so m'(0) = z a / h^2.
        assert!((fit.derivative(0.0) - z * a / (h * h)).abs() < 1e-12);
        assert!((fit.derivative(0.0) - central_difference(&fit, 0.0, 1e-5)).abs() < 1e-6);
    }

    #[test]
    fn derivative_matches_finite_difference_seven_points() {
        let inputs = vec![0.05, 0.2, 0.33, 0.48, 0.5, 0.71, 0.9];
        let targets = vec![0.3, -1.0, 2.2, 0.0, 1.1, -0.4, 0.8];
        let fit = KernelFit::new(inputs, targets, 0.12).unwrap();
        for p in [0.1, 0.4, 0.6, 0.85] {
            let d = fit.derivative(p);
            assert!((d - central_difference(&fit, p, 1e-5)).abs() < 1e-6 * (1.0 + d.abs()));
        }
    }

    #[test]
    fn far_query_falls_back_to_nearest_target() {
        let fit = KernelFit::new(vec![0.0, 0.1], vec![1.0, 2.0], 0.001).unwrap();
        let e = fit.eval_full(0.9);
        assert!(e.fallback);
        assert_eq!((e.value, e.derivative), (2.0, 0.0));
    }

    #[test]
    fn bundle_matches_single_fits() {
        let mut rng = Seed::new(8).rng();
        let inputs: Vec<f64> = (0..30).map(|_| rng.random()).collect();
        let targets: Vec<Vec<f64>> = (0..3).map(|_| (0..30).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let bundle = KernelBundle::new(inputs.clone(), targets.clone(), vec![0.1, 0.1, 0.2]).unwrap();
        for p in [0.2, 0.55] {
            let all = bundle.eval_all(p);
            for t in 0..3 {
                let single = bundle.target_fit(t).eval_full(p);
                assert_eq!(all[t], single);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn interpolation_bound_and_derivative_consistency(
            pts in prop::collection::vec((0.0f64..1.0, -5.0f64..5.0), 2..25),
            h in 0.05f64..0.5,
            queries in prop::collection::vec(0.0f64..1.0, 100),
        ) {
            let (inputs, targets): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            let lo = targets.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = targets.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let fit = KernelFit::new(inputs, targets, h).unwrap();
            for p in queries {
                let v = fit.eval(p);
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
                let d = fit.derivative(p);
                let fd = central_difference(&fit, p, 1e-5);
                prop_assert!((d - fd).abs() <= 1e-6 * (1.0 + d.abs()), "d={} fd={}", d, fd);
            }
        }
    }
}
