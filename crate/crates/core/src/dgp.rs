//! Simulation designs: correlated mixed-type covariates, selection errors,
//! nonlinear selection indices and censoring calibration.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{Dataset, Observation};
use crate::error::{Error, Result};
use crate::seed::{tags, Seed};

/// Number of covariates in every built-in design.
pub const DESIGN_DIM: usize = 10;
/// Latent correlation between adjacent covariates.
pub const ADJACENT_CORRELATION: f64 = 0.5;
/// Value substituted for `log(0)` in the log-index variants.
pub const LOG_ZERO_INDEX: f64 = -1e10;
pub const CALIBRATION_DRAWS: usize = 1_000_000;
pub const CALIBRATION_TOLERANCE: f64 = 0.002;
const CALIBRATION_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorLaw {
    Normal,
    /// Logistic with scale `sqrt(3)/pi`, unit variance.
    Logistic,
    /// Student t with 3 degrees of freedom divided by `sqrt(3)`.
    T3,
    /// Raw Student t with 2 degrees of freedom (infinite variance).
    T2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexForm {
    /// `x1 + x1^2 - x2 - x2^2 + x3 x4 - x5 x6`
    Benchmark,
    /// `x1 + log(x1^2) - x2 - log(x2^2) + x3 x4 - x5 x6`
    Log,
    /// `x1 + exp(x1) - x2 - exp(x2) + x3 x4 - x5 x6`
    Exp,
    /// `x1 + exp(x1) + log(x1^2) - x2 - exp(x2) - log(x2^2) + x3 x4 - x5 x6`
    LogExp,
    /// The constant alone; selection does not depend on `x`.
    Constant,
}

/// Index without the additive constant. The flag reports a `log(0)` guard.
pub fn base_index(form: IndexForm, x: &[f64]) -> (f64, bool) {
    let disc = x[2] * x[3] - x[4] * x[5];
    let (x1, x2) = (x[0], x[1]);
    let log_sq = |v: f64| if v == 0.0 { None } else { Some((v * v).ln()) };
    match form {
        IndexForm::Benchmark => (x1 + x1 * x1 - x2 - x2 * x2 + disc, false),
        IndexForm::Exp => (x1 + x1.exp() - x2 - x2.exp() + disc, false),
        IndexForm::Log => match (log_sq(x1), log_sq(x2)) {
            (Some(l1), Some(l2)) => (x1 + l1 - x2 - l2 + disc, false),
            _ => (LOG_ZERO_INDEX, true),
        },
        IndexForm::LogExp => match (log_sq(x1), log_sq(x2)) {
            (Some(l1), Some(l2)) => (x1 + x1.exp() + l1 - x2 - x2.exp() - l2 + disc, false),
            _ => (LOG_ZERO_INDEX, true),
        },
        IndexForm::Constant => (0.0, false),
    }
}

pub fn selection_index(form: IndexForm, x: &[f64], c: f64) -> Result<f64> {
    if x.len() != DESIGN_DIM {
        return Err(Error::invalid(format!("selection index expects {DESIGN_DIM} covariates, got {}", x.len())));
    }
    let (h, guarded) = base_index(form, x);
    Ok(if guarded { h } else { h + c })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationDesign {
    pub n: usize,
    #[serde(default = "default_beta")]
    pub beta: Vec<f64>,
    pub rho: f64,
    pub error_law: ErrorLaw,
    pub censor_target: f64,
    pub h_form: IndexForm,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Draw `n/2` rows and append an exact copy of them.
    #[serde(default)]
    pub repeated: bool,
}

fn default_beta() -> Vec<f64> {
    vec![1.0; DESIGN_DIM]
}

impl SimulationDesign {
    /// Normal errors, `rho = 0.5`, half the sample censored, benchmark index.
    pub fn benchmark(n: usize) -> Self {
        SimulationDesign {
            n,
            beta: default_beta(),
            rho: 0.5,
            error_law: ErrorLaw::Normal,
            censor_target: 0.5,
            h_form: IndexForm::Benchmark,
            c: None,
            seed: 0,
            repeated: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("n must be positive"));
        }
        if self.beta.len() != DESIGN_DIM {
            return Err(Error::invalid(format!("beta must have {DESIGN_DIM} entries")));
        }
        if !(self.rho.abs() < 1.0) {
            return Err(Error::invalid("rho must lie in (-1, 1)"));
        }
        if !(self.censor_target > 0.02 && self.censor_target < 0.98) {
            return Err(Error::invalid("censor_target must lie in (0.02, 0.98)"));
        }
        if self.repeated && self.n % 2 != 0 {
            return Err(Error::invalid("repeated samples need an even n"));
        }
        Ok(())
    }

    /// Hex digest of the fields the calibrated constant depends on.
    pub fn calibration_key(&self) -> String {
        let text = format!(
            "law={:?};rho={:e};target={:e};h={:?};seed={};draws={}",
            self.error_law, self.rho, self.censor_target, self.h_form, self.seed, CALIBRATION_DRAWS
        );
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = Some(c);
        self
    }
}

/// The benchmark design and its robustness variations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Benchmark,
    /// `rho = 0.75`
    A1A,
    /// 75% censoring
    A1B,
    /// `rho = 0.75` and 75% censoring
    A1C,
    A2Logistic,
    A2T3,
    A2T2,
    A3Log,
    A3Exp,
    A3LogExp,
}

impl Preset {
    pub const ALL: [Preset; 10] = [
        Preset::Benchmark,
        Preset::A1A,
        Preset::A1B,
        Preset::A1C,
        Preset::A2Logistic,
        Preset::A2T3,
        Preset::A2T2,
        Preset::A3Log,
        Preset::A3Exp,
        Preset::A3LogExp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Benchmark => "benchmark",
            Preset::A1A => "a1-a",
            Preset::A1B => "a1-b",
            Preset::A1C => "a1-c",
            Preset::A2Logistic => "a2-logistic",
            Preset::A2T3 => "a2-t3",
            Preset::A2T2 => "a2-t2",
            Preset::A3Log => "a3-log",
            Preset::A3Exp => "a3-exp",
            Preset::A3LogExp => "a3-logexp",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Preset::ALL.into_iter().find(|p| p.name() == s)
    }

    pub fn design(self, n: usize) -> SimulationDesign {
        let mut d = SimulationDesign::benchmark(n);
        match self {
            Preset::Benchmark => {}
            Preset::A1A => d.rho = 0.75,
            Preset::A1B => d.censor_target = 0.75,
            Preset::A1C => {
                d.rho = 0.75;
                d.censor_target = 0.75;
            }
            Preset::A2Logistic => d.error_law = ErrorLaw::Logistic,
            Preset::A2T3 => d.error_law = ErrorLaw::T3,
            Preset::A2T2 => d.error_law = ErrorLaw::T2,
            Preset::A3Log => d.h_form = IndexForm::Log,
            Preset::A3Exp => d.h_form = IndexForm::Exp,
            Preset::A3LogExp => d.h_form = IndexForm::LogExp,
        }
        d
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Standard normal distribution function.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// Draws latent Gaussian rows and maps them to the mixed covariate types.
pub struct CovariateSampler {
    chol: DMatrix<f64>,
}

impl Default for CovariateSampler {
    fn default() -> Self {
        Self::new()
    }
}

impl CovariateSampler {
    pub fn new() -> Self {
        let corr = latent_correlation();
        let chol = corr.cholesky().expect("tridiagonal correlation is positive definite").l();
        CovariateSampler { chol }
    }

    pub fn latent<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let e = DVector::from_fn(DESIGN_DIM, |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.chol * e
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        transform_latent(&self.latent(rng))
    }
}

pub fn latent_correlation() -> DMatrix<f64> {
    DMatrix::from_fn(DESIGN_DIM, DESIGN_DIM, |i, j| match i.abs_diff(j) {
        0 => 1.0,
        1 => ADJACENT_CORRELATION,
        _ => 0.0,
    })
}

/// `X1 = Z1`, `X2 = Phi(Z2)`, `Xk = 1{Zk > 0}` for the rest.
pub fn transform_latent(z: &DVector<f64>) -> Vec<f64> {
    z.iter()
        .enumerate()
        .map(|(k, &v)| match k {
            0 => v,
            1 => std_normal_cdf(v),
            _ => f64::from(u8::from(v > 0.0)),
        })
        .collect()
}

pub fn generate_covariates<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let sampler = CovariateSampler::new();
    (0..n).map(|_| sampler.draw(rng)).collect()
}

pub fn draw_epsilon<R: Rng + ?Sized>(law: ErrorLaw, rng: &mut R) -> f64 {
    match law {
        ErrorLaw::Normal => rng.sample(StandardNormal),
        ErrorLaw::Logistic => {
            let u: f64 = rng.random_range(f64::EPSILON..1.0);
            3f64.sqrt() / std::f64::consts::PI * (u / (1.0 - u)).ln()
        }
        ErrorLaw::T3 => StudentT::new(3.0).expect("valid dof").sample(rng) / 3f64.sqrt(),
        ErrorLaw::T2 => StudentT::new(2.0).expect("valid dof").sample(rng),
    }
}

/// Returns `(eps, u)` with `u = rho eps + sqrt(1 - rho^2) e`.
pub fn draw_errors<R: Rng + ?Sized>(law: ErrorLaw, rho: f64, n: usize, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let scale = (1.0 - rho * rho).sqrt();
    (0..n)
        .map(|_| {
            let eps = draw_epsilon(law, rng);
            let e: f64 = rng.sample(StandardNormal);
            (eps, rho * eps + scale * e)
        })
        .unzip()
}

/// Share of draws with `h0 + c < eps`.
fn censor_rate(h0: &[f64], eps: &[f64], c: f64) -> f64 {
    let censored = h0.iter().zip(eps).filter(|(h, e)| **h + c < **e).count();
    censored as f64 / h0.len() as f64
}

pub fn calibrate_constant(design: &SimulationDesign, seed: Seed) -> Result<f64> {
    calibrate_constant_with(design, seed, CALIBRATION_DRAWS)
}

/// Bisection on `c` so that the empirical censoring rate over `draws`
/// simulated `(x, eps)` pairs is within tolerance of the target.
pub fn calibrate_constant_with(design: &SimulationDesign, seed: Seed, draws: usize) -> Result<f64> {
    if !(design.censor_target > 0.02 && design.censor_target < 0.98) {
        return Err(Error::Calibration("censor_target must lie in (0.02, 0.98)".into()));
    }
    let mut rng = seed.child(tags::CALIBRATION).rng();
    let sampler = CovariateSampler::new();
    let mut h0 = Vec::with_capacity(draws);
    let mut eps = Vec::with_capacity(draws);
    for _ in 0..draws {
        let x = sampler.draw(&mut rng);
        let (h, guarded) = base_index(design.h_form, &x);
        // Guarded draws are never selected; an infinite index keeps them so.
        h0.push(if guarded { f64::NEG_INFINITY } else { h });
        eps.push(draw_epsilon(design.error_law, &mut rng));
    }
    let target = design.censor_target;
    // censor_rate is nonincreasing in c.
    let (mut lo, mut hi) = (-1.0, 1.0);
    let mut iter = 0;
    while censor_rate(&h0, &eps, lo) < target {
        lo *= 2.0;
        iter += 1;
        if iter > CALIBRATION_MAX_ITER / 4 {
            return Err(Error::Calibration(format!("no lower bracket for target {target}")));
        }
    }
    while censor_rate(&h0, &eps, hi) > target {
        hi *= 2.0;
        iter += 1;
        if iter > CALIBRATION_MAX_ITER / 4 {
            return Err(Error::Calibration(format!("no upper bracket for target {target}")));
        }
    }
    for _ in 0..CALIBRATION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let rate = censor_rate(&h0, &eps, mid);
        if (rate - target).abs() < CALIBRATION_TOLERANCE {
            return Ok(mid);
        }
        if rate > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Calibration(format!(
        "bisection did not reach tolerance {CALIBRATION_TOLERANCE} within {CALIBRATION_MAX_ITER} iterations"
    )))
}

/// Latent draws behind one simulated sample.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSample {
    pub x: Vec<Vec<f64>>,
    pub eps: Vec<f64>,
    pub u: Vec<f64>,
    pub d: Vec<bool>,
    pub y: Vec<f64>,
    /// Rows whose index hit the `log(0)` guard.
    pub guarded: usize,
}

impl RawSample {
    pub fn into_dataset(self) -> Result<Dataset> {
        let obs = self
            .x
            .into_iter()
            .zip(self.d)
            .zip(self.y)
            .map(|((x, d), y)| Observation { y, d, x })
            .collect();
        Dataset::new(obs, Dataset::default_names(DESIGN_DIM))
    }
}

pub fn generate_raw_sample(design: &SimulationDesign, n: usize, seed: Seed) -> Result<RawSample> {
    design.validate()?;
    let c = design
        .c
        .ok_or_else(|| Error::invalid("design has no calibrated constant c"))?;
    let mut rng = seed.child(tags::SAMPLE).rng();
    let sampler = CovariateSampler::new();
    let mut raw = RawSample {
        x: Vec::with_capacity(n),
        eps: Vec::with_capacity(n),
        u: Vec::with_capacity(n),
        d: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
        guarded: 0,
    };
    let scale = (1.0 - design.rho * design.rho).sqrt();
    for _ in 0..n {
        let x = sampler.draw(&mut rng);
        let eps = draw_epsilon(design.error_law, &mut rng);
        let e: f64 = rng.sample(StandardNormal);
        let u = design.rho * eps + scale * e;
        let (h0, guarded) = base_index(design.h_form, &x);
        let h = if guarded { h0 } else { h0 + c };
        raw.guarded += usize::from(guarded);
        let d = h >= eps;
        let y = if d { x.iter().zip(&design.beta).map(|(a, b)| a * b).sum::<f64>() + u } else { 0.0 };
        raw.x.push(x);
        raw.eps.push(eps);
        raw.u.push(u);
        raw.d.push(d);
        raw.y.push(y);
    }
    Ok(raw)
}

/// One sample of size `design.n`, duplicated from `n/2` draws when the
/// design asks for repeated samples.
pub fn generate_sample(design: &SimulationDesign, seed: Seed) -> Result<Dataset> {
    if design.repeated {
        generate_repeated_sample(design, seed)
    } else {
        generate_raw_sample(design, design.n, seed)?.into_dataset()
    }
}

pub fn generate_repeated_sample(design: &SimulationDesign, seed: Seed) -> Result<Dataset> {
    if design.n % 2 != 0 {
        return Err(Error::invalid("repeated samples need an even n"));
    }
    let half = generate_raw_sample(design, design.n / 2, seed)?.into_dataset()?;
    let mut obs = half.observations().to_vec();
    obs.extend_from_slice(half.observations());
    Dataset::new(obs, half.column_names().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean(v: &[f64]) -> f64 {
        v.iter().sum::<f64>() / v.len() as f64
    }

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let (ma, mb) = (mean(a), mean(b));
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn index_hand_values() {
        let zero = [0.0; 10];
        assert_eq!(selection_index(IndexForm::Benchmark, &zero, 0.0).unwrap(), 0.0);
        let mut x = [0.0; 10];
        x[0] = 1.0;
        x[1] = 1.0;
        x[2] = 1.0;
        x[3] = 1.0;
        assert_eq!(selection_index(IndexForm::Benchmark, &x, 0.0).unwrap(), 1.0);
        assert_eq!(selection_index(IndexForm::Exp, &zero, 0.0).unwrap(), 0.0);
        assert_eq!(selection_index(IndexForm::Constant, &x, -0.3).unwrap(), -0.3);
        assert_eq!(selection_index(IndexForm::Log, &zero, 5.0).unwrap(), LOG_ZERO_INDEX);
        assert!(selection_index(IndexForm::Benchmark, &[0.0; 3], 0.0).is_err());
    }

    #[test]
    fn log_exp_index_matches_formula() {
        let mut x = [0.0; 10];
        x[0] = 0.7;
        x[1] = 0.2;
        x[4] = 1.0;
        x[5] = 1.0;
        let expect = 0.7 + 0.7f64.exp() + (0.49f64).ln() - 0.2 - 0.2f64.exp() - (0.04f64).ln() - 1.0 + 0.3;
        assert!((selection_index(IndexForm::LogExp, &x, 0.3).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn covariate_marginals_and_copula() {
        let mut rng = Seed::new(11).rng();
        let sampler = CovariateSampler::new();
        let n = 1_000_000;
        let mut cols = vec![Vec::with_capacity(n); DESIGN_DIM];
        for _ in 0..n {
            for (c, v) in cols.iter_mut().zip(sampler.draw(&mut rng)) {
                c.push(v);
            }
        }
        assert!(mean(&cols[0]).abs() < 0.01);
        for c in &cols[1..] {
            assert!((mean(c) - 0.5).abs() < 0.01);
        }
        assert!(cols[1].iter().all(|v| *v > 0.0 && *v < 1.0));
        let z2: Vec<f64> = cols[1]
            .iter()
            .map(|v| statrs::distribution::ContinuousCDF::inverse_cdf(&statrs::distribution::Normal::standard(), *v))
            .collect();
        assert!((corr(&cols[0], &z2) - 0.5).abs() < 0.02);
        // Z1 and Z3 are latent-independent.
        let scaled: Vec<f64> = cols[2].iter().map(|v| (2.0 * v - 1.0) * (2.0 / std::f64::consts::PI).sqrt()).collect();
        assert!(corr(&cols[0], &scaled).abs() < 0.02);
    }

    #[test]
    fn error_laws() {
        let n = 1_000_000;
        let mut rng = Seed::new(5).rng();
        let (eps, u) = draw_errors(ErrorLaw::Normal, 0.0, n, &mut rng);
        assert!(corr(&eps, &u).abs() < 0.01);
        let (eps, u) = draw_errors(ErrorLaw::Normal, 0.5, n, &mut rng);
        assert!((corr(&eps, &u) - 0.5).abs() < 0.01);
        let (eps, _) = draw_errors(ErrorLaw::Logistic, 0.5, n, &mut rng);
        let m = mean(&eps);
        let var = eps.iter().map(|e| (e - m).powi(2)).sum::<f64>() / n as f64;
        assert!((var - 1.0).abs() < 0.01, "{var}");
        let (eps, _) = draw_errors(ErrorLaw::T3, 0.5, n, &mut rng);
        // Heavy tails make the variance noisy; the median absolute value is stable.
        let mut abs: Vec<f64> = eps.iter().map(|e| e.abs()).collect();
        abs.sort_by(f64::total_cmp);
        // Median of |t3| is 0.7649; divided by sqrt(3).
        assert!((abs[n / 2] - 0.7649 / 3f64.sqrt()).abs() < 0.01);
    }

    #[test]
    fn calibration_on_constant_index() {
        let mut d = SimulationDesign::benchmark(100);
        d.h_form = IndexForm::Constant;
        let c = calibrate_constant(&d, Seed::new(1)).unwrap();
        assert!(c.abs() < 0.01, "{c}");
        d.censor_target = 0.75;
        let c = calibrate_constant(&d, Seed::new(1)).unwrap();
        assert!((c + 0.6745).abs() < 0.01, "{c}");
        d.censor_target = 0.99;
        assert!(matches!(calibrate_constant_with(&d, Seed::new(1), 10), Err(Error::Calibration(_))));
    }

    #[test]
    fn benchmark_sample_censoring_and_consistency() {
        let mut d = SimulationDesign::benchmark(100_000);
        let c = calibrate_constant(&d, Seed::new(d.seed)).unwrap();
        d.c = Some(c);
        let raw = generate_raw_sample(&d, d.n, Seed::new(3)).unwrap();
        let censored = raw.d.iter().filter(|v| !**v).count() as f64 / d.n as f64;
        assert!((censored - 0.5).abs() < 0.01, "{censored}");
        for i in 0..d.n {
            let h = selection_index(d.h_form, &raw.x[i], c).unwrap();
            assert_eq!(raw.d[i], h >= raw.eps[i]);
            if !raw.d[i] {
                assert_eq!(raw.y[i], 0.0);
            }
        }
    }

    #[test]
    fn no_selection_bias_without_correlation() {
        let mut d = SimulationDesign::benchmark(100_000);
        d.rho = 0.0;
        d.c = Some(calibrate_constant_with(&d, Seed::new(0), 200_000).unwrap());
        let ds = generate_sample(&d, Seed::new(9)).unwrap();
        let k = DESIGN_DIM + 1;
        let mut xtx = DMatrix::<f64>::zeros(k, k);
        let mut xty = DVector::<f64>::zeros(k);
        for o in ds.observations().iter().filter(|o| o.d) {
            let mut row = vec![1.0];
            row.extend_from_slice(&o.x);
            crate::linalg::add_outer(&mut xtx, 1.0, &row, &row);
            for (t, r) in xty.iter_mut().zip(&row) {
                *t += r * o.y;
            }
        }
        let b = xtx.lu().solve(&xty).unwrap();
        for k in 1..=DESIGN_DIM {
            assert!((b[k] - 1.0).abs() < 0.05, "beta_{k} = {}", b[k]);
        }
    }

    #[test]
    fn determinism_and_repeated_rows() {
        let d = SimulationDesign::benchmark(40).with_c(0.1);
        let a = generate_sample(&d, Seed::new(4)).unwrap();
        let b = generate_sample(&d, Seed::new(4)).unwrap();
        assert_eq!(a, b);
        let mut r = d.clone();
        r.repeated = true;
        let rep = generate_sample(&r, Seed::new(4)).unwrap();
        for i in 0..20 {
            assert_eq!(rep.get(i), rep.get(i + 20));
        }
        let mut tiny = r.clone();
        tiny.n = 4;
        assert_eq!(generate_sample(&tiny, Seed::new(1)).unwrap().len(), 4);
        tiny.n = 5;
        assert!(generate_repeated_sample(&tiny, Seed::new(1)).is_err());
    }

    #[test]
    fn missing_constant_is_rejected() {
        assert!(generate_sample(&SimulationDesign::benchmark(10), Seed::new(0)).is_err());
    }

    #[test]
    fn presets_and_keys() {
        for p in Preset::ALL {
            assert_eq!(Preset::from_name(p.name()), Some(p));
            p.design(100).validate().unwrap();
        }
        let a = Preset::A1C.design(100);
        assert_eq!((a.rho, a.censor_target), (0.75, 0.75));
        assert_eq!(a.calibration_key(), Preset::A1C.design(1000).calibration_key());
        assert_ne!(a.calibration_key(), Preset::A1A.design(100).calibration_key());
    }
}
