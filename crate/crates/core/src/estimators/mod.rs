//! Estimation pipelines.
//!
//! | estimator      | nuisances     | equations             |
//! |----------------|---------------|-----------------------|
//! | LR             | cross-fitted  | orthogonal (F3)       |
//! | Robinson       | full sample   | partialling-out       |
//! | Robinson+Orth  | full sample   | orthogonal (F3)       |
//! | Robinson+CF    | cross-fitted  | partialling-out       |

pub mod nuisance;
pub mod variance;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{partition_folds, Dataset, EstimatorTag, FitResult};
use crate::error::{Error, Result};
use crate::learners::{default_grid, tune_forest_cv, Clip, Features, ForestHyperparams};
use crate::linalg::{min_eigenvalue, solve_guarded, to_rows};
use crate::moments::{assemble_normal_equations, assemble_robinson_equations, Formulation, NuisanceValues};
use crate::seed::{tags, Seed};

pub use nuisance::{fit_full_sample, fit_nuisances, forest_fit_count, FullSampleNuisances, NuisanceSet};
pub use variance::{estimate_variance, jacobian, sandwich, MomentKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorConfig {
    /// Cross-fitting folds.
    pub folds: usize,
    /// Folds used to cross-validate the forest grid.
    pub cv_folds: usize,
    /// Tuning grid; `None` means [`default_grid`] for the dataset's dimension.
    pub forest_grid: Option<Vec<ForestHyperparams>>,
    /// Tune the forest on each dataset. When false, `hyperparams` (or the
    /// first grid entry) is used as is.
    pub tune_per_fit: bool,
    pub hyperparams: Option<ForestHyperparams>,
    pub clip_lo: f64,
    pub clip_hi: f64,
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            folds: 5,
            cv_folds: 5,
            forest_grid: None,
            tune_per_fit: true,
            hyperparams: None,
            clip_lo: 0.001,
            clip_hi: 0.999,
            seed: 0,
        }
    }
}

impl EstimatorConfig {
    pub fn clip(&self) -> Result<Clip> {
        Clip::new(self.clip_lo, self.clip_hi)
    }

    pub fn grid(&self, k: usize) -> Vec<ForestHyperparams> {
        self.forest_grid.clone().unwrap_or_else(|| default_grid(k))
    }

    /// Fixed hyperparameters, skipping tuning.
    pub fn with_hyperparams(mut self, hp: ForestHyperparams) -> Self {
        self.tune_per_fit = false;
        self.hyperparams = Some(hp);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if self.folds < 3 {
            return Err(Error::invalid(
                "cross-fitting needs at least 3 folds: pair forests are trained outside two folds",
            ));
        }
        if self.cv_folds < 2 {
            return Err(Error::invalid("cv_folds must be at least 2"));
        }
        self.clip()?;
        let grid = self.grid(k);
        if grid.is_empty() {
            return Err(Error::invalid("forest grid is empty"));
        }
        for hp in grid.iter().chain(self.hyperparams.iter()) {
            hp.validate(k)?;
        }
        Ok(())
    }

    fn check_dataset(&self, ds: &Dataset) -> Result<()> {
        self.validate(ds.dim_x())?;
        if ds.len() < 10 * ds.dim_x() {
            return Err(Error::invalid(format!(
                "need at least {} observations for {} covariates",
                10 * ds.dim_x(),
                ds.dim_x()
            )));
        }
        if ds.len() < 2 * self.folds {
            return Err(Error::invalid(format!("need at least {} observations for {} folds", 2 * self.folds, self.folds)));
        }
        Ok(())
    }
}

/// Forest hyperparameters for one estimation call: CV-tuned on the full
/// sample when `tune_per_fit`, fixed otherwise.
pub fn resolve_hyperparams(ds: &Dataset, config: &EstimatorConfig) -> Result<ForestHyperparams> {
    let grid = config.grid(ds.dim_x());
    if !config.tune_per_fit {
        return Ok(config.hyperparams.clone().unwrap_or_else(|| grid[0].clone()));
    }
    let x = Features::from_dataset(ds);
    let target = nuisance::selection_target(ds);
    let rows: Vec<usize> = (0..ds.len()).collect();
    let seed = Seed::new(config.seed).child(tags::TUNING);
    tune_forest_cv(&x, &target, &rows, &grid, config.cv_folds, config.clip()?, seed)
}

pub fn cross_fit(ds: &Dataset, config: &EstimatorConfig, hp: &ForestHyperparams) -> Result<NuisanceSet> {
    let root = Seed::new(config.seed);
    let partition = partition_folds(ds.len(), config.folds, &mut root.child(tags::PARTITION).rng())?;
    fit_nuisances(ds, &partition, hp, config.clip()?, root)
}

pub fn full_sample(ds: &Dataset, config: &EstimatorConfig, hp: &ForestHyperparams) -> Result<FullSampleNuisances> {
    fit_full_sample(ds, hp, config.clip()?, Seed::new(config.seed))
}

fn hp_diagnostics(hp: &ForestHyperparams, diag: &mut BTreeMap<String, f64>) {
    diag.insert("forest_n_trees".into(), hp.n_trees as f64);
    diag.insert("forest_min_leaf".into(), hp.min_leaf as f64);
    diag.insert("forest_max_features".into(), hp.max_features as f64);
}

/// Solves the equations and attaches the sandwich covariance. Every
/// estimator reports the orthogonal-moment sandwich evaluated on its own
/// nuisances; when `values` carry no initial estimate (full-sample
/// partialling-out) the correction term uses the solution itself.
fn finish(
    ds: &Dataset,
    values: &[NuisanceValues],
    (j, b): (DMatrix<f64>, nalgebra::DVector<f64>),
    init_from_solution: bool,
    tag: EstimatorTag,
    mut diag: BTreeMap<String, f64>,
) -> Result<FitResult> {
    let (beta, cond) = solve_guarded(&j, &b, tag.short_name())?;
    let beta: Vec<f64> = beta.iter().copied().collect();
    let (cov, cond_m) = if init_from_solution {
        let values: Vec<NuisanceValues> = values
            .iter()
            .map(|v| NuisanceValues { beta_init: beta.clone(), ..v.clone() })
            .collect();
        estimate_variance(ds, &values, &beta, MomentKind::Orthogonal)?
    } else {
        estimate_variance(ds, values, &beta, MomentKind::Orthogonal)?
    };
    diag.insert("condition_number".into(), cond);
    diag.insert("condition_number_variance".into(), cond_m);
    diag.insert("covariance_min_eigenvalue".into(), min_eigenvalue(&cov));
    let standard_errors = (0..cov.nrows()).map(|k| cov[(k, k)].max(0.0).sqrt()).collect();
    Ok(FitResult {
        beta,
        covariance: to_rows(&cov),
        standard_errors,
        estimator_tag: tag,
        diagnostics: diag,
    })
}

pub fn locally_robust_from(ds: &Dataset, ns: &NuisanceSet) -> Result<FitResult> {
    let mut diag = ns.diagnostics.clone();
    hp_diagnostics(&ns.hyperparams, &mut diag);
    let eq = assemble_normal_equations(ds, &ns.values, Formulation::F3)?;
    finish(ds, &ns.values, eq, false, EstimatorTag::LocallyRobust, diag)
}

pub fn robinson_crossfit_from(ds: &Dataset, ns: &NuisanceSet) -> Result<FitResult> {
    let mut diag = ns.diagnostics.clone();
    hp_diagnostics(&ns.hyperparams, &mut diag);
    let eq = assemble_robinson_equations(ds, &ns.values)?;
    finish(ds, &ns.values, eq, false, EstimatorTag::RobinsonCrossfit, diag)
}

pub fn robinson_from(ds: &Dataset, fs: &FullSampleNuisances) -> Result<FitResult> {
    let mut diag = fs.diagnostics.clone();
    hp_diagnostics(&fs.hyperparams, &mut diag);
    let eq = assemble_robinson_equations(ds, &fs.values)?;
    finish(ds, &fs.values, eq, true, EstimatorTag::Robinson, diag)
}

/// Orthogonal equations on full-sample nuisances; the correction term is
/// evaluated at `beta_robinson`.
pub fn robinson_orthogonal_from(ds: &Dataset, fs: &FullSampleNuisances, beta_robinson: &[f64]) -> Result<FitResult> {
    let mut diag = fs.diagnostics.clone();
    hp_diagnostics(&fs.hyperparams, &mut diag);
    let values = fs.with_beta_init(beta_robinson);
    let eq = assemble_normal_equations(ds, &values, Formulation::F3)?;
    finish(ds, &values, eq, false, EstimatorTag::RobinsonOrthogonal, diag)
}

/// Cross-fitted, orthogonalized estimator.
pub fn estimate_locally_robust(ds: &Dataset, config: &EstimatorConfig) -> Result<FitResult> {
    config.check_dataset(ds)?;
    let hp = resolve_hyperparams(ds, config)?;
    locally_robust_from(ds, &cross_fit(ds, config, &hp)?)
}

/// Partialling-out with full-sample nuisances and no correction.
pub fn estimate_robinson(ds: &Dataset, config: &EstimatorConfig) -> Result<FitResult> {
    config.check_dataset(ds)?;
    let hp = resolve_hyperparams(ds, config)?;
    robinson_from(ds, &full_sample(ds, config, &hp)?)
}

pub fn estimate_robinson_orthogonal(ds: &Dataset, config: &EstimatorConfig) -> Result<FitResult> {
    config.check_dataset(ds)?;
    let hp = resolve_hyperparams(ds, config)?;
    let fs = full_sample(ds, config, &hp)?;
    let initial = robinson_from(ds, &fs)?;
    robinson_orthogonal_from(ds, &fs, &initial.beta)
}

pub fn estimate_robinson_crossfit(ds: &Dataset, config: &EstimatorConfig) -> Result<FitResult> {
    config.check_dataset(ds)?;
    let hp = resolve_hyperparams(ds, config)?;
    robinson_crossfit_from(ds, &cross_fit(ds, config, &hp)?)
}

pub fn estimate(ds: &Dataset, tag: EstimatorTag, config: &EstimatorConfig) -> Result<FitResult> {
    match tag {
        EstimatorTag::LocallyRobust => estimate_locally_robust(ds, config),
        EstimatorTag::Robinson => estimate_robinson(ds, config),
        EstimatorTag::RobinsonOrthogonal => estimate_robinson_orthogonal(ds, config),
        EstimatorTag::RobinsonCrossfit => estimate_robinson_crossfit(ds, config),
    }
}

/// Runs the requested estimators on one dataset, sharing tuning and nuisance
/// fits. Each result equals the corresponding single-estimator call.
pub fn estimate_many(ds: &Dataset, tags: &[EstimatorTag], config: &EstimatorConfig) -> Vec<(EstimatorTag, Result<FitResult>)> {
    let fail_all = |e: Error| tags.iter().map(|&t| (t, Err(Error::from_ref(&e)))).collect();
    if let Err(e) = config.check_dataset(ds) {
        return fail_all(e);
    }
    let hp = match resolve_hyperparams(ds, config) {
        Ok(hp) => hp,
        Err(e) => return fail_all(e),
    };
    let needs_cf = tags.iter().any(|t| matches!(t, EstimatorTag::LocallyRobust | EstimatorTag::RobinsonCrossfit));
    let needs_fs = tags.iter().any(|t| matches!(t, EstimatorTag::Robinson | EstimatorTag::RobinsonOrthogonal));
    let cf = needs_cf.then(|| cross_fit(ds, config, &hp));
    let fs = needs_fs.then(|| full_sample(ds, config, &hp));
    let robinson = match &fs {
        Some(Ok(fs)) => Some(robinson_from(ds, fs)),
        _ => None,
    };
    tags.iter()
        .map(|&t| {
            let r = match t {
                EstimatorTag::LocallyRobust | EstimatorTag::RobinsonCrossfit => match cf.as_ref().expect("cross-fit requested") {
                    Ok(ns) if t == EstimatorTag::LocallyRobust => locally_robust_from(ds, ns),
                    Ok(ns) => robinson_crossfit_from(ds, ns),
                    Err(e) => Err(Error::from_ref(e)),
                },
                EstimatorTag::Robinson | EstimatorTag::RobinsonOrthogonal => match fs.as_ref().expect("full sample requested") {
                    Err(e) => Err(Error::from_ref(e)),
                    Ok(fs) => match robinson.as_ref().expect("computed with full sample") {
                        Err(e) => Err(Error::from_ref(e)),
                        Ok(r) if t == EstimatorTag::Robinson => Ok(r.clone()),
                        Ok(r) => robinson_orthogonal_from(ds, fs, &r.beta),
                    },
                },
            };
            (t, r)
        })
        .collect()
}

pub fn estimate_all(ds: &Dataset, config: &EstimatorConfig) -> Vec<(EstimatorTag, Result<FitResult>)> {
    estimate_many(ds, &EstimatorTag::ALL, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Observation;
    use crate::dgp::{generate_sample, SimulationDesign};
    use rand::Rng;

    fn fast_config(seed: u64) -> EstimatorConfig {
        EstimatorConfig::default()
            .with_hyperparams(ForestHyperparams::new(30, 5, 4))
            .with_seed(seed)
    }

    fn benchmark(n: usize, seed: u64) -> Dataset {
        generate_sample(&SimulationDesign::benchmark(n).with_c(0.16), Seed::new(seed)).unwrap()
    }

    /// Everyone selected and no outcome noise: selection is absent and every
    /// estimator reduces to least squares up to the clip.
    #[test]
    fn noiseless_fully_selected() {
        let mut rng = Seed::new(8).rng();
        let beta = [1.5, -0.5];
        let obs: Vec<Observation> = (0..200)
            .map(|_| {
                let x = vec![rng.random_range(-1.0..1.0), f64::from(u8::from(rng.random_bool(0.5)))];
                Observation { y: x[0] * beta[0] + x[1] * beta[1], d: true, x }
            })
            .collect();
        let ds = Dataset::new(obs, Dataset::default_names(2)).unwrap();
        let config = EstimatorConfig::default().with_hyperparams(ForestHyperparams::new(10, 5, 2));
        for (tag, r) in estimate_all(&ds, &config) {
            let r = r.unwrap();
            assert_eq!(r.estimator_tag, tag);
            for k in 0..2 {
                assert!((r.beta[k] - beta[k]).abs() < 1e-2, "{tag}: {:?}", r.beta);
            }
        }
    }

    #[test]
    fn shared_and_single_calls_agree() {
        let ds = benchmark(300, 1);
        let config = fast_config(4);
        for (tag, r) in estimate_all(&ds, &config) {
            let single = estimate(&ds, tag, &config).unwrap();
            assert_eq!(r.unwrap(), single, "{tag}");
        }
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let ds = benchmark(300, 2);
        let config = fast_config(9);
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate_locally_robust(&ds, &config).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn scale_equivariance() {
        let ds = benchmark(300, 3);
        let config = fast_config(2);
        let scaled = ds.scale_outcome(2.5);
        for (tag, (a, b)) in EstimatorTag::ALL
            .iter()
            .zip(estimate_all(&ds, &config).into_iter().zip(estimate_all(&scaled, &config)))
        {
            let (a, b) = (a.1.unwrap(), b.1.unwrap());
            for k in 0..10 {
                assert!((b.beta[k] - 2.5 * a.beta[k]).abs() < 1e-9 * (1.0 + a.beta[k].abs()), "{tag}");
                assert!((b.standard_errors[k] - 2.5 * a.standard_errors[k]).abs() < 1e-9, "{tag}");
            }
        }
    }

    #[test]
    fn result_invariants() {
        let ds = benchmark(400, 5);
        for (tag, r) in estimate_all(&ds, &fast_config(1)) {
            let r = r.unwrap();
            let k = r.beta.len();
            let trace: f64 = (0..k).map(|i| r.covariance[i][i]).sum();
            for i in 0..k {
                assert_eq!(r.standard_errors[i], r.covariance[i][i].sqrt());
                for j in 0..k {
                    assert_eq!(r.covariance[i][j], r.covariance[j][i]);
                }
            }
            assert!(r.diagnostics["covariance_min_eigenvalue"] >= -1e-10 * trace, "{tag}");
            assert!(r.diagnostics.contains_key("clip_count"));
            assert!(r.diagnostics.contains_key("condition_number"));
        }
    }

    #[test]
    fn preconditions() {
        let ds = benchmark(60, 1);
        assert!(matches!(estimate_locally_robust(&ds, &fast_config(0)), Err(Error::InvalidArgument(_))));
        let ds = benchmark(300, 1);
        let mut c = fast_config(0);
        c.folds = 2;
        assert!(estimate_locally_robust(&ds, &c).is_err());
    }

    #[test]
    fn collinear_covariates_are_degenerate() {
        let mut rng = Seed::new(3).rng();
        let obs: Vec<Observation> = (0..100)
            .map(|_| {
                let a: f64 = rng.random_range(-1.0..1.0);
                let d = rng.random_bool(0.6);
                Observation { y: if d { a } else { 0.0 }, d, x: vec![a, 2.0 * a] }
            })
            .collect();
        let ds = Dataset::new(obs, Dataset::default_names(2)).unwrap();
        let config = EstimatorConfig::default().with_hyperparams(ForestHyperparams::new(10, 5, 2));
        assert!(matches!(estimate_robinson(&ds, &config), Err(Error::DegenerateDesign(_))));
    }
}
