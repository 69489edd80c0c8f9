//! First- and second-step nuisance fits, cross-fitted or on the full sample.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::data::{Dataset, FoldPartition};
use crate::error::{Error, Result};
use crate::learners::{fit_forest_on_rows, Clip, Features, ForestHyperparams, KernelBundle, KernelEval, PropensityModel};
use crate::linalg::{add_outer, solve_guarded};
use crate::moments::NuisanceValues;
use crate::seed::{tags, Seed};

/// Forest fits needed to cross-fit with `folds` folds: one per fold plus one
/// per unordered pair of folds.
pub fn forest_fit_count(folds: usize) -> usize {
    folds + folds * folds.saturating_sub(1) / 2
}

/// Kernel targets for a dataset: `y` first, then each covariate.
pub(crate) fn kernel_targets(ds: &Dataset, rows: &[usize]) -> Vec<Vec<f64>> {
    let mut t = Vec::with_capacity(ds.dim_x() + 1);
    t.push(rows.iter().map(|&i| ds.get(i).y).collect());
    for k in 0..ds.dim_x() {
        t.push(rows.iter().map(|&i| ds.get(i).x[k]).collect());
    }
    t
}

pub(crate) fn selection_target(ds: &Dataset) -> Vec<f64> {
    ds.observations().iter().map(|o| o.d_f64()).collect()
}

/// Packs kernel evaluations (target order `y, x_1, ..., x_K`) into nuisance values.
pub(crate) fn values_from_evals(p: f64, evals: &[KernelEval], beta_init: &[f64]) -> NuisanceValues {
    NuisanceValues {
        p,
        mu_y: evals[0].value,
        dmu_y: evals[0].derivative,
        mu_x: evals[1..].iter().map(|e| e.value).collect(),
        dmu_x: evals[1..].iter().map(|e| e.derivative).collect(),
        beta_init: beta_init.to_vec(),
    }
}

#[derive(Default)]
struct BandwidthStats {
    min: f64,
    max: f64,
    sum: f64,
    count: usize,
}

impl BandwidthStats {
    fn push(&mut self, h: f64) {
        if self.count == 0 {
            self.min = h;
            self.max = h;
        }
        self.min = self.min.min(h);
        self.max = self.max.max(h);
        self.sum += h;
        self.count += 1;
    }

    fn record(&self, prefix: &str, diag: &mut BTreeMap<String, f64>) {
        if self.count > 0 {
            diag.insert(format!("{prefix}_min"), self.min);
            diag.insert(format!("{prefix}_max"), self.max);
            diag.insert(format!("{prefix}_mean"), self.sum / self.count as f64);
        }
    }
}

/// Cross-fitted nuisances: per-fold and per-pair propensity forests, per-fold
/// kernel fits on pair-generated regressors, and initial per-fold
/// coefficient estimates.
#[derive(Debug, Clone)]
pub struct NuisanceSet {
    pub partition: FoldPartition,
    pub hyperparams: ForestHyperparams,
    /// `pi_l`, trained off fold `l`.
    pub fold_models: Vec<PropensityModel>,
    /// `pi_{l l'}` for `l < l'`, trained off both folds.
    pub pair_models: BTreeMap<(usize, usize), PropensityModel>,
    /// `mu_l`, trained on `pi_{l l'}(X_j)` for `j` outside fold `l`.
    pub fold_kernels: Vec<KernelBundle>,
    /// Initial estimate used inside the correction term of fold `l`.
    pub beta_init: Vec<Vec<f64>>,
    /// Nuisances at each observation, using its own fold's fits.
    pub values: Vec<NuisanceValues>,
    pub diagnostics: BTreeMap<String, f64>,
}

fn pair_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl NuisanceSet {
    pub fn pair_model(&self, a: usize, b: usize) -> &PropensityModel {
        &self.pair_models[&pair_key(a, b)]
    }

    pub fn forest_fits(&self) -> usize {
        self.fold_models.len() + self.pair_models.len()
    }
}

pub fn fit_nuisances(
    ds: &Dataset,
    partition: &FoldPartition,
    hp: &ForestHyperparams,
    clip: Clip,
    seed: Seed,
) -> Result<NuisanceSet> {
    let n_folds = partition.n_folds();
    if n_folds < 3 {
        return Err(Error::invalid(
            "cross-fitting needs at least 3 folds: pair forests are trained outside two folds",
        ));
    }
    if partition.n() != ds.len() {
        return Err(Error::invalid("partition size does not match dataset"));
    }
    let x = Features::from_dataset(ds);
    let target = selection_target(ds);
    let n = ds.len();
    let k = ds.dim_x();
    let all_rows: Vec<usize> = (0..n).collect();

    let fold_models: Vec<PropensityModel> = (0..n_folds)
        .into_par_iter()
        .map(|l| {
            let rows = partition.complement(&[l]);
            fit_forest_on_rows(&x, &target, &rows, hp, clip, seed.child(tags::FOREST_FOLD).child(l as u64))
        })
        .collect::<Result<_>>()?;

    let pairs: Vec<(usize, usize)> = (0..n_folds)
        .flat_map(|a| (a + 1..n_folds).map(move |b| (a, b)))
        .collect();
    // Each pair forest is applied to every row: its own training rows feed the
    // pair kernels, the two held-out folds feed the fold kernels.
    let fitted: Vec<((usize, usize), PropensityModel, Vec<f64>, usize)> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let rows = partition.complement(&[a, b]);
            let tag = (a * n_folds + b) as u64;
            let model = fit_forest_on_rows(&x, &target, &rows, hp, clip, seed.child(tags::FOREST_PAIR).child(tag))?;
            let (pred, clipped) = model.predict_rows(&x, &all_rows);
            Ok(((a, b), model, pred, clipped))
        })
        .collect::<Result<_>>()?;

    let mut diag = BTreeMap::new();
    let mut pair_clipped = 0usize;
    let mut pair_models = BTreeMap::new();
    let mut pair_preds: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for (key, model, pred, clipped) in fitted {
        pair_clipped += clipped;
        pair_models.insert(key, model);
        pair_preds.insert(key, pred);
    }

    // Pair kernels, trained outside both folds on in-sample pair propensities.
    let pair_kernels: BTreeMap<(usize, usize), KernelBundle> = pairs
        .iter()
        .map(|&(a, b)| {
            let rows = partition.complement(&[a, b]);
            let pred = &pair_preds[&(a, b)];
            let inputs = rows.iter().map(|&i| pred[i]).collect();
            Ok(((a, b), KernelBundle::with_rule_of_thumb(inputs, kernel_targets(ds, &rows))?))
        })
        .collect::<Result<_>>()?;

    let mut pair_bw = BandwidthStats::default();
    for kb in pair_kernels.values() {
        pair_bw.push(kb.bandwidths()[0]);
    }

    let mut fallbacks = 0usize;
    let mut beta_init = Vec::with_capacity(n_folds);
    let mut max_cond: f64 = 0.0;
    for l in 0..n_folds {
        let mut j = DMatrix::zeros(k, k);
        let mut b = DVector::zeros(k);
        let mut e = vec![0.0; k];
        for lp in (0..n_folds).filter(|&lp| lp != l) {
            let key = pair_key(l, lp);
            let pred = &pair_preds[&key];
            let kb = &pair_kernels[&key];
            for &i in partition.fold(lp) {
                let p = pred[i];
                let evals = kb.eval_all(p);
                fallbacks += evals.iter().filter(|e| e.fallback).count();
                let obs = ds.get(i);
                for (t, ek) in e.iter_mut().enumerate() {
                    *ek = obs.x[t] - evals[t + 1].value;
                }
                add_outer(&mut j, p * p, &e, &e);
                let r = obs.y - evals[0].value;
                for (bt, ek) in b.iter_mut().zip(&e) {
                    *bt += p * ek * r;
                }
            }
        }
        let (beta, cond) = solve_guarded(&j, &b, &format!("initial estimate for fold {l}"))?;
        max_cond = max_cond.max(cond);
        beta_init.push(beta.iter().copied().collect::<Vec<f64>>());
    }

    let fold_kernels: Vec<KernelBundle> = (0..n_folds)
        .map(|l| {
            let mut inputs = Vec::new();
            let mut rows = Vec::new();
            for lp in (0..n_folds).filter(|&lp| lp != l) {
                let pred = &pair_preds[&pair_key(l, lp)];
                for &i in partition.fold(lp) {
                    inputs.push(pred[i]);
                    rows.push(i);
                }
            }
            KernelBundle::with_rule_of_thumb(inputs, kernel_targets(ds, &rows))
        })
        .collect::<Result<_>>()?;

    let mut fold_bw = BandwidthStats::default();
    let mut first_clipped = 0usize;
    let mut values: Vec<Option<NuisanceValues>> = vec![None; n];
    for l in 0..n_folds {
        fold_bw.push(fold_kernels[l].bandwidths()[0]);
        let rows = partition.fold(l);
        let (p_hat, clipped) = fold_models[l].predict_rows(&x, rows);
        first_clipped += clipped;
        for (&i, &p) in rows.iter().zip(&p_hat) {
            let evals = fold_kernels[l].eval_all(p);
            fallbacks += evals.iter().filter(|e| e.fallback).count();
            values[i] = Some(values_from_evals(p, &evals, &beta_init[l]));
        }
        let selected = rows.iter().filter(|&&i| ds.get(i).d).count();
        diag.insert(format!("fold_{l}_selection_rate"), selected as f64 / rows.len() as f64);
    }
    let values: Vec<NuisanceValues> = values.into_iter().map(|v| v.expect("every row lies in a fold")).collect();

    diag.insert("forest_fits".into(), (fold_models.len() + pair_models.len()) as f64);
    diag.insert("clip_count".into(), first_clipped as f64);
    diag.insert("clip_count_pair".into(), pair_clipped as f64);
    diag.insert("kernel_fallbacks".into(), fallbacks as f64);
    diag.insert("condition_initial_max".into(), max_cond);
    fold_bw.record("bandwidth", &mut diag);
    pair_bw.record("bandwidth_pair", &mut diag);

    Ok(NuisanceSet {
        partition: partition.clone(),
        hyperparams: hp.clone(),
        fold_models,
        pair_models,
        fold_kernels,
        beta_init,
        values,
        diagnostics: diag,
    })
}

/// Nuisances fit once on the whole sample and evaluated in-sample.
#[derive(Debug, Clone)]
pub struct FullSampleNuisances {
    pub hyperparams: ForestHyperparams,
    pub model: PropensityModel,
    pub kernel: KernelBundle,
    /// `beta_init` is zero here; the orthogonalized variant substitutes its
    /// own initial estimate.
    pub values: Vec<NuisanceValues>,
    pub diagnostics: BTreeMap<String, f64>,
}

impl FullSampleNuisances {
    pub fn with_beta_init(&self, beta: &[f64]) -> Vec<NuisanceValues> {
        self.values
            .iter()
            .map(|v| NuisanceValues { beta_init: beta.to_vec(), ..v.clone() })
            .collect()
    }
}

pub fn fit_full_sample(ds: &Dataset, hp: &ForestHyperparams, clip: Clip, seed: Seed) -> Result<FullSampleNuisances> {
    let x = Features::from_dataset(ds);
    let target = selection_target(ds);
    let rows: Vec<usize> = (0..ds.len()).collect();
    let model = fit_forest_on_rows(&x, &target, &rows, hp, clip, seed.child(tags::FOREST_FULL))?;
    let (p_hat, clipped) = model.predict_rows(&x, &rows);
    let kernel = KernelBundle::with_rule_of_thumb(p_hat.clone(), kernel_targets(ds, &rows))?;
    let zero = vec![0.0; ds.dim_x()];
    let mut fallbacks = 0usize;
    let values = p_hat
        .iter()
        .map(|&p| {
            let evals = kernel.eval_all(p);
            fallbacks += evals.iter().filter(|e| e.fallback).count();
            values_from_evals(p, &evals, &zero)
        })
        .collect();
    let mut diag = BTreeMap::new();
    diag.insert("forest_fits".into(), 1.0);
    diag.insert("clip_count".into(), clipped as f64);
    diag.insert("kernel_fallbacks".into(), fallbacks as f64);
    diag.insert("bandwidth".into(), kernel.bandwidths()[0]);
    Ok(FullSampleNuisances {
        hyperparams: hp.clone(),
        model,
        kernel,
        values,
        diagnostics: diag,
    })
}
