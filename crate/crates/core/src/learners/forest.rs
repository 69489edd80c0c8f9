//! Regression random forest for the propensity score.
//!
//! Trees are CART regressors grown on squared-error splits until a node is
//! pure or cannot be split without leaving fewer than `min_leaf` rows on a
//! side. Each tree draws its randomness from its own seed child, so the
//! fitted forest does not depend on how many threads grew it.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{partition_folds, Dataset};
use crate::error::{Error, Result};
use crate::seed::Seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestHyperparams {
    pub n_trees: usize,
    pub min_leaf: usize,
    pub max_features: usize,
    pub bootstrap_fraction: f64,
    /// Draw each tree's sample with replacement. When false the tree sees a
    /// subsample without replacement (all rows if the fraction is 1).
    #[serde(default = "default_true")]
    pub bootstrap: bool,
}

fn default_true() -> bool {
    true
}

impl ForestHyperparams {
    pub fn new(n_trees: usize, min_leaf: usize, max_features: usize) -> Self {
        ForestHyperparams {
            n_trees,
            min_leaf,
            max_features,
            bootstrap_fraction: 1.0,
            bootstrap: true,
        }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::invalid("n_trees must be at least 1"));
        }
        if self.min_leaf == 0 {
            return Err(Error::invalid("min_leaf must be at least 1"));
        }
        if self.max_features == 0 || self.max_features > k {
            return Err(Error::invalid(format!("max_features must lie in 1..={k}, got {}", self.max_features)));
        }
        if !(self.bootstrap_fraction > 0.0 && self.bootstrap_fraction <= 1.0) {
            return Err(Error::invalid("bootstrap_fraction must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Tuning grid: 200 trees, `min_leaf` in {1, 5, 10, 25}, `max_features` in
/// {ceil(K/3), K}.
pub fn default_grid(k: usize) -> Vec<ForestHyperparams> {
    let third = k.div_ceil(3).max(1);
    let mut feats = vec![third];
    if k != third {
        feats.push(k);
    }
    let mut grid = Vec::new();
    for &min_leaf in &[1, 5, 10, 25] {
        for &mf in &feats {
            grid.push(ForestHyperparams::new(200, min_leaf, mf));
        }
    }
    grid
}

/// Bounds applied to every propensity prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Clip {
    pub lo: f64,
    pub hi: f64,
}

impl Default for Clip {
    fn default() -> Self {
        Clip { lo: 0.001, hi: 0.999 }
    }
}

impl Clip {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            return Err(Error::invalid(format!("clip bounds must satisfy 0 < lo < hi < 1, got ({lo}, {hi})")));
        }
        Ok(Clip { lo, hi })
    }

    #[inline]
    pub fn apply(&self, p: f64) -> f64 {
        p.clamp(self.lo, self.hi)
    }
}

/// Column-major covariate matrix.
#[derive(Debug, Clone)]
pub struct Features {
    n: usize,
    cols: Vec<Vec<f64>>,
    binary: Vec<Option<(f64, f64)>>,
}

impl Features {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::invalid("empty covariate matrix"));
        }
        let k = rows[0].len();
        if k == 0 || rows.iter().any(|r| r.len() != k) {
            return Err(Error::invalid("covariate rows must be nonempty and rectangular"));
        }
        let cols: Vec<Vec<f64>> = (0..k).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        Ok(Self::from_columns(cols))
    }

    pub fn from_dataset(ds: &Dataset) -> Self {
        let cols = (0..ds.dim_x())
            .map(|j| ds.observations().iter().map(|o| o.x[j]).collect())
            .collect();
        Self::from_columns(cols)
    }

    fn from_columns(cols: Vec<Vec<f64>>) -> Self {
        let n = cols[0].len();
        let binary = cols.iter().map(|c| two_levels(c)).collect();
        Features { n, cols, binary }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.cols.len()
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.cols[j][i]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.cols.iter().map(|c| c[i]).collect()
    }
}

/// Returns the two sorted levels if the column takes at most two values.
fn two_levels(col: &[f64]) -> Option<(f64, f64)> {
    let a = col[0];
    let mut b = None;
    for &v in col {
        if v != a {
            match b {
                None => b = Some(v),
                Some(bv) if bv != v => return None,
                _ => {}
            }
        }
    }
    let b = b.unwrap_or(a);
    Some((a.min(b), a.max(b)))
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    #[inline]
    fn predict_with(&self, value: impl Fn(usize) -> f64) -> f64 {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf(v) => return v,
                Node::Split { feature, threshold, left, right } => {
                    id = if value(feature) <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.predict_with(|j| x[j])
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }
}

struct SplitCandidate {
    feature: usize,
    threshold: f64,
    score: f64,
}

struct TreeBuilder<'a> {
    x: &'a Features,
    target: &'a [f64],
    min_leaf: usize,
    max_features: usize,
    pairs: Vec<(f64, f64)>,
    order: Vec<usize>,
}

impl TreeBuilder<'_> {
    fn build(&mut self, sample: &mut [usize], rng: &mut ChaCha8Rng) -> RegressionTree {
        let mut nodes = vec![Node::Leaf(0.0)];
        let mut stack = vec![(0usize, 0usize, sample.len())];
        while let Some((id, lo, hi)) = stack.pop() {
            let idx = &mut sample[lo..hi];
            let m = idx.len();
            let sum: f64 = idx.iter().map(|&i| self.target[i]).sum();
            let mean = sum / m as f64;
            let pure = idx.iter().all(|&i| self.target[i] == self.target[idx[0]]);
            if pure || m < 2 * self.min_leaf {
                nodes[id] = Node::Leaf(mean);
                continue;
            }
            let Some(best) = self.best_split(idx, sum, rng) else {
                nodes[id] = Node::Leaf(mean);
                continue;
            };
            let mut left_len = 0;
            for p in 0..m {
                if self.x.value(idx[p], best.feature) <= best.threshold {
                    idx.swap(p, left_len);
                    left_len += 1;
                }
            }
            debug_assert!(left_len >= self.min_leaf && m - left_len >= self.min_leaf);
            let left = nodes.len();
            nodes.push(Node::Leaf(0.0));
            nodes.push(Node::Leaf(0.0));
            nodes[id] = Node::Split {
                feature: best.feature,
                threshold: best.threshold,
                left,
                right: left + 1,
            };
            stack.push((left + 1, lo + left_len, hi));
            stack.push((left, lo, lo + left_len));
        }
        RegressionTree { nodes }
    }

    /// Visits features in random order until `max_features` non-constant ones
    /// have been examined, keeping the split with the largest reduction in
    /// squared error (possibly zero).
    fn best_split(&mut self, idx: &[usize], total: f64, rng: &mut ChaCha8Rng) -> Option<SplitCandidate> {
        let k = self.x.k();
        let m = idx.len();
        let min_leaf = self.min_leaf;
        for (j, o) in self.order.iter_mut().enumerate() {
            *o = j;
        }
        let mut best: Option<SplitCandidate> = None;
        let mut visited = 0;
        for slot in 0..k {
            let pick = rng.random_range(slot..k);
            self.order.swap(slot, pick);
            let f = self.order[slot];
            let candidate = if let Some((a, b)) = self.x.binary[f] {
                if a == b {
                    continue;
                }
                let mut n_lo = 0usize;
                let mut s_lo = 0.0;
                for &i in idx {
                    if self.x.value(i, f) == a {
                        n_lo += 1;
                        s_lo += self.target[i];
                    }
                }
                if n_lo == 0 || n_lo == m {
                    continue;
                }
                visited += 1;
                let n_hi = m - n_lo;
                if n_lo < min_leaf || n_hi < min_leaf {
                    None
                } else {
                    let s_hi = total - s_lo;
                    Some(SplitCandidate {
                        feature: f,
                        threshold: midpoint(a, b),
                        score: s_lo * s_lo / n_lo as f64 + s_hi * s_hi / n_hi as f64,
                    })
                }
            } else {
                self.pairs.clear();
                self.pairs.extend(idx.iter().map(|&i| (self.x.value(i, f), self.target[i])));
                self.pairs.sort_unstable_by(|p, q| p.0.total_cmp(&q.0));
                if self.pairs[0].0 == self.pairs[m - 1].0 {
                    continue;
                }
                visited += 1;
                let mut s_left = 0.0;
                let mut local: Option<SplitCandidate> = None;
                for pos in 0..m - 1 {
                    s_left += self.pairs[pos].1;
                    let n_left = pos + 1;
                    if n_left < min_leaf {
                        continue;
                    }
                    let n_right = m - n_left;
                    if n_right < min_leaf {
                        break;
                    }
                    let (v, next) = (self.pairs[pos].0, self.pairs[pos + 1].0);
                    if v == next {
                        continue;
                    }
                    let s_right = total - s_left;
                    let score = s_left * s_left / n_left as f64 + s_right * s_right / n_right as f64;
                    if local.as_ref().is_none_or(|c| score > c.score) {
                        local = Some(SplitCandidate { feature: f, threshold: midpoint(v, next), score });
                    }
                }
                local
            };
            if let Some(c) = candidate {
                if best.as_ref().is_none_or(|b| c.score > b.score) {
                    best = Some(c);
                }
            }
            if visited >= self.max_features {
                break;
            }
        }
        best
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let t = a + (b - a) * 0.5;
    if t >= b {
        a
    } else {
        t
    }
}

/// Fitted forest with clipped predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct PropensityModel {
    trees: Vec<RegressionTree>,
    clip: Clip,
    dim_x: usize,
}

impl PropensityModel {
    pub fn clip(&self) -> Clip {
        self.clip
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    fn mean_with(&self, value: impl Fn(usize) -> f64 + Copy) -> f64 {
        self.trees.iter().map(|t| t.predict_with(value)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn predict_unclipped(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim_x {
            return Err(Error::invalid(format!("expected {} covariates, got {}", self.dim_x, x.len())));
        }
        Ok(self.mean_with(|j| x[j]))
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(self.clip.apply(self.predict_unclipped(x)?))
    }

    /// Per-tree predictions at `x`, in tree order.
    pub fn tree_predictions(&self, x: &[f64]) -> Vec<f64> {
        self.trees.iter().map(|t| t.predict(x)).collect()
    }

    /// Clipped predictions for the given rows and the number that were clipped.
    pub fn predict_rows(&self, x: &Features, rows: &[usize]) -> (Vec<f64>, usize) {
        let mut clipped = 0;
        let mut buf = vec![0.0; x.k()];
        let preds = rows
            .iter()
            .map(|&i| {
                for (j, b) in buf.iter_mut().enumerate() {
                    *b = x.value(i, j);
                }
                let raw = self.mean_with(|j| buf[j]);
                let p = self.clip.apply(raw);
                if p != raw {
                    clipped += 1;
                }
                p
            })
            .collect();
        (preds, clipped)
    }
}

/// Fits a forest to `target` using only the listed rows of `x`.
pub fn fit_forest_on_rows(
    x: &Features,
    target: &[f64],
    rows: &[usize],
    hp: &ForestHyperparams,
    clip: Clip,
    seed: Seed,
) -> Result<PropensityModel> {
    hp.validate(x.k())?;
    if rows.is_empty() {
        return Err(Error::invalid("cannot fit a forest on zero rows"));
    }
    if target.len() != x.n() {
        return Err(Error::invalid("target length does not match covariate rows"));
    }
    let m = rows.len();
    let draw = ((hp.bootstrap_fraction * m as f64).round() as usize).clamp(1, m);
    let trees = (0..hp.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed.child(t as u64).rng();
            let mut sample: Vec<usize> = if hp.bootstrap {
                (0..draw).map(|_| rows[rng.random_range(0..m)]).collect()
            } else if draw == m {
                rows.to_vec()
            } else {
                let mut s = rows.to_vec();
                s.partial_shuffle(&mut rng, draw);
                s.truncate(draw);
                s
            };
            let mut builder = TreeBuilder {
                x,
                target,
                min_leaf: hp.min_leaf,
                max_features: hp.max_features,
                pairs: Vec::with_capacity(sample.len()),
                order: vec![0; x.k()],
            };
            builder.build(&mut sample, &mut rng)
        })
        .collect();
    Ok(PropensityModel { trees, clip, dim_x: x.k() })
}

/// Fits a propensity forest to binary selection indicators.
pub fn fit_random_forest(
    x_rows: &[Vec<f64>],
    d: &[bool],
    hp: &ForestHyperparams,
    clip: Clip,
    seed: Seed,
) -> Result<PropensityModel> {
    if x_rows.is_empty() {
        return Err(Error::invalid("empty data"));
    }
    if x_rows.len() != d.len() {
        return Err(Error::invalid("x and d lengths differ"));
    }
    let x = Features::from_rows(x_rows)?;
    let target: Vec<f64> = d.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let rows: Vec<usize> = (0..x.n()).collect();
    fit_forest_on_rows(&x, &target, &rows, hp, clip, seed)
}

/// Picks the grid member with the smallest cross-validated squared error of
/// the clipped prediction. Ties go to the earlier grid entry.
pub fn tune_forest_cv(
    x: &Features,
    target: &[f64],
    rows: &[usize],
    grid: &[ForestHyperparams],
    folds: usize,
    clip: Clip,
    seed: Seed,
) -> Result<ForestHyperparams> {
    if grid.is_empty() {
        return Err(Error::invalid("tuning grid is empty"));
    }
    if folds < 2 {
        return Err(Error::invalid("cross-validation needs at least 2 folds"));
    }
    if grid.len() == 1 {
        grid[0].validate(x.k())?;
        return Ok(grid[0].clone());
    }
    let partition = partition_folds(rows.len(), folds, &mut seed.rng())?;
    let fold_rows: Vec<Vec<usize>> = partition
        .folds()
        .iter()
        .map(|f| f.iter().map(|&p| rows[p]).collect())
        .collect();
    let train_rows: Vec<Vec<usize>> = (0..folds)
        .map(|l| {
            partition
                .complement(&[l])
                .into_iter()
                .map(|p| rows[p])
                .collect()
        })
        .collect();
    let mut best: Option<(f64, usize)> = None;
    for (g, hp) in grid.iter().enumerate() {
        let mut sse = 0.0;
        for l in 0..folds {
            let model = fit_forest_on_rows(x, target, &train_rows[l], hp, clip, seed.child(g as u64 + 1).child(l as u64))?;
            let (pred, _) = model.predict_rows(x, &fold_rows[l]);
            sse += fold_rows[l]
                .iter()
                .zip(&pred)
                .map(|(&i, p)| (target[i] - p).powi(2))
                .sum::<f64>();
        }
        let mse = sse / rows.len() as f64;
        if best.is_none_or(|(b, _)| mse < b) {
            best = Some((mse, g));
        }
    }
    Ok(grid[best.map(|(_, g)| g).unwrap_or(0)].clone())
}

/// Cross-validated MSE of one hyperparameter set, exposed for diagnostics.
pub fn cv_mse(
    x: &Features,
    target: &[f64],
    rows: &[usize],
    hp: &ForestHyperparams,
    folds: usize,
    clip: Clip,
    seed: Seed,
) -> Result<f64> {
    let partition = partition_folds(rows.len(), folds, &mut seed.rng())?;
    let mut sse = 0.0;
    for l in 0..folds {
        let train: Vec<usize> = partition.complement(&[l]).into_iter().map(|p| rows[p]).collect();
        let test: Vec<usize> = partition.fold(l).iter().map(|&p| rows[p]).collect();
        let model = fit_forest_on_rows(x, target, &train, hp, clip, seed.child(l as u64))?;
        let (pred, _) = model.predict_rows(x, &test);
        sse += test.iter().zip(&pred).map(|(&i, p)| (target[i] - p).powi(2)).sum::<f64>();
    }
    Ok(sse / rows.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn grid_rows(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = Seed::new(seed).rng();
        (0..n)
            .map(|_| vec![rng.random_range(-2.0..2.0), f64::from(rng.random_range(0..2u8)), rng.random::<f64>()])
            .collect()
    }

    #[test]
    fn constant_targets_hit_clip_bounds() {
        let x = grid_rows(40, 1);
        let clip = Clip::default();
        let hp = ForestHyperparams::new(10, 1, 3);
        let ones = fit_random_forest(&x, &vec![true; 40], &hp, clip, Seed::new(2)).unwrap();
        let zeros = fit_random_forest(&x, &vec![false; 40], &hp, clip, Seed::new(2)).unwrap();
        for r in &x {
            assert_eq!(ones.predict(r).unwrap(), 0.999);
            assert_eq!(zeros.predict(r).unwrap(), 0.001);
        }
    }

    #[test]
    fn min_leaf_n_gives_sample_mean() {
        let x = grid_rows(30, 3);
        let d: Vec<bool> = (0..30).map(|i| i % 3 == 0).collect();
        let mut hp = ForestHyperparams::new(1, 30, 3);
        hp.bootstrap = false;
        let model = fit_random_forest(&x, &d, &hp, Clip::default(), Seed::new(4)).unwrap();
        for r in &x {
            assert!((model.predict(r).unwrap() - 10.0 / 30.0).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let x = grid_rows(20, 5);
        let d: Vec<bool> = (0..20).map(|i| i % 2 == 0).collect();
        let model = fit_random_forest(&x, &d, &ForestHyperparams::new(3, 2, 2), Clip::default(), Seed::new(1)).unwrap();
        assert!(model.predict(&[0.0, 1.0]).is_err());
        assert!(fit_random_forest(&[], &[], &ForestHyperparams::new(3, 2, 2), Clip::default(), Seed::new(1)).is_err());
    }

    /// Six points on two features with min_leaf = 3 admit exactly one split
    /// per feature, so every tree is one of two stumps whose leaf values can be
    /// enumerated by hand.
    #[test]
    fn two_tree_ensemble_matches_hand_enumeration() {
        let x = vec![
            vec![0.0, 5.0],
            vec![1.0, 4.0],
            vec![2.0, 0.0],
            vec![3.0, 3.0],
            vec![4.0, 1.0],
            vec![5.0, 2.0],
        ];
        let d = vec![false, false, true, true, true, false];
        let mut hp = ForestHyperparams::new(2, 3, 1);
        hp.bootstrap = false;
        let model = fit_random_forest(&x, &d, &hp, Clip::new(1e-9, 1.0 - 1e-9).unwrap(), Seed::new(11)).unwrap();
        // Feature 0 splits {0,1,2} | {3,4,5}: leaves 1/3 and 2/3.
        // Feature 1 splits {x1 <= 2: rows 2,4,5} | {rows 0,1,3}: leaves 2/3 and 1/3.
        let stump0 = |r: &[f64]| if r[0] <= 2.5 { 1.0 / 3.0 } else { 2.0 / 3.0 };
        let stump1 = |r: &[f64]| if r[1] <= 2.5 { 2.0 / 3.0 } else { 1.0 / 3.0 };
        for q in [vec![0.5, 0.5], vec![4.5, 4.5], vec![1.0, 1.0], vec![4.0, 4.0]] {
            let per_tree = model.tree_predictions(&q);
            for p in &per_tree {
                assert!((p - stump0(&q)).abs() < 1e-15 || (p - stump1(&q)).abs() < 1e-15);
            }
            let mean = (per_tree[0] + per_tree[1]) / 2.0;
            assert!((model.predict(&q).unwrap() - mean).abs() < 1e-15);
        }
    }

    #[test]
    fn deep_trees_interpolate_step() {
        let x: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64 / 10.0 - 2.5]).collect();
        let d: Vec<bool> = x.iter().map(|r| r[0] > 0.0).collect();
        let mut hp = ForestHyperparams::new(1, 1, 1);
        hp.bootstrap = false;
        let model = fit_random_forest(&x, &d, &hp, Clip::default(), Seed::new(1)).unwrap();
        assert_eq!(model.trees()[0].n_leaves(), 2);
        assert_eq!(model.predict(&[1.0]).unwrap(), 0.999);
        assert_eq!(model.predict(&[-1.0]).unwrap(), 0.001);
    }

    #[test]
    fn cv_prefers_deep_trees_on_step_function() {
        let mut rng = Seed::new(21).rng();
        let rows: Vec<Vec<f64>> = (0..120).map(|_| vec![rng.random_range(-1.0..1.0)]).collect();
        let target: Vec<f64> = rows.iter().map(|r| f64::from(u8::from(r[0] > 0.0))).collect();
        let x = Features::from_rows(&rows).unwrap();
        let all: Vec<usize> = (0..120).collect();
        let deep = ForestHyperparams::new(20, 1, 1);
        let stump = ForestHyperparams::new(20, 120, 1);
        let clip = Clip::default();
        let mse_deep = cv_mse(&x, &target, &all, &deep, 5, clip, Seed::new(5)).unwrap();
        let mse_stump = cv_mse(&x, &target, &all, &stump, 5, clip, Seed::new(5)).unwrap();
        assert!(mse_deep < 0.05 && mse_stump > 0.2, "{mse_deep} {mse_stump}");
        let chosen = tune_forest_cv(&x, &target, &all, &[stump.clone(), deep.clone()], 5, clip, Seed::new(5)).unwrap();
        assert_eq!(chosen, deep);
        let again = tune_forest_cv(&x, &target, &all, &[stump, deep.clone()], 5, clip, Seed::new(5)).unwrap();
        assert_eq!(chosen, again);
    }

    #[test]
    fn single_element_grid_returned() {
        let rows = grid_rows(12, 2);
        let x = Features::from_rows(&rows).unwrap();
        let target = vec![0.0; 12];
        let hp = ForestHyperparams::new(7, 2, 1);
        let got = tune_forest_cv(&x, &target, &(0..12).collect::<Vec<_>>(), std::slice::from_ref(&hp), 3, Clip::default(), Seed::new(0)).unwrap();
        assert_eq!(got, hp);
    }

    #[test]
    fn default_grid_shape() {
        let g = default_grid(10);
        assert_eq!(g.len(), 8);
        assert!(g.iter().all(|h| h.n_trees == 200 && (h.max_features == 4 || h.max_features == 10)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn predictions_within_clip_and_deterministic(seed in any::<u64>(), lo in 0.01f64..0.2, width in 0.1f64..0.7) {
            let clip = Clip::new(lo, lo + width).unwrap();
            let x = grid_rows(60, seed);
            let mut rng = Seed::new(seed ^ 7).rng();
            let d: Vec<bool> = (0..60).map(|_| rng.random_bool(0.4)).collect();
            let hp = ForestHyperparams::new(8, 2, 2);
            let a = fit_random_forest(&x, &d, &hp, clip, Seed::new(seed)).unwrap();
            let b = fit_random_forest(&x, &d, &hp, clip, Seed::new(seed)).unwrap();
            for q in grid_rows(100, seed.wrapping_add(1)) {
                let p = a.predict(&q).unwrap();
                prop_assert!(p >= clip.lo && p <= clip.hi);
                prop_assert_eq!(p.to_bits(), b.predict(&q).unwrap().to_bits());
            }
        }
    }
}
