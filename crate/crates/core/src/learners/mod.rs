//! First-step propensity forest and second-step kernel regression.

pub mod forest;
pub mod kernel;

pub use forest::{
    cv_mse, default_grid, fit_forest_on_rows, fit_random_forest, tune_forest_cv, Clip, Features, ForestHyperparams,
    PropensityModel,
};
pub use kernel::{rule_of_thumb_bandwidth, KernelBundle, KernelEval, KernelFit};
