//! Command-line front end.
//!
//! A run is configured by an optional TOML file with `[design]`,
//! `[estimator]` and `[run]` sections. Every key can be overridden by the
//! flag of the same name in kebab case (`censor_target` -> `--censor-target`).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::data::{read_csv, Dataset, EstimatorTag, FitResult, IngestMode};
use crate::dgp::{calibrate_constant, generate_sample, ErrorLaw, IndexForm, Preset, SimulationDesign};
use crate::error::{Error, Result};
use crate::estimators::{estimate_many, EstimatorConfig};
use crate::learners::ForestHyperparams;
use crate::montecarlo::{render_table, run_design, summarize, write_failures_csv, write_records_csv, TableFormat};
use crate::seed::Seed;

pub const THREADS_ENV: &str = "SELCORR_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_CALIBRATION: i32 = 4;

fn parse_serde<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    toml::Value::String(s.to_string()).try_into().map_err(|e| e.to_string())
}

/// Simulation design keys (`[design]`).
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSection {
    /// Named design: benchmark, a1-a, a1-b, a1-c, a2-logistic, a2-t3, a2-t2, a3-log, a3-exp, a3-logexp
    #[arg(long, value_parser = parse_serde::<Preset>)]
    pub preset: Option<Preset>,
    /// Sample size
    #[arg(long)]
    pub n: Option<usize>,
    /// True coefficients, comma separated (10 values)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub beta: Option<Vec<f64>>,
    /// Correlation between the selection and outcome errors
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<f64>,
    /// Selection error law: normal, logistic, t3, t2
    #[arg(long, value_parser = parse_serde::<ErrorLaw>)]
    pub error_law: Option<ErrorLaw>,
    /// Target share of censored observations
    #[arg(long)]
    pub censor_target: Option<f64>,
    /// Selection index form: benchmark, log, exp, log-exp, constant
    #[arg(long, value_parser = parse_serde::<IndexForm>)]
    pub h_form: Option<IndexForm>,
    /// Index constant; calibrated to the censoring target when absent
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
    /// Seed of the calibration draws
    #[arg(long)]
    pub calibration_seed: Option<u64>,
    /// Draw n/2 rows and append an exact copy of them
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub repeated: Option<bool>,
}

/// Estimator keys (`[estimator]`).
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    /// Cross-fitting folds (at least 3)
    #[arg(long)]
    pub folds: Option<usize>,
    /// Folds for cross-validating the forest grid
    #[arg(long)]
    pub cv_folds: Option<usize>,
    /// Tune the forest by cross-validation on every dataset
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub tune_per_fit: Option<bool>,
    /// Fixed forest size; setting any forest key disables tuning
    #[arg(long)]
    pub n_trees: Option<usize>,
    /// Fixed minimum leaf size
    #[arg(long)]
    pub min_leaf: Option<usize>,
    /// Fixed number of covariates tried per split
    #[arg(long)]
    pub max_features: Option<usize>,
    /// Lower propensity clip
    #[arg(long)]
    pub clip_lo: Option<f64>,
    /// Upper propensity clip
    #[arg(long)]
    pub clip_hi: Option<f64>,
}

/// Run keys (`[run]`).
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Root seed of the command
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (falls back to SELCORR_THREADS, then all cores)
    #[arg(long)]
    pub threads: Option<usize>,
    /// Estimators: lr, robinson, robinson-orth, robinson-cf, all (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub estimators: Option<Vec<String>>,
    /// Monte Carlo replications per sample size
    #[arg(long)]
    pub reps: Option<usize>,
    /// Sample sizes, one table panel each (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Output directory (simulate) or file (generate)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the fit results as JSON to this file (estimate)
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Reject rows with d = 0 and a nonzero outcome instead of zeroing them
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub strict: Option<bool>,
    /// Critical value for coverage
    #[arg(long)]
    pub z: Option<f64>,
    /// Directory of the calibration cache
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}

/// Contents of a configuration file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub design: DesignSection,
    #[serde(default)]
    pub estimator: EstimatorSection,
    #[serde(default)]
    pub run: RunSection,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

macro_rules! overlay {
    ($base:expr, $over:expr, $($field:ident),+) => {
        $( if $over.$field.is_some() { $base.$field = $over.$field.clone(); } )+
    };
}

impl DesignSection {
    fn overlay(&mut self, o: &Self) {
        overlay!(self, o, preset, n, beta, rho, error_law, censor_target, h_form, c, calibration_seed, repeated);
    }

    pub fn build(&self) -> Result<SimulationDesign> {
        let mut d = self.preset.unwrap_or(Preset::Benchmark).design(self.n.unwrap_or(1000));
        if let Some(b) = &self.beta {
            d.beta = b.clone();
        }
        if let Some(v) = self.rho {
            d.rho = v;
        }
        if let Some(v) = self.error_law {
            d.error_law = v;
        }
        if let Some(v) = self.censor_target {
            d.censor_target = v;
        }
        if let Some(v) = self.h_form {
            d.h_form = v;
        }
        d.c = self.c.or(d.c);
        if let Some(v) = self.calibration_seed {
            d.seed = v;
        }
        if let Some(v) = self.repeated {
            d.repeated = v;
        }
        d.validate()?;
        Ok(d)
    }
}

impl EstimatorSection {
    fn overlay(&mut self, o: &Self) {
        overlay!(self, o, folds, cv_folds, tune_per_fit, n_trees, min_leaf, max_features, clip_lo, clip_hi);
    }

    /// Missing forest keys default to the first entry of the tuning grid.
    pub fn build(&self, k: usize, seed: u64) -> Result<EstimatorConfig> {
        let mut c = EstimatorConfig::default().with_seed(seed);
        if let Some(v) = self.folds {
            c.folds = v;
        }
        if let Some(v) = self.cv_folds {
            c.cv_folds = v;
        }
        if let Some(v) = self.tune_per_fit {
            c.tune_per_fit = v;
        }
        if let Some(v) = self.clip_lo {
            c.clip_lo = v;
        }
        if let Some(v) = self.clip_hi {
            c.clip_hi = v;
        }
        if self.n_trees.is_some() || self.min_leaf.is_some() || self.max_features.is_some() {
            if self.tune_per_fit == Some(true) {
                return Err(Error::Config("fixed forest keys conflict with tune_per_fit = true".into()));
            }
            let first = c.grid(k)[0].clone();
            let hp = ForestHyperparams::new(
                self.n_trees.unwrap_or(first.n_trees),
                self.min_leaf.unwrap_or(first.min_leaf),
                self.max_features.unwrap_or(first.max_features),
            );
            c = c.with_hyperparams(hp);
        }
        c.validate(k)?;
        Ok(c)
    }
}

impl RunSection {
    fn overlay(&mut self, o: &Self) {
        overlay!(self, o, seed, threads, estimators, reps, sizes, out, json, strict, z, cache_dir);
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn estimator_tags(&self, default: &[EstimatorTag]) -> Result<Vec<EstimatorTag>> {
        let Some(names) = &self.estimators else {
            return Ok(default.to_vec());
        };
        let mut tags = Vec::new();
        for name in names {
            let parsed: &[EstimatorTag] = match name.trim() {
                "lr" => &[EstimatorTag::LocallyRobust],
                "robinson" => &[EstimatorTag::Robinson],
                "robinson-orth" => &[EstimatorTag::RobinsonOrthogonal],
                "robinson-cf" => &[EstimatorTag::RobinsonCrossfit],
                "all" => &EstimatorTag::ALL,
                other => return Err(Error::Config(format!("unknown estimator `{other}`"))),
            };
            for t in parsed {
                if !tags.contains(t) {
                    tags.push(*t);
                }
            }
        }
        tags.sort();
        Ok(tags)
    }

    /// Flag or config value, then `SELCORR_THREADS`.
    pub fn resolve_threads(&self) -> Result<Option<usize>> {
        if let Some(t) = self.threads {
            return Ok(Some(t));
        }
        match std::env::var(THREADS_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
            Err(_) => Ok(None),
        }
    }

    fn cache_dir(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| PathBuf::from(".selcorr-cache"))
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML file with [design], [estimator] and [run] sections
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub design: DesignSection,
    #[command(flatten)]
    pub estimator: EstimatorSection,
    #[command(flatten)]
    pub run: RunSection,
}

impl Common {
    /// File values overlaid by flags.
    pub fn resolve(&self) -> Result<FileConfig> {
        let mut cfg = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        cfg.design.overlay(&self.design);
        cfg.estimator.overlay(&self.estimator);
        cfg.run.overlay(&self.run);
        Ok(cfg)
    }
}

#[derive(Debug, Parser)]
#[command(name = "selcorr", version, about = "Locally robust estimation of sample selection models without exclusion restrictions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the outcome coefficients from a CSV with columns d, y, x...
    Estimate {
        /// Input CSV
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run Monte Carlo replications and write records and summary tables
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Calibrate the index constant to the censoring target
    Calibrate {
        #[command(flatten)]
        common: Common,
    },
    /// Draw one sample from a design and write it as CSV
    Generate {
        #[command(flatten)]
        common: Common,
    },
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Schema { .. } | Error::Consistency { .. } | Error::Config(_) => EXIT_SCHEMA,
        Error::DegenerateDesign(_) => EXIT_DEGENERATE,
        Error::Calibration(_) => EXIT_CALIBRATION,
        _ => EXIT_FAILURE,
    }
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::invalid(e.to_string()))?;
    pool.install(f)
}

/// Calibrated constants keyed by [`SimulationDesign::calibration_key`].
#[derive(Debug, Clone)]
pub struct CalibrationCache {
    path: PathBuf,
    entries: BTreeMap<String, f64>,
}

impl CalibrationCache {
    pub fn open(dir: &Path) -> Result<Self> {
        let path = dir.join("calibration.json");
        let entries = if path.exists() { serde_json::from_str(&fs::read_to_string(&path)?)? } else { BTreeMap::new() };
        Ok(CalibrationCache { path, entries })
    }

    /// Returns the constant and whether it came from the cache.
    pub fn resolve(&mut self, design: &SimulationDesign) -> Result<(f64, bool)> {
        if let Some(c) = design.c {
            return Ok((c, false));
        }
        let key = design.calibration_key();
        if let Some(&c) = self.entries.get(&key) {
            return Ok((c, true));
        }
        let c = calibrate_constant(design, Seed::new(design.seed))?;
        self.entries.insert(key, c);
        if let Some(dir) = self.path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&self.path, serde_json::to_string_pretty(&self.entries)? + "\n")?;
        Ok((c, false))
    }
}

fn calibrated(cfg: &FileConfig, design: SimulationDesign) -> Result<SimulationDesign> {
    let mut cache = CalibrationCache::open(&cfg.run.cache_dir())?;
    let (c, hit) = cache.resolve(&design)?;
    if hit {
        eprintln!("calibration cache hit: c = {c}");
    }
    Ok(design.with_c(c))
}

/// Coefficient table with parenthesized standard errors under each estimate.
pub fn render_coefficients(names: &[String], fits: &[FitResult]) -> String {
    let mut out = String::from("| Variable |");
    for (i, f) in fits.iter().enumerate() {
        let _ = write!(out, " ({}) {} |", i + 1, f.estimator_tag.long_name());
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(fits.len()));
    out.push('\n');
    for (k, name) in names.iter().enumerate() {
        let _ = write!(out, "| {name} |");
        for f in fits {
            let _ = write!(out, " {:.3} |", f.beta[k]);
        }
        out.push_str("\n|  |");
        for f in fits {
            let _ = write!(out, " ({:.3}) |", f.standard_errors[k]);
        }
        out.push('\n');
    }
    out
}

pub fn cmd_estimate(input: &Path, cfg: &FileConfig) -> Result<(Vec<FitResult>, String)> {
    let mode = if cfg.run.strict.unwrap_or(false) { IngestMode::Strict } else { IngestMode::Lenient };
    let (ds, report) = read_csv(fs::File::open(input)?, mode)?;
    if report.coerced_outcomes > 0 {
        eprintln!("warning: set the outcome to 0 on {} unselected rows", report.coerced_outcomes);
    }
    let config = cfg.estimator.build(ds.dim_x(), cfg.run.seed())?;
    let tags = cfg.run.estimator_tags(&[EstimatorTag::LocallyRobust, EstimatorTag::Robinson])?;
    let results = with_threads(cfg.run.resolve_threads()?, || Ok(estimate_many(&ds, &tags, &config)))?;
    let fits = results.into_iter().map(|(_, r)| r).collect::<Result<Vec<_>>>()?;
    let mut text = render_coefficients(ds.column_names(), &fits);
    let _ = writeln!(text, "\nObservations: {}; selected: {:.3}", ds.len(), ds.selection_rate());
    if let Some(path) = &cfg.run.json {
        fs::write(path, serde_json::to_string_pretty(&fits)? + "\n")?;
    }
    Ok((fits, text))
}

/// Writes `records.csv`, `failures.csv`, `summary.md` and `summary.csv`
/// into the output directory and returns the markdown summary.
pub fn cmd_simulate(cfg: &FileConfig) -> Result<String> {
    let base = cfg.design.build()?;
    let sizes = cfg.run.sizes.clone().unwrap_or_else(|| vec![base.n]);
    let reps = cfg.run.reps.unwrap_or(100);
    let tags = cfg.run.estimator_tags(&EstimatorTag::ALL)?;
    let out = cfg.run.out.clone().unwrap_or_else(|| PathBuf::from("selcorr-out"));
    let z = cfg.run.z.unwrap_or(1.96);
    let master = Seed::new(cfg.run.seed());
    let calibrated_base = calibrated(cfg, base)?;
    let mut records = Vec::new();
    let mut summaries = Vec::new();
    for &n in &sizes {
        let mut design = calibrated_base.clone();
        design.n = n;
        design.validate()?;
        let config = cfg.estimator.build(design.beta.len(), 0)?;
        let recs = with_threads(cfg.run.resolve_threads()?, || {
            run_design(&design, &tags, reps, &config, master.child(n as u64))
        })?;
        summaries.push(summarize(&recs, &design.beta, z)?);
        records.extend(recs);
    }
    fs::create_dir_all(&out)?;
    write_records_csv(&records, fs::File::create(out.join("records.csv"))?)?;
    write_failures_csv(&records, fs::File::create(out.join("failures.csv"))?)?;
    let md = render_table(&summaries, TableFormat::Markdown)?;
    fs::write(out.join("summary.md"), &md)?;
    fs::write(out.join("summary.csv"), render_table(&summaries, TableFormat::Csv)?)?;
    Ok(md)
}

pub fn cmd_calibrate(cfg: &FileConfig) -> Result<f64> {
    Ok(calibrated(cfg, cfg.design.build()?)?.c.expect("calibrated"))
}

/// Draws one sample; the seed is the `[run]` seed.
pub fn cmd_generate(cfg: &FileConfig) -> Result<Dataset> {
    let design = calibrated(cfg, cfg.design.build()?)?;
    let ds = generate_sample(&design, Seed::new(cfg.run.seed()))?;
    let out = cfg.run.out.clone().unwrap_or_else(|| PathBuf::from("sample.csv"));
    ds.write_csv(fs::File::create(out)?)?;
    Ok(ds)
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Estimate { input, common } => {
            let (_, text) = cmd_estimate(&input, &common.resolve()?)?;
            print!("{text}");
        }
        Command::Simulate { common } => print!("{}", cmd_simulate(&common.resolve()?)?),
        Command::Calibrate { common } => println!("{}", cmd_calibrate(&common.resolve()?)?),
        Command::Generate { common } => {
            let ds = cmd_generate(&common.resolve()?)?;
            eprintln!("wrote {} rows", ds.len());
        }
    }
    Ok(())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
