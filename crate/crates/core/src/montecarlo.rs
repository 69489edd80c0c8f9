//! Replication driver, summary metrics and table rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::EstimatorTag;
use crate::dgp::{calibrate_constant, generate_sample, SimulationDesign};
use crate::error::{Error, Result};
use crate::estimators::{estimate_many, resolve_hyperparams, EstimatorConfig};
use crate::seed::{tags, Seed};

/// One estimator's output on one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub n: usize,
    pub rep_id: usize,
    pub estimator_tag: EstimatorTag,
    /// Empty when the fit failed.
    pub beta_hat: Vec<f64>,
    pub se: Vec<f64>,
    pub covariance_min_eigenvalue: f64,
    pub covariance_trace: f64,
    /// Wall-clock seconds of the whole replication, shared by its records.
    pub elapsed: f64,
    pub failure: Option<String>,
}

impl ReplicationRecord {
    pub fn is_ok(&self) -> bool {
        self.failure.is_none()
    }
}

/// Fills in `c` by calibration when the design does not carry one.
pub fn ensure_calibrated(design: &SimulationDesign) -> Result<SimulationDesign> {
    let mut d = design.clone();
    if d.c.is_none() {
        d.c = Some(calibrate_constant(&d, Seed::new(d.seed))?);
    }
    Ok(d)
}

/// Hyperparameters actually used by a run: with `tune_per_fit` off and none
/// given, the grid is tuned once on a pilot sample that is not one of the
/// replications.
pub fn run_config(design: &SimulationDesign, config: &EstimatorConfig, master: Seed) -> Result<EstimatorConfig> {
    let mut config = config.clone();
    if !config.tune_per_fit && config.hyperparams.is_none() && config.grid(design.beta.len()).len() > 1 {
        let pilot = generate_sample(design, master.child(tags::PILOT))?;
        let mut tuning = config.clone().with_seed(master.child(tags::PILOT).child(tags::TUNING).value());
        tuning.tune_per_fit = true;
        config.hyperparams = Some(resolve_hyperparams(&pilot, &tuning)?);
    }
    Ok(config)
}

/// Runs `reps` replications. Replication `b` draws its sample and its
/// estimation seed from `master.child(b)`, so the output does not depend on
/// the number of worker threads.
pub fn run_design(
    design: &SimulationDesign,
    estimators: &[EstimatorTag],
    reps: usize,
    config: &EstimatorConfig,
    master: Seed,
) -> Result<Vec<ReplicationRecord>> {
    if reps == 0 {
        return Err(Error::invalid("need at least one replication"));
    }
    let design = ensure_calibrated(design)?;
    let config = run_config(&design, config, master)?;
    let per_rep: Vec<Vec<ReplicationRecord>> = (0..reps)
        .into_par_iter()
        .map(|b| run_replication(&design, estimators, &config, master, b))
        .collect();
    Ok(per_rep.into_iter().flatten().collect())
}

pub fn run_replication(
    design: &SimulationDesign,
    estimators: &[EstimatorTag],
    config: &EstimatorConfig,
    master: Seed,
    b: usize,
) -> Vec<ReplicationRecord> {
    let start = Instant::now();
    let rep_seed = master.child(b as u64);
    let failed = |tag: EstimatorTag, msg: String| ReplicationRecord {
        n: design.n,
        rep_id: b,
        estimator_tag: tag,
        beta_hat: Vec::new(),
        se: Vec::new(),
        covariance_min_eigenvalue: f64::NAN,
        covariance_trace: f64::NAN,
        elapsed: 0.0,
        failure: Some(msg),
    };
    let ds = match generate_sample(design, rep_seed) {
        Ok(ds) => ds,
        Err(e) => return estimators.iter().map(|&t| failed(t, e.to_string())).collect(),
    };
    let config = config.clone().with_seed(rep_seed.child(tags::ESTIMATE).value());
    let results = estimate_many(&ds, estimators, &config);
    let elapsed = start.elapsed().as_secs_f64();
    results
        .into_iter()
        .map(|(tag, r)| match r {
            Ok(fit) => ReplicationRecord {
                n: design.n,
                rep_id: b,
                estimator_tag: tag,
                covariance_min_eigenvalue: fit.diagnostics.get("covariance_min_eigenvalue").copied().unwrap_or(f64::NAN),
                covariance_trace: (0..fit.beta.len()).map(|k| fit.covariance[k][k]).sum(),
                beta_hat: fit.beta,
                se: fit.standard_errors,
                elapsed,
                failure: None,
            },
            Err(e) => ReplicationRecord { elapsed, ..failed(tag, e.to_string()) },
        })
        .collect()
}

/// Metrics of one estimator, aggregated over coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub estimator_tag: EstimatorTag,
    pub average_bias: f64,
    pub average_sd: f64,
    pub average_coverage: f64,
    pub max_coverage: f64,
    pub min_coverage: f64,
    pub successes: usize,
    pub failures: usize,
}

/// Per-coefficient metrics behind an [`EstimatorSummary`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentMetrics {
    pub bias: Vec<f64>,
    pub sd: Vec<f64>,
    pub coverage: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub n: usize,
    pub rows: Vec<EstimatorSummary>,
    /// Estimators whose every replication failed, with the failure count.
    pub absent: Vec<(EstimatorTag, usize)>,
}

impl SummaryTable {
    pub fn get(&self, tag: EstimatorTag) -> Option<&EstimatorSummary> {
        self.rows.iter().find(|r| r.estimator_tag == tag)
    }
}

/// Mean absolute error, standard deviation (divisor `R`) and coverage of
/// `|b - beta| <= z se`, per coefficient.
pub fn component_metrics(records: &[&ReplicationRecord], true_beta: &[f64], z: f64) -> ComponentMetrics {
    let r = records.len() as f64;
    let k = true_beta.len();
    let mut bias = vec![0.0; k];
    let mut sd = vec![0.0; k];
    let mut coverage = vec![0.0; k];
    for j in 0..k {
        let mean = records.iter().map(|rec| rec.beta_hat[j]).sum::<f64>() / r;
        bias[j] = records.iter().map(|rec| (rec.beta_hat[j] - true_beta[j]).abs()).sum::<f64>() / r;
        sd[j] = (records.iter().map(|rec| (rec.beta_hat[j] - mean).powi(2)).sum::<f64>() / r).sqrt();
        coverage[j] = records
            .iter()
            .filter(|rec| (rec.beta_hat[j] - true_beta[j]).abs() <= z * rec.se[j])
            .count() as f64
            / r;
    }
    ComponentMetrics { bias, sd, coverage }
}

pub fn summarize(records: &[ReplicationRecord], true_beta: &[f64], z: f64) -> Result<SummaryTable> {
    let n = records.first().map(|r| r.n).ok_or_else(|| Error::invalid("no records to summarize"))?;
    if records.iter().any(|r| r.n != n) {
        return Err(Error::invalid("records mix sample sizes; summarize each n separately"));
    }
    let mut table = SummaryTable { n, rows: Vec::new(), absent: Vec::new() };
    for tag in EstimatorTag::ALL {
        let mine: Vec<&ReplicationRecord> = records.iter().filter(|r| r.estimator_tag == tag).collect();
        if mine.is_empty() {
            continue;
        }
        let ok: Vec<&ReplicationRecord> = mine.iter().copied().filter(|r| r.is_ok()).collect();
        let failures = mine.len() - ok.len();
        if ok.is_empty() {
            table.absent.push((tag, failures));
            continue;
        }
        if ok.iter().any(|r| r.beta_hat.len() != true_beta.len() || r.se.len() != true_beta.len()) {
            return Err(Error::invalid("record dimension does not match true beta"));
        }
        let m = component_metrics(&ok, true_beta, z);
        let k = true_beta.len() as f64;
        table.rows.push(EstimatorSummary {
            estimator_tag: tag,
            average_bias: m.bias.iter().sum::<f64>() / k,
            average_sd: m.sd.iter().sum::<f64>() / k,
            average_coverage: m.coverage.iter().sum::<f64>() / k,
            max_coverage: m.coverage.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min_coverage: m.coverage.iter().copied().fold(f64::INFINITY, f64::min),
            successes: ok.len(),
            failures,
        });
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Markdown,
    Csv,
}

const METRICS: [&str; 5] = ["Average Bias", "Average SD", "Average Coverage", "Max Coverage", "Min Coverage"];

fn metric_values(s: &EstimatorSummary) -> [f64; 5] {
    [s.average_bias, s.average_sd, s.average_coverage, s.max_coverage, s.min_coverage]
}

fn panel_letter(i: usize) -> char {
    char::from(b'A' + (i % 26) as u8)
}

/// Table with one panel per sample size and one column per estimator, in
/// the order LR, Robinson, Robinson+Orth, Robinson+CF.
pub fn render_table(summaries: &[SummaryTable], format: TableFormat) -> Result<String> {
    if summaries.is_empty() {
        return Err(Error::invalid("nothing to render"));
    }
    let mut panels: Vec<&SummaryTable> = summaries.iter().collect();
    panels.sort_by_key(|s| s.n);
    let cols: Vec<EstimatorTag> = EstimatorTag::ALL
        .into_iter()
        .filter(|t| panels.iter().any(|p| p.get(*t).is_some() || p.absent.iter().any(|(a, _)| a == t)))
        .collect();
    let mut out = String::new();
    match format {
        TableFormat::Markdown => {
            out.push_str("|  |");
            for (i, t) in cols.iter().enumerate() {
                let _ = write!(out, " ({}) {} |", i + 1, t.long_name());
            }
            out.push_str("\n|---|");
            out.push_str(&"---:|".repeat(cols.len()));
            out.push('\n');
            for (p, panel) in panels.iter().enumerate() {
                let _ = write!(out, "| **Panel {}: n = {}** |", panel_letter(p), panel.n);
                out.push_str(&" |".repeat(cols.len()));
                out.push('\n');
                for (m, name) in METRICS.iter().enumerate() {
                    let _ = write!(out, "| {name} |");
                    for t in &cols {
                        match panel.get(*t) {
                            Some(s) => {
                                let _ = write!(out, " {:.3} |", metric_values(s)[m]);
                            }
                            None => out.push_str(" n/a |"),
                        }
                    }
                    out.push('\n');
                }
            }
            let failures: Vec<String> = panels
                .iter()
                .flat_map(|p| {
                    p.rows
                        .iter()
                        .filter(|r| r.failures > 0)
                        .map(move |r| format!("n = {}, {}: {} failed", p.n, r.estimator_tag, r.failures))
                        .chain(p.absent.iter().map(move |(t, f)| format!("n = {}, {}: all {} failed", p.n, t, f)))
                })
                .collect();
            if !failures.is_empty() {
                out.push_str("\nFailed replications: ");
                out.push_str(&failures.join("; "));
                out.push('\n');
            }
        }
        TableFormat::Csv => {
            out.push_str("n,estimator,average_bias,average_sd,average_coverage,max_coverage,min_coverage,successes,failures\n");
            for panel in &panels {
                for t in &cols {
                    if let Some(s) = panel.get(*t) {
                        let v = metric_values(s);
                        let _ = writeln!(
                            out,
                            "{},{},{:.3},{:.3},{:.3},{:.3},{:.3},{},{}",
                            panel.n, t, v[0], v[1], v[2], v[3], v[4], s.successes, s.failures
                        );
                    } else if let Some((_, f)) = panel.absent.iter().find(|(a, _)| a == t) {
                        let _ = writeln!(out, "{},{},,,,,,0,{}", panel.n, t, f);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Parses the CSV rendering of [`render_table`] back into summaries.
pub fn parse_summary_csv<R: Read>(reader: R) -> Result<Vec<SummaryTable>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut panels: BTreeMap<usize, SummaryTable> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| Error::Schema { row: i + 1, column: what.into(), message: "unparseable".into() };
        let n: usize = rec.get(0).and_then(|v| v.parse().ok()).ok_or_else(|| bad("n"))?;
        let tag = rec.get(1).and_then(EstimatorTag::from_short_name).ok_or_else(|| bad("estimator"))?;
        let num = |j: usize, name: &str| rec.get(j).and_then(|v| v.parse::<f64>().ok()).ok_or_else(|| bad(name));
        let count = |j: usize, name: &str| rec.get(j).and_then(|v| v.parse::<usize>().ok()).ok_or_else(|| bad(name));
        let panel = panels.entry(n).or_insert_with(|| SummaryTable { n, rows: Vec::new(), absent: Vec::new() });
        if rec.get(2) == Some("") {
            panel.absent.push((tag, count(8, "failures")?));
            continue;
        }
        panel.rows.push(EstimatorSummary {
            estimator_tag: tag,
            average_bias: num(2, "average_bias")?,
            average_sd: num(3, "average_sd")?,
            average_coverage: num(4, "average_coverage")?,
            max_coverage: num(5, "max_coverage")?,
            min_coverage: num(6, "min_coverage")?,
            successes: count(7, "successes")?,
            failures: count(8, "failures")?,
        });
    }
    Ok(panels.into_values().collect())
}

/// Long-format records: one line per (replication, estimator, coefficient),
/// 17 significant digits. Failed fits are skipped here; see
/// [`write_failures_csv`].
pub fn write_records_csv<W: Write>(records: &[ReplicationRecord], mut w: W) -> Result<()> {
    writeln!(w, "n,rep_id,estimator,k,beta_hat,se")?;
    for r in records.iter().filter(|r| r.is_ok()) {
        for (k, (b, s)) in r.beta_hat.iter().zip(&r.se).enumerate() {
            writeln!(w, "{},{},{},{},{:.16e},{:.16e}", r.n, r.rep_id, r.estimator_tag, k + 1, b, s)?;
        }
    }
    Ok(())
}

pub fn write_failures_csv<W: Write>(records: &[ReplicationRecord], mut w: W) -> Result<()> {
    writeln!(w, "n,rep_id,estimator,reason")?;
    for r in records {
        if let Some(reason) = &r.failure {
            let reason = reason.replace(['\n', '\r'], " ").replace('"', "'");
            writeln!(w, "{},{},{},\"{}\"", r.n, r.rep_id, r.estimator_tag, reason)?;
        }
    }
    Ok(())
}

/// Reads records written by [`write_records_csv`].
pub fn read_records_csv<R: Read>(reader: R) -> Result<Vec<ReplicationRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out: Vec<ReplicationRecord> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| Error::Schema { row: i + 1, column: what.into(), message: "unparseable".into() };
        let n: usize = rec.get(0).and_then(|v| v.parse().ok()).ok_or_else(|| bad("n"))?;
        let rep_id: usize = rec.get(1).and_then(|v| v.parse().ok()).ok_or_else(|| bad("rep_id"))?;
        let tag = rec.get(2).and_then(EstimatorTag::from_short_name).ok_or_else(|| bad("estimator"))?;
        let b: f64 = rec.get(4).and_then(|v| v.parse().ok()).ok_or_else(|| bad("beta_hat"))?;
        let s: f64 = rec.get(5).and_then(|v| v.parse().ok()).ok_or_else(|| bad("se"))?;
        match out.last_mut() {
            Some(last) if last.n == n && last.rep_id == rep_id && last.estimator_tag == tag => {
                last.beta_hat.push(b);
                last.se.push(s);
            }
            _ => out.push(ReplicationRecord {
                n,
                rep_id,
                estimator_tag: tag,
                beta_hat: vec![b],
                se: vec![s],
                covariance_min_eigenvalue: f64::NAN,
                covariance_trace: f64::NAN,
                elapsed: 0.0,
                failure: None,
            }),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::ForestHyperparams;

    fn rec(rep: usize, tag: EstimatorTag, b: Vec<f64>, se: Vec<f64>) -> ReplicationRecord {
        ReplicationRecord {
            n: 10,
            rep_id: rep,
            estimator_tag: tag,
            beta_hat: b,
            se,
            covariance_min_eigenvalue: 0.0,
            covariance_trace: 0.0,
            elapsed: 0.0,
            failure: None,
        }
    }

    #[test]
    fn exact_estimates() {
        let rs: Vec<_> = (0..3).map(|b| rec(b, EstimatorTag::LocallyRobust, vec![1.0, 1.0], vec![0.1, 0.2])).collect();
        let s = summarize(&rs, &[1.0, 1.0], 1.96).unwrap();
        let row = s.get(EstimatorTag::LocallyRobust).unwrap();
        assert_eq!((row.average_bias, row.average_sd, row.average_coverage), (0.0, 0.0, 1.0));
    }

    #[test]
    fn two_point_hand_arithmetic() {
        let mk = |se| vec![rec(0, EstimatorTag::Robinson, vec![0.0], vec![se]), rec(1, EstimatorTag::Robinson, vec![2.0], vec![se])];
        let wide = summarize(&mk(10.0), &[1.0], 1.96).unwrap();
        let r = wide.get(EstimatorTag::Robinson).unwrap();
        assert_eq!((r.average_bias, r.average_sd, r.average_coverage), (1.0, 1.0, 1.0));
        let narrow = summarize(&mk(0.1), &[1.0], 1.96).unwrap();
        assert_eq!(narrow.get(EstimatorTag::Robinson).unwrap().average_coverage, 0.0);
    }

    #[test]
    fn failures_are_counted_not_dropped() {
        let mut bad = rec(1, EstimatorTag::LocallyRobust, vec![], vec![]);
        bad.failure = Some("degenerate".into());
        let mut all_bad = rec(0, EstimatorTag::Robinson, vec![], vec![]);
        all_bad.failure = Some("x".into());
        let rs = vec![rec(0, EstimatorTag::LocallyRobust, vec![1.0], vec![1.0]), bad, all_bad];
        let s = summarize(&rs, &[1.0], 1.96).unwrap();
        assert_eq!(s.get(EstimatorTag::LocallyRobust).unwrap().failures, 1);
        assert_eq!(s.absent, vec![(EstimatorTag::Robinson, 1)]);
        let md = render_table(&[s], TableFormat::Markdown).unwrap();
        assert!(md.contains("all 1 failed"));
    }

    fn sample_tables() -> Vec<SummaryTable> {
        let row = |tag, x: f64| EstimatorSummary {
            estimator_tag: tag,
            average_bias: 0.099 + x,
            average_sd: 0.095,
            average_coverage: 0.948 - x,
            max_coverage: 1.0,
            min_coverage: 0.88 - x,
            successes: 100,
            failures: 0,
        };
        vec![
            SummaryTable { n: 1000, rows: EstimatorTag::ALL.iter().map(|&t| row(t, 0.01)).collect(), absent: vec![] },
            SummaryTable { n: 250, rows: EstimatorTag::ALL.iter().map(|&t| row(t, 0.1)).collect(), absent: vec![] },
        ]
    }

    #[test]
    fn csv_round_trip() {
        let tables = sample_tables();
        let csv = render_table(&tables, TableFormat::Csv).unwrap();
        let parsed = parse_summary_csv(csv.as_bytes()).unwrap();
        assert_eq!(parsed.iter().map(|p| p.n).collect::<Vec<_>>(), vec![250, 1000]);
        assert_eq!(render_table(&parsed, TableFormat::Csv).unwrap(), csv);
        assert_eq!(parsed[1].rows[0].average_coverage, 0.938);
    }

    #[test]
    fn markdown_layout() {
        let md = render_table(&sample_tables()[..1], TableFormat::Markdown).unwrap();
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines.len(), 8);
        assert!(lines[0].contains("(1) Locally Robust") && lines[0].contains("(4) Robinson with Cross-fitting"));
        assert!(lines[2].contains("Panel A: n = 1000"));
        assert_eq!(lines[3], "| Average Bias | 0.109 | 0.109 | 0.109 | 0.109 |");
        assert_eq!(lines[5], "| Average Coverage | 0.938 | 0.938 | 0.938 | 0.938 |");
    }

    #[test]
    fn records_round_trip_exactly() {
        let rs = vec![
            rec(0, EstimatorTag::LocallyRobust, vec![1.0 / 3.0, -2.5e-17], vec![0.1, f64::MIN_POSITIVE]),
            rec(0, EstimatorTag::Robinson, vec![std::f64::consts::PI, 7.0], vec![1e300, 0.2]),
        ];
        let mut buf = Vec::new();
        write_records_csv(&rs, &mut buf).unwrap();
        let back = read_records_csv(&buf[..]).unwrap();
        for (a, b) in rs.iter().zip(&back) {
            assert_eq!(a.beta_hat, b.beta_hat);
            assert_eq!(a.se, b.se);
        }
    }

    #[test]
    fn run_design_smoke_and_thread_invariance() {
        let design = SimulationDesign::benchmark(200).with_c(0.16);
        let config = EstimatorConfig::default().with_hyperparams(ForestHyperparams::new(15, 5, 4));
        let one = run_design(&design, &EstimatorTag::ALL, 1, &config, Seed::new(3)).unwrap();
        assert_eq!(one.len(), 4);
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_design(&design, &EstimatorTag::ALL, 3, &config, Seed::new(3)).unwrap())
        };
        let (a, b) = (run(1), run(4));
        let bytes = |r: &[ReplicationRecord]| {
            let mut v = Vec::new();
            write_records_csv(r, &mut v).unwrap();
            v
        };
        assert_eq!(bytes(&a), bytes(&b));
        assert_eq!(bytes(&a[..4]), bytes(&one));
    }
}
