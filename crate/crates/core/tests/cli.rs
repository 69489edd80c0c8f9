use std::fs;

use selcorr::cli;
use selcorr::FitResult;

fn run(args: &[&str]) -> i32 {
    cli::run(std::iter::once("selcorr").chain(args.iter().copied()))
}

#[test]
fn generate_then_estimate_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let csv = dir.path().join("sample.csv");
    let json = dir.path().join("fits.json");
    let cache = cache.to_str().unwrap();
    assert_eq!(run(&["generate", "--n", "400", "--seed", "3", "--cache-dir", cache, "--out", csv.to_str().unwrap()]), 0);
    let code = run(&[
        "estimate", csv.to_str().unwrap(), "--n-trees", "30", "--min-leaf", "5", "--max-features", "3",
        "--estimators", "lr", "--json", json.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let fits: Vec<FitResult> = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(fits.len(), 1);
    assert_eq!(fits[0].beta.len(), 10);
    assert!(fits[0].standard_errors.iter().all(|s| s.is_finite() && *s > 0.0));
}

#[test]
fn schema_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    fs::write(&csv, "d,y,x1,x2\n1,0.5,0.1,0.2\n2,0.3,0.4,0.5\n").unwrap();
    assert_eq!(run(&["estimate", csv.to_str().unwrap()]), 2);
    let missing = dir.path().join("missing_column.csv");
    fs::write(&missing, "d,x1,x2\n1,0.1,0.2\n").unwrap();
    assert_eq!(run(&["estimate", missing.to_str().unwrap()]), 2);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[design]\nn = 100\nbogus = 1\n").unwrap();
    assert_eq!(run(&["calibrate", "--config", cfg.to_str().unwrap()]), 2);
}

#[test]
fn calibration_is_cached() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let cache = cache.to_str().unwrap();
    assert_eq!(run(&["calibrate", "--cache-dir", cache]), 0);
    let stored = fs::read_to_string(dir.path().join("cache/calibration.json")).unwrap();
    assert!(stored.contains("0.09375"), "{stored}");
    assert_eq!(run(&["calibrate", "--cache-dir", cache]), 0);
    assert_eq!(fs::read_to_string(dir.path().join("cache/calibration.json")).unwrap(), stored);
}

#[test]
fn collinear_covariates_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("collinear.csv");
    let mut text = String::from("d,y,x1,x2\n");
    for i in 0..300 {
        let x = ((i * 37) % 101) as f64 / 50.0 - 1.0;
        let d = (i * 13) % 7 < 4;
        let y = if d { 1.0 + x + 0.1 * ((i % 5) as f64) } else { 0.0 };
        text.push_str(&format!("{},{y},{x},{}\n", u8::from(d), 2.0 * x));
    }
    fs::write(&csv, text).unwrap();
    let code = run(&["estimate", csv.to_str().unwrap(), "--n-trees", "20", "--min-leaf", "5", "--max-features", "2", "--estimators", "lr"]);
    assert_eq!(code, 3);
}
