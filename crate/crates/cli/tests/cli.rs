use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mdlasso_cli::{normal_quantile, ModelDocument};

fn mdlasso(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdlasso"))
        .current_dir(dir)
        .args(args)
        .env_remove("MDLASSO_THREADS")
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Deterministic scrambled values in (0, 1).
fn uniform(i: usize, j: usize) -> f64 {
    let mut h = (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (j as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    h ^= h >> 29;
    h = h.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    h ^= h >> 32;
    ((h >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

fn write_csv(path: &Path, x: &[Vec<f64>], y: &[f64]) {
    let p = x[0].len();
    let mut text = String::from("y");
    for j in 0..p {
        text.push_str(&format!(",x{j}"));
    }
    text.push('\n');
    for (row, yi) in x.iter().zip(y) {
        text.push_str(&yi.to_string());
        for v in row {
            text.push_str(&format!(",{v}"));
        }
        text.push('\n');
    }
    fs::write(path, text).unwrap();
}

/// `y = X beta + noise` with `X` entries uniform on (-2, 2).
fn linear_csv(dir: &Path, n: usize, beta: &[f64], noise: impl Fn(usize) -> f64) -> PathBuf {
    let x: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..beta.len()).map(|j| 4.0 * uniform(i, j) - 2.0).collect())
        .collect();
    let y: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(i, row)| row.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>() + noise(i))
        .collect();
    let path = dir.join("data.csv");
    write_csv(&path, &x, &y);
    path
}

fn read_model(path: &Path) -> ModelDocument {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn qq_pairs(text: &str) -> Vec<(f64, f64)> {
    text.lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect()
}

const BETA: [f64; 6] = [2.0, 0.0, -1.5, 0.0, 0.0, 1.0];

#[test]
fn huge_penalty_gives_zero_model() {
    let dir = tempfile::tempdir().unwrap();
    linear_csv(dir.path(), 40, &BETA, |i| uniform(i, 99) - 0.5);
    for estimator in [
        "md_lasso",
        "lasso",
        "lad_lasso",
        "irw_md_lasso",
        "trimmed_lasso",
    ] {
        let out = mdlasso(
            dir.path(),
            &[
                "fit",
                "--input",
                "data.csv",
                "--estimator",
                estimator,
                "--lambda",
                "1e9",
                "--output",
                "m.json",
            ],
        );
        assert_eq!(out.status.code(), Some(0), "{estimator}: {}", stderr(&out));
        let model = read_model(&dir.path().join("m.json"));
        assert!(model.coefficients.iter().all(|&b| b == 0.0), "{estimator}");
        assert!(model.top_predictors.is_empty());
    }
}

#[test]
fn noiseless_data_recovers_truth() {
    let dir = tempfile::tempdir().unwrap();
    linear_csv(dir.path(), 80, &BETA, |_| 0.0);
    let out = mdlasso(
        dir.path(),
        &[
            "fit",
            "--input",
            "data.csv",
            "--estimator",
            "md_lasso",
            "--c",
            "5",
            "--lambda",
            "1e-4",
            "--output",
            "m.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let model = read_model(&dir.path().join("m.json"));
    for (got, want) in model.coefficients.iter().zip(BETA) {
        assert!((got - want).abs() <= 1e-3, "{got} vs {want}");
    }
    assert!(model.intercept.abs() <= 1e-3);
    assert_eq!(model.top_predictors[0].name, "x0");
    assert_eq!(model.c, Some(5.0));
    assert!(model.converged);
}

#[test]
fn missing_response_column_is_named() {
    let dir = tempfile::tempdir().unwrap();
    linear_csv(dir.path(), 20, &BETA, |_| 0.0);
    let out = mdlasso(
        dir.path(),
        &[
            "fit",
            "--input",
            "data.csv",
            "--response",
            "target",
            "--lambda",
            "0.1",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("target"), "{}", stderr(&out));
}

#[test]
fn malformed_cells_report_row_and_column() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.csv"), "y,a,b\n1,2,3\n4,oops,6\n").unwrap();
    let out = mdlasso(
        dir.path(),
        &["fit", "--input", "bad.csv", "--lambda", "0.1"],
    );
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(msg.contains("row 2") && msg.contains("column a"), "{msg}");
}

#[test]
fn omitted_lambda_is_tuned() {
    let dir = tempfile::tempdir().unwrap();
    linear_csv(dir.path(), 60, &BETA, |i| uniform(i, 7) - 0.5);
    let out = mdlasso(
        dir.path(),
        &["fit", "--input", "data.csv", "--output", "m.json"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let model = read_model(&dir.path().join("m.json"));
    assert!(model.lambda_tuned && model.lambda > 0.0);
    assert_eq!(model.estimator, "md_lasso");
    assert_eq!(model.c, Some(5.0));
}

#[test]
fn strict_mode_fails_unconverged_fits() {
    let dir = tempfile::tempdir().unwrap();
    linear_csv(dir.path(), 40, &BETA, |i| uniform(i, 3) - 0.5);
    let args = [
        "fit",
        "--input",
        "data.csv",
        "--lambda",
        "0.001",
        "--max-iterations",
        "1",
        "--output",
        "m.json",
    ];
    assert_eq!(mdlasso(dir.path(), &args).status.code(), Some(0));
    let mut strict = args.to_vec();
    strict.push("--strict");
    let out = mdlasso(dir.path(), &strict);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("did not converge"));
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    linear_csv(dir.path(), 40, &BETA, |i| uniform(i, 5) - 0.5);
    fs::write(
        dir.path().join("cfg.json"),
        r#"{"input": "data.csv", "estimator": "lasso", "lambda": 1e9, "output": "m.json"}"#,
    )
    .unwrap();
    assert_eq!(
        mdlasso(dir.path(), &["fit", "--config", "cfg.json"])
            .status
            .code(),
        Some(0)
    );
    let model = read_model(&dir.path().join("m.json"));
    assert_eq!(model.estimator, "lasso");
    assert!(model.coefficients.iter().all(|&b| b == 0.0));

    assert_eq!(
        mdlasso(
            dir.path(),
            &["fit", "--config", "cfg.json", "--lambda", "0.01"]
        )
        .status
        .code(),
        Some(0)
    );
    let model = read_model(&dir.path().join("m.json"));
    assert_eq!(model.lambda, 0.01);
    assert!(model.coefficients.iter().any(|&b| b != 0.0));

    fs::write(
        dir.path().join("typo.json"),
        r#"{"input": "data.csv", "lamda": 0.1}"#,
    )
    .unwrap();
    let out = mdlasso(dir.path(), &["fit", "--config", "typo.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("lamda"));
}

#[test]
fn invalid_estimator_settings_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    linear_csv(dir.path(), 20, &BETA, |_| 0.0);
    for args in [
        vec![
            "fit",
            "--input",
            "data.csv",
            "--estimator",
            "ridge",
            "--lambda",
            "0.1",
        ],
        vec!["fit", "--input", "data.csv", "--lambda", "-1"],
        vec![
            "fit",
            "--input",
            "data.csv",
            "--estimator",
            "lasso",
            "--c",
            "5",
            "--lambda",
            "0.1",
        ],
        vec![
            "fit",
            "--input",
            "data.csv",
            "--estimator",
            "extended_lasso",
            "--lambda",
            "0.1",
        ],
        vec!["fit", "--lambda", "0.1"],
        vec!["fit", "--input", "absent.csv", "--lambda", "0.1"],
        vec!["frobnicate"],
    ] {
        assert_eq!(
            mdlasso(dir.path(), &args).status.code(),
            Some(2),
            "{args:?}"
        );
    }
}

#[test]
fn qq_pairs_of_exact_quantiles_lie_on_identity() {
    let dir = tempfile::tempdir().unwrap();
    let n = 25;
    let y: Vec<f64> = (0..n)
        .rev()
        .map(|i| normal_quantile((i as f64 + 0.5) / n as f64))
        .collect();
    let x: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
    write_csv(&dir.path().join("q.csv"), &x, &y);
    fs::write(
        dir.path().join("zero.json"),
        r#"{"response": "y", "feature_names": ["x0"], "coefficients": [0.0], "intercept": 0.0}"#,
    )
    .unwrap();
    let out = mdlasso(
        dir.path(),
        &["qqdata", "--model", "zero.json", "--input", "q.csv"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let pairs = qq_pairs(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(pairs.len(), n);
    assert!(pairs.iter().all(|(t, r)| (t - r).abs() <= 1e-10));
}

#[test]
fn single_row_gives_median_pair() {
    let dir = tempfile::tempdir().unwrap();
    write_csv(&dir.path().join("one.csv"), &[vec![2.0]], &[3.5]);
    fs::write(
        dir.path().join("m.json"),
        r#"{"response": "y", "feature_names": ["x0"], "coefficients": [1.0], "intercept": 0.5}"#,
    )
    .unwrap();
    let out = mdlasso(
        dir.path(),
        &[
            "qqdata", "--model", "m.json", "--input", "one.csv", "--output", "qq.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let pairs = qq_pairs(&fs::read_to_string(dir.path().join("qq.csv")).unwrap());
    assert_eq!(pairs, vec![(0.0, 1.0)]);
}

#[test]
fn heavy_tailed_fit_has_heavy_right_tail() {
    let dir = tempfile::tempdir().unwrap();
    let cauchy = |i: usize| (std::f64::consts::PI * (uniform(i, 42) - 0.5)).tan();
    linear_csv(dir.path(), 100, &BETA, cauchy);
    let fit = mdlasso(
        dir.path(),
        &[
            "fit", "--input", "data.csv", "--lambda", "0.05", "--output", "m.json",
        ],
    );
    assert_eq!(fit.status.code(), Some(0), "{}", stderr(&fit));
    let out = mdlasso(
        dir.path(),
        &["qqdata", "--model", "m.json", "--input", "data.csv"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let pairs = qq_pairs(&String::from_utf8(out.stdout).unwrap());
    let (top_quantile, top_residual) = *pairs.last().unwrap();
    assert!(
        top_residual > top_quantile,
        "{top_residual} vs {top_quantile}"
    );
}

#[test]
fn qqdata_rejects_mismatched_data() {
    let dir = tempfile::tempdir().unwrap();
    linear_csv(dir.path(), 20, &BETA, |_| 0.0);
    fs::write(
        dir.path().join("m.json"),
        r#"{"response": "y", "feature_names": ["x0", "x1"], "coefficients": [1.0, 2.0], "intercept": 0.0}"#,
    )
    .unwrap();
    let out = mdlasso(
        dir.path(),
        &["qqdata", "--model", "m.json", "--input", "data.csv"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bounds_exit_codes_follow_tail_condition() {
    let dir = tempfile::tempdir().unwrap();
    let cauchy = mdlasso(dir.path(), &["bounds", "--dist", "cauchy", "--c", "1"]);
    assert_eq!(cauchy.status.code(), Some(4));
    let msg = stderr(&cauchy);
    assert!(msg.contains("0.70483") && msg.contains("0.59523"), "{msg}");

    let normal = mdlasso(
        dir.path(),
        &[
            "bounds", "--dist", "normal", "--c", "10", "--output", "b.json",
        ],
    );
    assert_eq!(normal.status.code(), Some(0), "{}", stderr(&normal));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("b.json")).unwrap()).unwrap();
    assert!((report["tail_mass"].as_f64().unwrap() - 0.11385).abs() < 1e-4);
    assert!(report["rate"]["value"].as_f64().unwrap().is_finite());

    let lemma1 = mdlasso(
        dir.path(),
        &[
            "bounds", "--dist", "normal", "--c", "10", "--which", "lemma1",
        ],
    );
    assert!(String::from_utf8(lemma1.stdout)
        .unwrap()
        .contains("gradient bound: truncated"));
    assert_eq!(
        mdlasso(
            dir.path(),
            &["bounds", "--dist", "normal", "--c", "10", "--which", "lemma3"]
        )
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        mdlasso(dir.path(), &["bounds", "--dist", "normal"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn curves_cover_default_grid() {
    let dir = tempfile::tempdir().unwrap();
    for (dist, file) in [("normal", "gauss.csv"), ("cauchy", "cauchy.csv")] {
        let out = mdlasso(
            dir.path(),
            &["bounds", "--curve", "--dist", dist, "--output", file],
        );
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        let text = fs::read_to_string(dir.path().join(file)).unwrap();
        let points = qq_pairs(&text);
        assert_eq!(points.len(), 40);
        assert_eq!((points[0].0, points[39].0), (5.0, 200.0));
        assert!(points.iter().all(|(_, f)| f.is_finite() && *f > 0.0));
    }
    let same = mdlasso(dir.path(), &["curve", "--dist", "cauchy"]);
    assert_eq!(
        same.stdout,
        fs::read(dir.path().join("cauchy.csv")).unwrap()
    );
}

#[test]
fn tune_and_stability_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    linear_csv(dir.path(), 60, &BETA, |i| uniform(i, 11) - 0.5);
    let out = mdlasso(
        dir.path(),
        &[
            "tune",
            "--input",
            "data.csv",
            "--c-grid",
            "2,5",
            "--lambda-count",
            "5",
            "--folds",
            "3",
            "--output",
            "t.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("t.json")).unwrap()).unwrap();
    assert_eq!(report["grid"].as_array().unwrap().len(), 10);
    assert!(report["chosen"]["lambda"].as_f64().unwrap() > 0.0);

    let out = mdlasso(
        dir.path(),
        &[
            "stability",
            "--input",
            "data.csv",
            "--estimator",
            "lasso",
            "--lambda",
            "0.05",
            "--bootstrap",
            "20",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("predictor,index,count,frequency"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "x0");
    assert!(first[2].parse::<usize>().unwrap() <= 20);
}

fn simulate_args(out_dir: &str) -> Vec<String> {
    [
        "simulate",
        "--n",
        "40",
        "--p",
        "20",
        "--replications",
        "2",
        "--seed",
        "7",
        "--error",
        "gauss_mixture",
        "--lambda-count",
        "5",
        "--estimators",
        "md_lasso:c=5,lasso",
        "--out-dir",
        out_dir,
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

#[test]
fn simulate_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for (k, threads) in ["1", "3"].iter().enumerate() {
        let out_dir = format!("run{k}");
        let args = simulate_args(&out_dir);
        let out = Command::new(env!("CARGO_BIN_EXE_mdlasso"))
            .current_dir(dir.path())
            .args(&args)
            .arg("--verbose")
            .env("MDLASSO_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        assert!(
            stderr(&out).contains("error variance check") && stderr(&out).contains(": ok"),
            "{}",
            stderr(&out)
        );
        assert!(String::from_utf8(out.stdout)
            .unwrap()
            .contains("md_lasso:c=5"));
        let base = dir.path().join(&out_dir);
        runs.push((
            fs::read(base.join("records.csv")).unwrap(),
            fs::read(base.join("summary.json")).unwrap(),
        ));
    }
    assert_eq!(runs[0], runs[1]);
    let header = String::from_utf8(runs[0].0.clone()).unwrap();
    assert!(header.starts_with("replication,estimator,lambda,model_error,f1"));
    assert!(!header.contains("runtime"));
}

#[test]
fn bad_thread_setting_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_mdlasso"))
        .current_dir(dir.path())
        .args(["bounds", "--dist", "normal", "--c", "10"])
        .env("MDLASSO_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("MDLASSO_THREADS"));
}
