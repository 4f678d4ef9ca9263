use std::path::Path;
use std::process::{Command, Output};

use fragilis::refclass::{read_csv, Strictness};
use fragilis::{assets, Metric};
use serde_json::Value;
use tempfile::TempDir;

fn fragilis(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fragilis"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("FRAGILIS_DATA_DIR")
        .output()
        .unwrap()
}

fn read_json(path: impl AsRef<Path>) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn appraise_stylized_dam() {
    let dir = TempDir::new().unwrap();
    let out = fragilis(&["appraise", "stylized-dam", "--format", "svg"], dir.path());
    assert_exit(&out, 0);
    let v = read_json(dir.path().join("appraisal.json"));
    assert!((v["result"]["bcr"].as_f64().unwrap() - 1.4).abs() < 1e-12);
    assert!((v["result"]["break_even_overrun"].as_f64().unwrap() - 1.4).abs() < 1e-12);
    assert!(v["fragility_index"].is_null());
    assert!(dir.path().join("payoff.csv").is_file());
    let svg = std::fs::read_to_string(dir.path().join("payoff.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("cum_pain"));
}

#[test]
fn stress_is_byte_identical_across_runs_and_threads() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = ["stress", "stylized-dam", "--dist", "big-dam", "--trials", "200000", "--seed", "7"];
    assert_exit(&fragilis(&args, a.path()), 0);
    let mut with_threads = args.to_vec();
    with_threads.extend(["--threads", "3"]);
    assert_exit(&fragilis(&with_threads, b.path()), 0);
    let ja = std::fs::read(a.path().join("stress.json")).unwrap();
    let jb = std::fs::read(b.path().join("stress.json")).unwrap();
    assert_eq!(ja, jb);
    let v: Value = serde_json::from_slice(&ja).unwrap();
    assert_eq!(v["seed"], 7);
    assert!((v["p_break"].as_f64().unwrap() - 0.47).abs() < 0.01);

    let manifest = read_json(a.path().join("stress.manifest.json"));
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 2);
    let digest = manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .find(|o| o["name"] == "stress.json")
        .unwrap()["sha256"]
        .as_str()
        .unwrap()
        .to_string();
    assert_eq!(digest.len(), 64);
    if let Some(expected) = system_sha256(&a.path().join("stress.json")) {
        assert_eq!(digest, expected);
    }
}

/// SHA-256 from the system tool, so the manifest digest is not checked
/// against the code that produced it. `None` when the tool is missing.
fn system_sha256(path: &Path) -> Option<String> {
    let out = Command::new("sha256sum").arg(path).output().ok()?;
    out.status
        .success()
        .then(|| String::from_utf8_lossy(&out.stdout).split_whitespace().next().unwrap_or_default().to_string())
}

#[test]
fn stress_without_seed_records_the_generated_one() {
    let dir = TempDir::new().unwrap();
    let out = fragilis(&["stress", "stylized-dam", "--trials", "1000"], dir.path());
    assert_exit(&out, 0);
    let seed = read_json(dir.path().join("stress.json"))["seed"].as_u64().unwrap();
    assert_eq!(read_json(dir.path().join("stress.manifest.json"))["seed"].as_u64(), Some(seed));

    // Re-running with the recorded seed reproduces the result.
    let again = TempDir::new().unwrap();
    let s = seed.to_string();
    assert_exit(&fragilis(&["stress", "stylized-dam", "--trials", "1000", "--seed", &s], again.path()), 0);
    assert_eq!(
        std::fs::read(dir.path().join("stress.json")).unwrap(),
        std::fs::read(again.path().join("stress.json")).unwrap()
    );
}

#[test]
fn stats_shares_match_brute_force_counts() {
    let dir = TempDir::new().unwrap();
    let out = fragilis(
        &["stats", "synthetic-dams", "--metric", "cost", "--threshold", "1.4", "--threshold", "2", "--group", "region"],
        dir.path(),
    );
    assert_exit(&out, 0);
    let v = read_json(dir.path().join("stats.json"));
    let class = read_csv(assets::SYNTHETIC_DAMS.as_bytes(), "x", Strictness::Strict).unwrap().class;
    let ratios: Vec<f64> = class.records().iter().map(|r| r.act_cost / r.est_cost).collect();
    for (i, t) in [1.4, 2.0].iter().enumerate() {
        let count = ratios.iter().filter(|&&x| x >= *t).count();
        let share = v["summary"]["share_breaking"][i]["share"].as_f64().unwrap();
        assert_eq!(share, count as f64 / ratios.len() as f64);
    }
    let groups = v["groups"].as_object().unwrap();
    let total: u64 = groups.values().map(|g| g["n"].as_u64().unwrap()).sum();
    assert_eq!(total as usize, class.ratios(Metric::Cost).len());
    assert!(dir.path().join("quantiles.csv").is_file());
    assert!(dir.path().join("shares.csv").is_file());
}

#[test]
fn density_and_tests_run_on_the_fixture() {
    let dir = TempDir::new().unwrap();
    assert_exit(&fragilis(&["density", "synthetic-dams", "--format", "svg"], dir.path()), 0);
    let d = read_json(dir.path().join("density.json"));
    assert!((d["integral"].as_f64().unwrap() - 1.0).abs() < 0.01);
    assert!(dir.path().join("density.svg").is_file());

    assert_exit(&fragilis(&["test", "synthetic-dams", "--kind", "anova", "--group", "decade"], dir.path()), 0);
    let t = read_json(dir.path().join("test.json"));
    let p = t["result"]["p_value"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));

    assert_exit(&fragilis(&["test", "synthetic-dams", "--kind", "trend"], dir.path()), 0);
    assert_exit(
        &fragilis(
            &["test", "synthetic-dams", "--kind", "mann-whitney", "--group", "region", "--pair", "Africa,Asia"],
            dir.path(),
        ),
        0,
    );
    let t = read_json(dir.path().join("test.json"));
    assert_eq!(t["result"]["method"], "normal_approx");
    // Mann-Whitney over six regions needs an explicit pair.
    assert_exit(&fragilis(&["test", "synthetic-dams", "--kind", "mann-whitney", "--group", "region"], dir.path()), 2);
}

#[test]
fn grid_and_contingency() {
    let dir = TempDir::new().unwrap();
    assert_exit(&fragilis(&["grid", "stylized-dam", "--format", "svg"], dir.path()), 0);
    let g = read_json(dir.path().join("grid.json"));
    assert_eq!(g["grid"]["benefit_mults"], serde_json::json!([0.85, 1.0, 1.15]));
    assert_eq!(g["grid"]["cost_mults"], serde_json::json!([1.0, 1.15]));
    let csv = std::fs::read_to_string(dir.path().join("grid.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);

    assert_exit(&fragilis(&["contingency", "stylized-dam", "--coverage", "0.8"], dir.path()), 0);
    let c = read_json(dir.path().join("contingency.json"));
    assert!((c["result"]["adjusted_bcr"].as_f64().unwrap() - 1.4 / 1.99).abs() < 1e-9);
    assert_eq!(c["result"]["proceed"], false);
}

#[test]
fn ingest_reports_row_and_field() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("bad.csv");
    let mut text: String = assets::SYNTHETIC_DAMS.lines().take(4).collect::<Vec<_>>().join("\n");
    text.push_str("\nX1,Bad,Nowhere,Atlantis,hydroelectric,1960,10,12,10,12,,\n");
    std::fs::write(&csv, text).unwrap();

    let strict = fragilis(&["ingest", csv.to_str().unwrap(), "--strict"], &dir.path().join("s"));
    assert_exit(&strict, 2);
    let err = String::from_utf8_lossy(&strict.stderr);
    assert!(err.contains("row 5") && err.contains("region"), "{err}");

    let lenient = fragilis(&["ingest", csv.to_str().unwrap()], &dir.path().join("l"));
    assert_exit(&lenient, 0);
    let v = read_json(dir.path().join("l/ingest.json"));
    assert_eq!(v["n_records"], 3);
    assert_eq!(v["skipped"][0]["row"], 5);
    assert_eq!(v["skipped"][0]["field"], "region");
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    // Unknown enum value on the command line.
    assert_exit(&fragilis(&["stats", "synthetic-dams", "--metric", "weight"], dir.path()), 2);
    // Missing input.
    assert_exit(&fragilis(&["appraise", "no-such-model.json"], dir.path()), 2);

    // A mean target the anchors cannot reach with a finite-mean tail.
    let dist = dir.path().join("impossible.json");
    std::fs::write(
        &dist,
        r#"{"anchors": [{"p": 0.5, "x": 1.0}, {"p": 0.9, "x": 2.0}], "tail": {"calibrate_mean": 50.0}}"#,
    )
    .unwrap();
    let out = fragilis(&["stress", "stylized-dam", "--dist", dist.to_str().unwrap(), "--seed", "1"], dir.path());
    assert_exit(&out, 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("calibration"));

    // Malformed model JSON.
    let model = dir.path().join("model.json");
    std::fs::write(&model, r#"{"discount_rate": 0.1, "capex": []}"#).unwrap();
    assert_exit(&fragilis(&["appraise", model.to_str().unwrap()], dir.path()), 2);
}

#[test]
fn data_dir_overrides_bundled_assets() {
    let data = TempDir::new().unwrap();
    let out = TempDir::new().unwrap();
    let mut model: Value = serde_json::from_str(assets::STYLIZED_DAM).unwrap();
    model["discount_rate"] = serde_json::json!(0.0);
    std::fs::write(data.path().join("stylized-dam.json"), model.to_string()).unwrap();

    let status = Command::new(env!("CARGO_BIN_EXE_fragilis"))
        .args(["appraise", "stylized-dam", "--out"])
        .arg(out.path())
        .env("FRAGILIS_DATA_DIR", data.path())
        .status()
        .unwrap();
    assert!(status.success());
    let v = read_json(out.path().join("appraisal.json"));
    assert_eq!(v["discount_rate"], 0.0);
    assert!(v["model"].as_str().unwrap().ends_with("stylized-dam.json"));
    assert!(!v["model"].as_str().unwrap().starts_with("bundled:"));
}

fn numeric_literals(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Number(_) => out.push(v.to_string()),
        Value::Array(a) => a.iter().for_each(|x| numeric_literals(x, out)),
        Value::Object(o) => o.values().for_each(|x| numeric_literals(x, out)),
        _ => {}
    }
}

#[test]
fn report_embeds_artifact_numbers_verbatim() {
    let dir = TempDir::new().unwrap();
    assert_exit(&fragilis(&["appraise", "stylized-dam"], dir.path()), 0);
    assert_exit(&fragilis(&["stress", "stylized-dam", "--trials", "5000", "--seed", "3"], dir.path()), 0);
    assert_exit(&fragilis(&["contingency", "stylized-dam"], dir.path()), 0);
    let status = Command::new(env!("CARGO_BIN_EXE_fragilis"))
        .arg("report")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let report = std::fs::read_to_string(dir.path().join("report.md")).unwrap();
    for file in ["appraisal.json", "stress.json", "contingency.json"] {
        // Literal text from the file, not a re-serialization.
        let raw = std::fs::read_to_string(dir.path().join(file)).unwrap();
        let mut nums = Vec::new();
        numeric_literals(&serde_json::from_str(&raw).unwrap(), &mut nums);
        assert!(!nums.is_empty());
        for n in nums {
            assert!(raw.contains(&n), "{file}: {n} not literal in JSON");
            assert!(report.contains(&format!("`{n}`")), "{file}: {n} missing from report");
        }
    }
    let m = read_json(dir.path().join("report.manifest.json"));
    assert_eq!(m["inputs"].as_array().unwrap().len(), 3);
}

#[test]
fn report_on_empty_directory_fails() {
    let dir = TempDir::new().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_fragilis"))
        .arg("report")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
