//! Markdown summary of the JSON artifacts in a directory. Every number is
//! copied as its JSON literal, never recomputed or reformatted.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde_json::Value;

use crate::args::ReportArgs;
use crate::commands::report_run;
use crate::error::{CliError, CliResult};

/// Known artifacts in report order, with the fields worth a headline.
const ARTIFACTS: [(&str, &str, &[&str]); 8] = [
    ("ingest.json", "Ingestion", &["/n_records"]),
    (
        "stats.json",
        "Reference-class statistics",
        &["/summary/n", "/summary/mean", "/summary/median", "/summary/iqr", "/summary/share_over_1"],
    ),
    ("density.json", "Density trace", &["/n", "/bandwidth"]),
    ("test.json", "Hypothesis test", &["/result/statistic", "/result/p_value"]),
    (
        "appraisal.json",
        "Appraisal",
        &[
            "/result/npv",
            "/result/bcr",
            "/result/irr",
            "/result/break_even_overrun",
            "/result/break_even_delay",
        ],
    ),
    ("grid.json", "Sensitivity grid", &[]),
    (
        "stress.json",
        "Stress test",
        &["/n_trials", "/seed", "/base_bcr", "/p_break", "/p_break_se", "/mean_npv"],
    ),
    (
        "contingency.json",
        "Contingency",
        &["/result/coverage", "/result/contingency", "/result/adjusted_bcr", "/result/proceed"],
    ),
];

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                flatten(&format!("{prefix}/{k}"), child, rows);
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                flatten(&format!("{prefix}/{i}"), child, rows);
            }
        }
        leaf => rows.push((prefix.to_string(), leaf.to_string())),
    }
}

fn section(out: &mut String, title: &str, file: &str, doc: &Value, headline: &[&str]) {
    let _ = writeln!(out, "## {title}\n\nSource: `{file}`\n");
    for ptr in headline {
        if let Some(v) = doc.pointer(ptr) {
            let _ = writeln!(out, "- **{}**: `{v}`", ptr.trim_start_matches('/'));
        }
    }
    if !headline.is_empty() {
        out.push('\n');
    }
    let mut rows = Vec::new();
    flatten("", doc, &mut rows);
    let _ = writeln!(out, "<details><summary>All fields</summary>\n\n| field | value |\n|---|---|");
    for (k, v) in rows {
        let _ = writeln!(out, "| `{}` | `{}` |", k.trim_start_matches('/'), v.replace('|', "\\|"));
    }
    let _ = writeln!(out, "\n</details>\n");
}

pub fn run(a: ReportArgs, argv: Vec<String>) -> CliResult<()> {
    let out_dir: PathBuf = a.out.clone().unwrap_or_else(|| a.dir.clone());
    let mut run = report_run(argv, &out_dir)?;
    let mut body = String::from("# Fragility report\n\n");
    let mut found = 0;
    for (file, title, headline) in ARTIFACTS {
        let path = a.dir.join(file);
        let Ok(bytes) = std::fs::read(&path) else { continue };
        let doc: Value = serde_json::from_slice(&bytes).map_err(|e| CliError::Parse {
            source_name: path.display().to_string(),
            message: e.to_string(),
        })?;
        run.input(file, &path, &bytes);
        section(&mut body, title, file, &doc, headline);
        found += 1;
    }
    if found == 0 {
        return Err(CliError::Usage(format!("no JSON artifacts found in {}", a.dir.display())));
    }
    run.write("report.md", body.as_bytes())?;
    run.finish()
}
