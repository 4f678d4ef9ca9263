use std::collections::BTreeMap;
use std::hash::BuildHasher;
use std::path::{Path, PathBuf};

use fragilis::cashflow::{appraise, payoff_curve};
use fragilis::refclass::{self, group_stats, summarize, Ingested, Strictness};
use fragilis::stats::{kde, mann_whitney_u, one_way_f, trend_f};
use fragilis::stress::{
    run_stress, run_stress_with_threads, sensitivity_grid, size_contingency, QuantileDistSpec, ScheduleStress,
};
use fragilis::{AppraisalModel, Metric, QuantileDistribution, StressConfig, StressResult, Stressor};
use serde::Serialize;
use serde_json::json;

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::inputs::{resolve, sha256_hex, Input};
use crate::manifest::{FileDigest, RunManifest};
use crate::report;
use crate::svg::{self, Chart};

const DEFAULT_OUT: &str = "fragilis-out";

/// Collects inputs and outputs of one command and writes its manifest.
struct Run {
    command: &'static str,
    argv: Vec<String>,
    dir: PathBuf,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
    seed: Option<u64>,
}

impl Run {
    fn new(command: &'static str, argv: Vec<String>, out: Option<&Path>) -> CliResult<Self> {
        let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        std::fs::create_dir_all(&dir).map_err(|source| CliError::Io {
            path: dir.clone(),
            source,
        })?;
        Ok(Self {
            command,
            argv,
            dir,
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed: None,
        })
    }

    fn input(&mut self, name: &str, arg: &str) -> CliResult<Input> {
        let input = resolve(arg)?;
        self.inputs.push(FileDigest {
            name: name.to_string(),
            source: input.source.clone(),
            sha256: input.sha256(),
        });
        Ok(input)
    }

    fn write(&mut self, file: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.dir.join(file);
        std::fs::write(&path, bytes).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        self.outputs.push(FileDigest {
            name: file.to_string(),
            source: path.display().to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    fn json<T: Serialize>(&mut self, file: &str, value: &T) -> CliResult<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(fragilis::Error::from)?;
        bytes.push(b'\n');
        self.write(file, &bytes)
    }

    /// Writes the CSV, and the SVG view of it when asked for.
    fn trace(&mut self, format: Format, file: &str, csv: Vec<u8>, chart: Chart) -> CliResult<()> {
        if !format.csv() {
            return Ok(());
        }
        self.write(&format!("{file}.csv"), &csv)?;
        if format.svg() {
            let text = String::from_utf8_lossy(&csv);
            let svg = svg::render(&text, &chart)?;
            self.write(&format!("{file}.svg"), svg.as_bytes())?;
        }
        Ok(())
    }

    fn finish(mut self) -> CliResult<()> {
        let manifest = RunManifest {
            tool: "fragilis".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: self.command.into(),
            argv: std::mem::take(&mut self.argv),
            inputs: std::mem::take(&mut self.inputs),
            seed: self.seed,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            outputs: std::mem::take(&mut self.outputs),
        };
        let path = self.dir.join(RunManifest::file_name(self.command));
        let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(fragilis::Error::from)?;
        bytes.push(b'\n');
        std::fs::write(&path, bytes).map_err(|source| CliError::Io { path, source })
    }
}

pub fn run(cli: Cli, argv: Vec<String>) -> CliResult<()> {
    match cli.command {
        Command::Ingest(a) => ingest(a, argv),
        Command::Stats(a) => stats(a, argv),
        Command::Density(a) => density(a, argv),
        Command::Test(a) => test(a, argv),
        Command::Appraise(a) => appraise_cmd(a, argv),
        Command::Stress(a) => stress(a, argv),
        Command::Grid(a) => grid(a, argv),
        Command::Contingency(a) => contingency(a, argv),
        Command::Report(a) => report::run(a, argv),
    }
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> fragilis::Result<()>) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn load_dataset(run: &mut Run, arg: &str, strict: bool) -> CliResult<(Input, Ingested)> {
    let input = run.input("dataset", arg)?;
    let mode = if strict { Strictness::Strict } else { Strictness::Lenient };
    let ingested = refclass::read_csv(&input.bytes[..], &input.arg, mode)?;
    for e in &ingested.skipped {
        eprintln!("warning: {}: skipped {e}", input.source);
    }
    Ok((input, ingested))
}

fn load_model(run: &mut Run, arg: &str) -> CliResult<AppraisalModel> {
    let input = run.input("model", arg)?;
    serde_json::from_slice(&input.bytes).map_err(|e| input.parse_error(e))
}

/// Accepts both an anchor file (calibrated here) and an already calibrated
/// distribution as written by the library.
fn load_dist(run: &mut Run, name: &str, arg: &str) -> CliResult<QuantileDistribution> {
    let input = run.input(name, arg)?;
    match serde_json::from_slice::<QuantileDistSpec>(&input.bytes) {
        Ok(spec) => Ok(spec.build()?),
        Err(spec_err) => serde_json::from_slice::<QuantileDistribution>(&input.bytes).map_err(|e| {
            input.parse_error(format!("not an anchor file ({spec_err}) nor a distribution ({e})"))
        }),
    }
}

fn ingest(a: IngestArgs, argv: Vec<String>) -> CliResult<()> {
    let mut run = Run::new("ingest", argv, a.output.out.as_deref())?;
    let (input, ingested) = load_dataset(&mut run, &a.input, a.strict)?;
    let skipped: Vec<_> = ingested
        .skipped
        .iter()
        .map(|e| match e {
            fragilis::Error::Row { row, field, message } => json!({ "row": row, "field": field, "message": message }),
            other => json!({ "message": other.to_string() }),
        })
        .collect();
    run.json(
        "ingest.json",
        &json!({
            "input": input.source,
            "n_records": ingested.class.len(),
            "skipped": skipped,
        }),
    )?;
    let csv = csv_bytes(|w| refclass::write_csv(&ingested.class, w))?;
    run.write("records.csv", &csv)?;
    run.finish()
}

fn summary_csvs(all: &fragilis::SummaryStats, groups: &BTreeMap<String, fragilis::SummaryStats>) -> CliResult<(Vec<u8>, Vec<u8>)> {
    let mut q = csv::Writer::from_writer(Vec::new());
    let mut s = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Core(e.into());
    q.write_record(["group", "p", "value"]).map_err(err)?;
    s.write_record(["group", "threshold", "share"]).map_err(err)?;
    for (name, st) in std::iter::once(("all", all)).chain(groups.iter().map(|(k, v)| (k.as_str(), v))) {
        for p in &st.quantiles {
            q.write_record([name, &p.p.to_string(), &p.value.to_string()]).map_err(err)?;
        }
        for t in &st.share_breaking {
            s.write_record([name, &t.threshold.to_string(), &t.share.to_string()]).map_err(err)?;
        }
    }
    let into = |w: csv::Writer<Vec<u8>>| w.into_inner().map_err(|e| CliError::Core(fragilis::Error::Io(e.to_string())));
    Ok((into(q)?, into(s)?))
}

fn stats(a: StatsArgs, argv: Vec<String>) -> CliResult<()> {
    let mut run = Run::new("stats", argv, a.output.out.as_deref())?;
    let (input, ingested) = load_dataset(&mut run, &a.data.input, a.data.strict)?;
    let class = &ingested.class;
    let summary = summarize(class, a.data.metric, &a.thresholds)?;
    let groups = match a.group {
        Some(key) => group_stats(class, key, a.data.metric, &a.thresholds)?,
        None => BTreeMap::new(),
    };
    run.json(
        "stats.json",
        &json!({
            "input": input.source,
            "metric": a.data.metric,
            "n_records": class.len(),
            "skipped_rows": ingested.skipped.len(),
            "thresholds": a.thresholds,
            "summary": summary,
            "group_by": a.group,
            "groups": groups,
        }),
    )?;
    let (quantiles, shares) = summary_csvs(&summary, &groups)?;
    run.trace(
        a.output.format,
        "quantiles",
        quantiles,
        Chart {
            title: "Empirical quantiles",
            x: "p",
            y: &["value"],
            group: Some("group"),
        },
    )?;
    if a.output.format.csv() {
        run.write("shares.csv", &shares)?;
    }
    run.finish()
}

fn density(a: DensityArgs, argv: Vec<String>) -> CliResult<()> {
    let mut run = Run::new("density", argv, a.output.out.as_deref())?;
    let (input, ingested) = load_dataset(&mut run, &a.data.input, a.data.strict)?;
    let values = ingested.class.ratios(a.data.metric);
    let trace = kde(&values, a.bandwidth)?;
    run.json(
        "density.json",
        &json!({
            "input": input.source,
            "metric": a.data.metric,
            "n": values.len(),
            "bandwidth": trace.bandwidth,
            "grid_points": trace.grid.len(),
            "grid_min": trace.grid.first(),
            "grid_max": trace.grid.last(),
            "integral": trace.integral(),
        }),
    )?;
    let csv = csv_bytes(|w| trace.write_csv(w))?;
    run.trace(
        a.output.format,
        "density",
        csv,
        Chart {
            title: "Kernel density",
            x: "value",
            y: &["density"],
            group: None,
        },
    )?;
    run.finish()
}

fn test(a: TestArgs, argv: Vec<String>) -> CliResult<()> {
    let mut run = Run::new("test", argv, a.output.out.as_deref())?;
    let (input, ingested) = load_dataset(&mut run, &a.data.input, a.data.strict)?;
    let metric: Metric = a.data.metric;
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let (mut years, mut ys) = (Vec::new(), Vec::new());
    for rec in ingested.class.records() {
        if let Some(v) = metric.ratio(rec) {
            groups.entry(a.group.key_of(rec)).or_default().push(v);
            years.push(f64::from(rec.decision_year));
            ys.push(v);
        }
    }
    let sizes: BTreeMap<&str, usize> = groups.iter().map(|(k, v)| (k.as_str(), v.len())).collect();
    let (result, compared) = match a.kind {
        TestKind::Anova => {
            let samples: Vec<&Vec<f64>> = groups.values().collect();
            (serde_json::to_value(one_way_f(&samples)?), sizes.keys().map(|k| k.to_string()).collect())
        }
        TestKind::Trend => (serde_json::to_value(trend_f(&years, &ys)?), vec!["decision_year".to_string()]),
        TestKind::MannWhitney => {
            let pair: Vec<String> = if a.pair.is_empty() {
                if groups.len() != 2 {
                    return Err(CliError::Usage(format!(
                        "--pair is required: {} groups by {:?}",
                        groups.len(),
                        a.group
                    )));
                }
                groups.keys().cloned().collect()
            } else if a.pair.len() == 2 {
                a.pair.clone()
            } else {
                return Err(CliError::Usage(format!("--pair takes two group names, got {}", a.pair.len())));
            };
            let sample = |name: &str| {
                groups
                    .get(name)
                    .ok_or_else(|| CliError::Usage(format!("no group `{name}` (have: {})", groups.keys().cloned().collect::<Vec<_>>().join(", "))))
            };
            let r = mann_whitney_u(sample(&pair[0])?, sample(&pair[1])?)?;
            (serde_json::to_value(r), pair)
        }
    };
    let result = result.map_err(fragilis::Error::from)?;
    run.json(
        "test.json",
        &json!({
            "input": input.source,
            "metric": metric,
            "kind": format!("{:?}", a.kind).to_lowercase(),
            "group_by": a.group,
            "group_sizes": sizes,
            "compared": compared,
            "result": result,
        }),
    )?;
    run.finish()
}

fn appraise_cmd(a: AppraiseArgs, argv: Vec<String>) -> CliResult<()> {
    let mut run = Run::new("appraise", argv, a.output.out.as_deref())?;
    let model = load_model(&mut run, &a.model)?;
    let result = appraise(&model, a.shortfall)?;
    let curve = payoff_curve(&model);
    run.json(
        "appraisal.json",
        &json!({
            "model": run.inputs[0].source,
            "discount_rate": model.discount_rate(),
            "result": result,
            "total_gain": curve.total_gain(),
            "total_pain": curve.total_pain(),
            "fragility_index": curve.fragility_index,
        }),
    )?;
    let csv = csv_bytes(|buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["rank", "gain", "pain", "cum_gain", "cum_pain"])?;
        let cell = |v: Option<&f64>| v.map(f64::to_string).unwrap_or_default();
        for i in 0..curve.gains_desc.len().max(curve.pains_desc.len()) {
            w.write_record([
                (i + 1).to_string(),
                cell(curve.gains_desc.get(i)),
                cell(curve.pains_desc.get(i)),
                cell(curve.cum_gain.get(i)),
                cell(curve.cum_pain.get(i)),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    run.trace(
        a.output.format,
        "payoff",
        csv,
        Chart {
            title: "Cumulative discounted gain and pain",
            x: "rank",
            y: &["cum_gain", "cum_pain"],
            group: None,
        },
    )?;
    run.finish()
}

fn fresh_seed() -> u64 {
    let t = std::time::SystemTime::now();
    std::collections::hash_map::RandomState::new().hash_one(t)
}

#[derive(Serialize)]
struct StressArtifact<'a> {
    model: &'a str,
    capex_dist: &'a str,
    schedule_dist: Option<&'a str>,
    est_duration_years: Option<f64>,
    shortfall: f64,
    #[serde(flatten)]
    result: &'a StressResult,
}

fn stress(a: StressArgs, argv: Vec<String>) -> CliResult<()> {
    let mut run = Run::new("stress", argv, a.output.out.as_deref())?;
    let model = load_model(&mut run, &a.model)?;
    let capex = load_dist(&mut run, "capex_dist", &a.dist)?;
    let schedule = match (&a.schedule_dist, a.duration_years) {
        (Some(arg), Some(years)) => Some(ScheduleStress {
            slippage: Stressor::Distribution(load_dist(&mut run, "schedule_dist", arg)?),
            est_duration_years: years,
        }),
        (None, Some(_)) => return Err(CliError::Usage("--duration-years needs --schedule-dist".into())),
        _ => None,
    };
    let seed = a.seed.unwrap_or_else(|| {
        let s = fresh_seed();
        eprintln!("note: no --seed given, using {s}");
        s
    });
    run.seed = Some(seed);
    let config = StressConfig {
        schedule_dist: schedule,
        shortfall: Stressor::Fixed(a.shortfall),
        ..StressConfig::capex_only(a.trials, seed, Stressor::Distribution(capex))
    };
    let result = match a.threads {
        Some(t) => run_stress_with_threads(&model, &config, t)?,
        None => run_stress(&model, &config)?,
    };
    let sources: Vec<String> = run.inputs.iter().map(|i| i.source.clone()).collect();
    run.json(
        "stress.json",
        &StressArtifact {
            model: &sources[0],
            capex_dist: &sources[1],
            schedule_dist: sources.get(2).map(String::as_str),
            est_duration_years: a.duration_years,
            shortfall: a.shortfall,
            result: &result,
        },
    )?;
    let csv = csv_bytes(|w| result.write_quantiles_csv(w))?;
    run.trace(
        a.output.format,
        "npv_quantiles",
        csv,
        Chart {
            title: "Stressed NPV quantiles",
            x: "p",
            y: &["npv"],
            group: None,
        },
    )?;
    run.finish()
}

fn grid(a: GridArgs, argv: Vec<String>) -> CliResult<()> {
    let mut run = Run::new("grid", argv, a.output.out.as_deref())?;
    let model = load_model(&mut run, &a.model)?;
    let grid = sensitivity_grid(&model, &a.benefit_mults, &a.cost_mults)?;
    run.json(
        "grid.json",
        &json!({ "model": run.inputs[0].source, "grid": grid }),
    )?;
    let csv = csv_bytes(|w| grid.write_csv(w))?;
    run.trace(
        a.output.format,
        "grid",
        csv,
        Chart {
            title: "BCR by benefit and cost multiplier",
            x: "benefit_mult",
            y: &["bcr"],
            group: Some("cost_mult"),
        },
    )?;
    run.finish()
}

fn contingency(a: ContingencyArgs, argv: Vec<String>) -> CliResult<()> {
    let mut run = Run::new("contingency", argv, a.output.out.as_deref())?;
    let model = load_model(&mut run, &a.model)?;
    let dist = load_dist(&mut run, "capex_dist", &a.dist)?;
    let c = size_contingency(&model, &Stressor::Distribution(dist), a.coverage)?;
    run.json(
        "contingency.json",
        &json!({
            "model": run.inputs[0].source,
            "capex_dist": run.inputs[1].source,
            "result": c,
        }),
    )?;
    run.finish()
}

/// Shared by `report`, which has no dataset or model inputs of its own.
pub(crate) fn report_run(argv: Vec<String>, out: &Path) -> CliResult<ReportRun> {
    Ok(ReportRun(Run::new("report", argv, Some(out))?))
}

pub(crate) struct ReportRun(Run);

impl ReportRun {
    pub fn input(&mut self, name: &str, source: &Path, bytes: &[u8]) {
        self.0.inputs.push(FileDigest {
            name: name.to_string(),
            source: source.display().to_string(),
            sha256: sha256_hex(bytes),
        });
    }

    pub fn write(&mut self, file: &str, bytes: &[u8]) -> CliResult<()> {
        self.0.write(file, bytes)
    }

    pub fn finish(self) -> CliResult<()> {
        self.0.finish()
    }
}
