use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fragilis::refclass::GroupKey;
use fragilis::Metric;

#[derive(Debug, Parser)]
#[command(name = "fragilis", version, about = "Investment fragility analysis for big capital projects")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a project-record CSV and write a normalized copy.
    Ingest(IngestArgs),
    /// Summary statistics of overrun ratios, optionally per group.
    Stats(StatsArgs),
    /// Kernel density trace of overrun ratios.
    Density(DensityArgs),
    /// Hypothesis tests across groups of records.
    Test(TestArgs),
    /// NPV, BCR, IRR and break-even thresholds of an appraisal model.
    Appraise(AppraiseArgs),
    /// Monte Carlo stress test of an appraisal model.
    Stress(StressArgs),
    /// Sensitivity grid over benefit and cost multipliers.
    Grid(GridArgs),
    /// Size a capex contingency to a coverage level.
    Contingency(ContingencyArgs),
    /// Markdown report over the JSON artifacts in a directory.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// JSON results only.
    Json,
    /// JSON plus CSV traces and grids.
    Csv,
    /// JSON, CSV and SVG charts rendered from the CSV.
    Svg,
}

impl Format {
    pub fn csv(self) -> bool {
        self != Format::Json
    }

    pub fn svg(self) -> bool {
        self == Format::Svg
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output directory [default: fragilis-out]
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct DatasetArgs {
    /// Project-record CSV, or the name of a bundled dataset.
    pub input: String,
    /// Fail on the first malformed row instead of skipping it.
    #[arg(long)]
    pub strict: bool,
    #[arg(long, default_value = "cost")]
    pub metric: Metric,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Project-record CSV, or the name of a bundled dataset.
    pub input: String,
    #[arg(long)]
    pub strict: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    /// Breaking threshold; repeat for several.
    #[arg(long = "threshold")]
    pub thresholds: Vec<f64>,
    /// Also summarize each group.
    #[arg(long)]
    pub group: Option<GroupKey>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    /// Kernel bandwidth [default: Silverman's rule]
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TestKind {
    /// One-way ANOVA across groups.
    Anova,
    /// F test for a linear trend in decision year.
    Trend,
    /// Two-sided Mann-Whitney U test between two groups.
    MannWhitney,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[arg(long, value_enum, default_value_t = TestKind::Anova)]
    pub kind: TestKind,
    #[arg(long, default_value = "decade")]
    pub group: GroupKey,
    /// The two groups compared by the Mann-Whitney test, e.g. `--pair 1930s,1990s`.
    #[arg(long, value_delimiter = ',')]
    pub pair: Vec<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct AppraiseArgs {
    /// Appraisal model JSON, or the name of a bundled model.
    pub model: String,
    /// Benefit shortfall fraction used for the break-even overrun.
    #[arg(long, default_value_t = 0.0)]
    pub shortfall: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct StressArgs {
    /// Appraisal model JSON, or the name of a bundled model.
    pub model: String,
    /// Capex overrun distribution: bundled name or JSON file.
    #[arg(long, default_value = "big-dam")]
    pub dist: String,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// Random seed; generated and recorded when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads [default: all cores]
    #[arg(long)]
    pub threads: Option<usize>,
    /// Schedule slippage distribution: bundled name or JSON file.
    #[arg(long, requires = "duration_years")]
    pub schedule_dist: Option<String>,
    /// Estimated construction duration used to turn slippage into delay.
    #[arg(long)]
    pub duration_years: Option<f64>,
    /// Fixed benefit shortfall fraction.
    #[arg(long, default_value_t = 0.0)]
    pub shortfall: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Appraisal model JSON, or the name of a bundled model.
    pub model: String,
    #[arg(long = "benefit-mult", default_values_t = [0.85, 1.0, 1.15])]
    pub benefit_mults: Vec<f64>,
    #[arg(long = "cost-mult", default_values_t = [1.0, 1.15])]
    pub cost_mults: Vec<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ContingencyArgs {
    /// Appraisal model JSON, or the name of a bundled model.
    pub model: String,
    #[arg(long, default_value = "big-dam")]
    pub dist: String,
    #[arg(long, default_value_t = 0.8)]
    pub coverage: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory holding the JSON artifacts of earlier runs.
    pub dir: PathBuf,
    /// Where to write report.md [default: the artifact directory]
    #[arg(long)]
    pub out: Option<PathBuf>,
}
