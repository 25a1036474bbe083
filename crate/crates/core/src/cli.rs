//! `citerank` command-line front end.
//!
//! Every subcommand reads and writes plain files; identical inputs and flags
//! produce byte-identical outputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::compare::{self, log_scatter, CompareOptions, ComparisonReport, RankTable, TiePolicy};
use crate::corpus::{self, filter_to_scored, CitationWindow, Corpus, JournalId, Year};
use crate::eigenrank::{build_matrix, eigen_scores, EigenSettings};
use crate::metrics::{impact_factor, total_citations, MetricName, MetricVector};
use crate::syngen::{generate, GenSettings};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "citerank", version, about = "Rank journals by citations, Impact Factor and iteratively weighted scores")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate corpus files and write them back in canonical form.
    Ingest(IngestArgs),
    /// Score and rank journals with one method.
    Rank(RankArgs),
    /// Compare two or three metric files pairwise.
    Compare(CompareArgs),
    /// Generate a synthetic corpus.
    Gen(GenArgs),
    /// Run every method on a corpus and write the combined report.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Journals file (`id,name,year,articles`).
    #[arg(long)]
    pub journals: PathBuf,
    /// Citations file (`citing,cited,citing_year,cited_year,count`).
    #[arg(long)]
    pub citations: PathBuf,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Keep only journals scored in this metric file.
    #[arg(long)]
    pub require_scores: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Eigenfactor,
    Citations,
    ImpactFactor,
}

impl Method {
    fn file_stem(self) -> &'static str {
        match self {
            Method::Eigenfactor => "eigenfactor",
            Method::Citations => "citations",
            Method::ImpactFactor => "impact-factor",
        }
    }
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    /// Publication years before the census year to include.
    #[arg(long)]
    pub window_span: Option<u32>,
    /// Year whose citations are counted; defaults to the latest citing year.
    #[arg(long)]
    pub census_year: Option<Year>,
}

#[derive(Debug, Args)]
pub struct EigenArgs {
    #[arg(long, default_value_t = 0.85)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    /// Count self-citations.
    #[arg(long, conflicts_with = "exclude_self")]
    pub include_self: bool,
    /// Ignore self-citations.
    #[arg(long)]
    pub exclude_self: bool,
}

impl EigenArgs {
    fn self_citations(&self) -> Option<bool> {
        match (self.include_self, self.exclude_self) {
            (true, _) => Some(true),
            (_, true) => Some(false),
            _ => None,
        }
    }

    fn settings(&self) -> EigenSettings {
        EigenSettings {
            alpha: self.alpha,
            tolerance: self.tol,
            max_iterations: self.max_iter,
            exclude_self: !self.self_citations().unwrap_or(false),
        }
    }
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// Rows to print.
    #[arg(long, default_value_t = 20)]
    pub top: usize,
    #[arg(long, default_value = "average")]
    pub tie_policy: TiePolicy,
    /// Significant digits in printed tables.
    #[arg(long, default_value_t = 6)]
    pub precision: usize,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, value_enum)]
    pub method: Method,
    #[command(flatten)]
    pub window: WindowArgs,
    #[command(flatten)]
    pub eigen: EigenArgs,
    #[command(flatten)]
    pub table: TableArgs,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Two or three metric files, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub metrics: Vec<PathBuf>,
    #[arg(long, default_value_t = 0.95)]
    pub coverage: f64,
    #[arg(long, value_delimiter = ',', default_value = "1,5,10")]
    pub ks: Vec<usize>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Number of journals.
    #[arg(long, default_value_t = 50)]
    pub journals: usize,
    /// Inclusive year range `A:B`.
    #[arg(long, default_value = "2001:2006", value_parser = parse_years)]
    pub years: (Year, Year),
    /// Attractiveness tail exponent; larger is more skewed.
    #[arg(long, default_value_t = 1.0)]
    pub skew: f64,
    /// Mean citations made per journal per year.
    #[arg(long, default_value_t = 20.0)]
    pub mean_out: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub window: WindowArgs,
    #[command(flatten)]
    pub eigen: EigenArgs,
    #[command(flatten)]
    pub table: TableArgs,
    #[arg(long, default_value_t = 0.95)]
    pub coverage: f64,
    #[arg(long, value_delimiter = ',', default_value = "1,5,10")]
    pub ks: Vec<usize>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

fn parse_years(s: &str) -> Result<(Year, Year), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected A:B, got `{s}`"))?;
    let a: Year = a.trim().parse().map_err(|_| format!("invalid year `{a}`"))?;
    let b: Year = b.trim().parse().map_err(|_| format!("invalid year `{b}`"))?;
    if a > b {
        return Err(format!("year range {a}:{b} is empty"));
    }
    Ok((a, b))
}

/// Formats `v` with `digits` significant digits, without exponent notation.
pub fn format_significant(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let digits = digits.max(1) as i32;
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (digits - 1 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Ingest(args) => ingest(args, stdout),
        Command::Rank(args) => rank_cmd(args, stdout),
        Command::Compare(args) => compare_cmd(args, stdout),
        Command::Gen(args) => gen_cmd(args, stdout),
        Command::Report(args) => report_cmd(args, stdout),
    }
}

fn load_corpus(args: &CorpusArgs) -> Result<Corpus> {
    corpus::read_corpus(&args.journals, &args.citations).with_context(|| {
        format!(
            "reading {} and {}",
            args.journals.display(),
            args.citations.display()
        )
    })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn ingest(args: IngestArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut corpus = load_corpus(&args.corpus)?;
    let mut removed = Vec::new();
    if let Some(path) = &args.require_scores {
        let required =
            MetricVector::load(path).with_context(|| format!("reading {}", path.display()))?;
        (corpus, removed) = filter_to_scored(&corpus, &required);
    }
    ensure_dir(&args.out)?;
    corpus::save_corpus(
        &corpus,
        &args.out.join("journals.csv"),
        &args.out.join("citations.csv"),
    )?;

    #[derive(Serialize)]
    struct Summary {
        tool_version: &'static str,
        journals: usize,
        records: usize,
        total_citations: u64,
        years: Option<(Year, Year)>,
        removed: Vec<JournalId>,
    }
    let summary = Summary {
        tool_version: TOOL_VERSION,
        journals: corpus.len(),
        records: corpus.edges().len(),
        total_citations: corpus.total_count(),
        years: corpus.year_span(),
        removed,
    };
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    write_file(&args.out.join("ingest.json"), json.as_bytes())?;
    writeln!(
        stdout,
        "{} journals, {} citation records, {} citations",
        summary.journals, summary.records, summary.total_citations
    )?;
    if !summary.removed.is_empty() {
        writeln!(stdout, "removed {} unscored journals", summary.removed.len())?;
    }
    Ok(())
}

fn census_year(corpus: &Corpus, window: &WindowArgs) -> Result<Year> {
    match window.census_year {
        Some(y) => Ok(y),
        None => corpus
            .latest_citing_year()
            .context("corpus has no citations; pass --census-year"),
    }
}

fn eigen_window(corpus: &Corpus, window: &WindowArgs) -> Result<CitationWindow> {
    let census = census_year(corpus, window)?;
    Ok(CitationWindow::cited_window(census, window.window_span.unwrap_or(5))?)
}

fn citations_window(corpus: &Corpus, window: &WindowArgs) -> Result<CitationWindow> {
    match window.window_span {
        Some(span) => Ok(CitationWindow::cited_window(census_year(corpus, window)?, span)?),
        None => Ok(CitationWindow::AllYears),
    }
}

struct Scored {
    metric: MetricVector,
    iterations: Option<usize>,
}

fn score(corpus: &Corpus, method: Method, window: &WindowArgs, eigen: &EigenArgs) -> Result<Scored> {
    Ok(match method {
        Method::Citations => Scored {
            metric: total_citations(
                corpus,
                citations_window(corpus, window)?,
                eigen.self_citations().unwrap_or(true),
            ),
            iterations: None,
        },
        Method::ImpactFactor => {
            if window.window_span.is_some_and(|s| s != 2) {
                bail!("the Impact Factor uses a fixed two-year window; drop --window-span");
            }
            Scored {
                metric: impact_factor(corpus, census_year(corpus, window)?)?,
                iterations: None,
            }
        }
        Method::Eigenfactor => {
            let settings = eigen.settings();
            let win = eigen_window(corpus, window)?;
            let (matrix, articles) = build_matrix(corpus, win, settings.exclude_self)?;
            let run = eigen_scores(&matrix, &articles, &settings)?;
            Scored {
                metric: run.scores,
                iterations: Some(run.iterations),
            }
        }
    })
}

fn rank_listing(corpus: &Corpus, table: &RankTable, args: &TableArgs) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:>6}  {:<24}  {:>14}  name", "rank", "id", table.metric);
    for row in table.rows.iter().take(args.top) {
        let name = corpus.journal(row.id.as_str()).map(|j| j.name.as_str()).unwrap_or("");
        let _ = writeln!(
            s,
            "{:>6}  {:<24}  {:>14}  {}",
            row.rank,
            row.id,
            format_significant(row.score, args.precision),
            name
        );
    }
    s
}

fn rank_cmd(args: RankArgs, stdout: &mut dyn Write) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let scored = score(&corpus, args.method, &args.window, &args.eigen)?;
    let table = compare::rank(&scored.metric, args.table.tie_policy)
        .with_context(|| format!("ranking by {}", scored.metric.name()))?;

    ensure_dir(&args.out)?;
    let stem = args.method.file_stem();
    scored.metric.save(&args.out.join(format!("{stem}.metric.csv")))?;
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    write_file(&args.out.join(format!("{stem}.rank.csv")), &buf)?;

    stdout.write_all(rank_listing(&corpus, &table, &args.table).as_bytes())?;
    if let Some(it) = scored.iterations {
        writeln!(stdout, "converged in {it} iterations")?;
    }
    let omitted = &scored.metric.provenance().omitted;
    if !omitted.is_empty() {
        let ids: Vec<&str> = omitted.iter().map(|i| i.as_str()).collect();
        writeln!(stdout, "omitted (no articles in the window): {}", ids.join(", "))?;
    }
    Ok(())
}

/// File-name labels for metric files: their stems, made unique.
fn labels(paths: &[PathBuf]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for p in paths {
        let stem: String = p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "metric".into())
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
            .collect();
        let mut label = stem.clone();
        let mut k = 2;
        while out.contains(&label) {
            label = format!("{stem}-{k}");
            k += 1;
        }
        out.push(label);
    }
    out
}

#[derive(Debug, Serialize)]
pub struct ScatterPoint {
    pub id: JournalId,
    pub log10_x: f64,
    pub log10_y: f64,
}

#[derive(Debug, Serialize)]
pub struct ScatterSeries {
    pub x_metric: MetricName,
    pub y_metric: MetricName,
    pub points: Vec<ScatterPoint>,
}

fn scatter_series(x: &MetricVector, y: &MetricVector) -> ScatterSeries {
    ScatterSeries {
        x_metric: x.name().clone(),
        y_metric: y.name().clone(),
        points: log_scatter(x, y)
            .into_iter()
            .map(|(id, lx, ly)| ScatterPoint {
                id,
                log10_x: lx,
                log10_y: ly,
            })
            .collect(),
    }
}

fn scatter_tsv(series: &ScatterSeries) -> String {
    let mut s = String::from("id\tlog10_x\tlog10_y\n");
    for p in &series.points {
        let _ = writeln!(s, "{}\t{}\t{}", p.id, p.log10_x, p.log10_y);
    }
    s
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut json = serde_json::to_vec_pretty(value)?;
    json.push(b'\n');
    Ok(json)
}

fn compare_cmd(args: CompareArgs, stdout: &mut dyn Write) -> Result<()> {
    if !(2..=3).contains(&args.metrics.len()) {
        bail!("--metrics takes two or three files, got {}", args.metrics.len());
    }
    let metrics = args
        .metrics
        .iter()
        .map(|p| MetricVector::load(p).with_context(|| format!("reading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let labels = labels(&args.metrics);
    let options = CompareOptions {
        coverage: args.coverage,
        ks: args.ks.clone(),
    };

    // Compute everything before writing so a failing pair leaves no partial output.
    let mut outputs = Vec::new();
    for i in 0..metrics.len() {
        for j in i + 1..metrics.len() {
            let report = compare::compare(&metrics[i], &metrics[j], &options).with_context(|| {
                format!(
                    "comparing {} with {}",
                    args.metrics[i].display(),
                    args.metrics[j].display()
                )
            })?;
            let scatter = scatter_series(&metrics[i], &metrics[j]);
            outputs.push((format!("{}_vs_{}", labels[i], labels[j]), report, scatter));
        }
    }

    ensure_dir(&args.out)?;
    for (pair, report, scatter) in &outputs {
        write_file(&args.out.join(format!("compare_{pair}.json")), &to_json(report)?)?;
        write_file(
            &args.out.join(format!("scatter_{pair}.tsv")),
            scatter_tsv(scatter).as_bytes(),
        )?;
        writeln!(
            stdout,
            "{pair}: n={} spearman={:.6} pearson_log={:.6} (n={})",
            report.spearman.n, report.spearman.rho, report.pearson_log.rho, report.pearson_log.n
        )?;
    }
    Ok(())
}

fn gen_cmd(args: GenArgs, stdout: &mut dyn Write) -> Result<()> {
    let settings = GenSettings {
        n_journals: args.journals,
        years: args.years.0..=args.years.1,
        skew_exponent: args.skew,
        mean_out_citations: args.mean_out,
        seed: args.seed,
    };
    let corpus = generate(&settings)?;
    ensure_dir(&args.out)?;
    corpus::save_corpus(
        &corpus,
        &args.out.join("journals.csv"),
        &args.out.join("citations.csv"),
    )?;
    writeln!(
        stdout,
        "generated {} journals, {} citation records",
        corpus.len(),
        corpus.edges().len()
    )?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct ReportMetadata {
    pub tool_version: &'static str,
    pub journals: usize,
    pub citation_records: usize,
    pub census_year: Year,
    pub windows: BTreeMap<String, String>,
    pub eigen_settings: EigenSettings,
    pub eigen_iterations: usize,
    pub coverage: f64,
    pub ks: Vec<usize>,
    pub tie_policy: TiePolicy,
    pub omissions: BTreeMap<String, Vec<JournalId>>,
    pub notes: Vec<String>,
}

/// Everything `report` writes to `report.json`.
#[derive(Debug, Serialize)]
pub struct ReportBundle {
    pub metadata: ReportMetadata,
    pub tables: Vec<RankTable>,
    pub comparisons: Vec<ComparisonReport>,
    pub scatter: Vec<ScatterSeries>,
}

/// Side-by-side table of the three scores and ranks, ordered by the first.
fn combined_table(corpus: &Corpus, metrics: &[&MetricVector], tables: &[RankTable], args: &TableArgs) -> String {
    let mut s = String::new();
    let _ = write!(s, "{:<32}", "journal");
    for m in metrics {
        let _ = write!(s, "  {:>16}", m.name().to_string());
    }
    for t in tables {
        let _ = write!(s, "  {:>10}", format!("{} rank", short_name(&t.metric)));
    }
    s.push('\n');
    for row in tables[0].rows.iter().take(args.top) {
        let id = row.id.as_str();
        let name = corpus
            .journal(id)
            .map(|j| j.name.as_str())
            .filter(|n| !n.is_empty())
            .unwrap_or(id);
        let _ = write!(s, "{name:<32}");
        for m in metrics {
            let cell = m
                .get(id)
                .map(|v| format_significant(v, args.precision))
                .unwrap_or_else(|| "-".into());
            let _ = write!(s, "  {cell:>16}");
        }
        for t in tables {
            let cell = t.rank_of(id).map(|r| r.to_string()).unwrap_or_else(|| "-".into());
            let _ = write!(s, "  {cell:>10}");
        }
        s.push('\n');
    }
    s
}

fn short_name(m: &MetricName) -> &str {
    match m {
        MetricName::Eigenfactor => "eigen",
        MetricName::TotalCitations => "cites",
        MetricName::ImpactFactor => "IF",
        MetricName::Custom(s) => s,
    }
}

/// Runs the full pipeline and returns the bundle plus the rendered table.
pub fn build_report(corpus: &Corpus, args: &ReportArgs) -> Result<(ReportBundle, String)> {
    let census = census_year(corpus, &args.window)?;
    let window = WindowArgs {
        window_span: args.window.window_span,
        census_year: Some(census),
    };
    let settings = args.eigen.settings();
    let eigen_win = eigen_window(corpus, &window)?;
    let (matrix, articles) = build_matrix(corpus, eigen_win, settings.exclude_self)?;
    let run = eigen_scores(&matrix, &articles, &settings)?;
    let eigen = run.scores;
    let cites_win = CitationWindow::AllYears;
    let cites = total_citations(corpus, cites_win, args.eigen.self_citations().unwrap_or(true));
    let impact = impact_factor(corpus, census)?;

    let metrics = [&eigen, &cites, &impact];
    let tables = metrics
        .iter()
        .map(|m| compare::rank(m, args.table.tie_policy))
        .collect::<Result<Vec<_>, _>>()?;

    let options = CompareOptions {
        coverage: args.coverage,
        ks: args.ks.clone(),
    };
    let mut comparisons = Vec::new();
    let mut scatter = Vec::new();
    for other in [&cites, &impact] {
        comparisons.push(
            compare::compare(&eigen, other, &options)
                .with_context(|| format!("comparing eigenfactor with {}", other.name()))?,
        );
        scatter.push(scatter_series(&eigen, other));
    }

    let mut windows = BTreeMap::new();
    windows.insert("eigenfactor".to_string(), eigen_win.to_string());
    windows.insert("total_citations".to_string(), cites.provenance().description.clone());
    windows.insert("impact_factor".to_string(), impact.provenance().description.clone());
    let mut omissions = BTreeMap::new();
    omissions.insert("impact_factor".to_string(), impact.provenance().omitted.clone());
    for c in &comparisons {
        omissions.insert(
            format!("{}_vs_{}_pearson_log", c.x_metric, c.y_metric),
            c.pearson_log.omitted.clone(),
        );
        omissions.insert(
            format!("{}_vs_{}_spearman", c.x_metric, c.y_metric),
            c.spearman.omitted.clone(),
        );
    }
    let metadata = ReportMetadata {
        tool_version: TOOL_VERSION,
        journals: corpus.len(),
        citation_records: corpus.edges().len(),
        census_year: census,
        windows,
        eigen_settings: settings,
        eigen_iterations: run.iterations,
        coverage: args.coverage,
        ks: args.ks.clone(),
        tie_policy: args.table.tie_policy,
        omissions,
        notes: vec![
            "concentration shares are computed over every journal in the given corpus".into(),
            "log-scale statistics use log10 and omit non-positive values".into(),
        ],
    };
    let text = combined_table(corpus, &metrics, &tables, &args.table);
    Ok((
        ReportBundle {
            metadata,
            tables,
            comparisons,
            scatter,
        },
        text,
    ))
}

fn report_cmd(args: ReportArgs, stdout: &mut dyn Write) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let (bundle, table) = build_report(&corpus, &args)?;

    ensure_dir(&args.out)?;
    write_file(&args.out.join("report.json"), &to_json(&bundle)?)?;
    write_file(&args.out.join("table.txt"), table.as_bytes())?;
    for series in &bundle.scatter {
        let name = format!("scatter_{}_vs_{}.tsv", series.x_metric, series.y_metric);
        write_file(&args.out.join(name), scatter_tsv(series).as_bytes())?;
    }
    stdout.write_all(table.as_bytes())?;
    for c in &bundle.comparisons {
        writeln!(
            stdout,
            "{} vs {}: spearman={:.6} (n={}) pearson_log={:.6} (n={})",
            c.x_metric, c.y_metric, c.spearman.rho, c.spearman.n, c.pearson_log.rho, c.pearson_log.n
        )?;
    }
    Ok(())
}
