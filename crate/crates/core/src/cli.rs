//! The `ggflex` command line. Exit status: 0 on success, 2 on a usage error,
//! 1 on a data or model error. Tables are tab-separated with a leading
//! `# schema_version=N` line; reports are JSON with a `schema_version` field.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::chipclass::{fit, ChipclassModel, FitOptions};
use crate::dataset::{load_csv, CsvOptions, Dataset, LabelColumn};
use crate::error::{Error, Result};
use crate::evaluation::{
    cv_objective, rank_summary, run_benchmark, BenchConfig, RankSummary, ScoreTable, REPORT_SCHEMA_VERSION,
};
use crate::graph::build_gabriel_for;
use crate::margin::{log_grid, margin_curve, margin_surface, CurveConfig};
use crate::quality::{PerClass, QualityProfile};
use crate::tuner::tune;

#[derive(Parser, Debug)]
#[command(name = "ggflex", version, about = "Gabriel-graph Chipclass with per-class flexible filtering")]
struct Cli {
    /// Seed for every random choice (folds, tuner, synthetic data).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Gabriel graph of a dataset as an edge list or JSON adjacency.
    Graph(GraphArgs),
    /// Per-sample quality index, class thresholds and removal decisions.
    Quality(QualityArgs),
    /// Train a model and write it as JSON.
    Train(TrainArgs),
    /// Score a dataset with a saved model.
    Predict(PredictArgs),
    /// Tune the class multipliers by inner cross-validation.
    Tune(TuneArgs),
    /// Nested cross-validation of tuned against standard Chipclass.
    Bench(BenchArgs),
    /// Mean margin and quality against the variance of two Gaussian classes.
    MarginCurve(CurveArgs),
    /// Mean margin of the kept samples over a grid of class multipliers.
    MarginSurface(SurfaceArgs),
    /// Average ranks, Friedman test and Bonferroni-Dunn critical difference.
    Stats(StatsArgs),
}

#[derive(Args, Debug)]
struct DataArgs {
    /// Delimited input file.
    #[arg(long)]
    data: PathBuf,
    /// Label column: header name or 0-based index.
    #[arg(long, default_value = "label")]
    label_column: LabelColumn,
    /// Label value of the positive class.
    #[arg(long)]
    positive: String,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    /// The first line is data, not a header.
    #[arg(long)]
    no_header: bool,
    /// Drop repeated rows and points carrying both labels.
    #[arg(long)]
    dedup: bool,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        if !self.delimiter.is_ascii() {
            return Err(Error::InvalidArgument("delimiter must be a single ASCII character".into()));
        }
        let options = CsvOptions {
            delimiter: self.delimiter as u8,
            has_header: !self.no_header,
            label_column: self.label_column.clone(),
            positive_label: self.positive.clone(),
        };
        let data = load_csv(&self.data, &options)?;
        if !self.dedup {
            return Ok(data);
        }
        let (data, report) = data.remove_duplicates()?;
        eprintln!(
            "dedup: dropped {} repeated rows and {} conflicting points, {} samples left",
            report.repeated_rows,
            report.conflicting_points,
            data.len()
        );
        Ok(data)
    }
}

#[derive(Args, Debug)]
struct GraphArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value_t = GraphFormat::Edges)]
    format: GraphFormat,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GraphFormat {
    Edges,
    Json,
}

#[derive(Args, Debug)]
struct QualityArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Class multipliers `h_pos h_neg`.
    #[arg(long, num_args = 2, value_names = ["H_POS", "H_NEG"], default_values_t = [1.0, 1.0])]
    h: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, num_args = 2, value_names = ["H_POS", "H_NEG"])]
    h: Option<Vec<f64>>,
    /// Standard Chipclass (fixed thresholds).
    #[arg(long, conflicts_with_all = ["h", "no_filter"])]
    fixed: bool,
    /// Extract support edges from the unfiltered graph.
    #[arg(long)]
    no_filter: bool,
    /// Train on raw features instead of z-scores.
    #[arg(long)]
    no_normalize: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[arg(long, default_value_t = 50)]
    budget: usize,
    #[arg(long, default_value_t = 0.1)]
    h_low: f64,
    #[arg(long, default_value_t = 10.0)]
    h_high: f64,
    #[arg(long, default_value_t = 5)]
    inner_k: usize,
    #[arg(long)]
    no_normalize: bool,
}

#[derive(Args, Debug)]
struct TuneArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// Trial history as JSON lines; standard output when absent.
    #[arg(long)]
    history: Option<PathBuf>,
    /// Model refit on the whole dataset with the best multipliers.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long, default_value_t = 10)]
    outer_k: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CurveArgs {
    /// Variances as `start:stop:step`, inclusive of `stop`.
    #[arg(long = "var", default_value = "0:1:0.05")]
    variances: String,
    /// Mean of the negative class, comma-separated.
    #[arg(long, default_value = "3,3")]
    mu0: String,
    /// Mean of the positive class, comma-separated.
    #[arg(long, default_value = "5,5")]
    mu1: String,
    #[arg(long, default_value_t = 500)]
    n_per_class: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SurfaceArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0.1)]
    h_min: f64,
    #[arg(long, default_value_t = 10.0)]
    h_max: f64,
    /// Log-spaced grid points per axis.
    #[arg(long, default_value_t = 21)]
    steps: usize,
    /// Z-score the features first.
    #[arg(long)]
    normalize: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StatsArgs {
    /// Score table: dataset names in the first column, one column per classifier.
    #[arg(long)]
    table: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Bonferroni-Dunn critical value, overriding the built-in table.
    #[arg(long)]
    q_alpha: Option<f64>,
    /// Critical value of F for the rejection decision.
    #[arg(long)]
    f_critical: Option<f64>,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit status.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(Error::InvalidArgument(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Graph(a) => cmd_graph(a),
        Command::Quality(a) => cmd_quality(a),
        Command::Train(a) => cmd_train(a, seed),
        Command::Predict(a) => cmd_predict(a),
        Command::Tune(a) => cmd_tune(a, seed),
        Command::Bench(a) => cmd_bench(a, seed),
        Command::MarginCurve(a) => cmd_margin_curve(a, seed),
        Command::MarginSurface(a) => cmd_margin_surface(a),
        Command::Stats(a) => cmd_stats(a),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_err(path: Option<&Path>) -> impl FnOnce(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf),
        source,
    }
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    let mut w = output(path)?;
    w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(io_err(path))
}

fn json_line<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn per_class(h: &[f64]) -> PerClass {
    PerClass::new(h[0], h[1])
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".into(), |x| x.to_string())
}

fn tsv_header(columns: &[&str]) -> String {
    format!("# schema_version={REPORT_SCHEMA_VERSION}\n{}\n", columns.join("\t"))
}

fn cmd_graph(a: GraphArgs) -> Result<()> {
    let data = a.data.load()?;
    let graph = build_gabriel_for(&data)?;
    let text = match a.format {
        GraphFormat::Edges => {
            let mut s = tsv_header(&["i", "j"]);
            for (i, j) in graph.edges() {
                s += &format!("{i}\t{j}\n");
            }
            s
        }
        GraphFormat::Json => {
            let mut v = graph.to_json();
            v["schema_version"] = REPORT_SCHEMA_VERSION.into();
            json_line(&v)?
        }
    };
    write_text(a.out.as_deref(), &text)
}

fn cmd_quality(a: QualityArgs) -> Result<()> {
    let data = a.data.load()?;
    let graph = build_gabriel_for(&data)?;
    let profile = QualityProfile::compute(&graph, data.labels(), per_class(&a.h))?;
    let removed = profile.removal_mask(data.labels());
    let mut s = format!(
        "# schema_version={REPORT_SCHEMA_VERSION}\n# theta_pos={}\ttheta_neg={}\th_pos={}\th_neg={}\nindex\tlabel\tq\tremoved\n",
        profile.theta.pos, profile.theta.neg, profile.h.pos, profile.h.neg
    );
    for (i, (q, r)) in profile.q.iter().zip(&removed).enumerate() {
        s += &format!("{i}\t{}\t{q}\t{}\n", data.class_name(data.label(i)), u8::from(*r));
    }
    write_text(a.out.as_deref(), &s)
}

fn cmd_train(a: TrainArgs, seed: u64) -> Result<()> {
    let data = a.data.load()?;
    let options = FitOptions {
        h: a.h.as_deref().map_or(PerClass::ONES, per_class),
        filter: !a.no_filter,
        normalize: !a.no_normalize,
        seed: Some(seed),
    };
    let model = if a.fixed {
        let mut m = crate::chipclass::PreparedTraining::new(&data, options.normalize)?.fixed_model()?;
        m.metadata.seed = Some(seed);
        m
    } else {
        fit(&data, &options)?
    };
    model.save(&a.out)?;
    eprintln!("{} support edges written to {}", model.edges.len(), a.out.display());
    Ok(())
}

fn cmd_predict(a: PredictArgs) -> Result<()> {
    let model = ChipclassModel::load(&a.model)?;
    let data = a.data.load()?;
    let proba = model.predict_proba_batch(&data)?;
    let mut s = tsv_header(&["index", "probability", "predicted", "label"]);
    for (i, p) in proba.iter().enumerate() {
        let predicted = if *p >= 0.5 { &a.data.positive } else { data.class_name(crate::dataset::Label::Negative) };
        s += &format!("{i}\t{p}\t{predicted}\t{}\n", data.class_name(data.label(i)));
    }
    write_text(a.out.as_deref(), &s)?;
    if let Ok(auc) = crate::evaluation::auc(&proba, data.labels()) {
        eprintln!("auc: {auc}");
    }
    Ok(())
}

#[derive(Serialize)]
struct HistoryLine<'a> {
    schema_version: u32,
    #[serde(flatten)]
    trial: &'a crate::tuner::TrialRecord,
}

fn cmd_tune(a: TuneArgs, seed: u64) -> Result<()> {
    let data = a.data.load()?;
    let s = &a.search;
    let objective = cv_objective(&data, s.inner_k, seed, !s.no_normalize)?;
    let config = BenchConfig {
        budget: s.budget,
        h_low: s.h_low,
        h_high: s.h_high,
        ..BenchConfig::default()
    };
    let result = tune(objective, &config.search_space(seed))?;
    let mut lines = String::new();
    for trial in &result.history {
        lines += &serde_json::to_string(&HistoryLine {
            schema_version: REPORT_SCHEMA_VERSION,
            trial,
        })?;
        lines.push('\n');
    }
    write_text(a.history.as_deref(), &lines)?;
    let h = per_class(&result.best.params);
    let model = fit(
        &data,
        &FitOptions {
            h,
            filter: true,
            normalize: !s.no_normalize,
            seed: Some(seed),
        },
    )?;
    model.save(&a.out)?;
    eprintln!(
        "best h = ({}, {}) with inner AUC {} at trial {}",
        h.pos,
        h.neg,
        fmt_opt(result.best.score),
        result.best.trial_index
    );
    Ok(())
}

fn cmd_bench(a: BenchArgs, seed: u64) -> Result<()> {
    let data = a.data.load()?;
    let s = &a.search;
    let config = BenchConfig {
        outer_k: a.outer_k,
        inner_k: s.inner_k,
        budget: s.budget,
        seed,
        normalize: !s.no_normalize,
        h_low: s.h_low,
        h_high: s.h_high,
        ..BenchConfig::default()
    };
    let report = run_benchmark(&data, &config)?;
    eprintln!("mean AUC {} (standard Chipclass {})", report.mean, report.fixed_baseline.mean);
    write_text(a.out.as_deref(), &json_line(&report)?)
}

fn parse_range(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidArgument(format!("expected start:stop:step, got {spec:?}"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if !start.is_finite() || !stop.is_finite() || step.is_nan() || step <= 0.0 || stop < start {
        return Err(bad());
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    // multiply rather than accumulate so 0.05 steps print as 0.05, 0.1, 0.15
    Ok((0..=n).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect())
}

fn parse_vector(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad number {p:?} in {s:?}")))
        })
        .collect()
}

fn cmd_margin_curve(a: CurveArgs, seed: u64) -> Result<()> {
    let variances = parse_range(&a.variances)?;
    let config = CurveConfig {
        mu0: parse_vector(&a.mu0)?,
        mu1: parse_vector(&a.mu1)?,
        n_per_class: a.n_per_class,
        seed,
    };
    let points = margin_curve(&variances, &config)?;
    let mut s = tsv_header(&["variance", "mean_unfiltered", "mean_filtered", "mean_q"]);
    for p in points {
        s += &format!(
            "{}\t{}\t{}\t{}\n",
            p.variance,
            p.mean_unfiltered,
            fmt_opt(p.mean_filtered),
            fmt_opt(p.mean_q)
        );
    }
    write_text(a.out.as_deref(), &s)
}

fn cmd_margin_surface(a: SurfaceArgs) -> Result<()> {
    let mut data = a.data.load()?;
    if a.normalize {
        data = crate::dataset::normalize_zscore(&data).0;
    }
    if !(a.h_min > 0.0 && a.h_max >= a.h_min) || a.steps == 0 {
        return Err(Error::InvalidArgument("need 0 < h-min <= h-max and steps >= 1".into()));
    }
    let axis = log_grid(a.h_min, a.h_max, a.steps);
    let cells = margin_surface(&data, &axis, &axis)?;
    let mut s = tsv_header(&["h1", "h2", "mean_margin", "kept_count"]);
    for c in cells {
        s += &format!("{}\t{}\t{}\t{}\n", c.h_pos, c.h_neg, fmt_opt(c.mean_margin), c.kept_count);
    }
    write_text(a.out.as_deref(), &s)
}

fn cmd_stats(a: StatsArgs) -> Result<()> {
    let table = ScoreTable::load(&a.table, b',')?;
    let summary = rank_summary(&table, a.alpha, a.q_alpha, a.f_critical)?;
    let text = if a.json { json_line(&summary)? } else { stats_text(&summary) };
    write_text(a.out.as_deref(), &text)
}

fn stats_text(s: &RankSummary) -> String {
    let width = s.classifiers.iter().map(String::len).max().unwrap_or(0).max("classifier".len());
    let mut out = format!("{:<width$}  avg_rank  within_cd\n", "classifier");
    for ((name, rank), within) in s.classifiers.iter().zip(&s.average_ranks).zip(&s.within_cd_of_best) {
        out += &format!("{name:<width$}  {rank:>8.4}  {}\n", if *within { "yes" } else { "no" });
    }
    out += &format!(
        "N = {}, k = {}\nFriedman chi2 = {:.4}\nF = {:.4}\nq_alpha = {} (alpha = {})\nCD = {:.4}\nbest = {}\n",
        s.n, s.k, s.friedman_chi2, s.friedman_f, s.q_alpha, s.alpha, s.cd, s.best
    );
    if let (Some(c), Some(r)) = (s.f_critical, s.reject_null) {
        out += &format!("F critical = {c}: {}\n", if r { "reject equal performance" } else { "cannot reject" });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        let v = parse_range("0:1:0.05").unwrap();
        assert_eq!(v.len(), 21);
        assert_eq!(v[3], 0.15);
        assert_eq!(v[20], 1.0);
        assert_eq!(parse_range("2:2:1").unwrap(), vec![2.0]);
        assert!(parse_range("1:0:0.1").is_err());
        assert!(parse_range("0:1").is_err());
        assert!(parse_range("0:1:0").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(dispatch(["ggflex", "frobnicate"]), 2);
        assert_eq!(dispatch(["ggflex", "train", "--data", "x.csv"]), 2);
        assert_eq!(dispatch(["ggflex", "--help"]), 0);
        assert_eq!(dispatch(["ggflex", "stats", "--table", "/nonexistent/t.csv"]), 1);
    }
}
