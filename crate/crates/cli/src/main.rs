//! `openalx` — command-line surface for the active-learning benchmark engine.
//!
//! Verbs: `run` executes the sampler × fold grid with caching, `compare`
//! prints a final-iteration matrix, `report` writes per-metric curve CSVs and
//! SVG plots, `export-indices` dumps the persisted fold/init index file,
//! `list-datasets` shows registry statistics, and `validate` checks a dataset
//! against its schema and the size plausibility rule.
//!
//! Exit codes are a stable contract: 0 success, 1 usage or setup error,
//! 2 completed with partial results.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use openalx_core::data::{check_plausibility, persist_indices, InitialConditions};
use openalx_core::models::{select_model, ModelSpec};
use openalx_core::registry::{format_dataset_row, Registry};
use openalx_core::report::write_report;
use openalx_core::runner::{
    final_summary, load_initial_conditions, load_manifest, load_result_set, run, run_dir,
    ExperimentConfig, SummaryCell,
};
use openalx_core::samplers::{KMeansParams, SamplerKind};
use openalx_core::{Error, Result};

const EXIT_OK: i32 = 0;
const EXIT_SETUP: i32 = 1;
const EXIT_PARTIAL: i32 = 2;

/// Environment variable overriding the cache root directory.
const CACHE_ENV: &str = "OPENALX_CACHE_DIR";
/// Cache root used when the environment variable is unset.
const DEFAULT_CACHE_DIR: &str = "openalx-cache";

#[derive(Parser)]
#[command(
    name = "openalx",
    version,
    about = "Reproducible pool-based active-learning benchmark runner",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Run the benchmark grid (samplers x folds) on one dataset.
    Run(RunArgs),
    /// Print a final-iteration comparison matrix across samplers.
    Compare(CompareArgs),
    /// Write per-metric curve CSVs and SVG plots for a finished run.
    Report(ReportArgs),
    /// Export the persisted fold/init-pool index file for a configuration.
    ExportIndices(ExportIndicesArgs),
    /// List registered datasets with their shape statistics.
    ListDatasets(ListDatasetsArgs),
    /// Check a dataset against its schema and the size plausibility rule.
    Validate(ValidateArgs),
}

/// Flags that assemble an experiment configuration. Precedence: built-in
/// defaults, then the `--config` file, then explicit flags.
#[derive(Args)]
struct ConfigArgs {
    /// Dataset id (a builtin or a pair discovered in --data-dir).
    #[arg(long)]
    dataset: Option<String>,
    /// JSON config file mirroring the experiment config; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory scanned for <name>.csv + <name>.json dataset pairs.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Model family: logistic, forest, or auto (cross-validated pick).
    #[arg(long)]
    model: Option<String>,
    /// Master seed for splits, pools, model fits, and samplers.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of stratified shuffle folds.
    #[arg(long)]
    folds: Option<usize>,
    /// Initial labeled pool fraction of n.
    #[arg(long)]
    init_frac: Option<f64>,
    /// Per-iteration batch fraction of n.
    #[arg(long)]
    batch_frac: Option<f64>,
    /// Batch iterations after the initial fit.
    #[arg(long)]
    iterations: Option<usize>,
    /// Prefilter multiplier for the weighted k-means samplers.
    #[arg(long)]
    beta: Option<f64>,
    /// Conformance-boundary width in projected standard deviations.
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Comma-separated sampler list (default: every known sampler).
    #[arg(long, value_delimiter = ',')]
    samplers: Vec<String>,
    /// Worker threads for fold-level parallelism (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Run even when the dataset is below the plausibility threshold.
    #[arg(long)]
    override_plausibility: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Comma-separated sampler list (default: the run's manifest).
    #[arg(long, value_delimiter = ',')]
    samplers: Vec<String>,
    /// Metric column to compare.
    #[arg(long, default_value = "Accuracy")]
    metric: String,
    /// Output format: table (default), csv, or json.
    #[arg(long)]
    format: Option<String>,
    /// Write the matrix to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Comma-separated sampler list (default: the run's manifest).
    #[arg(long, value_delimiter = ',')]
    samplers: Vec<String>,
    /// Report directory (default: <run dir>/report).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportIndicesArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Destination file for the exported index data.
    #[arg(long, required = true)]
    out: PathBuf,
}

#[derive(Args)]
struct ListDatasetsArgs {
    /// Directory scanned for <name>.csv + <name>.json dataset pairs.
    #[arg(long)]
    data_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Dataset id to validate.
    #[arg(long, required = true)]
    dataset: String,
    /// Directory scanned for <name>.csv + <name>.json dataset pairs.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Accept datasets below the size threshold.
    #[arg(long)]
    override_plausibility: bool,
}

/// On-disk config file: the experiment config with every field optional so
/// flags and defaults can fill the gaps. Unknown keys are rejected.
#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    dataset_id: Option<String>,
    model: Option<ModelSpec>,
    folds: Option<usize>,
    test_frac: Option<f64>,
    init_frac: Option<f64>,
    batch_frac: Option<f64>,
    iterations: Option<usize>,
    seed: Option<u64>,
    beta: Option<f64>,
    alpha: Option<f64>,
    kmeans: Option<KMeansParams>,
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version arrive as errors; everything else is a
            // usage error, which this tool reports as exit 1 (2 is reserved
            // for partial completion).
            use clap::error::ErrorKind;
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if ok { EXIT_OK } else { EXIT_SETUP };
        }
    };
    let outcome = match &cli.verb {
        Verb::Run(a) => cmd_run(a),
        Verb::Compare(a) => cmd_compare(a),
        Verb::Report(a) => cmd_report(a),
        Verb::ExportIndices(a) => cmd_export_indices(a),
        Verb::ListDatasets(a) => cmd_list_datasets(a),
        Verb::Validate(a) => cmd_validate(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_SETUP
        }
    }
}

/// Resolved experiment config, plus the dataset when the verb needs it
/// loaded.
struct Setup {
    config: ExperimentConfig,
    dataset: Option<openalx_core::data::Dataset>,
}

fn prepare(args: &ConfigArgs, need_dataset: bool) -> Result<Setup> {
    let registry = Registry::discover(args.data_dir.as_deref())?;
    let file: FileConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::Config(format!("cannot read config file {}: {e}", path.display()))
            })?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("bad config file {}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };

    let dataset_id = args
        .dataset
        .clone()
        .or_else(|| file.dataset_id.clone())
        .ok_or_else(|| {
            Error::Config("no dataset given: pass --dataset or set dataset_id in --config".into())
        })?;
    let seed = args.seed.or(file.seed).unwrap_or(0);

    let auto = args.model.as_deref() == Some("auto");
    let dataset = if need_dataset || auto {
        Some(registry.load(&dataset_id)?)
    } else {
        None
    };

    let mut model = file.model.clone().unwrap_or_else(ModelSpec::logistic_default);
    match args.model.as_deref() {
        None => {}
        // A family flag keeps a detailed spec of the same family from the
        // config file and otherwise swaps in that family's defaults.
        Some("logistic") => {
            if model.kind_name() != "logistic" {
                model = ModelSpec::logistic_default();
            }
        }
        Some("forest") => {
            if model.kind_name() != "forest" {
                model = ModelSpec::forest_default(seed);
            }
        }
        Some("auto") => {
            let ds = dataset.as_ref().expect("dataset loaded for auto selection");
            let candidates = [ModelSpec::logistic_default(), ModelSpec::forest_default(seed)];
            let (winner, scores) = select_model(&candidates, ds, 5, seed)?;
            log::info!(
                "model selection on '{dataset_id}': logistic {:.4}, forest {:.4} -> {}",
                scores[0],
                scores[1],
                winner.kind_name()
            );
            model = winner;
        }
        Some(other) => {
            return Err(Error::Config(format!(
                "unknown model '{other}'; valid: logistic, forest, auto"
            )))
        }
    }

    let mut config = ExperimentConfig::new(dataset_id, model, seed);
    if let Some(v) = file.folds {
        config.folds = v;
    }
    if let Some(v) = file.test_frac {
        config.test_frac = v;
    }
    if let Some(v) = file.init_frac {
        config.init_frac = v;
    }
    if let Some(v) = file.batch_frac {
        config.batch_frac = v;
    }
    if let Some(v) = file.iterations {
        config.iterations = v;
    }
    if let Some(v) = file.beta {
        config.beta = v;
    }
    if let Some(v) = file.alpha {
        config.alpha = v;
    }
    if let Some(v) = file.kmeans {
        config.kmeans = v;
    }
    if let Some(v) = args.folds {
        config.folds = v;
    }
    if let Some(v) = args.init_frac {
        config.init_frac = v;
    }
    if let Some(v) = args.batch_frac {
        config.batch_frac = v;
    }
    if let Some(v) = args.iterations {
        config.iterations = v;
    }
    if let Some(v) = args.beta {
        config.beta = v;
    }
    if let Some(v) = args.alpha {
        config.alpha = v;
    }
    config.validate()?;
    Ok(Setup { config, dataset })
}

fn cache_root() -> PathBuf {
    match std::env::var_os(CACHE_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(DEFAULT_CACHE_DIR),
    }
}

fn parse_samplers(names: &[String]) -> Result<Vec<SamplerKind>> {
    if names.is_empty() {
        return Ok(SamplerKind::all());
    }
    names.iter().map(|s| s.trim().parse()).collect()
}

/// Samplers recorded in an existing run's manifest, in manifest order.
fn kinds_from_manifest(dir: &Path) -> Result<Vec<SamplerKind>> {
    let manifest = load_manifest(dir)?;
    let mut kinds: Vec<SamplerKind> = Vec::new();
    for cell in &manifest.cells {
        if !kinds.contains(&cell.sampler) {
            kinds.push(cell.sampler);
        }
    }
    if kinds.is_empty() {
        return Err(Error::Config(
            "the manifest lists no cells; run the experiment first".into(),
        ));
    }
    Ok(kinds)
}

fn resolve_kinds(explicit: &[String], dir: &Path) -> Result<Vec<SamplerKind>> {
    if explicit.is_empty() {
        kinds_from_manifest(dir)
    } else {
        parse_samplers(explicit)
    }
}

fn cmd_run(args: &RunArgs) -> Result<i32> {
    let setup = prepare(&args.config, true)?;
    let ds = setup.dataset.as_ref().expect("dataset loaded for run");

    let plausibility = check_plausibility(ds, args.override_plausibility);
    if !plausibility.passed {
        return Err(Error::Config(format!(
            "dataset '{}' has {} rows, below the plausibility threshold of {}; \
             pass --override-plausibility to run anyway",
            setup.config.dataset_id, plausibility.n, plausibility.threshold
        )));
    }
    if let Some(w) = &plausibility.warning {
        log::warn!("{w}");
    }

    let kinds = parse_samplers(&args.samplers)?;
    if let Some(jobs) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot size the worker pool: {e}")))?;
    }

    let root = cache_root();
    let rs = run(ds, &setup.config, &kinds, &root)?;
    let ok = rs.cells.iter().filter(|c| c.is_ok()).count();
    let dir = run_dir(&root, &rs.config_hash);
    eprintln!(
        "{ok}/{} cells ok; manifest at {}",
        rs.cells.len(),
        dir.join("manifest.json").display()
    );
    println!("{}", rs.config_hash);
    Ok(if rs.is_complete() { EXIT_OK } else { EXIT_PARTIAL })
}

fn cmd_compare(args: &CompareArgs) -> Result<i32> {
    let setup = prepare(&args.config, false)?;
    let root = cache_root();
    let dir = run_dir(&root, &setup.config.hash()?);
    let kinds = resolve_kinds(&args.samplers, &dir)?;
    if kinds.len() < 2 {
        return Err(Error::Config(format!(
            "compare needs at least two samplers, got {}",
            kinds.len()
        )));
    }
    let rs = load_result_set(&root, &setup.config, &kinds)?;
    let cells = final_summary(&rs, &args.metric)?;

    let dataset = &setup.config.dataset_id;
    let text = match args.format.as_deref() {
        None | Some("table") => compare_table(dataset, &args.metric, &cells),
        Some("csv") => compare_csv(dataset, &cells)?,
        Some("json") => compare_json(dataset, &args.metric, &cells)?,
        Some(other) => {
            return Err(Error::Config(format!(
                "unknown format '{other}'; valid: table, csv, json"
            )))
        }
    };
    match &args.out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, text)?;
        }
        None => print!("{text}"),
    }
    Ok(EXIT_OK)
}

fn best_names(cells: &[SummaryCell]) -> String {
    cells
        .iter()
        .filter(|c| c.best)
        .map(|c| c.sampler.as_str())
        .collect::<Vec<_>>()
        .join(",")
}

/// One matrix row per dataset (a run covers one), one column per sampler,
/// the best cell starred, plus a marker column naming the winner(s).
fn compare_table(dataset: &str, metric: &str, cells: &[SummaryCell]) -> String {
    let mut header: Vec<String> = vec![format!("dataset ({metric})")];
    header.extend(cells.iter().map(|c| c.sampler.to_string()));
    header.push("best".into());

    let mut row: Vec<String> = vec![dataset.to_string()];
    row.extend(cells.iter().map(|c| {
        let star = if c.best { " *" } else { "" };
        format!("{}{star}", c.display())
    }));
    row.push(best_names(cells));

    let widths: Vec<usize> = header
        .iter()
        .zip(row.iter())
        .map(|(h, r)| h.len().max(r.len()))
        .collect();
    let fmt = |fields: &[String]| {
        fields
            .iter()
            .zip(widths.iter())
            .map(|(f, w)| format!("{f:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    format!("{}\n{}\n", fmt(&header), fmt(&row))
}

fn compare_csv(dataset: &str, cells: &[SummaryCell]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = vec!["dataset".into()];
    header.extend(cells.iter().map(|c| c.sampler.to_string()));
    header.push("best".into());
    w.write_record(&header)?;

    let mut row: Vec<String> = vec![dataset.to_string()];
    row.extend(cells.iter().map(|c| c.display()));
    row.push(best_names(cells));
    w.write_record(&row)?;

    let bytes = w
        .into_inner()
        .map_err(|e| Error::Format(format!("csv buffer: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(format!("csv utf-8: {e}")))
}

fn compare_json(dataset: &str, metric: &str, cells: &[SummaryCell]) -> Result<String> {
    let value = serde_json::json!({
        "dataset": dataset,
        "metric": metric,
        "summary": cells,
    });
    let mut text = serde_json::to_string_pretty(&value)?;
    text.push('\n');
    Ok(text)
}

fn cmd_report(args: &ReportArgs) -> Result<i32> {
    let setup = prepare(&args.config, false)?;
    let root = cache_root();
    let dir = run_dir(&root, &setup.config.hash()?);
    let kinds = resolve_kinds(&args.samplers, &dir)?;
    let rs = load_result_set(&root, &setup.config, &kinds)?;
    let out = args.out.clone().unwrap_or_else(|| dir.join("report"));
    let paths = write_report(&rs, &out)?;
    eprintln!(
        "wrote {} curve files and {} plots under {}",
        paths.curves.len(),
        paths.plots.len(),
        out.display()
    );
    println!("{}", out.display());
    Ok(EXIT_OK)
}

fn cmd_export_indices(args: &ExportIndicesArgs) -> Result<i32> {
    let setup = prepare(&args.config, true)?;
    let ds = setup.dataset.as_ref().expect("dataset loaded for export");
    let root = cache_root();
    let ic: InitialConditions = load_initial_conditions(ds, &setup.config, &root)?;
    persist_indices(&ic, &args.out)?;
    println!("{}", args.out.display());
    Ok(EXIT_OK)
}

fn cmd_list_datasets(args: &ListDatasetsArgs) -> Result<i32> {
    let registry = Registry::discover(args.data_dir.as_deref())?;
    for id in registry.ids() {
        match registry.load(&id) {
            Ok(ds) => println!("{id}: {}", format_dataset_row(&ds)),
            Err(e) => log::warn!("skipping '{id}': {e}"),
        }
    }
    Ok(EXIT_OK)
}

fn cmd_validate(args: &ValidateArgs) -> Result<i32> {
    let registry = Registry::discover(args.data_dir.as_deref())?;
    let ds = registry.load(&args.dataset)?;
    let report = check_plausibility(&ds, args.override_plausibility);

    println!("dataset: {}", ds.schema.dataset_id);
    println!("rows: {}", ds.n());
    println!("classes: {}", ds.class_count());
    println!(
        "features: {}/{} (continuous/categorical)",
        ds.schema.continuous_count(),
        ds.schema.categorical_count()
    );
    println!("shape: {}", format_dataset_row(&ds));
    let verdict = if !report.passed {
        "fail"
    } else if report.overridden {
        "pass (overridden)"
    } else {
        "pass"
    };
    println!(
        "plausibility (n >= {}): {verdict}",
        report.threshold
    );
    if let Some(w) = &report.warning {
        eprintln!("warning: {w}");
    }
    Ok(if report.passed { EXIT_OK } else { EXIT_SETUP })
}
