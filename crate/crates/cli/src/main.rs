//! `dres`: command-line front end for the DRES engine.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or config error, 3 internal
//! invariant failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dres_core::classifiers::ARCHIVE_VERSION;
use dres_core::config::{DatasetFiles, SyntheticKind, SyntheticSpec};
use dres_core::data::{csv_io, dmat, load_view, save_view};
use dres_core::hardness::build_hardness_matrix;
use dres_core::harness::{
    ablation_csv, k_spread, run_experiment, sweep_k, write_hardness_analysis, write_ksweep, write_outputs, DatasetSummary,
};
use dres_core::{dres_predict, DesMethod, Error, ExperimentConfig, ModelBundle, Result, ENGINE_VERSION};

#[derive(Debug, Parser)]
#[command(
    name = "dres",
    about = "Dynamic representation and ensemble selection over multi-view data",
    disable_version_flag = true
)]
struct Cli {
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Seed for every stochastic choice; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Print engine and file format versions.
    #[arg(short = 'V', long)]
    version: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load a dataset and print its shape.
    Validate(DataArgs),
    /// Write kDN hardness per instance, one column per view.
    Hardness(HardnessArgs),
    /// Fit a DRES model on a dataset and save it.
    Train(RunArgs),
    /// Predict with a saved model.
    Predict(PredictArgs),
    /// Cross-validated evaluation with baselines and oracles.
    Evaluate(RunArgs),
    /// Cross-validated ablation of the two selection stages.
    Ablate(RunArgs),
    /// Macro-F1 across hardness neighbor counts.
    SweepK(SweepArgs),
    /// Hardness tables and cross-view statistics.
    Analyze(HardnessArgs),
    /// Accuracy of the two oracle bounds next to DRES.
    Oracle(RunArgs),
    /// Convert a view between CSV and DMAT.
    Convert(ConvertArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Synthetic {
    Regions,
    Blobs,
}

impl From<Synthetic> for SyntheticKind {
    fn from(s: Synthetic) -> Self {
        match s {
            Synthetic::Regions => SyntheticKind::Regions,
            Synthetic::Blobs => SyntheticKind::Blobs,
        }
    }
}

#[derive(Debug, Args)]
struct DataArgs {
    /// TOML or JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,

    /// View files (.dmat or .csv), in view order.
    #[arg(long, num_args = 1..)]
    views: Vec<PathBuf>,

    /// Labels CSV (id,label).
    #[arg(long)]
    labels: Option<PathBuf>,

    /// Use a built-in generator instead of files.
    #[arg(long, value_enum, conflicts_with_all = ["views", "labels"])]
    synthetic: Option<Synthetic>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,

    #[arg(long)]
    output_dir: Option<PathBuf>,

    #[arg(long)]
    folds: Option<usize>,

    /// Region-of-competence size.
    #[arg(long)]
    k: Option<usize>,

    /// Neighbors for hardness estimation.
    #[arg(long)]
    k_hardness: Option<usize>,

    #[arg(long)]
    dsel_fraction: Option<f64>,

    /// Comma-separated: knora_e, des_p, meta_des.
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    methods: Vec<DesMethod>,

    /// Disable per-view z-scoring before neighbor search.
    #[arg(long)]
    no_standardize: bool,

    #[arg(long)]
    no_baselines: bool,

    #[arg(long)]
    no_oracles: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,

    /// Comma-separated hardness neighbor counts.
    #[arg(long, value_delimiter = ',')]
    k_values: Vec<usize>,
}

#[derive(Debug, Args)]
struct HardnessArgs {
    #[command(flatten)]
    data: DataArgs,

    #[arg(long)]
    output_dir: Option<PathBuf>,

    /// Neighbors for kDN.
    #[arg(long)]
    k: Option<usize>,

    #[arg(long)]
    no_standardize: bool,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Model written by `train`.
    #[arg(long)]
    model: PathBuf,

    #[arg(long, num_args = 1.., required = true)]
    views: Vec<PathBuf>,

    /// Optional labels; adds a `true` column and prints accuracy.
    #[arg(long)]
    labels: Option<PathBuf>,

    #[arg(long, value_parser = parse_method, default_value = "knora_e")]
    method: DesMethod,

    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    #[arg(long = "in")]
    input: PathBuf,

    /// Format follows the extension: .csv writes CSV, anything else DMAT.
    #[arg(long = "out")]
    output: PathBuf,
}

fn parse_method(s: &str) -> std::result::Result<DesMethod, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

const MODEL_FILE: &str = "model.dres";

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if cli.version {
        println!("dres {ENGINE_VERSION}");
        println!("dmat format {}", dmat::VERSION);
        println!("model archive format {ARCHIVE_VERSION}");
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("error: no command given; see `dres --help`");
        return ExitCode::from(1);
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(3);
        }
    };
    match pool.install(|| run(command, cli.seed)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_internal() { 3 } else { 2 })
        }
    }
}

fn run(command: Command, seed: Option<u64>) -> Result<()> {
    match command {
        Command::Validate(a) => validate(&a, seed),
        Command::Hardness(a) => hardness(&a, seed),
        Command::Train(a) => train(&a, seed),
        Command::Predict(a) => predict(&a),
        Command::Evaluate(a) => evaluate(&a, seed),
        Command::Ablate(a) => ablate(&a, seed),
        Command::SweepK(a) => sweep(&a, seed),
        Command::Analyze(a) => analyze(&a, seed),
        Command::Oracle(a) => oracle(&a, seed),
        Command::Convert(a) => convert(&a),
    }
}

/// Config file first, then flags on top.
fn base_config(data: &DataArgs, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut config = match &data.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    if !data.views.is_empty() || data.labels.is_some() {
        let labels = data.labels.clone().ok_or_else(|| Error::config("--views needs --labels"))?;
        if data.views.is_empty() {
            return Err(Error::config("--labels needs --views"));
        }
        config.dataset = Some(DatasetFiles {
            views: data.views.clone(),
            labels,
        });
        config.synthetic = None;
    }
    if let Some(kind) = data.synthetic {
        match &mut config.synthetic {
            Some(spec) => spec.kind = kind.into(),
            None => {
                config.synthetic = Some(SyntheticSpec {
                    kind: kind.into(),
                    seed: None,
                    regions: Default::default(),
                    blobs: Default::default(),
                })
            }
        }
        config.dataset = None;
    }
    Ok(config)
}

fn run_config(a: &RunArgs, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut config = base_config(&a.data, seed)?;
    if let Some(dir) = &a.output_dir {
        config.output_dir = dir.clone();
    }
    if let Some(f) = a.folds {
        config.folds = f;
    }
    if let Some(k) = a.k {
        config.k = k;
    }
    if let Some(k) = a.k_hardness {
        config.k_hardness = k;
    }
    if let Some(d) = a.dsel_fraction {
        config.dsel_fraction = d;
    }
    if !a.methods.is_empty() {
        config.methods = a.methods.clone();
    }
    if a.no_standardize {
        config.standardize = false;
    }
    if a.no_baselines {
        config.baselines = false;
    }
    if a.no_oracles {
        config.oracles = false;
    }
    config.validate()?;
    Ok(config)
}

fn hardness_config(a: &HardnessArgs, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut config = base_config(&a.data, seed)?;
    if let Some(dir) = &a.output_dir {
        config.output_dir = dir.clone();
    }
    if let Some(k) = a.k {
        config.k_hardness = k;
    }
    if a.no_standardize {
        config.standardize = false;
    }
    config.validate()?;
    Ok(config)
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn validate(a: &DataArgs, seed: Option<u64>) -> Result<()> {
    let config = base_config(a, seed)?;
    config.validate()?;
    let dataset = config.load_dataset()?;
    let summary = DatasetSummary::of(&dataset);
    println!("instances: {}", summary.instances);
    println!("classes: {} (counts {:?})", summary.classes, dataset.labels().class_counts());
    for (name, dim) in summary.view_names.iter().zip(&summary.view_dims) {
        println!("view {name}: dim {dim}");
    }
    Ok(())
}

fn hardness(a: &HardnessArgs, seed: Option<u64>) -> Result<()> {
    let config = hardness_config(a, seed)?;
    let dataset = config.load_dataset()?;
    let all: Vec<usize> = (0..dataset.len()).collect();
    let h = build_hardness_matrix(&dataset, &all, config.k_hardness, config.standardize)?;
    let path = write_text(&config.output_dir, "hardness.csv", &h.to_csv(dataset.ids()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn analyze(a: &HardnessArgs, seed: Option<u64>) -> Result<()> {
    let config = hardness_config(a, seed)?;
    let dataset = config.load_dataset()?;
    let stats = write_hardness_analysis(&dataset, config.k_hardness, config.standardize, &config.output_dir)?;
    if let Some(s) = stats {
        println!("instances with cross-view hardness range > 0.5: {:.3}", s.fraction_range_above(0.5));
    }
    println!("wrote {}", config.output_dir.display());
    Ok(())
}

fn train(a: &RunArgs, seed: Option<u64>) -> Result<()> {
    let config = run_config(a, seed)?;
    let dataset = config.load_dataset()?;
    let bundle = ModelBundle::train(
        &dataset,
        &config.seeded_classifiers(),
        config.dres_params(),
        config.dsel_fraction,
        config.seed,
    )?;
    fs::create_dir_all(&config.output_dir).map_err(|e| Error::io(&config.output_dir, e))?;
    let path = config.output_dir.join(MODEL_FILE);
    bundle.save(&path)?;
    println!("wrote {} ({} DSEL rows)", path.display(), bundle.dsel.len());
    Ok(())
}

fn load_queries(views: &[PathBuf], bundle: &ModelBundle) -> Result<Vec<dres_core::ViewMatrix>> {
    let loaded = views.iter().map(|p| load_view(p)).collect::<Result<Vec<_>>>()?;
    if loaded.len() != bundle.dsel.num_views() {
        return Err(Error::data(format!(
            "model has {} views, {} given",
            bundle.dsel.num_views(),
            loaded.len()
        )));
    }
    for (v, (q, d)) in loaded.iter().zip(bundle.dsel.views()).enumerate() {
        if q.dim() != d.dim() {
            return Err(Error::data(format!(
                "view {v}: model expects dim {}, file has {}",
                d.dim(),
                q.dim()
            )));
        }
        if q.rows() != loaded[0].rows() {
            return Err(Error::data(format!(
                "view {v} has {} rows, view 0 has {}",
                q.rows(),
                loaded[0].rows()
            )));
        }
    }
    Ok(loaded)
}

fn predict(a: &PredictArgs) -> Result<()> {
    use rayon::prelude::*;
    let bundle = ModelBundle::load(&a.model)?;
    let views = load_queries(&a.views, &bundle)?;
    let rows = views[0].rows();
    let truth = match &a.labels {
        Some(p) => {
            let (ids, labels) = csv_io::read_labels(p)?;
            if ids.len() != rows {
                return Err(Error::data(format!("{} labels for {rows} rows", ids.len())));
            }
            Some((ids, labels))
        }
        None => None,
    };
    let state = bundle.state()?;
    let predictions = (0..rows)
        .into_par_iter()
        .map(|i| {
            let query: Vec<Vec<f64>> = views.iter().map(|v| v.row_f64(i)).collect();
            dres_predict(&query, &state, a.method)
        })
        .collect::<Result<Vec<_>>>()?;

    let names = bundle.dsel.view_names();
    let mut out = String::from("id,predicted,chosen_view,ensemble,fallback");
    out.push_str(if truth.is_some() { ",true\n" } else { "\n" });
    let mut correct = 0usize;
    for (i, p) in predictions.iter().enumerate() {
        let id = truth.as_ref().map_or_else(|| i.to_string(), |(ids, _)| ids[i].clone());
        let ensemble: Vec<String> = p.ensemble.classifier_indices.iter().map(|c| c.to_string()).collect();
        let _ = write!(
            out,
            "{id},{},{},{},{}",
            p.label,
            names[p.choice.chosen_view],
            ensemble.join(" "),
            p.ensemble.fallback_used
        );
        if let Some((_, labels)) = &truth {
            let y = labels.get(i);
            correct += usize::from(y == p.label);
            let _ = write!(out, ",{y}");
        }
        out.push('\n');
    }
    let path = write_text(&a.output_dir, "predictions.csv", &out)?;
    if truth.is_some() && rows > 0 {
        println!("accuracy: {:.4}", correct as f64 / rows as f64);
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn evaluate(a: &RunArgs, seed: Option<u64>) -> Result<()> {
    let config = run_config(a, seed)?;
    let dataset = config.load_dataset()?;
    let output = run_experiment(&dataset, &config)?;
    write_outputs(&output, &config.output_dir)?;
    for m in &output.report.methods {
        println!("dres[{}] macro-F1 {}", m.method, m.metrics.macro_f1.display());
    }
    for b in &output.report.baselines {
        println!("{} macro-F1 {}", b.name, b.metrics.macro_f1.display());
    }
    println!("wrote {}", config.output_dir.display());
    Ok(())
}

fn ablate(a: &RunArgs, seed: Option<u64>) -> Result<()> {
    let mut config = run_config(a, seed)?;
    config.methods = vec![config.ablation_method];
    let dataset = config.load_dataset()?;
    let output = run_experiment(&dataset, &config)?;
    for row in &output.report.ablation {
        println!("{:<24} macro-F1 {}", row.name, row.metrics.macro_f1.display());
    }
    let path = write_text(&config.output_dir, "ablation.csv", &ablation_csv(&output.report.ablation))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn sweep(a: &SweepArgs, seed: Option<u64>) -> Result<()> {
    let mut config = run_config(&a.run, seed)?;
    if !a.k_values.is_empty() {
        config.k_values = a.k_values.clone();
        config.validate()?;
    }
    let dataset = config.load_dataset()?;
    let rows = sweep_k(&dataset, &config, &config.k_values)?;
    write_ksweep(&rows, &config.output_dir)?;
    for (method, spread) in k_spread(&rows) {
        println!("{method}: macro-F1 spread over k {spread:.4}");
    }
    println!("wrote {}", config.output_dir.display());
    Ok(())
}

fn oracle(a: &RunArgs, seed: Option<u64>) -> Result<()> {
    let mut config = run_config(a, seed)?;
    config.oracles = true;
    config.baselines = false;
    let dataset = config.load_dataset()?;
    let output = run_experiment(&dataset, &config)?;
    let mut out = String::from("method,dres_accuracy,oracle_representation_accuracy,oracle_full_accuracy\n");
    for m in &output.report.methods {
        let (rep, full) = match (&m.oracle_representation, &m.oracle_full) {
            (Some(r), Some(f)) => (r.accuracy.mean, f.accuracy.mean),
            _ => return Err(Error::Invariant(format!("oracle metrics missing for {}", m.method))),
        };
        let _ = writeln!(out, "{},{},{},{}", m.method, m.metrics.accuracy.mean, rep, full);
        println!(
            "{}: dres {:.4} <= oracle_representation {rep:.4} <= oracle_full {full:.4}",
            m.method, m.metrics.accuracy.mean
        );
    }
    let path = write_text(&config.output_dir, "oracle.csv", &out)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn convert(a: &ConvertArgs) -> Result<()> {
    let view = load_view(&a.input)?;
    save_view(&view, &a.output)?;
    println!("wrote {} ({} x {})", a.output.display(), view.rows(), view.dim());
    Ok(())
}
