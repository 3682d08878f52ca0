//! `staged-automl`: single runs, paired benchmarks, synthetic datasets and
//! result tables.

mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use staged_automl::bench::{plan, run_task, to_matrix, BenchConfig, BenchDataset, BenchOutcome};
use staged_automl::data::synth::{synthesize, SynthKind, SynthSpec};
use staged_automl::data::{load_dataset, write_csv, DataFormat, Dataset, LabelColumn};
use staged_automl::orchestrator::{preset, run, HoldoutPolicy, Overrides, RunStatus, SchemeConfig};
use staged_automl::stages::StageId;
use staged_automl::stats::{
    default_synergy_ranges, render_summary, render_synergy, render_tournament, summary_table, synergy, tournament,
    write_summary_csv, write_synergy_csv, write_tournament_csv, ResultMatrix, VerdictRule,
};

use config::FileConfig;

type CliResult<T> = Result<T, String>;

#[derive(Parser)]
#[command(name = "staged-automl", version, about = "Staged AutoML for tabular classification")]
struct Cli {
    /// TOML file with defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a pipeline on one dataset.
    Run(RunArgs),
    /// Run presets over repeated train/test splits of several datasets.
    Bench(BenchArgs),
    /// Write a synthetic dataset as CSV.
    Synth(SynthArgs),
    /// Summary, tournament and synergy tables from benchmark results.
    Report(ReportArgs),
}

#[derive(Args, Default)]
struct DataArgs {
    /// Dataset file (CSV or ARFF).
    #[arg(long)]
    data: Vec<PathBuf>,
    /// Label column name or zero-based index; defaults to the last column.
    #[arg(long)]
    label: Option<String>,
    /// Input format; guessed from the extension when absent.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args, Default)]
struct SchemeArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Seconds for the whole run.
    #[arg(long)]
    global_timeout: Option<f64>,
    /// Seconds per candidate evaluation.
    #[arg(long)]
    per_eval_timeout: Option<f64>,
    /// Seconds per stage.
    #[arg(long)]
    stage_timeout: Option<f64>,
    /// MCCV repetitions.
    #[arg(long)]
    repeats: Option<usize>,
    /// Holdout size at which validation is fully trusted.
    #[arg(long)]
    n_bar: Option<usize>,
    /// Number of validation finalists.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    holdout_fraction: Option<f64>,
    /// Random-search samples per tuned candidate.
    #[arg(long)]
    max_evals: Option<usize>,
    #[arg(long, value_enum)]
    holdout: Option<HoldoutArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum HoldoutArg {
    Auto,
    Always,
    Never,
}

impl From<HoldoutArg> for HoldoutPolicy {
    fn from(h: HoldoutArg) -> Self {
        match h {
            HoldoutArg::Auto => HoldoutPolicy::Auto,
            HoldoutArg::Always => HoldoutPolicy::Always,
            HoldoutArg::Never => HoldoutPolicy::Never,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Scheme preset, e.g. primitive, full, monotone-tuning, single-meta.
    #[arg(long)]
    preset: Option<String>,
    /// Explicit comma-separated stage list instead of a preset.
    #[arg(long, value_delimiter = ',', conflicts_with = "preset")]
    stages: Option<Vec<String>>,
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated presets to compare.
    #[arg(long, value_delimiter = ',')]
    presets: Option<Vec<String>>,
    /// Outer train/test splits per dataset.
    #[arg(long)]
    splits: Option<usize>,
    #[arg(long)]
    train_fraction: Option<f64>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Separable,
    MadelonLike,
    ScaleSensitive,
    NoiseOnly,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    d: usize,
    /// Informative columns for madelon-like data.
    #[arg(long, default_value_t = 5)]
    informative: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// A results CSV or a directory of benchmark reports.
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    baseline: Option<String>,
    /// Approaches for the tournament; all but the baseline by default.
    #[arg(long, value_delimiter = ',')]
    variants: Option<Vec<String>>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Fraction trimmed from each tail.
    #[arg(long)]
    trim: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = FileConfig::load(cli.config.as_deref()).and_then(|file| match cli.command {
        Command::Run(args) => cmd_run(args, file),
        Command::Bench(args) => cmd_bench(args, file),
        Command::Synth(args) => cmd_synth(args).map(|_| ExitCode::SUCCESS),
        Command::Report(args) => cmd_report(args, file).map(|_| ExitCode::SUCCESS),
    });
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(1)
    })
}

fn secs(s: Option<f64>) -> CliResult<Option<Duration>> {
    s.map(|v| Duration::try_from_secs_f64(v).map_err(|_| format!("invalid duration {v}")))
        .transpose()
}

fn overrides(args: &SchemeArgs, file: &FileConfig) -> CliResult<Overrides> {
    Ok(Overrides {
        global_timeout: secs(args.global_timeout.or(file.global_timeout))?,
        per_eval_timeout: secs(args.per_eval_timeout.or(file.per_eval_timeout))?,
        stage_timeout: secs(args.stage_timeout.or(file.stage_timeout))?,
        repeats: args.repeats.or(file.repeats),
        n_bar: args.n_bar.or(file.n_bar),
        m: args.m.or(file.m),
        holdout_fraction: args.holdout_fraction.or(file.holdout_fraction),
        max_evals: args.max_evals.or(file.max_evals),
        holdout: args.holdout.map(HoldoutPolicy::from).or(file.holdout),
        seed: args.seed.or(file.seed),
    })
}

fn load(args: &DataArgs, file: &FileConfig) -> CliResult<Vec<(String, Dataset)>> {
    let paths = if args.data.is_empty() {
        file.data.clone().unwrap_or_default()
    } else {
        args.data.clone()
    };
    if paths.is_empty() {
        return Err("no dataset given (use --data)".into());
    }
    let label = args
        .label
        .as_deref()
        .or(file.label.as_deref())
        .map_or(LabelColumn::Last, LabelColumn::parse);
    let format = args.format.as_deref().or(file.format.as_deref());
    paths
        .iter()
        .map(|p| {
            let fmt = match format {
                Some(f) => f.parse().map_err(|e: staged_automl::Error| e.to_string())?,
                None => DataFormat::from_path(p),
            };
            let d = load_dataset(p, fmt, &label).map_err(|e| e.to_string())?;
            let id = p
                .file_stem()
                .map_or("dataset".into(), |s| s.to_string_lossy().into_owned());
            Ok((id, d))
        })
        .collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    text.push('\n');
    write_text(path, &text)
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| format!("failed to create {}: {e}", dir.display()))?;
    }
    fs::write(path, text).map_err(|e| format!("failed to write {}: {e}", path.display()))
}

fn cmd_run(args: RunArgs, file: FileConfig) -> CliResult<ExitCode> {
    let overrides = overrides(&args.scheme, &file)?;
    let stages = args.stages.or(file.stages.clone());
    let base = match (stages, args.preset.as_deref().or(file.preset.as_deref())) {
        (Some(list), _) => {
            let ids = list
                .iter()
                .map(|s| s.trim().parse::<StageId>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| e.to_string())?;
            SchemeConfig::from_stages(&ids)
        }
        (None, name) => preset(name.unwrap_or("full")).map_err(|e| e.to_string())?,
    };
    let cfg = overrides.apply(base);
    cfg.validate().map_err(|e| e.to_string())?;
    let mut data = load(&args.data, &file)?;
    if data.len() != 1 {
        return Err("run takes exactly one dataset".into());
    }
    let (_, d) = data.remove(0);
    let out = args.out.or(file.out).unwrap_or_else(|| PathBuf::from("."));

    let report = run(&d, &cfg).map_err(|e| e.to_string())?;
    write_json(&out.join("report.json"), &report)?;
    write_text(&out.join("journal.jsonl"), &report.journal_jsonl())?;
    write_json(&out.join("stages.json"), &report.stages)?;
    match (&report.status, &report.best) {
        (RunStatus::Success, Some(best)) => {
            println!("best: {}", best.key);
            println!("internal error: {:.4} ± {:.4}", best.score.mean, best.score.std);
            if let Some(v) = &best.validation {
                println!(
                    "holdout error: {:.4} (final score {:.4})",
                    v.holdout_error, v.final_score
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        _ => {
            eprintln!("no model found within the budget");
            Ok(ExitCode::from(2))
        }
    }
}

fn cmd_bench(args: BenchArgs, file: FileConfig) -> CliResult<ExitCode> {
    let defaults = BenchConfig::default();
    let mut overrides = overrides(&args.scheme, &file)?;
    let cfg = BenchConfig {
        presets: args.presets.or(file.presets.clone()).unwrap_or(defaults.presets),
        n_splits: args.splits.or(file.splits).unwrap_or(defaults.n_splits),
        train_fraction: args
            .train_fraction
            .or(file.train_fraction)
            .unwrap_or(defaults.train_fraction),
        seed: overrides.seed.take().unwrap_or(defaults.seed),
        overrides,
    };
    let datasets: Vec<BenchDataset> = load(&args.data, &file)?
        .into_iter()
        .map(|(id, data)| BenchDataset { id, data })
        .collect();
    let tasks = plan(&cfg, &datasets).map_err(|e| e.to_string())?;
    let out = args.out.or(file.out).unwrap_or_else(|| PathBuf::from("."));

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.or(file.jobs).unwrap_or(0))
        .build()
        .map_err(|e| e.to_string())?;
    let outcomes: Vec<BenchOutcome> = pool.install(|| {
        tasks
            .par_iter()
            .map(|t| run_task(t, &datasets[t.dataset_index].data))
            .collect()
    });

    for o in &outcomes {
        let i = &o.info;
        let stem = format!("{}/{}/split-{}", i.dataset_id, i.approach_id, i.split_index);
        if let Some(report) = &o.report {
            write_json(&out.join("reports").join(format!("{stem}.json")), report)?;
            write_text(
                &out.join("journals").join(format!("{stem}.jsonl")),
                &report.journal_jsonl(),
            )?;
        }
        if let Some(f) = &o.failure {
            eprintln!("{stem}: {f}");
        }
    }
    let mut csv = Vec::new();
    to_matrix(&outcomes).write_csv(&mut csv).map_err(|e| e.to_string())?;
    write_text(
        &out.join("results.csv"),
        &String::from_utf8(csv).map_err(|e| e.to_string())?,
    )?;
    let missing = outcomes.iter().filter(|o| o.info.error.is_none()).count();
    println!("{} cells, {missing} missing", outcomes.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_synth(args: SynthArgs) -> CliResult<()> {
    let kind = match args.kind {
        KindArg::Separable => SynthKind::Separable,
        KindArg::MadelonLike => SynthKind::MadelonLike,
        KindArg::ScaleSensitive => SynthKind::ScaleSensitive,
        KindArg::NoiseOnly => SynthKind::NoiseOnly,
    };
    let spec = SynthSpec {
        informative: args.informative,
        ..SynthSpec::new(kind, args.n, args.d, args.seed)
    };
    let synthetic = synthesize(&spec).map_err(|e| e.to_string())?;
    match args.out {
        Some(path) => {
            let mut buf = Vec::new();
            write_csv(&synthetic.dataset, &mut buf).map_err(|e| e.to_string())?;
            write_text(&path, &String::from_utf8(buf).map_err(|e| e.to_string())?)
        }
        None => write_csv(&synthetic.dataset, std::io::stdout().lock()).map_err(|e| e.to_string()),
    }
}

fn cmd_report(args: ReportArgs, file: FileConfig) -> CliResult<()> {
    let defaults = VerdictRule::default();
    let rule = VerdictRule {
        alpha: args.alpha.or(file.alpha).unwrap_or(defaults.alpha),
        delta: args.delta.or(file.delta).unwrap_or(defaults.delta),
        trim: args.trim.or(file.trim).unwrap_or(defaults.trim),
    };
    let matrix = if args.results.is_dir() {
        ResultMatrix::from_report_dir(&args.results)
    } else {
        ResultMatrix::read_csv(&args.results)
    }
    .map_err(|e| e.to_string())?;
    if matrix.is_empty() {
        return Err(format!("no results in {}", args.results.display()));
    }
    matrix.check_paired().map_err(|e| e.to_string())?;
    let baseline = args.baseline.or(file.baseline).unwrap_or_else(|| "primitive".into());
    let variants = args.variants.or(file.variants).unwrap_or_else(|| {
        matrix
            .approaches()
            .iter()
            .filter(|a| **a != baseline)
            .cloned()
            .collect()
    });
    let out = args.out.or(file.out).unwrap_or_else(|| PathBuf::from("."));
    let tables = out.join("tables");
    fs::create_dir_all(&tables).map_err(|e| format!("failed to create {}: {e}", tables.display()))?;
    let csv_file =
        |name: &str| fs::File::create(tables.join(name)).map_err(|e| format!("failed to create {name}: {e}"));

    let summary = summary_table(&matrix, &rule).map_err(|e| e.to_string())?;
    write_summary_csv(&summary, csv_file("summary.csv")?).map_err(|e| e.to_string())?;
    let mut text = render_summary(&summary);

    if matrix.approaches().contains(&baseline) {
        let rows = tournament(&matrix, &baseline, &variants, &rule).map_err(|e| e.to_string())?;
        write_tournament_csv(&rows, csv_file("tournament.csv")?).map_err(|e| e.to_string())?;
        let rendered = render_tournament(&rows);
        write_text(&tables.join("tournament.txt"), &rendered)?;
        text.push('\n');
        text.push_str(&rendered);

        let ranges = default_synergy_ranges(matrix.approaches());
        let rows = synergy(&matrix, &ranges, &baseline, &rule).map_err(|e| e.to_string())?;
        write_synergy_csv(&rows, csv_file("synergy.csv")?).map_err(|e| e.to_string())?;
        let rendered = render_synergy(&rows);
        write_text(&tables.join("synergy.txt"), &rendered)?;
        if !rows.is_empty() {
            text.push('\n');
            text.push_str(&rendered);
        }
    } else {
        log::warn!("baseline `{baseline}` not in results; skipping tournament and synergy tables");
    }
    write_text(&tables.join("summary.txt"), &render_summary(&summary))?;
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(text.as_bytes()).map_err(|e| e.to_string())
}
