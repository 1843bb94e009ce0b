//! Subcommand implementations.

use std::path::{Path, PathBuf};

use clap::Args;
use tsformer_core::data::{
    load_csv, make_windows, save_csv, split, synth_generate, Dataset, NormalizationStats,
    SynthSpec, WindowOptions,
};
use tsformer_core::error::{Error, Result};
use tsformer_core::eval::{
    ablation_csv, ablation_run, per_lead_csv, report_csv, report_json, rolling_origin_evaluate,
    EvaluationRun, Forecaster, NaiveBaseline, SeasonalNaiveBaseline, TsformerForecaster,
};
use tsformer_core::interpret::{capture_attention, export_csv, render_heatmap, CaptureOptions};
use tsformer_core::train::{
    grid_search, load_checkpoint, save_checkpoint, train_pipeline, CheckpointMeta, GridSpec,
};

use crate::config::{FileConfig, Overrides, ResolvedConfig};
use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// TOML synthetic-data specification; defaults apply when omitted.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub days: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let mut spec = match &args.spec {
        None => SynthSpec::default(),
        Some(p) => SynthSpec::from_toml(&std::fs::read_to_string(p)?)?,
    };
    if let Some(days) = args.days {
        spec.days = days;
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    spec.validate()?;
    let dataset = synth_generate(&spec)?;
    save_csv(&dataset, &args.out)?;

    let mut manifest = RunManifest::new("synth", spec.seed, &spec);
    if let Some(p) = &args.spec {
        manifest.add_input(p)?;
    }
    manifest.add_output(&args.out);
    manifest.write(&sibling(&args.out, "manifest.json"))?;
    println!("synth: wrote {} days to {}", dataset.len(), args.out.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Input dataset CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Output checkpoint path.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let dataset = load_csv(&args.data)?;
    let file = FileConfig::load(args.overrides.config.as_ref())?;
    let resolved = ResolvedConfig::resolve(&file, &args.overrides, dataset.schema.feature_dim())?;
    let split_spec = resolved.split_spec(&dataset)?;
    let pipeline = train_pipeline(
        &dataset,
        &split_spec,
        &resolved.model,
        &resolved.train,
        &resolved.window_options(),
    )?;
    let meta = CheckpointMeta {
        epoch: pipeline.history.best_epoch.unwrap_or(0),
        best_val_mae: pipeline.history.best_val_mae,
        seed: resolved.train.seed,
    };
    save_checkpoint(&pipeline.model, &pipeline.stats, &meta, &args.out)?;
    let history_path = sibling(&args.out, "history.csv");
    std::fs::write(&history_path, pipeline.history.to_csv())?;

    let mut manifest = RunManifest::new("train", resolved.train.seed, &resolved);
    manifest.add_input(&args.data)?;
    if let Some(p) = &args.overrides.config {
        manifest.add_input(p)?;
    }
    manifest.add_output(&args.out);
    manifest.add_output(&history_path);
    manifest.write(&sibling(&args.out, "manifest.json"))?;
    println!(
        "train: best epoch {} validation MAE {}",
        meta.epoch,
        meta.best_val_mae
            .map(|v| v.to_string())
            .unwrap_or_else(|| "n/a".into())
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated forecast horizons to score.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub horizons: Vec<usize>,
    /// Which chronological split the targets must lie in.
    #[arg(long, default_value = "test", value_parser = ["validation", "test"])]
    pub split: String,
    /// Also write one per-lead-time breakdown file per run.
    #[arg(long)]
    pub per_lead: bool,
    /// Include a ground-truth-echoing forecaster (harness self-test).
    #[arg(long)]
    pub oracle: bool,
    /// Output directory for report files.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Echoes the ground truth; all metrics must come out zero.
struct Oracle;

impl Forecaster for Oracle {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn min_context(&self, _horizon: usize) -> usize {
        1
    }

    fn forecast(&self, dataset: &Dataset, origin: usize, horizon: usize) -> Result<Vec<f64>> {
        Ok(dataset.rows()[origin + 1..=origin + horizon]
            .iter()
            .map(|r| r.demand)
            .collect())
    }
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    if args.horizons.is_empty() {
        return Err(Error::InvalidConfig("no horizons requested".into()));
    }
    let (model, stats, meta) = load_checkpoint(&args.checkpoint)?;
    let dataset = load_csv(&args.data)?;
    let file = FileConfig::load(args.overrides.config.as_ref())?;
    let resolved = ResolvedConfig::resolve(&file, &args.overrides, dataset.schema.feature_dim())?;
    let split_spec = resolved.split_spec(&dataset)?;
    let (train_ds, val_ds, _) = split(&dataset, &split_spec)?;
    let (target_start, target_end) = match args.split.as_str() {
        "validation" => (train_ds.len(), train_ds.len() + val_ds.len()),
        _ => (train_ds.len() + val_ds.len(), dataset.len()),
    };

    std::fs::create_dir_all(&args.out_dir)?;
    let mut runs: Vec<EvaluationRun> = Vec::new();
    for &h in &args.horizons {
        if h == model.config.forecast_horizon {
            let forecaster = TsformerForecaster {
                model: &model,
                stats: &stats,
                options: resolved.window_options(),
            };
            runs.push(rolling_origin_evaluate(
                &forecaster,
                &dataset,
                target_start,
                target_end,
                h,
                &args.split,
            )?);
        } else {
            eprintln!(
                "note: checkpoint forecasts {} days per pass; only baselines scored at horizon {h}",
                model.config.forecast_horizon
            );
        }
        runs.push(rolling_origin_evaluate(
            &NaiveBaseline,
            &dataset,
            target_start,
            target_end,
            h,
            &args.split,
        )?);
        let s = if h == 1 { 1 } else { 7 };
        runs.push(rolling_origin_evaluate(
            &SeasonalNaiveBaseline { s },
            &dataset,
            target_start,
            target_end,
            h,
            &args.split,
        )?);
        if args.oracle {
            runs.push(rolling_origin_evaluate(
                &Oracle,
                &dataset,
                target_start,
                target_end,
                h,
                &args.split,
            )?);
        }
    }

    let csv_path = args.out_dir.join("report.csv");
    let json_path = args.out_dir.join("report.json");
    std::fs::write(&csv_path, report_csv(&runs))?;
    std::fs::write(&json_path, report_json(&runs)?)?;
    let mut manifest = RunManifest::new("evaluate", meta.seed, &resolved);
    manifest.add_input(&args.checkpoint)?;
    manifest.add_input(&args.data)?;
    manifest.add_output(&csv_path);
    manifest.add_output(&json_path);
    if args.per_lead {
        for run in &runs {
            let path = args
                .out_dir
                .join(format!("per_lead_{}_h{}.csv", run.model, run.horizon));
            std::fs::write(&path, per_lead_csv(run))?;
            manifest.add_output(&path);
        }
    }
    manifest.write(&args.out_dir.join("manifest.json"))?;
    for run in &runs {
        println!(
            "evaluate: {} horizon {} {} mae {} rmse {} mape {}%",
            run.model, run.horizon, run.split, run.metrics.mae, run.metrics.rmse, run.metrics.mape
        );
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// CSV with at least the encoder window of most recent observed days.
    #[arg(long)]
    pub data: PathBuf,
    /// Optional output CSV (date, forecast); stdout otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Zero the calendar cells of future tokens.
    #[arg(long)]
    pub no_calendar: bool,
}

pub fn cmd_forecast(args: &ForecastArgs) -> Result<()> {
    let (model, stats, meta) = load_checkpoint(&args.checkpoint)?;
    let dataset = load_csv(&args.data)?;
    let opts = if args.no_calendar {
        WindowOptions::without_calendar()
    } else {
        WindowOptions::default()
    };
    let origin = dataset.len() - 1;
    let window = tsformer_core::data::build_window(
        &dataset,
        origin,
        &model.config,
        &stats,
        &opts,
        false,
    )?;
    let forecasts = tsformer_core::train::forecast_window(&model, &window, &stats)?;
    let mut out = String::from("date,forecast\n");
    for (k, value) in forecasts.iter().enumerate() {
        let date = dataset.rows()[origin].date + chrono::Days::new(k as u64 + 1);
        out.push_str(&format!("{date},{value}\n"));
    }
    match &args.out {
        Some(path) => {
            std::fs::write(path, &out)?;
            let mut manifest = RunManifest::new("forecast", meta.seed, &model.config);
            manifest.add_input(&args.checkpoint)?;
            manifest.add_input(&args.data)?;
            manifest.add_output(path);
            manifest.write(&sibling(path, "manifest.json"))?;
        }
        None => print!("{out}"),
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "7")]
    pub horizons: Vec<usize>,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

pub fn cmd_ablate(args: &AblateArgs) -> Result<()> {
    let dataset = load_csv(&args.data)?;
    let file = FileConfig::load(args.overrides.config.as_ref())?;
    let resolved = ResolvedConfig::resolve(&file, &args.overrides, dataset.schema.feature_dim())?;
    let split_spec = resolved.split_spec(&dataset)?;
    let report = ablation_run(
        &dataset,
        &split_spec,
        &resolved.model,
        &resolved.train,
        &args.horizons,
    )?;
    std::fs::create_dir_all(&args.out_dir)?;
    let csv_path = args.out_dir.join("ablation.csv");
    std::fs::write(&csv_path, ablation_csv(&report))?;

    let mut manifest = RunManifest::new("ablate", resolved.train.seed, &resolved);
    manifest.add_input(&args.data)?;
    if let Some(p) = &args.overrides.config {
        manifest.add_input(p)?;
    }
    manifest.add_output(&csv_path);
    manifest.write(&args.out_dir.join("manifest.json"))?;
    for (with, without) in report.with_calendar.iter().zip(&report.without_calendar) {
        println!(
            "ablate: horizon {} with-calendar mae {} without-calendar mae {}",
            with.horizon, with.metrics.mae, without.metrics.mae
        );
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct AttentionArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Also export head-resolved matrices.
    #[arg(long)]
    pub per_head: bool,
    /// Also export encoder self-attention layers.
    #[arg(long)]
    pub include_encoder: bool,
    #[command(flatten)]
    pub overrides: Overrides,
}

pub fn cmd_attention(args: &AttentionArgs) -> Result<()> {
    let (model, stats, meta) = load_checkpoint(&args.checkpoint)?;
    let dataset = load_csv(&args.data)?;
    let file = FileConfig::load(args.overrides.config.as_ref())?;
    let resolved = ResolvedConfig::resolve(&file, &args.overrides, dataset.schema.feature_dim())?;
    let split_spec = resolved.split_spec(&dataset)?;
    let (train_ds, _, _) = split(&dataset, &split_spec)?;
    let windows = make_windows(&train_ds, &model.config, &stats, &resolved.window_options())?;
    let summary = capture_attention(
        &model,
        &windows,
        CaptureOptions {
            per_head: args.per_head,
            include_encoder: args.include_encoder,
        },
    )?;
    std::fs::create_dir_all(&args.out_dir)?;
    let csvs = export_csv(&summary, &args.out_dir)?;
    let svgs = render_heatmap(&summary, &args.out_dir)?;

    let mut manifest = RunManifest::new("attention", meta.seed, &resolved);
    manifest.add_input(&args.checkpoint)?;
    manifest.add_input(&args.data)?;
    for p in csvs.iter().chain(&svgs) {
        manifest.add_output(p);
    }
    manifest.write(&args.out_dir.join("manifest.json"))?;
    println!(
        "attention: averaged {} samples over {} heads into {} matrices",
        summary.sample_count,
        summary.head_count,
        csvs.len()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// TOML grid: candidate lists per hyperparameter.
    #[arg(long)]
    pub grid: PathBuf,
    /// Output CSV of ranked results.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

pub fn cmd_gridsearch(args: &GridArgs) -> Result<()> {
    let dataset = load_csv(&args.data)?;
    let file = FileConfig::load(args.overrides.config.as_ref())?;
    let resolved = ResolvedConfig::resolve(&file, &args.overrides, dataset.schema.feature_dim())?;
    let grid = GridSpec::from_toml(&std::fs::read_to_string(&args.grid)?)?;
    let split_spec = resolved.split_spec(&dataset)?;
    let (train_ds, val_ds, _) = split(&dataset, &split_spec)?;
    let stats = NormalizationStats::fit(&train_ds);
    let opts = resolved.window_options();
    let train_windows = make_windows(&train_ds, &resolved.model, &stats, &opts)?;
    let val_windows = tsformer_core::data::evaluation_windows(
        &dataset,
        &resolved.model,
        &stats,
        &opts,
        train_ds.len(),
        train_ds.len() + val_ds.len(),
    )?;
    let results = grid_search(
        &grid,
        &resolved.model,
        &resolved.train,
        &train_windows,
        &val_windows,
        &stats,
    )?;

    let mut out = String::from(
        "rank,val_mae,d_model,heads,encoder_layers,decoder_layers,ffn_dim,dropout,learning_rate,seed,error\n",
    );
    for (rank, r) in results.iter().enumerate() {
        let c = &r.point.config;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            rank + 1,
            r.val_mae.map(|v| v.to_string()).unwrap_or_default(),
            c.d_model,
            c.heads,
            c.encoder_layers,
            c.decoder_layers,
            c.ffn_dim,
            c.dropout,
            r.point.train.learning_rate,
            r.point.train.seed,
            r.error.clone().unwrap_or_default().replace(',', ";")
        ));
    }
    std::fs::write(&args.out, out)?;

    let mut manifest = RunManifest::new("gridsearch", resolved.train.seed, &resolved);
    manifest.add_input(&args.data)?;
    manifest.add_input(&args.grid)?;
    manifest.add_output(&args.out);
    manifest.write(&sibling(&args.out, "manifest.json"))?;
    println!(
        "gridsearch: {} points ranked, best val MAE {}",
        results.len(),
        results[0]
            .val_mae
            .map(|v| v.to_string())
            .unwrap_or_else(|| "n/a".into())
    );
    Ok(())
}

/// `<stem of path>.<suffix>` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "out".into());
    path.with_file_name(format!("{stem}.{suffix}"))
}
