use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::eval::{fixed_split_run, live_update_run, EvalReport, Protocol, RunOutput};
use crate::model::{save_checkpoint, UpdateKind};
use crate::snapshots::{load_cached, DynamicGraph};
use crate::{Error, Result};

pub const SUMMARY_SCHEMA: &str = "roland.experiment/1";
pub const CONFIG_FILE: &str = "config.toml";
pub const SUMMARY_FILE: &str = "summary.json";
/// Written last; a directory without it is an interrupted run.
pub const COMPLETE_MARKER: &str = "COMPLETE";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub mean_mrr: Option<f64>,
    /// Mean over trained steps of the best validation MRR reached.
    pub mean_val_mrr: Option<f64>,
    pub evaluated_steps: usize,
}

/// Cross-seed summary of one run directory. Contains no timings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub schema: String,
    pub fingerprint: String,
    pub dataset: String,
    pub protocol: Protocol,
    pub update: UpdateKind,
    pub alpha: Option<f64>,
    pub seeds: Vec<SeedSummary>,
    pub mean_mrr: Option<f64>,
    /// Sample standard deviation across seeds (`None` below two seeds).
    pub std_mrr: Option<f64>,
    pub mean_val_mrr: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Re-run even when a completed directory exists.
    pub force: bool,
    /// Snapshot cache location; defaults to `<root>/.cache`.
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    /// The directory was already complete and nothing ran.
    pub reused: bool,
    pub summary: ExperimentSummary,
}

pub(crate) fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.len() >= 2)
        .then(|| (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (Some(mean), std)
}

fn seed_summary(seed: u64, out: &RunOutput) -> SeedSummary {
    let vals: Vec<f64> = out.logs.iter().map(|l| l.best_val_mrr).collect();
    SeedSummary {
        seed,
        mean_mrr: out.report.summary.mean_mrr,
        mean_val_mrr: mean_std(&vals).0,
        evaluated_steps: out.report.summary.evaluated_steps,
    }
}

pub(crate) fn summarise(cfg: &ExperimentConfig, seeds: Vec<SeedSummary>) -> ExperimentSummary {
    let test: Vec<f64> = seeds.iter().filter_map(|s| s.mean_mrr).collect();
    let val: Vec<f64> = seeds.iter().filter_map(|s| s.mean_val_mrr).collect();
    let (mean_mrr, std_mrr) = mean_std(&test);
    ExperimentSummary {
        schema: SUMMARY_SCHEMA.into(),
        fingerprint: cfg.fingerprint(),
        dataset: cfg.dataset_name(),
        protocol: cfg.protocol,
        update: cfg.update,
        alpha: cfg.meta.then_some(cfg.alpha),
        seeds,
        mean_mrr,
        std_mrr,
        mean_val_mrr: mean_std(&val).0,
    }
}

/// Loads the dataset named by `cfg` through the snapshot cache.
pub fn load_dataset(cfg: &ExperimentConfig, cache_dir: &Path) -> Result<DynamicGraph> {
    load_cached(&cfg.dataset, &cfg.schema()?, cfg.frequency()?, cache_dir)
}

/// One protocol run for a single seed; no files are written.
pub fn run_seed(cfg: &ExperimentConfig, g: &DynamicGraph, seed: u64) -> Result<RunOutput> {
    let rc = cfg.run_config(seed);
    match cfg.protocol {
        Protocol::LiveUpdate => live_update_run(g, &rc),
        Protocol::FixedSplit => fixed_split_run(g, &rc),
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|x| serde_json::to_string(&x).expect("serialisable") + "\n")
        .collect()
}

/// Reads the summary of a completed run directory, or `None` when the
/// directory is missing or incomplete.
pub fn completed_summary(dir: &Path) -> Result<Option<ExperimentSummary>> {
    if !dir.join(COMPLETE_MARKER).is_file() {
        return Ok(None);
    }
    let path = dir.join(SUMMARY_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let s: ExperimentSummary =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if s.schema != SUMMARY_SCHEMA {
        return Err(Error::Format(format!("{}: schema `{}`", path.display(), s.schema)));
    }
    Ok(Some(s))
}

/// Runs every seed of `cfg` and publishes `<root>/<run name>/`.
///
/// The directory holds the resolved config, and per seed the evaluation
/// report, the training log, the per-step working sets and a final
/// checkpoint, plus the cross-seed summary. It is assembled under a temporary
/// name and renamed into place, so readers only ever see complete runs. A
/// completed directory is left untouched unless `opts.force` is set.
pub fn run_experiment(cfg: &ExperimentConfig, root: &Path, opts: &RunOptions) -> Result<RunOutcome> {
    cfg.validate()?;
    let dir = root.join(cfg.run_name());
    if !opts.force {
        if let Some(summary) = completed_summary(&dir)? {
            return Ok(RunOutcome {
                dir,
                reused: true,
                summary,
            });
        }
    }
    let cache = opts.cache_dir.clone().unwrap_or_else(|| root.join(".cache"));
    let g = load_dataset(cfg, &cache)?;
    run_experiment_on(cfg, &g, root, opts)
}

/// As [`run_experiment`] but with an already-loaded graph; `cfg.dataset` only
/// names the run.
pub fn run_experiment_on(
    cfg: &ExperimentConfig,
    g: &DynamicGraph,
    root: &Path,
    opts: &RunOptions,
) -> Result<RunOutcome> {
    cfg.validate()?;
    let dir = root.join(cfg.run_name());
    if !opts.force {
        if let Some(summary) = completed_summary(&dir)? {
            return Ok(RunOutcome {
                dir,
                reused: true,
                summary,
            });
        }
    }
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let tmp = root.join(format!(".{}.tmp-{}", cfg.run_name(), std::process::id()));
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
    }
    fs::create_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
    let result = populate(cfg, g, &tmp);
    let summary = match result {
        Ok(s) => s,
        Err(e) => {
            let _ = fs::remove_dir_all(&tmp);
            return Err(e);
        }
    };
    if dir.exists() {
        fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    fs::rename(&tmp, &dir).map_err(|e| Error::io(&dir, e))?;
    Ok(RunOutcome {
        dir,
        reused: false,
        summary,
    })
}

fn populate(cfg: &ExperimentConfig, g: &DynamicGraph, dir: &Path) -> Result<ExperimentSummary> {
    write(&dir.join(CONFIG_FILE), cfg.to_toml())?;
    let mut seeds = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let out = run_seed(cfg, g, seed)?;
        let sd = dir.join(format!("seed-{seed}"));
        fs::create_dir_all(&sd).map_err(|e| Error::io(&sd, e))?;
        write(&sd.join("report.jsonl"), out.report.to_jsonl())?;
        write(&sd.join("train_log.jsonl"), jsonl(&out.logs))?;
        write(
            &sd.join("working_set.jsonl"),
            jsonl(out.working_sets.iter().map(|(t, ws)| serde_json::json!({"t": t, "total": ws.total(), "parts": ws}))),
        )?;
        save_checkpoint(&sd.join("checkpoint"), &out.model, &out.state)?;
        seeds.push(seed_summary(seed, &out));
    }
    let summary = summarise(cfg, seeds);
    write(
        &dir.join(SUMMARY_FILE),
        serde_json::to_string_pretty(&summary).expect("serialisable") + "\n",
    )?;
    write(&dir.join(COMPLETE_MARKER), "")?;
    Ok(summary)
}

/// Reads `seed-*/report.jsonl` of a run directory in seed order.
pub fn read_reports(dir: &Path) -> Result<Vec<(u64, EvalReport)>> {
    let mut out = Vec::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let Some(seed) = name.strip_prefix("seed-").and_then(|s| s.parse::<u64>().ok()) else {
            continue;
        };
        let path = entry.path().join("report.jsonl");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let report = EvalReport::from_jsonl(&text)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        out.push((seed, report));
    }
    out.sort_by_key(|(s, _)| *s);
    Ok(out)
}
