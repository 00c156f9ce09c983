use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::time::Duration;

use sha2::{Digest, Sha256};

use super::run::{completed_summary, run_experiment, run_experiment_on, ExperimentSummary, RunOptions};
use super::ExperimentConfig;
use crate::snapshots::DynamicGraph;
use crate::{Error, Result};

pub const GRID_SCHEMA: &str = "roland.grid/1";

/// Named config keys, each with the values to sweep. Cells are the cartesian
/// product, enumerated with keys in sorted order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GridAxes(pub BTreeMap<String, Vec<toml::Value>>);

impl GridAxes {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn axis<V: Into<toml::Value>>(mut self, key: &str, values: impl IntoIterator<Item = V>) -> Self {
        self.0.insert(key.to_string(), values.into_iter().map(Into::into).collect());
        self
    }

    /// α ∈ {0.1, 0.2, …, 1.0}.
    pub fn alpha_grid() -> Self {
        Self::new().axis("meta", [true]).axis("alpha", (1..=10).map(|i| i as f64 / 10.0))
    }

    /// Batch-norm, skip-connection and aggregation toggles.
    pub fn ablation_grid() -> Self {
        Self::new()
            .axis("batch_norm", [true, false])
            .axis("skip", [true, false])
            .axis("aggregation", ["sum", "mean", "max"])
    }

    /// A TOML table whose values are arrays, e.g. `alpha = [0.5, 1.0]`.
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::config(e.message().to_string()))?;
        let mut axes = BTreeMap::new();
        for (k, v) in table {
            match v {
                toml::Value::Array(values) if !values.is_empty() => {
                    axes.insert(k, values);
                }
                _ => return Err(Error::config(format!("grid axis `{k}` must be a non-empty array"))),
            }
        }
        Ok(Self(axes))
    }

    pub fn cell_count(&self) -> usize {
        self.0.values().map(Vec::len).product()
    }

    /// Every combination of overrides, in a stable order.
    pub fn combinations(&self) -> Vec<Vec<(String, toml::Value)>> {
        let mut out = vec![Vec::new()];
        for (k, values) in &self.0 {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |v| {
                        let mut c = prefix.clone();
                        c.push((k.clone(), v.clone()));
                        c
                    })
                })
                .collect();
        }
        out
    }

    fn digest(&self) -> String {
        let mut h = Sha256::new();
        for (k, values) in &self.0 {
            h.update(k.as_bytes());
            for v in values {
                h.update(format!("={v};").as_bytes());
            }
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, Default)]
pub struct GridOptions {
    /// Concurrent worker processes; 0 or 1 runs cells in this process.
    pub workers: usize,
    /// Executable that understands `worker --config <file> --root <dir>`.
    pub worker_program: Option<PathBuf>,
    pub run: RunOptions,
}

#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub overrides: Vec<(String, toml::Value)>,
    pub dir: Option<PathBuf>,
    pub result: std::result::Result<ExperimentSummary, String>,
}

#[derive(Debug, Clone)]
pub struct GridResult {
    pub cells: Vec<CellOutcome>,
    /// Cell with the highest mean validation MRR.
    pub best: Option<usize>,
    pub index_path: PathBuf,
}

impl GridResult {
    pub fn best_cell(&self) -> Option<&CellOutcome> {
        self.best.map(|i| &self.cells[i])
    }

    pub fn failures(&self) -> impl Iterator<Item = &CellOutcome> {
        self.cells.iter().filter(|c| c.result.is_err())
    }

    pub fn index_tsv(&self) -> String {
        let mut out = format!("# {GRID_SCHEMA}\ncell\toverrides\tstatus\tmean_val_mrr\tmean_mrr\tstd_mrr\tselected\trun_dir\n");
        let num = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"));
        for (i, c) in self.cells.iter().enumerate() {
            let overrides: Vec<String> = c.overrides.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let (status, val, test, std) = match &c.result {
                Ok(s) => ("ok".to_string(), s.mean_val_mrr, s.mean_mrr, s.std_mrr),
                Err(e) => (format!("failed: {}", e.replace(['\t', '\n'], " ")), None, None, None),
            };
            out += &format!(
                "{i}\t{}\t{status}\t{}\t{}\t{}\t{}\t{}\n",
                overrides.join(";"),
                num(val),
                num(test),
                num(std),
                self.best == Some(i),
                c.dir.as_ref().map_or(String::new(), |d| d.display().to_string()),
            );
        }
        out
    }
}

fn select_best(cells: &[CellOutcome]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in cells.iter().enumerate() {
        if let Ok(Some(v)) = c.result.as_ref().map(|s| s.mean_val_mrr) {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
    }
    best.map(|(i, _)| i)
}

enum Source<'a> {
    Dataset,
    Graph(&'a DynamicGraph),
}

/// Runs every grid cell as its own experiment under `root` and selects the
/// cell with the best mean validation MRR; its summary carries the test MRR.
///
/// A cell that fails (bad override, training error, crashed worker) is recorded
/// and the search continues. An index of all cells is written to
/// `<root>/grid-<digest>.tsv`.
pub fn grid_search(base: &ExperimentConfig, axes: &GridAxes, root: &Path, opts: &GridOptions) -> Result<GridResult> {
    search(base, axes, root, opts, Source::Dataset)
}

/// As [`grid_search`] on an already-loaded graph; always runs in-process.
pub fn grid_search_on(
    base: &ExperimentConfig,
    axes: &GridAxes,
    g: &DynamicGraph,
    root: &Path,
    opts: &GridOptions,
) -> Result<GridResult> {
    search(base, axes, root, opts, Source::Graph(g))
}

fn search(base: &ExperimentConfig, axes: &GridAxes, root: &Path, opts: &GridOptions, src: Source) -> Result<GridResult> {
    base.validate()?;
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let mut cells: Vec<CellOutcome> = Vec::new();
    let mut pending = Vec::new();
    for overrides in axes.combinations() {
        let cfg = overrides
            .iter()
            .try_fold(base.clone(), |c, (k, v)| c.with_override(k, v));
        match cfg {
            Ok(cfg) => {
                pending.push((cells.len(), cfg));
                cells.push(CellOutcome {
                    overrides,
                    dir: None,
                    result: Err("not run".into()),
                });
            }
            Err(e) => cells.push(CellOutcome {
                overrides,
                dir: None,
                result: Err(e.to_string()),
            }),
        }
    }

    let use_workers = matches!(src, Source::Dataset) && opts.workers > 1 && opts.worker_program.is_some();
    if use_workers {
        // Populate the snapshot cache once so workers only read it.
        let cache = opts.run.cache_dir.clone().unwrap_or_else(|| root.join(".cache"));
        super::run::load_dataset(base, &cache)?;
        run_workers(&mut cells, pending, root, opts)?;
    } else {
        for (i, cfg) in pending {
            let r = match src {
                Source::Dataset => run_experiment(&cfg, root, &opts.run),
                Source::Graph(g) => run_experiment_on(&cfg, g, root, &opts.run),
            };
            cells[i].dir = Some(root.join(cfg.run_name()));
            cells[i].result = r.map(|o| o.summary).map_err(|e| e.to_string());
        }
    }

    let best = select_best(&cells);
    let mut digest = Sha256::new();
    digest.update(base.fingerprint().as_bytes());
    digest.update(axes.digest().as_bytes());
    let index_path = root.join(format!("grid-{}.tsv", &hex::encode(digest.finalize())[..12]));
    let result = GridResult {
        cells,
        best,
        index_path,
    };
    fs::write(&result.index_path, result.index_tsv()).map_err(|e| Error::io(&result.index_path, e))?;
    Ok(result)
}

fn spawn_worker(program: &Path, cfg_path: &Path, root: &Path, opts: &RunOptions) -> Result<Child> {
    let mut cmd = Command::new(program);
    cmd.arg("worker").arg("--config").arg(cfg_path).arg("--root").arg(root);
    if opts.force {
        cmd.arg("--force");
    }
    if let Some(c) = &opts.cache_dir {
        cmd.arg("--cache-dir").arg(c);
    }
    cmd.stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| Error::io(program, e))
}

fn run_workers(
    cells: &mut [CellOutcome],
    pending: Vec<(usize, ExperimentConfig)>,
    root: &Path,
    opts: &GridOptions,
) -> Result<()> {
    let program = opts.worker_program.as_deref().expect("checked by caller");
    let cfg_dir = root.join(".grid");
    fs::create_dir_all(&cfg_dir).map_err(|e| Error::io(&cfg_dir, e))?;
    let mut queue: VecDeque<_> = pending.into();
    let mut running: Vec<(usize, PathBuf, Child)> = Vec::new();
    while !queue.is_empty() || !running.is_empty() {
        while running.len() < opts.workers {
            let Some((i, cfg)) = queue.pop_front() else { break };
            let path = cfg_dir.join(format!("{}.toml", cfg.run_name()));
            fs::write(&path, cfg.to_toml()).map_err(|e| Error::io(&path, e))?;
            let dir = root.join(cfg.run_name());
            match spawn_worker(program, &path, root, &opts.run) {
                Ok(child) => running.push((i, dir, child)),
                Err(e) => cells[i].result = Err(e.to_string()),
            }
        }
        let mut still = Vec::with_capacity(running.len());
        for (i, dir, mut child) in running {
            match child.try_wait() {
                Ok(None) => still.push((i, dir, child)),
                Ok(Some(_)) | Err(_) => {
                    let out = child.wait_with_output();
                    cells[i].result = match out {
                        Ok(o) if o.status.success() => completed_summary(&dir)
                            .map_err(|e| e.to_string())
                            .and_then(|s| s.ok_or_else(|| "worker exited without a completed run".to_string())),
                        Ok(o) => Err(format!(
                            "worker {}: {}",
                            o.status,
                            String::from_utf8_lossy(&o.stderr).trim()
                        )),
                        Err(e) => Err(e.to_string()),
                    };
                    cells[i].dir = Some(dir);
                }
            }
        }
        running = still;
        std::thread::sleep(Duration::from_millis(20));
    }
    Ok(())
}
