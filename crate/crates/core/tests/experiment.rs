//! Run directories, resumability, grid selection, reports and the CLI surface.

mod common;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::Command;

use common::synthetic_graph;
use proptest::prelude::*;
use roland::eval::Protocol;
use roland::experiment::{
    collect_runs, grid_search_on, run_experiment, run_experiment_on, ExperimentConfig, GridAxes, GridOptions,
    RunOptions, COMPLETE_MARKER, SUMMARY_FILE,
};
use roland::model::UpdateKind;

fn base() -> ExperimentConfig {
    ExperimentConfig {
        dataset: "synthetic".into(),
        hidden_dim: 6,
        max_epochs: 4,
        k_neg: 20,
        seeds: vec![0, 1],
        ..ExperimentConfig::default()
    }
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap()
}

#[test]
fn run_directory_layout_and_summary() {
    let g = synthetic_graph(30, 7, 60, 2);
    let root = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig { seeds: vec![0, 1, 2], ..base() };
    let out = run_experiment_on(&cfg, &g, root.path(), &RunOptions::default()).unwrap();
    for f in ["config.toml", SUMMARY_FILE, COMPLETE_MARKER] {
        assert!(out.dir.join(f).is_file(), "{f}");
    }
    for s in 0..3 {
        for f in ["report.jsonl", "train_log.jsonl", "working_set.jsonl", "checkpoint.json", "checkpoint.tensors"] {
            assert!(out.dir.join(format!("seed-{s}")).join(f).is_file(), "seed {s} {f}");
        }
        let report = read(&out.dir.join(format!("seed-{s}/report.jsonl")));
        assert_eq!(report.lines().count(), g.len() - 1 + 1, "one line per label step plus the summary");
    }
    // The resolved config is complete and reloads to the same semantics.
    let back = ExperimentConfig::load(out.dir.join("config.toml")).unwrap();
    assert_eq!(back.fingerprint(), cfg.fingerprint());

    let s = &out.summary;
    assert_eq!(s.seeds.len(), 3);
    let per: Vec<f64> = s.seeds.iter().map(|x| x.mean_mrr.unwrap()).collect();
    let mean = per.iter().sum::<f64>() / 3.0;
    let std = (per.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 2.0).sqrt();
    assert!((s.mean_mrr.unwrap() - mean).abs() < 1e-15);
    assert!((s.std_mrr.unwrap() - std).abs() < 1e-15);
    assert!(!root.path().read_dir().unwrap().any(|e| e.unwrap().file_name().to_string_lossy().contains(".tmp")));
}

#[test]
fn same_config_and_seed_give_identical_summaries() {
    let g = synthetic_graph(30, 6, 60, 4);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_experiment_on(&base(), &g, a.path(), &RunOptions::default()).unwrap();
    let rb = run_experiment_on(&base(), &g, b.path(), &RunOptions::default()).unwrap();
    assert_eq!(fs::read(ra.dir.join(SUMMARY_FILE)).unwrap(), fs::read(rb.dir.join(SUMMARY_FILE)).unwrap());
    for s in ["seed-0", "seed-1"] {
        let last = |d: &Path| read(&d.join(s).join("report.jsonl")).lines().last().unwrap().to_string();
        assert_eq!(last(&ra.dir), last(&rb.dir));
    }
}

#[test]
fn completed_runs_are_not_redone_unless_forced() {
    let g = synthetic_graph(30, 5, 50, 1);
    let root = tempfile::tempdir().unwrap();
    let first = run_experiment_on(&base(), &g, root.path(), &RunOptions::default()).unwrap();
    assert!(!first.reused);
    let marker = first.dir.join("seed-0/train_log.jsonl");
    fs::write(&marker, "sentinel\n").unwrap();

    let again = run_experiment_on(&base(), &g, root.path(), &RunOptions::default()).unwrap();
    assert!(again.reused);
    assert_eq!(read(&marker), "sentinel\n");
    assert_eq!(again.summary, first.summary);

    let forced = run_experiment_on(&base(), &g, root.path(), &RunOptions { force: true, ..Default::default() }).unwrap();
    assert!(!forced.reused);
    assert_ne!(read(&marker), "sentinel\n");

    // An interrupted directory (no completion marker) is rebuilt.
    fs::remove_file(first.dir.join(COMPLETE_MARKER)).unwrap();
    fs::write(&marker, "sentinel\n").unwrap();
    let rebuilt = run_experiment_on(&base(), &g, root.path(), &RunOptions::default()).unwrap();
    assert!(!rebuilt.reused);
    assert_ne!(read(&marker), "sentinel\n");
}

#[test]
fn single_cell_grid_equals_run_experiment() {
    let g = synthetic_graph(30, 6, 60, 8);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let direct = run_experiment_on(&base(), &g, a.path(), &RunOptions::default()).unwrap();
    let axes = GridAxes::new().axis("update", ["gru"]);
    let grid = grid_search_on(&base(), &axes, &g, b.path(), &GridOptions::default()).unwrap();
    assert_eq!(grid.cells.len(), 1);
    assert_eq!(grid.best, Some(0));
    assert_eq!(grid.best_cell().unwrap().result.as_ref().unwrap(), &direct.summary);
    assert!(grid.index_path.is_file());
}

#[test]
fn grid_records_failed_cells_and_continues() {
    let g = synthetic_graph(30, 5, 50, 8);
    let root = tempfile::tempdir().unwrap();
    let axes = GridAxes::new().axis("n_mp", [1i64, 9]).axis("update", ["moving_average", "gru"]);
    let grid = grid_search_on(&ExperimentConfig { seeds: vec![0], ..base() }, &axes, &g, root.path(), &GridOptions::default()).unwrap();
    assert_eq!(grid.cells.len(), 4);
    assert_eq!(grid.failures().count(), 2);
    assert!(grid.failures().all(|c| c.result.as_ref().unwrap_err().contains("n_mp")));
    let best = grid.best_cell().unwrap();
    let best_val = best.result.as_ref().unwrap().mean_val_mrr.unwrap();
    for c in grid.cells.iter().filter_map(|c| c.result.as_ref().ok()) {
        assert!(c.mean_val_mrr.unwrap() <= best_val);
    }
    let index = read(&grid.index_path);
    assert!(index.starts_with("# roland.grid/1\n"));
    assert_eq!(index.lines().count(), 2 + 4);
}

#[test]
fn alpha_grid_reports_meta_gain() {
    let g = synthetic_graph(30, 6, 60, 3);
    let root = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig { update: UpdateKind::MovingAverage, seeds: vec![0], ..base() };
    let axes = GridAxes::new().axis("meta", [true]).axis("alpha", [0.5, 1.0]);
    let grid = grid_search_on(&cfg, &axes, &g, root.path(), &GridOptions::default()).unwrap();
    assert_eq!(grid.failures().count(), 0);
    let tables = collect_runs(&[root.path().to_path_buf()]);
    let gain = tables.meta_gain_table();
    let rows: Vec<&str> = gain.lines().skip(2).collect();
    assert_eq!(rows.len(), 1, "{gain}");
    let cols: Vec<&str> = rows[0].split('\t').collect();
    let find = |a: f64| tables.runs.iter().find(|r| r.summary.alpha == Some(a)).unwrap().summary.clone();
    let (half, one) = (find(0.5), find(1.0));
    let best = if half.mean_val_mrr >= one.mean_val_mrr { &half } else { &one };
    assert_eq!(cols[3], best.alpha.unwrap().to_string());
    let expect = 100.0 * (best.mean_mrr.unwrap() - one.mean_mrr.unwrap()) / one.mean_mrr.unwrap();
    assert_eq!(cols[7], format!("{expect:.2}"));
}

#[test]
fn report_tables_trace_back_to_step_records() {
    let g = synthetic_graph(30, 6, 60, 5);
    let root = tempfile::tempdir().unwrap();
    for update in [UpdateKind::Gru, UpdateKind::Mlp] {
        run_experiment_on(&ExperimentConfig { update, ..base() }, &g, root.path(), &RunOptions::default()).unwrap();
    }
    // A run with a tampered report and a directory that is not a run at all.
    let tampered = run_experiment_on(&ExperimentConfig { update: UpdateKind::MovingAverage, ..base() }, &g, root.path(), &RunOptions::default()).unwrap();
    let rp = tampered.dir.join("seed-0/report.jsonl");
    let text = read(&rp);
    let first_scored = text.lines().find(|l| l.contains("\"mrr\":0")).unwrap().to_string();
    fs::write(&rp, text.replace(&first_scored, &first_scored.replacen("\"mrr\":0", "\"mrr\":0.9", 1))).unwrap();
    fs::create_dir_all(root.path().join("junk")).unwrap();

    let tables = collect_runs(&[root.path().to_path_buf()]);
    assert_eq!(tables.runs.len(), 2);
    assert_eq!(tables.skipped.len(), 2, "{:?}", tables.skipped);
    let mrr = tables.mrr_table();
    assert!(mrr.starts_with("# roland.report.mrr/1\n"));
    assert_eq!(mrr.lines().count(), 2 + 2);

    let steps = tables.steps_table();
    let evaluated: usize = tables.runs.iter().flat_map(|r| &r.reports).map(|(_, rep)| rep.summary.evaluated_steps).sum();
    assert_eq!(steps.lines().count() - 2, evaluated);
    for row in steps.lines().skip(2) {
        let c: Vec<&str> = row.split('\t').collect();
        let run = tables.runs.iter().find(|r| r.dir.ends_with(c[0])).unwrap();
        let seed: u64 = c[4].parse().unwrap();
        let t: usize = c[5].parse().unwrap();
        let rec = &run.reports.iter().find(|(s, _)| *s == seed).unwrap().1.per_step[t];
        assert_eq!(c[6], format!("{:.6}", rec.mrr.unwrap()));
        assert_eq!(c[7], rec.epochs_run.to_string());
    }
    let out = tempfile::tempdir().unwrap();
    assert_eq!(tables.write_all(out.path()).unwrap().len(), 5);
}

/// Number of keys in a serialised config.
const CONFIG_KEYS: usize = 27;

fn shuffled_toml(cfg: &ExperimentConfig, order: &[usize]) -> String {
    let text = cfg.to_toml();
    let lines: Vec<String> = text.lines().filter(|l| !l.trim().is_empty()).map(str::to_string).collect();
    order.iter().map(|&i| lines[i % lines.len()].clone() + "\n").collect::<Vec<_>>().join("")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fingerprint_is_order_independent(perm in Just((0..CONFIG_KEYS).collect::<Vec<_>>()).prop_shuffle(), alpha in 0.0f64..=1.0) {
        let cfg = ExperimentConfig { alpha, update: UpdateKind::Mlp, ..ExperimentConfig::default() };
        let n = cfg.to_toml().lines().filter(|l| !l.trim().is_empty()).count();
        prop_assume!(n == perm.len());
        let text = shuffled_toml(&cfg, &perm);
        let back = ExperimentConfig::from_toml(&text).unwrap();
        prop_assert_eq!(back.fingerprint(), cfg.fingerprint());
    }
}

#[test]
fn fingerprint_line_count_matches_the_shuffle() {
    let n = ExperimentConfig::default().to_toml().lines().filter(|l| !l.trim().is_empty()).count();
    assert_eq!(n, CONFIG_KEYS, "update the shuffle size in fingerprint_is_order_independent");
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_roland"))
}

#[test]
fn cli_rejects_invalid_config_with_the_field_name() {
    let root = tempfile::tempdir().unwrap();
    let out = cli()
        .env("ROLAND_RUN_ROOT", root.path())
        .args(["run-live", "--dataset", "x.csv", "--set", "n_post=0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_post"));

    let cfg = root.path().join("bad.toml");
    fs::write(&cfg, "dataset = \"x.csv\"\nhidden_dimm = 4\n").unwrap();
    let out = cli().env("ROLAND_RUN_ROOT", root.path()).args(["run-fixed", "--config"]).arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("hidden_dimm"));
}

#[test]
fn cli_end_to_end_with_workers() {
    let root = tempfile::tempdir().unwrap();
    let data = root.path().join("toy.csv");
    let mut f = fs::File::create(&data).unwrap();
    let stream = roland::snapshots::synthetic::SyntheticStream {
        nodes: 25,
        snapshots: 5,
        edges_per_snapshot: 40,
        period: 86_400.0,
        ..Default::default()
    };
    let edges = stream.generate().unwrap();
    for e in edges.edges() {
        writeln!(f, "{},{},{},{}", e.src, e.dst, e.weight, e.timestamp + 1.6e9).unwrap();
    }
    drop(f);
    let runs = root.path().join("runs");
    let common = ["--dataset", data.to_str().unwrap(), "--frequency", "daily", "--hidden-dim", "4", "--k-neg", "10", "--max-epochs", "3", "--seeds", "0"];

    let ingest = cli().env("ROLAND_RUN_ROOT", &runs).arg("ingest").args(&common[..4]).output().unwrap();
    assert!(ingest.status.success(), "{}", String::from_utf8_lossy(&ingest.stderr));
    let text = String::from_utf8_lossy(&ingest.stdout).to_string();
    assert!(text.starts_with("# roland.ingest/1\n"), "{text}");

    let live = cli().env("ROLAND_RUN_ROOT", &runs).arg("run-live").args(common).output().unwrap();
    assert!(live.status.success(), "{}", String::from_utf8_lossy(&live.stderr));

    let grid_axes = root.path().join("axes.toml");
    fs::write(&grid_axes, "update = [\"gru\", \"mlp\", \"moving_average\"]\n").unwrap();
    let grid = cli()
        .env("ROLAND_RUN_ROOT", &runs)
        .arg("grid")
        .args(common)
        .arg("--axes")
        .arg(&grid_axes)
        .args(["--workers", "3"])
        .output()
        .unwrap();
    assert!(grid.status.success(), "{}", String::from_utf8_lossy(&grid.stderr));
    let index = String::from_utf8_lossy(&grid.stdout).to_string();
    assert_eq!(index.lines().filter(|l| l.contains("\tok\t")).count(), 3, "{index}");

    let tables = root.path().join("tables");
    let report = cli().env("ROLAND_RUN_ROOT", &runs).args(["report", "--out"]).arg(&tables).output().unwrap();
    assert!(report.status.success());
    // run-live's GRU run and the grid's GRU cell share a directory.
    let mrr = read(&tables.join("mrr.tsv"));
    assert_eq!(mrr.lines().count(), 2 + 3, "{mrr}");

    let cfg = ExperimentConfig::from_toml(&format!(
        "dataset = {:?}\nfrequency = \"daily\"\nhidden_dim = 4\nk_neg = 10\nmax_epochs = 3\nseeds = [0]\n",
        data.to_str().unwrap()
    ))
    .unwrap();
    let lib = run_experiment(&cfg, &runs, &RunOptions::default()).unwrap();
    assert!(lib.reused, "the CLI run and the library run agree on the directory");
    assert_eq!(lib.summary.protocol, Protocol::LiveUpdate);
}
