//! Run two update modules over three seeds into a run root, then build the
//! MRR, meta-gain and per-step tables from the persisted records.

use roland::experiment::{collect_runs, run_experiment_on, ExperimentConfig, RunOptions};
use roland::model::UpdateKind;
use roland::snapshots::synthetic::SyntheticStream;
use roland::snapshots::{partition_snapshots, Frequency};

fn main() -> roland::Result<()> {
    let stream = SyntheticStream { snapshots: 8, ..SyntheticStream::default() };
    let g = partition_snapshots(&stream.generate()?, Frequency::Seconds(stream.period))?;
    let root = std::env::temp_dir().join(format!("roland-report-{}", std::process::id()));

    for update in [UpdateKind::Gru, UpdateKind::MovingAverage] {
        let cfg = ExperimentConfig {
            dataset: "synthetic".into(),
            update,
            hidden_dim: 16,
            max_epochs: 15,
            k_neg: 100,
            ..ExperimentConfig::default()
        };
        let out = run_experiment_on(&cfg, &g, &root, &RunOptions::default())?;
        println!("{}", out.dir.display());
    }
    // Unreadable directories are listed and skipped, not fatal.
    std::fs::create_dir_all(root.join("broken-run")).unwrap();
    std::fs::write(root.join("broken-run/config.toml"), "n_mp = 99\n").unwrap();

    let tables = collect_runs(&[root.clone()]);
    print!("{}", tables.mrr_table());
    print!("{}", tables.meta_gain_table());
    print!("{}", tables.skipped_table());
    let steps = tables.steps_table();
    println!("steps table: {} rows", steps.lines().count() - 2);
    let written = tables.write_all(&root.join("tables"))?;
    println!("wrote {} files under {}", written.len(), root.join("tables").display());
    std::fs::remove_dir_all(&root).ok();
    Ok(())
}
