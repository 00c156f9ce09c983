//! Batch-norm × skip-connection × aggregation ablation, emitted as a
//! long-format table of per-seed MRR for each option value.

use roland::experiment::{collect_runs, grid_search_on, ExperimentConfig, GridAxes, GridOptions};
use roland::snapshots::synthetic::SyntheticStream;
use roland::snapshots::{partition_snapshots, Frequency};

fn main() -> roland::Result<()> {
    let stream = SyntheticStream { snapshots: 8, ..SyntheticStream::default() };
    let g = partition_snapshots(&stream.generate()?, Frequency::Seconds(stream.period))?;
    let root = std::env::temp_dir().join(format!("roland-ablation-{}", std::process::id()));
    let base = ExperimentConfig {
        dataset: "synthetic".into(),
        hidden_dim: 16,
        max_epochs: 15,
        k_neg: 100,
        seeds: vec![0],
        ..ExperimentConfig::default()
    };
    let grid = grid_search_on(&base, &GridAxes::ablation_grid(), &g, &root, &GridOptions::default())?;
    let best = grid.best_cell().expect("at least one cell ran");
    println!("best cell by validation MRR: {:?}", best.overrides);

    let tables = collect_runs(&[root.clone()]);
    print!("{}", tables.ablation_table());
    std::fs::remove_dir_all(&root).ok();
    Ok(())
}
