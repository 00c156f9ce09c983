//! Sweep the meta-model smoothing factor α and compare against α = 1, which
//! warm-starts every step from the previous step's model.

use roland::eval::Protocol;
use roland::experiment::{collect_runs, grid_search_on, ExperimentConfig, GridAxes, GridOptions};
use roland::model::UpdateKind;
use roland::snapshots::synthetic::SyntheticStream;
use roland::snapshots::{partition_snapshots, Frequency};

fn main() -> roland::Result<()> {
    let stream = SyntheticStream { snapshots: 10, ..SyntheticStream::default() };
    let g = partition_snapshots(&stream.generate()?, Frequency::Seconds(stream.period))?;
    let root = std::env::temp_dir().join(format!("roland-alpha-{}", std::process::id()));

    let base = ExperimentConfig {
        dataset: "synthetic".into(),
        protocol: Protocol::LiveUpdate,
        update: UpdateKind::MovingAverage,
        hidden_dim: 16,
        max_epochs: 20,
        k_neg: 100,
        seeds: vec![0, 1],
        ..ExperimentConfig::default()
    };
    let grid = grid_search_on(&base, &GridAxes::alpha_grid(), &g, &root, &GridOptions::default())?;
    print!("{}", grid.index_tsv());

    let tables = collect_runs(&[root.clone()]);
    print!("{}", tables.meta_gain_table());
    std::fs::remove_dir_all(&root).ok();
    Ok(())
}
