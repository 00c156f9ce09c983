//! Fixed-split evaluation: train on the leading snapshots, then freeze the
//! parameters while the node state keeps rolling through the test block.

use roland::eval::{fixed_split_run, RunConfig};
use roland::model::{ModelConfig, UpdateKind};
use roland::snapshots::synthetic::SyntheticStream;
use roland::snapshots::{partition_snapshots, Frequency};
use roland::train::TrainConfig;

fn main() -> roland::Result<()> {
    let stream = SyntheticStream { snapshots: 12, ..SyntheticStream::default() };
    let g = partition_snapshots(&stream.generate()?, Frequency::Seconds(stream.period))?;
    let cfg = RunConfig {
        model: ModelConfig { hidden_dim: 32, ..ModelConfig::default().with_update(UpdateKind::Gru) },
        train: TrainConfig { max_epochs: 30, ..TrainConfig::default() },
        k_neg: 100,
        test_fraction: 0.25,
        ..RunConfig::default()
    };
    let out = fixed_split_run(&g, &cfg)?;
    let s = &out.report.summary;
    println!("trained on label steps 0..{}, tested on {} steps", s.test_start.unwrap(), out.report.per_step.len());
    for r in &out.report.per_step {
        println!("  t={:<3} MRR {:.4}", r.t, r.mrr.unwrap_or(f64::NAN));
    }
    println!("mean test MRR {:.4}", s.mean_mrr.unwrap_or(f64::NAN));
    println!(
        "parameters frozen: {}",
        if s.checksum_before_test == s.checksum_after_test { "yes" } else { "NO" }
    );
    Ok(())
}
