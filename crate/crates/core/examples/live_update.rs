//! Live-update evaluation of the three update modules on a synthetic stream.
//!
//! Each step is scored with the model trained through the previous step, then
//! fine-tuned on its own labels.

use roland::eval::{live_update_run, RunConfig};
use roland::model::{ModelConfig, UpdateKind};
use roland::snapshots::synthetic::SyntheticStream;
use roland::snapshots::{partition_snapshots, Frequency};
use roland::train::TrainConfig;

fn main() -> roland::Result<()> {
    let stream = SyntheticStream { snapshots: 10, ..SyntheticStream::default() };
    let g = partition_snapshots(&stream.generate()?, Frequency::Seconds(stream.period))?;
    println!("{} snapshots, {} nodes, {} edges", g.len(), g.node_count, g.total_edges());

    for update in UpdateKind::ALL {
        let cfg = RunConfig {
            model: ModelConfig { hidden_dim: 32, update, ..ModelConfig::default() },
            train: TrainConfig { max_epochs: 30, ..TrainConfig::default() },
            k_neg: 100,
            ..RunConfig::default()
        };
        let out = live_update_run(&g, &cfg)?;
        let series: Vec<String> = out
            .report
            .per_step
            .iter()
            .map(|r| r.mrr.map_or("  -  ".into(), |m| format!("{m:.3}")))
            .collect();
        let epochs: Vec<usize> = out.report.per_step.iter().map(|r| r.epochs_run).collect();
        println!(
            "{update:<14} mean MRR {:.4}   per step [{}]   epochs {epochs:?}",
            out.report.mean_mrr().unwrap_or(f64::NAN),
            series.join(" ")
        );
    }
    Ok(())
}
