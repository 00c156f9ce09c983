//! Save a trained model together with its node state, reload both, and
//! continue scoring from exactly where the run stopped.

use roland::diffcore::Mode;
use roland::eval::{live_update_run, RunConfig};
use roland::model::{load_checkpoint, save_checkpoint, ModelConfig};
use roland::snapshots::synthetic::SyntheticStream;
use roland::snapshots::{partition_snapshots, Frequency};
use roland::train::TrainConfig;

fn main() -> roland::Result<()> {
    let stream = SyntheticStream { snapshots: 6, ..SyntheticStream::default() };
    let g = partition_snapshots(&stream.generate()?, Frequency::Seconds(stream.period))?;
    let cfg = RunConfig {
        model: ModelConfig { hidden_dim: 16, ..ModelConfig::default() },
        train: TrainConfig { max_epochs: 10, ..TrainConfig::default() },
        k_neg: 50,
        ..RunConfig::default()
    };
    // The run absorbs every snapshot but the last, whose edges only serve as labels.
    let out = live_update_run(&g, &cfg)?;

    let dir = std::env::temp_dir().join(format!("roland-ckpt-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let stem = dir.join("model");
    save_checkpoint(&stem, &out.model, &out.state)?;
    let (mut loaded, state) = load_checkpoint(&stem)?;
    println!("saved and reloaded {} parameters, state at step {}", loaded.param_count(), state.step);

    let next = &g.snapshots[state.step];
    let pairs = [(0, 1), (2, 3), (4, 5)];
    let (a, _) = out.model.clone().forward(next, &out.state, &pairs, Mode::Eval)?;
    let (b, _) = loaded.forward(next, &state, &pairs, Mode::Eval)?;
    println!("scores before: {a:?}\nscores after:  {b:?}");
    assert_eq!(a, b);
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
