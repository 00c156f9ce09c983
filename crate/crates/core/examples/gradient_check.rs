//! Finite-difference checks of hand-written backward passes: one primitive
//! and the full two-layer model for each update module.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use roland::diffcore::{grad_check, GruCell, Mode};
use roland::model::{ModelConfig, Roland, UpdateKind};
use roland::snapshots::{DynamicGraph, Frequency, TemporalEdge};
use roland::train::{bce_grad, bce_loss};
use roland::Matrix;

fn e(src: u32, dst: u32, t: f64) -> TemporalEdge {
    TemporalEdge { src, dst, weight: 1.0, timestamp: t }
}

fn gru_error() -> roland::Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cell = GruCell::new("gru", 3, 3, &mut rng);
    let h = Matrix::from_shape_fn((4, 3), |(i, j)| ((i * 3 + j) as f64 * 0.37).sin());
    let x = Matrix::from_shape_fn((4, 3), |(i, j)| ((i + 2 * j) as f64 * 0.51).cos());
    // loss = Σ out² / 2, so dloss/dout = out
    let (out, cache) = cell.forward(&h, &x)?;
    let mut probe = cell.clone();
    let (_, dx) = probe.backward(&cache, &out);
    grad_check(x.as_slice().unwrap(), dx.as_slice().unwrap(), 1e-5, |flat| {
        let x = Matrix::from_shape_vec((4, 3), flat.to_vec()).unwrap();
        Ok(cell.forward(&h, &x)?.0.mapv(|v| v * v).sum() / 2.0)
    })
}

fn model_error(update: UpdateKind) -> roland::Result<f64> {
    let g = DynamicGraph::from_windows(
        vec![
            ((0.0, 10.0), vec![e(0, 1, 1.0), e(2, 3, 4.0), e(4, 5, 7.0), e(5, 0, 9.0)]),
            (
                (10.0, 20.0),
                vec![e(0, 2, 10.5), e(1, 3, 11.0), e(2, 4, 12.5), e(3, 5, 13.0), e(4, 0, 15.0), e(5, 1, 16.5), e(1, 4, 18.0), e(3, 0, 19.5)],
            ),
        ],
        Frequency::Seconds(10.0),
        6,
    )?;
    let config = ModelConfig { hidden_dim: 4, update, ..ModelConfig::default() };
    let mut model = Roland::new(config, 0)?;
    // Non-zero shifts keep ReLU inputs off their kink.
    for (k, p) in model.params_mut().into_iter().enumerate() {
        if p.name.ends_with("bias") || p.name.ends_with("beta") || p.name.contains(".b_") {
            p.value.mapv_inplace(|_| 0.3 * ((k as f64) * 1.7).sin());
        }
    }
    let (_, h1) = model.forward(&g.snapshots[0], &model.initial_state(6), &[], Mode::Train)?;
    let pairs = [(0, 3), (1, 5), (2, 0), (4, 1), (5, 2), (3, 4)];
    let ys = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0];

    let mut probe = model.clone();
    probe.zero_grad();
    let (scores, _, cache) = probe.forward_train(&g.snapshots[1], &h1, &pairs)?;
    probe.backward(&cache, &bce_grad(&scores, &ys)?)?;
    grad_check(&model.flat_params(), &probe.flat_grads(), 1e-4, |flat| {
        let mut m = model.clone();
        m.load_flat_params(flat)?;
        let (s, _, _) = m.forward_train(&g.snapshots[1], &h1, &pairs)?;
        bce_loss(&s, &ys)
    })
}

fn main() -> roland::Result<()> {
    println!("gru cell, d/dx: max rel err {:.2e}", gru_error()?);
    for kind in UpdateKind::ALL {
        println!("full model, {kind:<14} max rel err {:.2e}", model_error(kind)?);
    }
    Ok(())
}
