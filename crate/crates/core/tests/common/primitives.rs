//! Per-primitive finite-difference checks: each draws shapes and values from
//! a seed, forms `L = Σ out ⊙ R` for a random projection `R`, and compares the
//! backward pass (seeded with `R`) against central differences.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roland::diffcore::{
    affine, aggregate_backward, aggregate_forward, grad_check, Aggregation, BatchNorm, GruCell, Linear, Mlp2, Mode, Param,
};
use roland::Matrix;

pub const EPS: f64 = 1e-4;
/// Instances with a ReLU input or a max-aggregation gap closer to a kink than
/// this are rejected: the stencil would straddle a non-differentiable point.
pub const KINK_MARGIN: f64 = 1e-3;

pub fn random(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> Matrix {
    Array2::from_shape_fn((r, c), |_| rng.random_range(-scale..scale))
}

pub fn flatten(ms: &[&Matrix]) -> Vec<f64> {
    ms.iter().flat_map(|m| m.iter().copied()).collect()
}

pub fn unflatten(flat: &[f64], targets: &mut [&mut Matrix]) {
    let mut at = 0;
    for m in targets.iter_mut() {
        for v in m.iter_mut() {
            *v = flat[at];
            at += 1;
        }
    }
}

pub fn dot(a: &Matrix, b: &Matrix) -> f64 {
    (a * b).sum()
}

pub fn randomize(params: Vec<&mut Param>, rng: &mut ChaCha8Rng) {
    for p in params {
        p.value.mapv_inplace(|_| rng.random_range(-0.8..0.8));
        p.zero_grad();
    }
}

pub fn check_linear(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, i, o) = (rng.random_range(1..6), rng.random_range(1..5), rng.random_range(1..5));
    let mut lin = Linear::new("l", i, o, true, &mut rng);
    randomize(lin.params_mut(), &mut rng);
    let x = random(&mut rng, n, i, 1.5);
    let proj = random(&mut rng, n, o, 1.0);
    let dx = lin.backward(&x, &proj);
    let analytic = flatten(&[&dx, &lin.weight.grad, &lin.bias.as_ref().unwrap().grad]);
    let point = flatten(&[&x, &lin.weight.value, &lin.bias.as_ref().unwrap().value]);
    let template = lin.clone();
    grad_check(&point, &analytic, EPS, |flat| {
        let mut l = template.clone();
        let mut x = x.clone();
        let b = l.bias.as_mut().unwrap();
        unflatten(flat, &mut [&mut x, &mut l.weight.value, &mut b.value]);
        Ok(dot(&l.forward(&x)?, &proj))
    })
    .unwrap()
}

pub fn check_mlp(seed: u64) -> Option<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, i, h, o) = (
        rng.random_range(1..6),
        rng.random_range(1..5),
        rng.random_range(1..6),
        rng.random_range(1..4),
    );
    let mut mlp = Mlp2::new("m", i, h, o, &mut rng);
    randomize(mlp.params_mut(), &mut rng);
    let x = random(&mut rng, n, i, 1.5);
    let proj = random(&mut rng, n, o, 1.0);
    let pre = affine(&x, &mlp.hidden.weight, mlp.hidden.bias.as_ref()).unwrap();
    if pre.iter().any(|v| v.abs() < KINK_MARGIN) {
        return None;
    }
    let (_, cache) = mlp.forward(&x).unwrap();
    let dx = mlp.backward(&cache, &proj);
    let mut grads: Vec<&Matrix> = vec![&dx];
    grads.extend(mlp.params().into_iter().map(|p| &p.grad));
    let analytic = flatten(&grads);
    let mut vals: Vec<&Matrix> = vec![&x];
    vals.extend(mlp.params().into_iter().map(|p| &p.value));
    let point = flatten(&vals);
    let template = mlp.clone();
    grad_check(&point, &analytic, EPS, |flat| {
        let mut m = template.clone();
        let mut x = x.clone();
        let mut targets: Vec<&mut Matrix> = vec![&mut x];
        targets.extend(m.params_mut().into_iter().map(|p| &mut p.value));
        unflatten(flat, &mut targets);
        Ok(dot(&m.forward(&x)?.0, &proj))
    })
    .map(Some)
    .unwrap()
}

pub fn check_gru(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, dx, dh) = (rng.random_range(1..5), rng.random_range(1..4), rng.random_range(1..4));
    let mut cell = GruCell::new("g", dx, dh, &mut rng);
    randomize(cell.params_mut(), &mut rng);
    let h = random(&mut rng, n, dh, 1.0);
    let x = random(&mut rng, n, dx, 1.5);
    let proj = random(&mut rng, n, dh, 1.0);
    let (_, cache) = cell.forward(&h, &x).unwrap();
    let (gh, gx) = cell.backward(&cache, &proj);
    let mut grads: Vec<&Matrix> = vec![&gh, &gx];
    grads.extend(cell.params().into_iter().map(|p| &p.grad));
    let analytic = flatten(&grads);
    let mut vals: Vec<&Matrix> = vec![&h, &x];
    vals.extend(cell.params().into_iter().map(|p| &p.value));
    let point = flatten(&vals);
    let template = cell.clone();
    grad_check(&point, &analytic, EPS, |flat| {
        let mut c = template.clone();
        let (mut h, mut x) = (h.clone(), x.clone());
        let mut targets: Vec<&mut Matrix> = vec![&mut h, &mut x];
        targets.extend(c.params_mut().into_iter().map(|p| &mut p.value));
        unflatten(flat, &mut targets);
        Ok(dot(&c.forward(&h, &x)?.0, &proj))
    })
    .unwrap()
}

pub fn check_batch_norm(seed: u64, mode: Mode) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Two rows normalise to ±1 whatever x is, leaving only an eps-sized
    // gradient that finite differences cannot resolve; start at three.
    let (n, d) = (rng.random_range(3..8), rng.random_range(1..5));
    let mut bn = BatchNorm::new("bn", d);
    randomize(bn.params_mut(), &mut rng);
    bn.stats.running_mean = ndarray::Array1::from_shape_fn(d, |_| rng.random_range(-1.0..1.0));
    bn.stats.running_var = ndarray::Array1::from_shape_fn(d, |_| rng.random_range(0.5..2.0));
    let x = random(&mut rng, n, d, 2.0);
    let proj = random(&mut rng, n, d, 1.0);
    let template = bn.clone();
    let (_, cache) = bn.forward(&x, mode).unwrap();
    let dx = bn.backward(&cache, &proj);
    let analytic = flatten(&[&dx, &bn.gamma.grad, &bn.beta.grad]);
    let point = flatten(&[&x, &bn.gamma.value, &bn.beta.value]);
    grad_check(&point, &analytic, EPS, |flat| {
        let mut b = template.clone();
        let mut x = x.clone();
        unflatten(flat, &mut [&mut x, &mut b.gamma.value, &mut b.beta.value]);
        Ok(dot(&b.forward(&x, mode)?.0, &proj))
    })
    .unwrap()
}

pub fn check_aggregate(seed: u64, mode: Aggregation) -> Option<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, e, d) = (rng.random_range(1..6), rng.random_range(1..12), rng.random_range(1..4));
    let m = random(&mut rng, e, d, 2.0);
    let dst: Vec<u32> = (0..e).map(|_| rng.random_range(0..n) as u32).collect();
    let proj = random(&mut rng, n, d, 1.0);
    if mode == Aggregation::Max && max_gap(&m, &dst) < KINK_MARGIN {
        return None;
    }
    let (_, cache) = aggregate_forward(&m, &dst, n, mode).unwrap();
    let g = aggregate_backward(&cache, &dst, &proj);
    let point = flatten(&[&m]);
    let analytic = flatten(&[&g]);
    grad_check(&point, &analytic, EPS, |flat| {
        let mut mm = m.clone();
        unflatten(flat, &mut [&mut mm]);
        Ok(dot(&aggregate_forward(&mm, &dst, n, mode)?.0, &proj))
    })
    .map(Some)
    .unwrap()
}

/// Smallest gap between the two largest messages into any (node, column).
pub fn max_gap(m: &Matrix, dst: &[u32]) -> f64 {
    let mut gap = f64::INFINITY;
    for (e, &v) in dst.iter().enumerate() {
        for (f, &w) in dst.iter().enumerate() {
            if e != f && v == w {
                for c in 0..m.ncols() {
                    gap = gap.min((m[[e, c]] - m[[f, c]]).abs());
                }
            }
        }
    }
    gap
}

