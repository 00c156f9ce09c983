use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Sum,
    Mean,
    Max,
}

impl std::str::FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" | "add" => Ok(Aggregation::Sum),
            "mean" | "avg" => Ok(Aggregation::Mean),
            "max" => Ok(Aggregation::Max),
            other => Err(Error::config(format!("unknown aggregation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AggregateCache {
    mode: Aggregation,
    counts: Vec<usize>,
    /// Max mode: `n_nodes × d` message row that won each output entry.
    argmax: Vec<usize>,
    cols: usize,
}

/// Row `v` of the result reduces the messages whose `dst_index` is `v`; nodes
/// without messages get a zero row in every mode.
pub fn aggregate(messages: &Matrix, dst_index: &[u32], n_nodes: usize, mode: Aggregation) -> Result<Matrix> {
    aggregate_forward(messages, dst_index, n_nodes, mode).map(|(m, _)| m)
}

pub fn aggregate_forward(
    messages: &Matrix,
    dst_index: &[u32],
    n_nodes: usize,
    mode: Aggregation,
) -> Result<(Matrix, AggregateCache)> {
    if dst_index.len() != messages.nrows() {
        return Err(Error::Dimension {
            op: "aggregate",
            left: messages.dim(),
            right: (dst_index.len(), 1),
        });
    }
    if let Some(&bad) = dst_index.iter().find(|&&v| v as usize >= n_nodes) {
        return Err(Error::Bounds {
            what: "aggregate destination",
            index: bad as usize,
            len: n_nodes,
        });
    }
    let d = messages.ncols();
    let mut out = Array2::zeros((n_nodes, d));
    let mut counts = vec![0usize; n_nodes];
    let mut argmax = Vec::new();
    match mode {
        Aggregation::Sum | Aggregation::Mean => {
            for (row, &v) in messages.rows().into_iter().zip(dst_index) {
                let mut o = out.row_mut(v as usize);
                o += &row;
                counts[v as usize] += 1;
            }
            if mode == Aggregation::Mean {
                for (mut o, &c) in out.rows_mut().into_iter().zip(&counts) {
                    if c > 1 {
                        o /= c as f64;
                    }
                }
            }
        }
        Aggregation::Max => {
            argmax = vec![usize::MAX; n_nodes * d];
            for (i, &v) in dst_index.iter().enumerate() {
                let v = v as usize;
                counts[v] += 1;
                for j in 0..d {
                    let m = messages[[i, j]];
                    let slot = &mut argmax[v * d + j];
                    // strict > keeps the first maximal message on ties
                    if *slot == usize::MAX || m > out[[v, j]] {
                        out[[v, j]] = m;
                        *slot = i;
                    }
                }
            }
        }
    }
    Ok((
        out,
        AggregateCache {
            mode,
            counts,
            argmax,
            cols: d,
        },
    ))
}

/// Gradient with respect to the messages.
pub fn aggregate_backward(cache: &AggregateCache, dst_index: &[u32], grad: &Matrix) -> Matrix {
    let d = cache.cols;
    let mut g = Array2::zeros((dst_index.len(), d));
    match cache.mode {
        Aggregation::Sum | Aggregation::Mean => {
            for (i, &v) in dst_index.iter().enumerate() {
                let scale = if cache.mode == Aggregation::Mean {
                    1.0 / cache.counts[v as usize] as f64
                } else {
                    1.0
                };
                let mut row = g.row_mut(i);
                row.scaled_add(scale, &grad.row(v as usize));
            }
        }
        Aggregation::Max => {
            for v in 0..cache.counts.len() {
                if cache.counts[v] == 0 {
                    continue;
                }
                for j in 0..d {
                    let i = cache.argmax[v * d + j];
                    g[[i, j]] += grad[[v, j]];
                }
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn loop_oracle(messages: &Matrix, dst: &[u32], n: usize, mode: Aggregation) -> Matrix {
        let d = messages.ncols();
        let mut out = Array2::zeros((n, d));
        for v in 0..n {
            let rows: Vec<usize> = (0..dst.len()).filter(|&i| dst[i] as usize == v).collect();
            if rows.is_empty() {
                continue;
            }
            for j in 0..d {
                let vals: Vec<f64> = rows.iter().map(|&i| messages[[i, j]]).collect();
                out[[v, j]] = match mode {
                    Aggregation::Sum => vals.iter().sum(),
                    Aggregation::Mean => vals.iter().sum::<f64>() / vals.len() as f64,
                    Aggregation::Max => vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                };
            }
        }
        out
    }

    #[test]
    fn no_messages_gives_zero_matrix() {
        for mode in [Aggregation::Sum, Aggregation::Mean, Aggregation::Max] {
            let out = aggregate(&Array2::zeros((0, 3)), &[], 4, mode).unwrap();
            assert_eq!(out, Array2::<f64>::zeros((4, 3)));
        }
    }

    #[test]
    fn mean_of_two() {
        let m = array![[1.0, 2.0], [3.0, 4.0]];
        let out = aggregate(&m, &[0, 0], 2, Aggregation::Mean).unwrap();
        assert_eq!(out, array![[2.0, 3.0], [0.0, 0.0]]);
    }

    #[test]
    fn random_instances_match_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let n = rng.random_range(1..8);
            let e = rng.random_range(0..20);
            let d = rng.random_range(1..5);
            let m = Array2::from_shape_fn((e, d), |_| rng.random_range(-5.0..5.0));
            let dst: Vec<u32> = (0..e).map(|_| rng.random_range(0..n) as u32).collect();
            for mode in [Aggregation::Sum, Aggregation::Mean, Aggregation::Max] {
                let out = aggregate(&m, &dst, n, mode).unwrap();
                let oracle = loop_oracle(&m, &dst, n, mode);
                if mode == Aggregation::Mean {
                    for (a, b) in out.iter().zip(oracle.iter()) {
                        assert!((a - b).abs() < 1e-12);
                    }
                } else {
                    assert_eq!(out, oracle);
                }
            }
        }
    }

    #[test]
    fn sum_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = Array2::from_shape_fn((9, 3), |_| rng.random_range(-1.0..1.0));
        let b = Array2::from_shape_fn((9, 3), |_| rng.random_range(-1.0..1.0));
        let dst: Vec<u32> = (0..9).map(|i| (i * 5 % 4) as u32).collect();
        let (alpha, beta) = (0.7, -2.5);
        let lhs = aggregate(&(&a * alpha + &b * beta), &dst, 4, Aggregation::Sum).unwrap();
        let rhs = aggregate(&a, &dst, 4, Aggregation::Sum).unwrap() * alpha
            + aggregate(&b, &dst, 4, Aggregation::Sum).unwrap() * beta;
        for (x, y) in lhs.iter().zip(rhs.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn max_ties_route_to_first() {
        let m = array![[1.0], [1.0], [0.5]];
        let dst = [0, 0, 0];
        let (_, cache) = aggregate_forward(&m, &dst, 1, Aggregation::Max).unwrap();
        let g = aggregate_backward(&cache, &dst, &array![[2.0]]);
        assert_eq!(g, array![[2.0], [0.0], [0.0]]);
    }

    #[test]
    fn out_of_range_index() {
        let m = Array2::zeros((1, 2));
        assert!(matches!(
            aggregate(&m, &[3], 3, Aggregation::Sum),
            Err(Error::Bounds { index: 3, .. })
        ));
    }
}
