//! Shape-level helpers shared by the primitives.

use ndarray::{concatenate, s, Array2, Axis};

use crate::{Error, Matrix, Result};

pub fn concat_cols(parts: &[&Matrix]) -> Result<Matrix> {
    let views: Vec<_> = parts.iter().map(|m| m.view()).collect();
    concatenate(Axis(1), &views).map_err(|_| Error::Dimension {
        op: "concat",
        left: parts.first().map_or((0, 0), |m| m.dim()),
        right: parts.last().map_or((0, 0), |m| m.dim()),
    })
}

/// Splits `m` column-wise into blocks of the given widths.
pub fn split_cols(m: &Matrix, widths: &[usize]) -> Vec<Matrix> {
    let mut out = Vec::with_capacity(widths.len());
    let mut at = 0;
    for &w in widths {
        out.push(m.slice(s![.., at..at + w]).to_owned());
        at += w;
    }
    out
}

pub fn gather_rows(m: &Matrix, index: &[u32]) -> Matrix {
    let mut out = Array2::zeros((index.len(), m.ncols()));
    for (mut row, &i) in out.rows_mut().into_iter().zip(index) {
        row.assign(&m.row(i as usize));
    }
    out
}

/// `target[index[i]] += rows[i]`.
pub fn scatter_add_rows(target: &mut Matrix, index: &[u32], rows: &Matrix) {
    for (row, &i) in rows.rows().into_iter().zip(index) {
        let mut t = target.row_mut(i as usize);
        t += &row;
    }
}

pub fn relu(x: &Matrix) -> Matrix {
    x.mapv(|v| v.max(0.0))
}

/// Gradient through ReLU given its *input*; the derivative at 0 is taken as 0.
pub fn relu_backward(pre: &Matrix, grad: &Matrix) -> Matrix {
    let mut g = grad.clone();
    g.zip_mut_with(pre, |g, &p| {
        if p <= 0.0 {
            *g = 0.0
        }
    });
    g
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

pub fn ensure_rows(op: &'static str, a: &Matrix, b: &Matrix) -> Result<()> {
    if a.nrows() != b.nrows() {
        return Err(Error::Dimension {
            op,
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(())
}

pub fn ensure_same_shape(op: &'static str, a: &Matrix, b: &Matrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension {
            op,
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(())
}

pub fn sum_rows(m: &Matrix) -> Matrix {
    m.sum_axis(Axis(0)).insert_axis(Axis(0))
}
