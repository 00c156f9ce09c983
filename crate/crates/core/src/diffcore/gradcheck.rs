use crate::{Error, Result};

/// `|a − n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Fourth-order central differences for every coordinate:
/// `(8·(f(x+h) − f(x−h)) − (f(x+2h) − f(x−2h))) / 12h` with `h = eps`.
///
/// The wider stencil drops the `O(h²)` truncation term of the two-point rule, so
/// `h` can sit at the top of its range and keep roundoff small next to
/// gradients of order 1e-8.
pub fn numeric_gradient<F>(point: &[f64], eps: f64, mut f: F) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut x = point.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = x[i];
        let mut at = |offset: f64| -> Result<f64> {
            x[i] = orig + offset;
            let v = f(&x)?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Numeric(format!("non-finite value while perturbing coordinate {i}")))
            }
        };
        let (p1, m1, p2, m2) = (at(eps)?, at(-eps)?, at(2.0 * eps)?, at(-2.0 * eps)?);
        x[i] = orig;
        grad.push((8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * eps));
    }
    Ok(grad)
}

/// Largest relative error between `analytic` and central differences of `f`
/// around `point`.
///
/// `f` maps a flat parameter vector to a scalar; `eps` must lie in `[1e-7, 1e-4]`.
pub fn grad_check<F>(point: &[f64], analytic: &[f64], eps: f64, f: F) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(1e-7..=1e-4).contains(&eps) {
        return Err(Error::config(format!("finite-difference step {eps} outside [1e-7, 1e-4]")));
    }
    if point.len() != analytic.len() {
        return Err(Error::Dimension {
            op: "grad_check",
            left: (point.len(), 1),
            right: (analytic.len(), 1),
        });
    }
    if let Some(i) = analytic.iter().position(|a| !a.is_finite()) {
        return Err(Error::Numeric(format!("analytic gradient {i} is not finite")));
    }
    let numeric = numeric_gradient(point, eps, f)?;
    Ok(analytic
        .iter()
        .zip(&numeric)
        .map(|(&a, &n)| relative_error(a, n))
        .fold(0.0, f64::max))
}
