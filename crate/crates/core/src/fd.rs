//! Central finite differences with step `1e-5 · max(1, |x_a|)`.

use crate::error::Result;
use crate::field::{Field, Point};

pub const FD_REL_STEP: f64 = 1e-5;

pub fn step(x: f64) -> f64 {
    FD_REL_STEP * x.abs().max(1.0)
}

/// Central-difference gradient of a scalar function.
pub fn gradient<F>(x: &[f64], f: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut out = Vec::with_capacity(x.len());
    let mut y = x.to_vec();
    for a in 0..x.len() {
        let h = step(x[a]);
        y[a] = x[a] + h;
        let fp = f(&y)?;
        y[a] = x[a] - h;
        let fm = f(&y)?;
        y[a] = x[a];
        out.push((fp - fm) / (2.0 * h));
    }
    Ok(out)
}

/// Central-difference Jacobian `J[i][a] = ∂_a f_i` of a vector function.
pub fn jacobian<F>(x: &[f64], f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut cols = Vec::with_capacity(x.len());
    let mut y = x.to_vec();
    for a in 0..x.len() {
        let h = step(x[a]);
        y[a] = x[a] + h;
        let fp = f(&y)?;
        y[a] = x[a] - h;
        let fm = f(&y)?;
        y[a] = x[a];
        cols.push(
            fp.iter()
                .zip(&fm)
                .map(|(p, m)| (p - m) / (2.0 * h))
                .collect::<Vec<f64>>(),
        );
    }
    let rows = cols.first().map_or(0, Vec::len);
    Ok((0..rows).map(|i| cols.iter().map(|c| c[i]).collect()).collect())
}

/// `(dα)_ab = ∂_a α_b − ∂_b α_a` for a pointwise covector function.
pub fn exterior_derivative<F>(x: &[f64], alpha: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let j = jacobian(x, alpha)?;
    let n = x.len();
    let mut d = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in (a + 1)..n {
            let v = j[b][a] - j[a][b];
            d[a][b] = v;
            d[b][a] = -v;
        }
    }
    Ok(d)
}

/// Largest relative mismatch `|J − D| / max(1, |J|)` between jet partials of
/// order `1..=order` and central differences of the next-lower jet partials.
pub fn jet_fd_mismatch(field: &Field, p: &Point, order: usize) -> Result<f64> {
    let top = field.jets(p, order)?;
    let dim = p.dim();
    let mut worst: f64 = 0.0;
    // multi-indices of length k − 1, extended by one more axis
    let mut lower: Vec<Vec<usize>> = vec![Vec::new()];
    for k in 1..=order {
        let mut shifted = Vec::with_capacity(dim);
        for a in 0..dim {
            let h = step(p.coords[a]);
            let plus = field.jets(&p.shifted(a, h), k - 1)?;
            let minus = field.jets(&p.shifted(a, -h), k - 1)?;
            shifted.push((h, plus, minus));
        }
        let mut next = Vec::new();
        for idx in &lower {
            for (a, (h, plus, minus)) in shifted.iter().enumerate() {
                if idx.last().is_some_and(|l| *l > a) {
                    continue;
                }
                let mut full = idx.clone();
                full.push(a);
                for c in 0..top.len() {
                    let exact = top[c].partial(&full);
                    let approx = (plus[c].partial(idx) - minus[c].partial(idx)) / (2.0 * h);
                    worst = worst.max((exact - approx).abs() / exact.abs().max(1.0));
                }
                next.push(full);
            }
        }
        lower = next;
    }
    Ok(worst)
}
