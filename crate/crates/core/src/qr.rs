//! Householder QR least squares with limited column pivoting.
//!
//! Columns are processed in their given order. A column whose remaining norm
//! (after the reflections of the columns accepted before it) falls below
//! `tol * max_j ||x_j||` is moved to the end and reported as aliased, so the
//! earliest of a set of collinear columns keeps its coefficient.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LeastSquares {
    /// One entry per input column; `None` marks an aliased column.
    pub coefficients: Vec<Option<f64>>,
    pub rank: usize,
}

fn norm(v: &[f64]) -> f64 {
    // Scaled to avoid overflow on large effort values.
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

struct Reflector {
    row: usize,
    v: Vec<f64>,
    beta: f64,
}

impl Reflector {
    fn apply(&self, col: &mut [f64]) {
        if self.beta == 0.0 {
            return;
        }
        let tail = &mut col[self.row..];
        let s: f64 = self.v.iter().zip(tail.iter()).map(|(a, b)| a * b).sum::<f64>() * self.beta;
        for (t, v) in tail.iter_mut().zip(&self.v) {
            *t -= s * v;
        }
    }
}

/// Solves `min ||y - X b||` for column-major `columns`.
pub(crate) fn least_squares(columns: &[Vec<f64>], y: &[f64], tol: f64) -> Result<LeastSquares> {
    let n = y.len();
    let p = columns.len();
    if p == 0 {
        return Err(Error::Fit("design has no columns".into()));
    }
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::Fit("design columns and response differ in length".into()));
    }
    let mut work: Vec<Vec<f64>> = columns.to_vec();
    let largest = work.iter().map(|c| norm(c)).fold(0.0, f64::max);
    let threshold = tol * largest;

    // order[k] = original index of the column now at position k
    let mut order: Vec<usize> = (0..p).collect();
    let mut reflectors = Vec::new();
    let mut diag = Vec::new();
    let mut active = p;
    let mut k = 0;
    while k < active && k < n {
        let residual = norm(&work[order[k]][k..]);
        if residual <= threshold {
            let moved = order.remove(k);
            order.push(moved);
            active -= 1;
            continue;
        }
        let col = &work[order[k]];
        let x0 = col[k];
        let alpha = if x0 >= 0.0 { -residual } else { residual };
        let mut v: Vec<f64> = col[k..].to_vec();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        let beta = if vv == 0.0 { 0.0 } else { 2.0 / vv };
        let reflector = Reflector { row: k, v, beta };
        for &j in &order[k..] {
            reflector.apply(&mut work[j]);
        }
        diag.push(work[order[k]][k]);
        reflectors.push(reflector);
        k += 1;
    }
    let rank = k;
    if rank == 0 {
        return Err(Error::Fit("no usable design columns".into()));
    }

    let mut qty = y.to_vec();
    for r in &reflectors {
        r.apply(&mut qty);
    }
    // back substitution on the leading rank x rank block of R
    let mut b = vec![0.0; rank];
    for i in (0..rank).rev() {
        let mut s = qty[i];
        for j in i + 1..rank {
            s -= work[order[j]][i] * b[j];
        }
        b[i] = s / diag[i];
    }
    let mut coefficients = vec![None; p];
    for (pos, &col) in order.iter().enumerate().take(rank) {
        coefficients[col] = Some(b[pos]);
    }
    Ok(LeastSquares { coefficients, rank })
}
