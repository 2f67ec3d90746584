//! Small dense least squares by Householder QR. Columns are few (≤ 3) and
//! rows are at most a few thousand, so this never needs anything fancier.

/// Solution of `min ‖A c − y‖₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub coefficients: Vec<f64>,
    /// Euclidean norm of the residual vector.
    pub residual_norm: f64,
}

/// `columns[j][i]` is entry `(i, j)` of the design matrix.
///
/// Returns `None` for rank-deficient designs or fewer rows than columns.
pub fn solve(columns: &[Vec<f64>], y: &[f64]) -> Option<LeastSquares> {
    let n_cols = columns.len();
    let n_rows = y.len();
    if n_cols == 0 || n_rows < n_cols || columns.iter().any(|c| c.len() != n_rows) {
        return None;
    }
    // Column scaling keeps the triangular solve well conditioned when the
    // regressors live on very different scales (1, ln k, k).
    let scales: Vec<f64> = columns
        .iter()
        .map(|c| c.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .collect();
    if scales.iter().any(|s| *s == 0.0 || !s.is_finite()) {
        return None;
    }
    let mut a: Vec<Vec<f64>> = columns
        .iter()
        .zip(&scales)
        .map(|(c, s)| c.iter().map(|v| v / s).collect())
        .collect();
    let mut b = y.to_vec();

    for j in 0..n_cols {
        let norm = a[j][j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        let alpha = if a[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm_sq: f64 = v.iter().map(|x| x * x).sum();
        if vnorm_sq == 0.0 {
            continue;
        }
        for col in a.iter_mut().skip(j) {
            let dot: f64 = v.iter().zip(&col[j..]).map(|(p, q)| p * q).sum();
            let f = 2.0 * dot / vnorm_sq;
            for (x, vi) in col[j..].iter_mut().zip(&v) {
                *x -= f * vi;
            }
        }
        let dot: f64 = v.iter().zip(&b[j..]).map(|(p, q)| p * q).sum();
        let f = 2.0 * dot / vnorm_sq;
        for (x, vi) in b[j..].iter_mut().zip(&v) {
            *x -= f * vi;
        }
    }

    let diag_max = (0..n_cols).fold(0.0f64, |m, j| m.max(a[j][j].abs()));
    let mut coef = vec![0.0; n_cols];
    for j in (0..n_cols).rev() {
        let r_jj = a[j][j];
        if r_jj.abs() <= 1e-13 * diag_max {
            return None;
        }
        let mut acc = b[j];
        for (i, c) in coef.iter().enumerate().skip(j + 1) {
            acc -= a[i][j] * c;
        }
        coef[j] = acc / r_jj;
    }
    for (c, s) in coef.iter_mut().zip(&scales) {
        *c /= s;
    }

    // Recompute the residual in the original coordinates rather than reading
    // it off the rotated right-hand side.
    let residual_norm = (0..n_rows)
        .map(|i| {
            let fit: f64 = columns.iter().zip(&coef).map(|(col, c)| col[i] * c).sum();
            let r = y[i] - fit;
            r * r
        })
        .sum::<f64>()
        .sqrt();
    Some(LeastSquares {
        coefficients: coef,
        residual_norm,
    })
}

/// Straight-line fit `y ≈ slope·x + intercept`.
pub fn line(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let ones = vec![1.0; x.len()];
    let sol = solve(&[x.to_vec(), ones], y)?;
    Some((sol.coefficients[0], sol.coefficients[1], sol.residual_norm))
}
