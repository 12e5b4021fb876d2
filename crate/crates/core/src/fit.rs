//! Small least-squares fits used by the decay and rate checks.

/// Ordinary least squares `y ≈ X β` via normal equations on column-scaled data.
///
/// Returns `(β, rms residual)`; `None` if the system is singular.
pub fn least_squares(cols: &[Vec<f64>], y: &[f64]) -> Option<(Vec<f64>, f64)> {
    let k = cols.len();
    let n = y.len();
    if n < k || cols.iter().any(|c| c.len() != n) {
        return None;
    }
    let scale: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE)).collect();
    let mut a = vec![vec![0.0; k + 1]; k];
    for i in 0..k {
        for j in 0..k {
            a[i][j] = (0..n).map(|t| cols[i][t] * cols[j][t]).sum::<f64>() / (scale[i] * scale[j]);
        }
        a[i][k] = (0..n).map(|t| cols[i][t] * y[t]).sum::<f64>() / scale[i];
    }
    for c in 0..k {
        let piv = (c..k).max_by(|&x, &z| a[x][c].abs().total_cmp(&a[z][c].abs()))?;
        if a[piv][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, piv);
        for r in 0..k {
            if r != c {
                let f = a[r][c] / a[c][c];
                for j in c..=k {
                    a[r][j] -= f * a[c][j];
                }
            }
        }
    }
    let beta: Vec<f64> = (0..k).map(|i| a[i][k] / a[i][i] / scale[i]).collect();
    let rss: f64 = (0..n)
        .map(|t| {
            let pred: f64 = (0..k).map(|i| beta[i] * cols[i][t]).sum();
            (y[t] - pred).powi(2)
        })
        .sum();
    Some((beta, (rss / n as f64).sqrt()))
}

/// Fits `log y = c − rate·x`; returns `(rate, c, rms)`. Nonpositive `y` are skipped.
pub fn log_linear_rate(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let (xs, ls): (Vec<f64>, Vec<f64>) = x.iter().zip(y).filter(|(_, &v)| v > 0.0).map(|(&a, &b)| (a, b.ln())).unzip();
    if xs.len() < 2 {
        return None;
    }
    let ones = vec![1.0; xs.len()];
    let neg: Vec<f64> = xs.iter().map(|v| -v).collect();
    let (b, rms) = least_squares(&[ones, neg], &ls)?;
    Some((b[1], b[0], rms))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_model() {
        let x: Vec<f64> = (0..20).map(|i| 10.0 + i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&r| 3.0 - 2.0 * r - 1.0 * r.ln()).collect();
        let cols = vec![vec![1.0; 20], x.iter().map(|r| -r).collect(), x.iter().map(|r| -r.ln()).collect()];
        let (b, rms) = least_squares(&cols, &y).unwrap();
        assert!((b[0] - 3.0).abs() < 1e-8 && (b[1] - 2.0).abs() < 1e-9 && (b[2] - 1.0).abs() < 1e-8);
        assert!(rms < 1e-10);
    }

    #[test]
    fn rate_of_exponential() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&t| 5.0 * (-0.7 * t).exp()).collect();
        let (rate, c, _) = log_linear_rate(&x, &y).unwrap();
        assert!((rate - 0.7).abs() < 1e-12 && (c - 5f64.ln()).abs() < 1e-12);
    }
}
