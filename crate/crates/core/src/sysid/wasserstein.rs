use super::SysidError;

fn sorted(x: &[f64]) -> Result<Vec<f64>, SysidError> {
    if x.is_empty() {
        return Err(SysidError::EmptyDistribution);
    }
    if let Some(v) = x.iter().find(|v| !v.is_finite()) {
        return Err(SysidError::NonFinite(format!("sample {v}")));
    }
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// First Wasserstein distance between two empirical distributions on ℝ.
///
/// Equal sizes reduce to the mean absolute difference of order statistics;
/// otherwise the two quantile functions are integrated piecewise.
pub fn wasserstein_1d(a: &[f64], b: &[f64]) -> Result<f64, SysidError> {
    let a = sorted(a)?;
    let b = sorted(b)?;
    if a.len() == b.len() {
        let sum: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
        return Ok(sum / a.len() as f64);
    }
    // Walk the merged breakpoints i/m and j/n of the two step quantile functions.
    let (m, n) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut u = 0.0;
    let mut total = 0.0;
    while i < m && j < n {
        let next_a = (i + 1) as f64 / m as f64;
        let next_b = (j + 1) as f64 / n as f64;
        let next = next_a.min(next_b);
        total += (next - u) * (a[i] - b[j]).abs();
        u = next;
        // Compare via integer cross-multiplication to avoid rounding ties.
        match ((i + 1) * n).cmp(&((j + 1) * m)) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    Ok(total)
}
