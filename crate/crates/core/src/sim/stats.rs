//! Summary statistics over Monte-Carlo samples.

/// Arithmetic mean; `NaN` for an empty slice.
pub fn mean(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// Percentile with linear interpolation between order statistics
/// (`p` in `[0, 100]`).
pub fn percentile(samples: &[f64], p: f64) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let pos = (p / 100.0).clamp(0.0, 1.0) * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    s[lo] + (s[hi] - s[lo]) * (pos - lo as f64)
}

/// Fraction of samples `≤ x`.
pub fn cdf_at(samples: &[f64], x: f64) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    samples.iter().filter(|&&s| s <= x).count() as f64 / samples.len() as f64
}

/// Knots `(x, F(x))` of the right-continuous empirical CDF, one per
/// distinct sample value, in increasing order.
pub fn empirical_cdf(samples: &[f64]) -> Vec<(f64, f64)> {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut knots: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in s.iter().enumerate() {
        let f = (i + 1) as f64 / n;
        match knots.last_mut() {
            Some(last) if last.0 == x => last.1 = f,
            _ => knots.push((x, f)),
        }
    }
    knots
}
