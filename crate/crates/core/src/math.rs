//! Small numeric helpers shared across modules.

/// Exponent arguments beyond this magnitude are clamped so the logistic
/// function stays strictly inside (0, 1) in `f64`.
pub const SIGMOID_CLAMP: f64 = 35.0;

/// Logistic function `1 / (1 + exp(-v))`, evaluated without overflow.
///
/// The result is strictly inside `(0, 1)` for every finite input and
/// satisfies `sigmoid(-v) == 1 - sigmoid(v)` up to rounding.
pub fn sigmoid(v: f64) -> f64 {
    let v = v.clamp(-SIGMOID_CLAMP, SIGMOID_CLAMP);
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm, scaled by the largest entry so tiny or huge vectors
/// neither underflow nor overflow.
pub fn norm2(a: &[f64]) -> f64 {
    let m = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    m * a.iter().map(|x| (x / m) * (x / m)).sum::<f64>().sqrt()
}

/// Mean and sample standard deviation. Returns `(0, 0)` for an empty slice
/// and a zero deviation for a single value.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Median of a slice; NaN-free input expected.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_closed_forms() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(3f64.ln()) - 0.75).abs() < 1e-15);
        assert!(sigmoid(50.0) >= 1.0 - 1e-9);
        assert!(sigmoid(50.0) < 1.0);
        assert!(sigmoid(-50.0) > 0.0);
    }

    #[test]
    fn sigmoid_is_odd_around_half() {
        for i in -400..=400 {
            let v = i as f64 * 0.1;
            assert!((sigmoid(-v) - (1.0 - sigmoid(v))).abs() < 1e-15, "v = {v}");
        }
    }

    #[test]
    fn norm_survives_extreme_scales() {
        assert_eq!(norm2(&[3.0, 4.0]), 5.0);
        assert!((norm2(&[3e-300, 4e-300]) / 5e-300 - 1.0).abs() < 1e-15);
        assert!((norm2(&[3e300, 4e300]) / 5e300 - 1.0).abs() < 1e-15);
        assert_eq!(norm2(&[0.0, 0.0]), 0.0);
        assert!(norm2(&[f64::NAN, 1.0]).is_nan());
        assert_eq!(norm2(&[f64::INFINITY, 1.0]), f64::INFINITY);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
