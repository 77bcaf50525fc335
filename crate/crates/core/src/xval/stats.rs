//! Small descriptive statistics used by the runners and the comparator.

/// Relative slack under which a zero-variance estimate counts as equal to
/// its reference. Only absorbs summation rounding.
pub const EXACT_MATCH_RTOL: f64 = 1e-12;

/// Mean and sample standard deviation (`n - 1` denominator, 0 for n < 2),
/// accumulated in slice order.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// `(value - reference) / sigma`. With `sigma = 0` the estimate is
/// deterministic: 0 if it equals the reference, otherwise `±inf`.
pub fn z_score(value: f64, reference: f64, sigma: f64) -> f64 {
    let diff = value - reference;
    if sigma > 0.0 {
        diff / sigma
    } else if diff.abs() <= EXACT_MATCH_RTOL * reference.abs().max(1.0) {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    }
}
