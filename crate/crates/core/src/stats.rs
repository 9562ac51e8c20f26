//! Small numeric helpers shared by the exact and simulation code.

use statrs::distribution::{ContinuousCDF, Normal};

/// Compensated (Neumaier) summation.
pub fn neumaier_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Pairwise tree summation; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        len => {
            let (a, b) = xs.split_at(len / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Sample mean and unbiased variance, reduced pairwise.
pub fn mean_variance(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(xs) / xs.len() as f64;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
    (mean, pairwise_sum(&sq) / (xs.len() - 1) as f64)
}

/// Kolmogorov-Smirnov distance between the empirical law of `xs` and `cdf`.
pub fn ks_distance(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    let m = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        // Ties jump the empirical CDF in one step.
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let f = cdf(x);
        d = d.max((f - i as f64 / m).abs()).max((j as f64 / m - f).abs());
        i = j;
    }
    d
}

/// KS distance to the standard normal law.
pub fn ks_standard_normal(xs: &[f64]) -> f64 {
    let normal = Normal::standard();
    ks_distance(xs, |x| normal.cdf(x))
}
