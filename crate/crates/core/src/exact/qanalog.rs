//! q-integers, q-factorials, q-Pochhammer symbols and the q-exponential.

use crate::error::{Error, Result};

/// Upper bound on terms or factors in truncated series and products.
pub const MAX_TERMS: usize = 1_000_000;

/// `[n]_q = 1 + q + ... + q^{n-1}`.
pub fn q_int(n: u64, q: f64) -> f64 {
    if q == 1.0 {
        return n as f64;
    }
    (1.0 - q.powf(n as f64)) / (1.0 - q)
}

/// `[n]_q! = [1]_q [2]_q ... [n]_q`.
pub fn q_factorial(n: u64, q: f64) -> f64 {
    (1..=n).map(|k| q_int(k, q)).product()
}

/// `(a; q)_k = (1 - a)(1 - aq)...(1 - aq^{k-1})`.
pub fn q_pochhammer(a: f64, q: f64, k: u64) -> f64 {
    let mut prod = 1.0;
    let mut aq = a;
    for _ in 0..k {
        prod *= 1.0 - aq;
        aq *= q;
    }
    prod
}

/// `(a; q)_inf`, truncated once `|a q^i| < tol`.
pub fn q_pochhammer_inf(a: f64, q: f64, tol: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&q.abs()) {
        return Err(Error::Divergence(format!("infinite q-Pochhammer needs |q| < 1, got {q}")));
    }
    let mut prod = 1.0;
    let mut aq = a;
    for _ in 0..MAX_TERMS {
        if aq.abs() < tol {
            return Ok(prod);
        }
        prod *= 1.0 - aq;
        aq *= q;
    }
    Err(Error::Divergence("q-Pochhammer product did not settle".into()))
}

/// `e_q(z) = sum_n z^n / [n]_q!`, truncated once a term drops below `tol` times the partial sum.
///
/// For `q < 1` the term ratio tends to `z(1 - q)`, so the series diverges when that is at least 1.
pub fn q_exp(z: f64, q: f64, tol: f64) -> Result<f64> {
    if tol <= 0.0 {
        return Err(Error::Invalid("tolerance must be positive".into()));
    }
    if q < 1.0 && (z * (1.0 - q)).abs() >= 1.0 {
        return Err(Error::Divergence(format!(
            "e_q({z}) diverges at q = {q}: term ratio tends to {}",
            z * (1.0 - q)
        )));
    }
    if q == 1.0 {
        return Ok(z.exp());
    }
    let mut terms = vec![1.0];
    let mut term = 1.0;
    let mut sum = 1.0f64;
    for n in 1..MAX_TERMS as u64 {
        term *= z / q_int(n, q);
        terms.push(term);
        sum += term;
        let ratio = (z / q_int(n + 1, q)).abs();
        if term.abs() < tol * sum.abs() && ratio < 1.0 {
            return Ok(crate::stats::neumaier_sum(&terms));
        }
    }
    Err(Error::Divergence("q-exponential series did not settle".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_values() {
        assert_eq!(q_int(3, 2.0), 7.0);
        assert_eq!(q_factorial(3, 1.0), 6.0);
        assert_eq!(q_pochhammer(1.0, 0.7, 5), 0.0);
        assert_eq!(q_pochhammer(0.5, 0.3, 0), 1.0);
    }

    #[test]
    fn classical_limits_at_one() {
        assert_eq!(q_int(10, 1.0), 10.0);
        assert_eq!(q_factorial(5, 1.0), 120.0);
        assert!((q_exp(1.0, 1.0, 1e-15).unwrap() - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn q_exp_near_one_approaches_exp() {
        let v = q_exp(1.0, 0.999999, 1e-16).unwrap();
        assert!((v - std::f64::consts::E).abs() < 1e-4);
    }

    #[test]
    fn q_exp_divergence() {
        assert!(matches!(q_exp(1.0 / 0.4, 0.4, 1e-12), Err(Error::Divergence(_))));
        assert!(q_exp(1.0 / 0.6, 0.6, 1e-12).is_ok());
    }

    #[test]
    fn q_int_direct_sum() {
        let q: f64 = 0.37;
        let direct: f64 = (0..9).map(|k| q.powi(k)).sum();
        assert!((q_int(9, q) - direct).abs() < 1e-15);
    }
}
