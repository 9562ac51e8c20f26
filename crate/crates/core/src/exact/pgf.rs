//! Closed-form evaluations of the normalized generating function `E[q^X_n]`.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::bell::{bell, big_ln};
use super::polynomial::complexity_polynomial;
use super::qanalog::q_int;
use crate::error::{Error, Result};
use crate::stats::neumaier_sum;

/// Terms larger than this multiple of the result make the alternating sum untrustworthy in f64.
pub const CANCELLATION_LIMIT: f64 = 1e15;

/// Closed form 2 requires `q > 1/2 + CONVERGENCE_MARGIN`.
pub const CONVERGENCE_MARGIN: f64 = 0.05;

/// Direct evaluation of the exact polynomial, normalized by `B_n`.
pub fn pgf_polynomial(n: usize, q: f64) -> f64 {
    complexity_polynomial(n).eval_normalized(q)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForm1 {
    pub value: f64,
    /// Largest term magnitude divided by the magnitude of the result.
    pub cancellation: f64,
    /// Set when the cancellation exceeds [`CANCELLATION_LIMIT`].
    pub fragile: bool,
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::Invalid(format!("q must lie in (0, 1], got {q}")));
    }
    Ok(())
}

/// The alternating form `(q/(1-q))^n sum_k C(n,k) (-1)^k ((1-q)/q; q)_k / B_n` in f64.
pub fn pgf_closed_form_1(n: usize, q: f64) -> Result<ClosedForm1> {
    check_q(q)?;
    if q == 1.0 {
        return Ok(ClosedForm1 {
            value: 1.0,
            cancellation: 1.0,
            fragile: false,
        });
    }
    let x = (1.0 - q) / q;
    let scale = (q / (1.0 - q)).powi(n as i32) / big_ln(&bell(n)).exp();
    let mut terms = Vec::with_capacity(n + 1);
    let mut binom = 1.0;
    let mut poch = 1.0;
    let mut xq = x;
    for k in 0..=n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        terms.push(sign * binom * poch * scale);
        binom = binom * (n - k) as f64 / (k + 1) as f64;
        poch *= 1.0 - xq;
        xq *= q;
    }
    let value = neumaier_sum(&terms);
    let biggest = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let cancellation = biggest / value.abs();
    Ok(ClosedForm1 {
        value,
        cancellation,
        fragile: !(cancellation <= CANCELLATION_LIMIT),
    })
}

/// Closed form 1 evaluated in exact rational arithmetic at the given rational `q`.
pub fn pgf_closed_form_1_exact(n: usize, q: &BigRational) -> Result<BigRational> {
    let one = BigRational::one();
    if !(q.is_positive() && *q <= one) {
        return Err(Error::Invalid(format!("q must lie in (0, 1], got {q}")));
    }
    if *q == one {
        return Ok(one);
    }
    let x = (&one - q) / q;
    let mut sum = BigRational::zero();
    let mut binom = BigInt::one();
    let mut poch = BigRational::one();
    let mut xq = x;
    for k in 0..=n {
        let term = &poch * BigRational::from_integer(binom.clone());
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        binom = binom * BigInt::from(n - k) / BigInt::from(k + 1);
        poch *= &one - &xq;
        xq *= q;
    }
    let ratio = q / (&one - q);
    let mut pow = BigRational::one();
    for _ in 0..n {
        pow *= &ratio;
    }
    let b: BigUint = bell(n);
    Ok(sum * pow / BigRational::from_integer(b.into()))
}

/// Closed form 1 at the exact binary value of an f64 `q`, rounded to f64.
pub fn pgf_closed_form_1_rational(n: usize, q: f64) -> Result<f64> {
    check_q(q)?;
    let qr = BigRational::from_float(q).expect("finite q");
    let v = pgf_closed_form_1_exact(n, &qr)?;
    Ok(v.to_f64().unwrap_or(f64::NAN))
}

/// The q-Dobinski form `sum_m [m]_q^n / [m]_q! q^{n-m} / (e_q(1/q) B_n)`.
///
/// All terms are positive; they are summed in log-space with compensation
/// and truncated once the tail falls below `tol` relative to the sum.
pub fn pgf_closed_form_2(n: usize, q: f64, tol: f64) -> Result<f64> {
    check_q(q)?;
    if q == 1.0 {
        return Ok(1.0);
    }
    if q <= 0.5 + CONVERGENCE_MARGIN {
        return Err(Error::Divergence(format!(
            "q-Dobinski sum needs q > {}, got {q}",
            0.5 + CONVERGENCE_MARGIN
        )));
    }
    if tol <= 0.0 {
        return Err(Error::Invalid("tolerance must be positive".into()));
    }
    let lq = q.ln();
    let nf = n as f64;
    let ln_tol = tol.ln();
    // log [m]_q! accumulated alongside both series.
    let mut lfact = 0.0;
    let mut num_logs = Vec::new();
    let mut den_logs = Vec::new();
    let mut num_max = f64::NEG_INFINITY;
    let mut den_max = f64::NEG_INFINITY;
    for m in 0..super::qanalog::MAX_TERMS {
        if m > 0 {
            lfact += q_int(m as u64, q).ln();
        }
        let lqm = if m == 0 { f64::NEG_INFINITY } else { q_int(m as u64, q).ln() };
        let ln_num = if n == 0 {
            (nf - m as f64) * lq - lfact
        } else if m == 0 {
            f64::NEG_INFINITY
        } else {
            nf * lqm - lfact + (nf - m as f64) * lq
        };
        let ln_den = -(m as f64) * lq - lfact;
        num_max = num_max.max(ln_num);
        den_max = den_max.max(ln_den);
        num_logs.push(ln_num);
        den_logs.push(ln_den);
        // Both series decay geometrically once m is large; stop when both tails are negligible.
        let ratio = (1.0 - q) / q;
        let tail_factor = (1.0 / (1.0 - ratio)).ln();
        if m > n + 2
            && ln_num + tail_factor < num_max + ln_tol
            && ln_den + tail_factor < den_max + ln_tol
        {
            let num = log_sum(&num_logs, num_max);
            let den = log_sum(&den_logs, den_max);
            return Ok((num - den - big_ln(&bell(n))).exp());
        }
    }
    Err(Error::Divergence("q-Dobinski sum did not settle".into()))
}

fn log_sum(logs: &[f64], max: f64) -> f64 {
    let terms: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    max + neumaier_sum(&terms).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn spec_examples() {
        assert!((pgf_closed_form_1(2, 0.5).unwrap().value - 0.5).abs() < 1e-15);
        assert!((pgf_closed_form_1(3, 0.9).unwrap().value - 0.7776).abs() < 1e-12);
        assert_eq!(pgf_closed_form_1(7, 1.0).unwrap().value, 1.0);
        assert!((pgf_closed_form_2(3, 0.9, 1e-16).unwrap() - 0.7776).abs() < 1e-9);
        assert!((pgf_closed_form_2(0, 0.7, 1e-16).unwrap() - 1.0).abs() < 1e-12);
        let poly = pgf_polynomial(10, 0.8);
        assert!(rel(pgf_closed_form_2(10, 0.8, 1e-16).unwrap(), poly) < 1e-9);
    }

    #[test]
    fn divergence_below_half() {
        assert!(matches!(pgf_closed_form_2(5, 0.5, 1e-12), Err(Error::Divergence(_))));
        assert!(matches!(pgf_closed_form_2(5, 0.55, 1e-12), Err(Error::Divergence(_))));
        assert!(pgf_closed_form_1(5, 0.0).is_err());
    }

    #[test]
    fn float_form_1_flags_cancellation() {
        let cf = pgf_closed_form_1(60, 0.95).unwrap();
        assert!(cf.fragile, "{cf:?}");
        let ok = pgf_closed_form_1(5, 0.6).unwrap();
        assert!(!ok.fragile);
        assert!(rel(ok.value, pgf_polynomial(5, 0.6)) < 1e-12);
    }

    #[test]
    fn exact_form_1_matches_polynomial() {
        for n in [1usize, 4, 9, 15] {
            for q in [0.6, 0.75, 0.9] {
                let a = pgf_closed_form_1_rational(n, q).unwrap();
                assert!(rel(a, pgf_polynomial(n, q)) < 1e-12, "n={n} q={q}");
            }
        }
        let half = BigRational::new(1.into(), 2.into());
        // P_3(1/2) = 1, so the normalized value is 1/5.
        assert_eq!(
            pgf_closed_form_1_exact(3, &half).unwrap(),
            BigRational::new(1.into(), 5.into())
        );
    }
}
