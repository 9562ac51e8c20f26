use serde::Serialize;

use super::qanalog::{q_exp, q_factorial, q_pochhammer, q_pochhammer_inf, MAX_TERMS};
use crate::error::{Error, Result};

/// Values of `q` this close to 1 make `1/(1 - q)` blow up; checks are skipped there.
pub const NEAR_ONE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QIdentityReport {
    pub q: f64,
    pub n: u64,
    pub tol: f64,
    pub skipped: Option<String>,
    pub checks: Vec<IdentityCheck>,
}

impl QIdentityReport {
    pub fn passed(&self) -> bool {
        self.skipped.is_none() && self.checks.iter().all(|c| c.pass)
    }
}

fn check(name: String, lhs: f64, rhs: f64, tol: f64) -> IdentityCheck {
    let rel_err = (lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE);
    IdentityCheck {
        name,
        lhs,
        rhs,
        rel_err,
        pass: rel_err <= tol,
    }
}

// sum_k x^k / (q;q)_k, truncated adaptively.
fn inverse_poch_series(x: f64, q: f64, tol: f64) -> Result<f64> {
    let mut sum = 1.0;
    let mut term = 1.0;
    let mut qk = q;
    for _ in 1..MAX_TERMS {
        term *= x / (1.0 - qk);
        qk *= q;
        sum += term;
        if term.abs() < tol * 1e-3 * sum.abs() {
            return Ok(sum);
        }
    }
    Err(Error::Divergence("series did not settle".into()))
}

/// Checks `[k]_q! = (q;q)_k/(1-q)^k` for `k <= n`, `1/(x;q)_inf = sum_k x^k/(q;q)_k`
/// and `e_q(x) = 1/((1-q)x; q)_inf` numerically.
pub fn verify_q_identities(q: f64, n: u64, tol: f64) -> Result<QIdentityReport> {
    let mut report = QIdentityReport {
        q,
        n,
        tol,
        skipped: None,
        checks: Vec::new(),
    };
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Invalid(format!("q must lie in (0, 1), got {q}")));
    }
    if q >= 1.0 - NEAR_ONE {
        report.skipped = Some(format!("q = {q} is within {NEAR_ONE} of 1; 1/(1-q) is near-singular"));
        return Ok(report);
    }
    for k in 0..=n {
        let lhs = q_factorial(k, q);
        let rhs = q_pochhammer(q, q, k) / (1.0 - q).powi(k as i32);
        report.checks.push(check(format!("q-factorial k={k}"), lhs, rhs, tol));
    }
    let ptol = tol * 1e-3;
    for x in [0.1, 0.5, -0.5] {
        let lhs = 1.0 / q_pochhammer_inf(x, q, ptol)?;
        let rhs = inverse_poch_series(x, q, tol)?;
        report.checks.push(check(format!("inverse pochhammer x={x}"), lhs, rhs, tol));
    }
    // e_q converges for |x| (1 - q) < 1.
    for x in [0.5, 1.0] {
        let lhs = q_exp(x, q, ptol)?;
        let rhs = 1.0 / q_pochhammer_inf((1.0 - q) * x, q, ptol)?;
        report.checks.push(check(format!("q-exponential x={x}"), lhs, rhs, tol));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identities_hold() {
        let r = verify_q_identities(0.5, 5, 1e-10).unwrap();
        assert!(r.passed(), "{r:?}");
        let r = verify_q_identities(0.9, 10, 1e-10).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn near_one_is_skipped() {
        let r = verify_q_identities(1.0 - 1e-12, 5, 1e-10).unwrap();
        assert!(r.skipped.is_some());
        assert!(!r.passed());
    }
}
