use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use super::bell::{big_ln, bell};

/// Exact complexity distribution of chordal algorithms on partitions of
/// size `n`: `coeffs[i]` partitions need exactly `i` queries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexityPolynomial {
    pub n: usize,
    pub coeffs: Vec<BigUint>,
}

impl ComplexityPolynomial {
    /// Builds a polynomial from a query-count histogram.
    pub fn from_histogram(n: usize, hist: &BTreeMap<usize, u64>) -> Self {
        let deg = hist.keys().next_back().copied().unwrap_or(0);
        let mut coeffs = vec![BigUint::zero(); deg + 1];
        for (&i, &c) in hist {
            coeffs[i] = BigUint::from(c);
        }
        ComplexityPolynomial { n, coeffs }
    }

    pub fn coeff(&self, i: usize) -> BigUint {
        self.coeffs.get(i).cloned().unwrap_or_default()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Smallest query count with a nonzero coefficient.
    pub fn min_support(&self) -> usize {
        self.coeffs.iter().position(|c| !c.is_zero()).unwrap_or(0)
    }

    /// Sum of the coefficients; equals `B_n`.
    pub fn total(&self) -> BigUint {
        self.coeffs.iter().sum()
    }

    /// Nonzero coefficients as a map.
    pub fn to_map(&self) -> BTreeMap<usize, BigUint> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (i, c.clone()))
            .collect()
    }

    /// Exact mean query count under the uniform partition model.
    pub fn mean(&self) -> BigRational {
        let num: BigUint = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * BigUint::from(i))
            .sum();
        BigRational::new(num.into(), self.total().into())
    }

    /// `P_n(q)` exactly.
    pub fn eval_exact(&self, q: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * q + BigRational::from_integer(c.clone().into());
        }
        acc
    }

    /// `P_n(q) / B_n` in floating point, for `0 < q <= 1`.
    pub fn eval_normalized(&self, q: f64) -> f64 {
        if q == 1.0 {
            return 1.0;
        }
        let ln_b = big_ln(&self.total());
        let lq = q.ln();
        let terms: Vec<f64> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (big_ln(c) - ln_b + i as f64 * lq).exp())
            .collect();
        crate::stats::neumaier_sum(&terms)
    }
}

impl Serialize for ComplexityPolynomial {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let coeffs: BTreeMap<String, String> = self
            .to_map()
            .into_iter()
            .map(|(i, c)| (i.to_string(), c.to_string()))
            .collect();
        let mut st = s.serialize_struct("ComplexityPolynomial", 2)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("coeffs", &coeffs)?;
        st.end()
    }
}

/// Coefficients of `P_n(q)` via `P_{m+1}(q) = q^m sum_a C(m,a) P_a(q)`, `P_0 = 1`.
///
/// The recurrence follows from `d/dz P(z,q) = P(qz,q) e^{qz}` on the
/// exponential generating function `P(z,q) = sum_n P_n(q) z^n / n!`.
pub fn complexity_polynomial(n: usize) -> ComplexityPolynomial {
    let mut polys: Vec<Vec<BigUint>> = vec![vec![BigUint::one()]];
    let mut binom: Vec<BigUint> = vec![BigUint::one()];
    for m in 0..n {
        let deg = polys.iter().map(Vec::len).max().unwrap_or(1);
        let mut sum = vec![BigUint::zero(); deg];
        for (a, p) in polys.iter().enumerate() {
            for (i, c) in p.iter().enumerate() {
                if !c.is_zero() {
                    sum[i] += &binom[a] * c;
                }
            }
        }
        let mut next = vec![BigUint::zero(); m];
        next.extend(sum);
        while next.len() > 1 && next.last().is_some_and(Zero::is_zero) {
            next.pop();
        }
        polys.push(next);
        // Advance to row m + 1 of Pascal's triangle.
        let mut row = Vec::with_capacity(binom.len() + 1);
        row.push(BigUint::one());
        for w in binom.windows(2) {
            row.push(&w[0] + &w[1]);
        }
        row.push(BigUint::one());
        binom = row;
    }
    let coeffs = polys.pop().expect("nonempty");
    debug_assert_eq!(coeffs.iter().sum::<BigUint>(), bell(n));
    ComplexityPolynomial { n, coeffs }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(n: usize) -> Vec<(usize, u64)> {
        complexity_polynomial(n)
            .to_map()
            .into_iter()
            .map(|(i, c)| (i, c.try_into().unwrap()))
            .collect()
    }

    #[test]
    fn small_cases() {
        assert_eq!(map(0), vec![(0, 1)]);
        assert_eq!(map(1), vec![(0, 1)]);
        assert_eq!(map(2), vec![(1, 2)]);
        assert_eq!(map(3), vec![(2, 3), (3, 2)]);
        let p3 = complexity_polynomial(3);
        assert_eq!(p3.mean(), BigRational::new(12.into(), 5.into()));
    }

    #[test]
    fn support_and_total() {
        for n in 1..=25 {
            let p = complexity_polynomial(n);
            assert_eq!(p.total(), bell(n), "n={n}");
            assert_eq!(p.min_support(), n - 1);
            assert_eq!(p.degree(), n * (n - 1) / 2);
            // Singletons and the partition joining only 0 and 1 both need every pair.
            let top = if n >= 2 { 2u32 } else { 1 };
            assert_eq!(p.coeff(p.degree()), BigUint::from(top));
        }
    }

    #[test]
    fn evaluation() {
        let p = complexity_polynomial(3);
        assert!((p.eval_normalized(0.9) - 0.7776).abs() < 1e-12);
        let q = BigRational::new(1.into(), 2.into());
        assert_eq!(p.eval_exact(&q), BigRational::new(1.into(), 1.into()));
    }

    #[test]
    fn json_shape() {
        let s = serde_json::to_string(&complexity_polynomial(3)).unwrap();
        assert_eq!(s, r#"{"n":3,"coeffs":{"2":"3","3":"2"}}"#);
    }
}
