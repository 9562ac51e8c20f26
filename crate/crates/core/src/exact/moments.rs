use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Exact mean and variance of the chordal complexity under the uniform model.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactMoments {
    pub n: usize,
    pub mean: BigRational,
    pub variance: BigRational,
}

impl ExactMoments {
    pub fn mean_f64(&self) -> f64 {
        ratio_to_f64(&self.mean)
    }

    pub fn variance_f64(&self) -> f64 {
        ratio_to_f64(&self.variance)
    }
}

/// f64 value of a rational whose parts may exceed the f64 range.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    use num_bigint::Sign;
    let (sign, num) = r.numer().clone().into_parts();
    let den = r.denom().magnitude().clone();
    if num.is_zero() {
        return 0.0;
    }
    let v = (super::bell::big_ln(&num) - super::bell::big_ln(&den)).exp();
    if sign == Sign::Minus {
        -v
    } else {
        v
    }
}

/// Mean `P'(1)/B_n` and variance from the first two factorial moments.
///
/// Differentiating `P_{m+1}(q) = q^m S_m(q)` at `q = 1` gives recurrences for
/// `P(1)`, `P'(1)` and `P''(1)` that avoid expanding the polynomials.
pub fn exact_moments(n: usize) -> ExactMoments {
    let mut b = vec![BigUint::one()];
    let mut d1 = vec![BigUint::zero()];
    let mut d2 = vec![BigUint::zero()];
    let mut binom = vec![BigUint::one()];
    for m in 0..n {
        let mut s0 = BigUint::zero();
        let mut s1 = BigUint::zero();
        let mut s2 = BigUint::zero();
        for a in 0..=m {
            s0 += &binom[a] * &b[a];
            s1 += &binom[a] * &d1[a];
            s2 += &binom[a] * &d2[a];
        }
        let mm = BigUint::from(m);
        let mm1 = BigUint::from(m.saturating_sub(1));
        d2.push(&mm * &mm1 * &s0 + BigUint::from(2u32) * &mm * &s1 + s2);
        d1.push(&mm * &s0 + s1);
        b.push(s0);
        let mut row = Vec::with_capacity(binom.len() + 1);
        row.push(BigUint::one());
        for w in binom.windows(2) {
            row.push(&w[0] + &w[1]);
        }
        row.push(BigUint::one());
        binom = row;
    }
    let total = BigRational::from_integer(b[n].clone().into());
    let mean = BigRational::from_integer(d1[n].clone().into()) / &total;
    let second = BigRational::from_integer(d2[n].clone().into()) / &total;
    let variance = &second + &mean - &mean * &mean;
    ExactMoments { n, mean, variance }
}
