use std::sync::Mutex;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

// Bell numbers computed so far plus the last Bell-triangle row.
struct Cache {
    bells: Vec<BigUint>,
    row: Vec<BigUint>,
}

static CACHE: Mutex<Cache> = Mutex::new(Cache {
    bells: Vec::new(),
    row: Vec::new(),
});

fn extend(cache: &mut Cache, n: usize) {
    if cache.bells.is_empty() {
        cache.bells.push(BigUint::one());
        cache.row = vec![BigUint::one()];
    }
    // Row m of the triangle starts with B_m and ends with B_{m+1}.
    while cache.bells.len() <= n {
        let last = cache.row.last().expect("nonempty").clone();
        let mut next = Vec::with_capacity(cache.row.len() + 1);
        next.push(last);
        for x in &cache.row {
            let v = next.last().expect("nonempty") + x;
            next.push(v);
        }
        cache.bells.push(next[0].clone());
        cache.row = next;
    }
}

/// The Bell number `B_n`: the number of partitions of an `n`-set.
pub fn bell(n: usize) -> BigUint {
    let mut cache = CACHE.lock().expect("bell cache poisoned");
    extend(&mut cache, n);
    cache.bells[n].clone()
}

/// `B_0, ..., B_n`.
pub fn bell_numbers(n: usize) -> Vec<BigUint> {
    let mut cache = CACHE.lock().expect("bell cache poisoned");
    extend(&mut cache, n);
    cache.bells[..=n].to_vec()
}

/// Natural logarithm of a big integer, accurate to f64 precision.
pub fn big_ln(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("finite").ln();
    }
    let shift = bits - 64;
    let top: BigUint = x >> shift;
    top.to_f64().expect("finite").ln() + shift as f64 * std::f64::consts::LN_2
}

/// `x` as f64, or infinity when out of range.
pub fn big_to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}
