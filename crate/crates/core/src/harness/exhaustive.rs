use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::exact::ComplexityPolynomial;
use crate::oracle::TruthOracle;
use crate::partition::all_partitions;
use crate::rng::stream_rng;
use crate::strategy::{run, RunOptions, StrategyKind};

/// Largest `n` for which every partition is enumerated.
pub const EXHAUSTIVE_N: usize = 8;

/// Query-count histogram of `kind` over all partitions of `0..n`.
///
/// Randomized strategies restart from `stream_rng(seed, 0)` on every
/// partition, which makes them a fixed decision tree.
pub fn exhaustive_distribution(kind: StrategyKind, n: usize, seed: u64) -> Result<ComplexityPolynomial> {
    if n > EXHAUSTIVE_N {
        return Err(Error::LimitExceeded {
            what: "exhaustive n",
            value: n,
            limit: EXHAUSTIVE_N,
        });
    }
    let mut hist: BTreeMap<usize, u64> = BTreeMap::new();
    if n == 0 {
        hist.insert(0, 1);
        return Ok(ComplexityPolynomial::from_histogram(0, &hist));
    }
    for truth in all_partitions(n) {
        let mut strategy = kind.build();
        let mut rng = stream_rng(seed, 0);
        let stats = run(
            strategy.as_mut(),
            &mut TruthOracle { truth: &truth },
            n,
            &mut rng,
            RunOptions::default(),
        )?;
        debug_assert_eq!(stats.partition, truth);
        *hist.entry(stats.queries).or_default() += 1;
    }
    Ok(ComplexityPolynomial::from_histogram(n, &hist))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::complexity_polynomial;

    #[test]
    fn universal_n3() {
        let d = exhaustive_distribution(StrategyKind::Universal, 3, 0).unwrap();
        assert_eq!(d, complexity_polynomial(3));
        assert!(exhaustive_distribution(StrategyKind::Universal, 9, 0).is_err());
    }
}
