use acluster_core::harness::{
    limit_law_trend, mean_gap_trend, validate_exact_equivalence, validate_extra_in_block, validate_limit_law,
    validate_noise_recovery, validate_p2_model, validate_query_classes, validate_theorem_1, validate_theorem_2,
    validate_theorem_3_closed_forms, validate_theorem_4, validate_theorem_5, validate_uniform_sampler, Verdict,
    THEOREM_4_TOL, THEOREM_5_TOL,
};
use acluster_core::{CategoricalModel, StrategyKind};
use anyhow::Result;
use clap::{Args, ValueEnum};

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Theorem {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
    #[value(name = "4")]
    Four,
    #[value(name = "5")]
    Five,
    /// Productive queries in the two-block model.
    P2,
    /// Core and excessive query counts.
    Classes,
    /// Exact distribution against exhaustive runs.
    Exact,
    /// Chi-square test of the uniform partition sampler.
    Sampler,
    /// Noisy recovery and extra in-block queries.
    Noise,
}

/// Defaults reproduce the full-scale checks; `--n` and `--trials` shrink them.
#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    theorem: Theorem,
    /// Item count, or the largest item count for the exhaustive checks.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Comma-separated block probabilities for theorems 4 and 5.
    #[arg(long, value_delimiter = ',')]
    probs: Option<Vec<f64>>,
    #[arg(long, default_value = "clique")]
    strategy: StrategyKind,
    /// Answer flip probability for the noise check.
    #[arg(long, default_value_t = 0.01)]
    p: f64,
    /// Redundancy parameter for the noise check.
    #[arg(long, default_value_t = 5)]
    r: usize,
    /// Print verdicts as a JSON array instead of lines.
    #[arg(long)]
    json: bool,
}

fn verdicts(a: &VerifyArgs) -> Result<Vec<Verdict>> {
    let seed = a.seed;
    let mut out = Vec::new();
    match a.theorem {
        Theorem::One => {
            for n in 2..=a.n.unwrap_or(4) {
                out.push(validate_theorem_1(n)?);
            }
        }
        Theorem::Two => {
            for n in 1..=a.n.unwrap_or(6) {
                out.push(validate_theorem_2(n, &[seed, seed + 1])?);
            }
        }
        Theorem::Three => {
            let n = a.n.unwrap_or(600);
            let trials = a.trials.unwrap_or(10_000);
            out.push(validate_theorem_3_closed_forms(20, &[0.6, 0.75, 0.9])?);
            out.push(mean_gap_trend(100, n));
            let large = validate_limit_law(a.strategy, n, trials, seed)?;
            let small = validate_limit_law(a.strategy, 100, trials, seed)?;
            out.push(large.verdict.clone());
            out.push(limit_law_trend(&small, &large));
        }
        Theorem::Four => {
            let model = CategoricalModel::new(a.probs.clone().unwrap_or_else(|| vec![0.5, 0.3, 0.2]))?;
            let n = a.n.unwrap_or(10_000);
            out.push(validate_theorem_4(&model, n, a.trials.unwrap_or(200), seed, THEOREM_4_TOL)?);
        }
        Theorem::Five => {
            let model = match &a.probs {
                Some(p) => CategoricalModel::new(p.clone())?,
                None => CategoricalModel::equal(4)?,
            };
            let n = a.n.unwrap_or(10_000);
            out.push(validate_theorem_5(&model, n, a.trials.unwrap_or(200), seed, THEOREM_5_TOL)?);
        }
        Theorem::P2 => {
            for n in 4..=a.n.unwrap_or(10) {
                out.extend(validate_p2_model(a.strategy, n, a.trials.unwrap_or(100_000), seed + n as u64)?);
            }
        }
        Theorem::Classes => {
            for n in 4..=a.n.unwrap_or(7) {
                out.extend(validate_query_classes(a.strategy, n, a.trials.unwrap_or(10_000), seed)?);
            }
        }
        Theorem::Exact => {
            for n in 1..=a.n.unwrap_or(8) {
                out.push(validate_exact_equivalence(n)?);
            }
        }
        Theorem::Sampler => {
            out.push(validate_uniform_sampler(a.n.unwrap_or(4), a.trials.unwrap_or(100_000), seed)?);
        }
        Theorem::Noise => {
            let n = a.n.unwrap_or(200);
            out.push(validate_noise_recovery(a.strategy, n, a.p, a.r, a.trials.unwrap_or(500), seed)?);
            let model = CategoricalModel::equal(4)?;
            out.push(validate_extra_in_block(&model, 1000, a.r, 8, seed)?);
        }
    }
    Ok(out)
}

/// Prints verdicts; `Ok(false)` when any failed.
pub fn run(args: VerifyArgs) -> Result<bool> {
    let vs = verdicts(&args)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&vs)?);
    } else {
        for v in &vs {
            println!("{}", v.line());
        }
    }
    Ok(vs.iter().all(|v| v.pass))
}
