//! Seeded Monte Carlo experiments, exhaustive oracles and validators.

pub mod exhaustive;
pub mod experiment;
pub mod game_tree;
pub mod validators;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rng::{stream_rng, SimRng};

pub use exhaustive::{exhaustive_distribution, EXHAUSTIVE_N};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentReport, NoiseSpec, PlanSpec, TrialRecord};
pub use game_tree::{optimal_average_game_tree, GAME_TREE_N};
pub use validators::*;

/// How a verdict's tolerance is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ToleranceKind {
    /// `|empirical - predicted| <= tolerance * |predicted|`.
    Relative,
    /// `|empirical - predicted| <= tolerance`.
    Absolute,
    /// `empirical <= tolerance`, the predicted value being the ideal.
    UpperBound,
    /// `empirical >= tolerance`.
    LowerBound,
    /// Within `tolerance` standard errors of the mean.
    Sigmas,
    /// Exact equality; `tolerance` is zero.
    Exact,
}

/// Outcome of one validated claim. Failing is data, not an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: String,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub predicted: f64,
    pub empirical: f64,
    pub tolerance: f64,
    pub tolerance_kind: ToleranceKind,
    /// Standard error of the empirical mean, when it is one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl Verdict {
    /// A verdict judged by `kind`; `std_error` is required for [`ToleranceKind::Sigmas`].
    #[allow(clippy::too_many_arguments)]
    pub fn judge(
        criterion: impl Into<String>,
        n: usize,
        trials: usize,
        seed: u64,
        predicted: f64,
        empirical: f64,
        tolerance: f64,
        kind: ToleranceKind,
        std_error: Option<f64>,
    ) -> Self {
        let gap = (empirical - predicted).abs();
        let pass = match kind {
            ToleranceKind::Relative => gap <= tolerance * predicted.abs(),
            ToleranceKind::Absolute => gap <= tolerance,
            ToleranceKind::UpperBound => empirical <= tolerance,
            ToleranceKind::LowerBound => empirical >= tolerance,
            ToleranceKind::Sigmas => gap <= tolerance * std_error.unwrap_or(f64::NAN),
            ToleranceKind::Exact => empirical == predicted,
        };
        Verdict {
            criterion: criterion.into(),
            n,
            trials,
            seed,
            predicted,
            empirical,
            tolerance,
            tolerance_kind: kind,
            std_error,
            pass,
            note: String::new(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    /// Forces failure, e.g. when an invariant broke during the trials.
    pub fn fail_with(mut self, note: impl Into<String>) -> Self {
        self.pass = false;
        self.note = note.into();
        self
    }

    /// One human-readable line.
    pub fn line(&self) -> String {
        let mut s = format!(
            "{} {}: n={} trials={} seed={} predicted={} empirical={} tol={} ({:?})",
            if self.pass { "PASS" } else { "FAIL" },
            self.criterion,
            self.n,
            self.trials,
            self.seed,
            self.predicted,
            self.empirical,
            self.tolerance,
            self.tolerance_kind
        );
        if let Some(se) = self.std_error {
            s.push_str(&format!(" se={se}"));
        }
        if !self.note.is_empty() {
            s.push_str(" ; ");
            s.push_str(&self.note);
        }
        s
    }
}

/// Runs `trial(i, rng)` for `i in 0..trials` on `stream_rng(seed, i)`.
///
/// Trials run in parallel; results come back in trial order so any
/// reduction over them is reproducible.
pub fn parallel_trials<T, F>(seed: u64, trials: usize, trial: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut SimRng) -> Result<T> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| trial(i, &mut stream_rng(seed, i as u64)))
        .collect()
}
