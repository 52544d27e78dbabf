//! End-of-Settle vs end-of-Adapt travel-time comparison.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::export::EpisodeDigest;
use crate::runner::Phase;
use crate::Error;

pub const SUMMARY_FILE: &str = "summary.csv";
pub const SUMMARY_HEADER: &str =
    "behavior,scope,av_pct,human_pct,system_pct,av_settle_s,av_adapt_s,human_settle_s,human_adapt_s,system_settle_s,system_adapt_s";

/// Window means (seconds) and percent changes; positive means lower travel
/// time at the end of Adapt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub settle: [f64; 3],
    pub adapt: [f64; 3],
    /// AV cohort, human cohort, system.
    pub pct: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub behavior: String,
    pub window: usize,
    pub repetitions: Vec<Comparison>,
    /// Per-repetition percentages averaged.
    pub mean_pct: [f64; 3],
}

pub fn percent_change(settle: f64, adapt: f64) -> f64 {
    (settle - adapt) / settle * 100.0
}

fn window_means(digests: &[&EpisodeDigest], phase: Phase, window: usize) -> Result<[f64; 3], Error> {
    let in_phase: Vec<&&EpisodeDigest> = digests.iter().filter(|d| d.phase == phase).collect();
    if in_phase.len() < window || window == 0 {
        return Err(Error::Records(format!(
            "summary window of {window} episodes exceeds the {} {} episodes available",
            in_phase.len(),
            phase.as_str()
        )));
    }
    let tail = &in_phase[in_phase.len() - window..];
    let mut out = [0.0; 3];
    for (k, pick) in [
        (|d: &EpisodeDigest| d.av_cohort_tt) as fn(&EpisodeDigest) -> Option<f64>,
        |d| d.human_cohort_tt,
        |d| d.system_tt,
    ]
    .iter()
    .enumerate()
    {
        let v: Vec<f64> = tail.iter().filter_map(|d| pick(d)).collect();
        out[k] = if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
    }
    Ok(out)
}

/// Compares the last `window` Settle episodes with the last `window` Adapt
/// episodes of one repetition. Record order does not matter.
pub fn compare(digests: &[EpisodeDigest], window: usize) -> Result<Comparison, Error> {
    let mut sorted: Vec<&EpisodeDigest> = digests.iter().collect();
    sorted.sort_by_key(|d| d.episode);
    let settle = window_means(&sorted, Phase::Settle, window)?;
    let adapt = window_means(&sorted, Phase::Adapt, window)?;
    let pct = [0, 1, 2].map(|k| percent_change(settle[k], adapt[k]));
    Ok(Comparison { settle, adapt, pct })
}

pub fn summarize(behavior: &str, reps: &[Vec<EpisodeDigest>], window: usize) -> Result<SummaryTable, Error> {
    if reps.is_empty() {
        return Err(Error::Records("no repetitions to summarize".into()));
    }
    let repetitions: Vec<Comparison> = reps.iter().map(|r| compare(r, window)).collect::<Result<_, _>>()?;
    let n = repetitions.len() as f64;
    let mean_pct = [0, 1, 2].map(|k| repetitions.iter().map(|c| c.pct[k]).sum::<f64>() / n);
    Ok(SummaryTable { behavior: behavior.to_string(), window, repetitions, mean_pct })
}

impl SummaryTable {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{SUMMARY_HEADER}\n");
        for (i, c) in self.repetitions.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},rep_{i},{},{},{},{},{},{},{},{},{}",
                self.behavior,
                c.pct[0],
                c.pct[1],
                c.pct[2],
                c.settle[0],
                c.adapt[0],
                c.settle[1],
                c.adapt[1],
                c.settle[2],
                c.adapt[2]
            );
        }
        let _ = writeln!(
            out,
            "{},mean,{},{},{},,,,,,",
            self.behavior, self.mean_pct[0], self.mean_pct[1], self.mean_pct[2]
        );
        out
    }
}
