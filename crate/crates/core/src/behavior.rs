//! Reward-induced behaviors and the windowed travel-time statistics they weigh.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesosim::{DriverId, TripResult};
use crate::stateobs::Group;

pub const BEHAVIOR_NAMES: [&str; 6] =
    ["altruistic", "collaborative", "competitive", "malicious", "selfish", "social"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BehaviorError {
    #[error("unknown behavior `{name}` (valid: altruistic, collaborative, competitive, malicious, selfish, social, custom)")]
    Unknown { name: String },
    #[error("driver {0} has no trip result")]
    MissingObserver(DriverId),
    #[error("driver {0} is not on the roster")]
    NotOnRoster(DriverId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BehaviorKind {
    Altruistic,
    Collaborative,
    Competitive,
    Malicious,
    Selfish,
    Social,
    Custom,
}

impl BehaviorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BehaviorKind::Altruistic => "altruistic",
            BehaviorKind::Collaborative => "collaborative",
            BehaviorKind::Competitive => "competitive",
            BehaviorKind::Malicious => "malicious",
            BehaviorKind::Selfish => "selfish",
            BehaviorKind::Social => "social",
            BehaviorKind::Custom => "custom",
        }
    }
}

impl fmt::Display for BehaviorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BehaviorKind {
    type Err = BehaviorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "altruistic" => BehaviorKind::Altruistic,
            "collaborative" => BehaviorKind::Collaborative,
            "competitive" => BehaviorKind::Competitive,
            "malicious" => BehaviorKind::Malicious,
            "selfish" => BehaviorKind::Selfish,
            "social" => BehaviorKind::Social,
            "custom" => BehaviorKind::Custom,
            _ => return Err(BehaviorError::Unknown { name: s.to_string() }),
        })
    }
}

/// Weights on (own, own-group mean, other-group mean, system mean).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviorWeights {
    pub phi: [f64; 4],
    pub kind: BehaviorKind,
}

impl BehaviorWeights {
    pub fn custom(phi: [f64; 4]) -> Self {
        BehaviorWeights { phi, kind: BehaviorKind::Custom }
    }

    /// Weighted sum of the statistics; lower is better.
    pub fn reward(&self, t: &TravelTimeStats) -> f64 {
        self.phi[0] * t.own + self.phi[1] * t.group_mean + self.phi[2] * t.other_mean + self.phi[3] * t.all_mean
    }
}

/// Looks up one of the six named behaviors.
pub fn behavior_table(name: &str) -> Result<BehaviorWeights, BehaviorError> {
    let kind: BehaviorKind = name.parse()?;
    let phi = match kind {
        BehaviorKind::Altruistic => [0.0, 0.0, 0.0, 1.0],
        BehaviorKind::Collaborative => [0.5, 0.5, 0.0, 0.0],
        BehaviorKind::Competitive => [2.0, 0.0, -1.0, 0.0],
        BehaviorKind::Malicious => [0.0, 0.0, -1.0, 0.0],
        BehaviorKind::Selfish => [1.0, 0.0, 0.0, 0.0],
        BehaviorKind::Social => [0.5, 0.0, 0.0, 0.5],
        BehaviorKind::Custom => return Err(BehaviorError::Unknown { name: name.to_string() }),
    };
    Ok(BehaviorWeights { phi, kind })
}

/// Travel-time statistics seen by one agent (same unit as the inputs).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TravelTimeStats {
    pub own: f64,
    pub group_mean: f64,
    pub other_mean: f64,
    pub all_mean: f64,
}

impl TravelTimeStats {
    pub fn scaled(self, k: f64) -> Self {
        TravelTimeStats {
            own: self.own * k,
            group_mean: self.group_mean * k,
            other_mean: self.other_mean * k,
            all_mean: self.all_mean * k,
        }
    }
}

/// Group and start time of every driver in an episode.
pub trait Roster {
    fn group_and_start(&self, driver: DriverId) -> Option<(Group, f64)>;
}

impl<F> Roster for F
where
    F: Fn(DriverId) -> Option<(Group, f64)>,
{
    fn group_and_start(&self, driver: DriverId) -> Option<(Group, f64)> {
        self(driver)
    }
}

/// Own travel time plus means over drivers starting within
/// `[t - window, t + window]` of the observer. A mean over an empty set is 0.
pub fn compute_stats<R: Roster + ?Sized>(
    results: &[TripResult],
    roster: &R,
    observer: DriverId,
    window: f64,
) -> Result<TravelTimeStats, BehaviorError> {
    let own = results
        .iter()
        .find(|r| r.driver_id == observer)
        .ok_or(BehaviorError::MissingObserver(observer))?
        .travel_time;
    let (group, t) = roster.group_and_start(observer).ok_or(BehaviorError::NotOnRoster(observer))?;
    let (lo, hi) = (t - window, t + window);
    let mut sums = [0.0; 2];
    let mut counts = [0usize; 2];
    for r in results {
        let (g, s) = roster.group_and_start(r.driver_id).ok_or(BehaviorError::NotOnRoster(r.driver_id))?;
        if s < lo || s > hi {
            continue;
        }
        let k = usize::from(g != group);
        sums[k] += r.travel_time;
        counts[k] += 1;
    }
    let mean = |s: f64, n: usize| if n == 0 { 0.0 } else { s / n as f64 };
    Ok(TravelTimeStats {
        own,
        group_mean: mean(sums[0], counts[0]),
        other_mean: mean(sums[1], counts[1]),
        all_mean: mean(sums[0] + sums[1], counts[0] + counts[1]),
    })
}

/// Per-episode index answering `compute_stats` queries in logarithmic time.
#[derive(Debug, Clone)]
pub struct WindowIndex {
    starts: Vec<f64>,
    // Prefix sums of (travel time, count) per group, aligned with `starts`.
    prefix: [Vec<(f64, usize)>; 2],
}

fn slot(g: Group) -> usize {
    match g {
        Group::Human => 0,
        Group::Av => 1,
    }
}

impl WindowIndex {
    /// `entries` are (group, start time, travel time).
    pub fn new(entries: &[(Group, f64, f64)]) -> Self {
        let mut sorted: Vec<&(Group, f64, f64)> = entries.iter().collect();
        sorted.sort_by(|a, b| a.1.total_cmp(&b.1));
        let mut prefix = [Vec::with_capacity(sorted.len() + 1), Vec::with_capacity(sorted.len() + 1)];
        let mut acc = [(0.0, 0usize); 2];
        for p in &mut prefix {
            p.push((0.0, 0));
        }
        for &&(g, _, tt) in &sorted {
            acc[slot(g)].0 += tt;
            acc[slot(g)].1 += 1;
            prefix[0].push(acc[0]);
            prefix[1].push(acc[1]);
        }
        WindowIndex { starts: sorted.iter().map(|e| e.1).collect(), prefix }
    }

    pub fn stats(&self, own: f64, group: Group, start: f64, window: f64) -> TravelTimeStats {
        let lo = self.starts.partition_point(|&s| s < start - window);
        let hi = self.starts.partition_point(|&s| s <= start + window);
        let range = |g: Group| {
            let p = &self.prefix[slot(g)];
            (p[hi].0 - p[lo].0, p[hi].1 - p[lo].1)
        };
        let (gs, gn) = range(group);
        let (os, on) = range(group.other());
        let mean = |s: f64, n: usize| if n == 0 { 0.0 } else { s / n as f64 };
        TravelTimeStats {
            own,
            group_mean: mean(gs, gn),
            other_mean: mean(os, on),
            all_mean: mean(gs + os, gn + on),
        }
    }
}
