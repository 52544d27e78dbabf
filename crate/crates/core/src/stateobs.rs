//! AV observations: warmth of earlier same-OD route choices inside the
//! observation window.

use serde::{Deserialize, Serialize};

use crate::mesosim::DriverId;
use crate::net::ROUTES_PER_OD;

/// Length of an agent state vector.
pub const STATE_LEN: usize = 2 * ROUTES_PER_OD;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Human,
    Av,
}

impl Group {
    pub fn as_str(self) -> &'static str {
        match self {
            Group::Human => "human",
            Group::Av => "av",
        }
    }

    pub fn other(self) -> Group {
        match self {
            Group::Human => Group::Av,
            Group::Av => Group::Human,
        }
    }
}

impl std::str::FromStr for Group {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "human" => Ok(Group::Human),
            "av" => Ok(Group::Av),
            other => Err(format!("unknown group `{other}`")),
        }
    }
}

/// Which group's choices a warmth vector is computed over, relative to the observer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetGroup {
    Same,
    Other,
}

/// Identity of an agent as seen by the turn log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observer {
    pub driver_id: DriverId,
    pub group: Group,
    pub od: usize,
    pub start_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurnRecord {
    pub agent: Observer,
    pub action: usize,
}

/// Choices already made in the current episode, in turn order.
#[derive(Debug, Clone, Default)]
pub struct TurnLog {
    records: Vec<TurnRecord>,
}

impl TurnLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        TurnLog { records: Vec::with_capacity(n) }
    }

    /// Appends a choice. Turns must arrive in (start_time, driver_id) order.
    pub fn push(&mut self, agent: Observer, action: usize) {
        debug_assert!(self.records.last().is_none_or(|r| {
            (r.agent.start_time, r.agent.driver_id) < (agent.start_time, agent.driver_id)
        }));
        self.records.push(TurnRecord { agent, action });
    }

    pub fn records(&self) -> &[TurnRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// For each action `j`, the sum over prior same-OD agents of the target
/// group that chose `j` with start time in `[t - window, t]` of
/// `t_i - (t - window)`.
pub fn warmth(
    log: &TurnLog,
    observer: &Observer,
    window: f64,
    target: TargetGroup,
) -> [f64; ROUTES_PER_OD] {
    let group = match target {
        TargetGroup::Same => observer.group,
        TargetGroup::Other => observer.group.other(),
    };
    let lo = observer.start_time - window;
    let mut out = [0.0; ROUTES_PER_OD];
    // Only earlier turns count; the log holds nothing after the observer
    // while the episode is being played, but it may when replayed.
    for r in log.records() {
        let a = &r.agent;
        if (a.start_time, a.driver_id) >= (observer.start_time, observer.driver_id) {
            break;
        }
        if a.group == group && a.od == observer.od && a.start_time >= lo {
            out[r.action] += a.start_time - lo;
        }
    }
    out
}

/// Same-group warmth followed by other-group warmth.
pub fn build_state(log: &TurnLog, observer: &Observer, window: f64) -> [f64; STATE_LEN] {
    let same = warmth(log, observer, window, TargetGroup::Same);
    let other = warmth(log, observer, window, TargetGroup::Other);
    let mut s = [0.0; STATE_LEN];
    s[..ROUTES_PER_OD].copy_from_slice(&same);
    s[ROUTES_PER_OD..].copy_from_slice(&other);
    s
}
