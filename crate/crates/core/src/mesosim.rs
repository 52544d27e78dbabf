//! Deterministic point-queue traffic model.
//!
//! Every edge is traversed at free-flow speed and then released through a
//! FIFO exit with a minimum headway of `1 / capacity`. Queue order on each
//! edge is fixed by the vehicle's scheduled (free-flow) arrival at that edge,
//! bucketed into one-second ticks; inside a tick, vehicles coming from the
//! upstream edge with the lower priority rank go first, then earlier
//! scheduled arrival, then lower driver id. Because the order never depends
//! on realised delays, adding a vehicle can only push others back.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::net::Network;

pub type DriverId = u32;

/// Upper bound (exclusive) of start times, in seconds.
pub const HORIZON_S: f64 = 3600.0;

/// Rank given to vehicles entering their first edge from the origin.
const ORIGIN_RANK: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("driver {driver}: unknown edge index {edge}")]
    UnknownEdge { driver: DriverId, edge: usize },
    #[error("driver {driver}: empty path")]
    EmptyPath { driver: DriverId },
    #[error("driver {driver}: path is not connected at position {position}")]
    BrokenPath { driver: DriverId, position: usize },
    #[error("driver {driver}: start time {start} outside [0, 3600)")]
    StartOutOfRange { driver: DriverId, start: f64 },
    #[error("duplicate driver id {0}")]
    DuplicateDriver(DriverId),
    #[error("unknown simulator `{0}` (known: meso, free-flow)")]
    UnknownSimulator(String),
}

/// One driver's trip: a resolved edge sequence and a departure second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripPlan<'a> {
    pub driver_id: DriverId,
    pub edges: &'a [usize],
    pub start_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripResult {
    pub driver_id: DriverId,
    pub travel_time: f64,
    pub arrival_time: f64,
}

/// Passage of one vehicle over one edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueEvent {
    pub edge: usize,
    pub driver_id: DriverId,
    pub entry: f64,
    /// Earliest possible exit (entry + free-flow time).
    pub ready: f64,
    pub exit: f64,
}

/// Anything that turns trip plans into travel times. Results are returned
/// sorted by driver id.
pub trait Simulator: Send + Sync {
    fn name(&self) -> &'static str;
    fn simulate(&self, net: &Network, plans: &[TripPlan<'_>]) -> Result<Vec<TripResult>, SimError>;
}

/// The built-in point-queue model, registered as `meso`.
#[derive(Debug, Clone, Copy, Default)]
pub struct MesoSimulator;

/// Ignores congestion entirely, registered as `free-flow`.
#[derive(Debug, Clone, Copy, Default)]
pub struct FreeFlowSimulator;

pub fn simulator_by_name(name: &str) -> Result<Box<dyn Simulator>, SimError> {
    match name {
        "meso" => Ok(Box::new(MesoSimulator)),
        "free-flow" => Ok(Box::new(FreeFlowSimulator)),
        other => Err(SimError::UnknownSimulator(other.to_string())),
    }
}

fn check_plans(net: &Network, plans: &[TripPlan<'_>]) -> Result<(), SimError> {
    let mut ids: Vec<DriverId> = plans.iter().map(|p| p.driver_id).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(SimError::DuplicateDriver(w[0]));
    }
    let n_edges = net.edges().len();
    for p in plans {
        if !(p.start_time >= 0.0 && p.start_time < HORIZON_S) {
            return Err(SimError::StartOutOfRange { driver: p.driver_id, start: p.start_time });
        }
        if p.edges.is_empty() {
            return Err(SimError::EmptyPath { driver: p.driver_id });
        }
        if let Some(&bad) = p.edges.iter().find(|&&e| e >= n_edges) {
            return Err(SimError::UnknownEdge { driver: p.driver_id, edge: bad });
        }
        for (k, w) in p.edges.windows(2).enumerate() {
            if net.edge(w[0]).to != net.edge(w[1]).from {
                return Err(SimError::BrokenPath { driver: p.driver_id, position: k + 1 });
            }
        }
    }
    Ok(())
}

impl Simulator for MesoSimulator {
    fn name(&self) -> &'static str {
        "meso"
    }

    fn simulate(&self, net: &Network, plans: &[TripPlan<'_>]) -> Result<Vec<TripResult>, SimError> {
        Ok(run_queues(net, plans, false)?.0)
    }
}

impl MesoSimulator {
    /// Same as `simulate`, also returning every edge passage.
    pub fn simulate_traced(
        &self,
        net: &Network,
        plans: &[TripPlan<'_>],
    ) -> Result<(Vec<TripResult>, Vec<QueueEvent>), SimError> {
        run_queues(net, plans, true)
    }
}

impl Simulator for FreeFlowSimulator {
    fn name(&self) -> &'static str {
        "free-flow"
    }

    fn simulate(&self, net: &Network, plans: &[TripPlan<'_>]) -> Result<Vec<TripResult>, SimError> {
        check_plans(net, plans)?;
        let mut out: Vec<TripResult> = plans
            .iter()
            .map(|p| {
                let tt = p.edges.iter().fold(0.0, |acc, &e| acc + net.edge(e).free_flow_time());
                TripResult { driver_id: p.driver_id, travel_time: tt, arrival_time: p.start_time + tt }
            })
            .collect();
        out.sort_by_key(|r| r.driver_id);
        Ok(out)
    }
}

struct Item {
    tick: i64,
    rank: u32,
    scheduled: f64,
    driver: DriverId,
    plan: usize,
    pos: usize,
}

fn run_queues(
    net: &Network,
    plans: &[TripPlan<'_>],
    traced: bool,
) -> Result<(Vec<TripResult>, Vec<QueueEvent>), SimError> {
    check_plans(net, plans)?;
    if plans.is_empty() {
        return Ok((Vec::new(), Vec::new()));
    }
    // A tick no longer than half the network's shortest edge keeps a
    // vehicle's consecutive edges in distinct ticks, so the sort below is a
    // valid processing order independent of the plan set.
    let min_ff = net.edges().iter().map(|e| e.free_flow_time()).fold(f64::INFINITY, f64::min);
    let tick = (min_ff / 2.0).min(1.0);

    let mut items = Vec::with_capacity(plans.iter().map(|p| p.edges.len()).sum());
    for (pi, p) in plans.iter().enumerate() {
        let mut scheduled = p.start_time;
        let mut rank = ORIGIN_RANK;
        for (pos, &e) in p.edges.iter().enumerate() {
            items.push(Item {
                tick: (scheduled / tick).floor() as i64,
                rank,
                scheduled,
                driver: p.driver_id,
                plan: pi,
                pos,
            });
            let edge = net.edge(e);
            scheduled += edge.free_flow_time();
            rank = edge.priority_rank;
        }
    }
    items.sort_by(|a, b| {
        a.tick
            .cmp(&b.tick)
            .then(a.rank.cmp(&b.rank))
            .then(a.scheduled.total_cmp(&b.scheduled))
            .then(a.driver.cmp(&b.driver))
    });

    // Elapsed seconds since departure; kept relative to the start so that an
    // unobstructed trip reproduces the free-flow sum bit for bit.
    let mut elapsed = vec![0.0_f64; plans.len()];
    let mut next_pos = vec![0usize; plans.len()];
    let mut last_exit: Vec<Option<f64>> = vec![None; net.edges().len()];
    let mut events = Vec::new();
    for it in &items {
        debug_assert_eq!(next_pos[it.plan], it.pos, "queue order violates path order");
        next_pos[it.plan] += 1;
        let p = &plans[it.plan];
        let e = p.edges[it.pos];
        let edge = net.edge(e);
        let entered = elapsed[it.plan];
        let ready = entered + edge.free_flow_time();
        let done = match last_exit[e] {
            Some(prev) => ready.max((prev + 1.0 / edge.capacity) - p.start_time),
            None => ready,
        };
        elapsed[it.plan] = done;
        last_exit[e] = Some(p.start_time + done);
        if traced {
            events.push(QueueEvent {
                edge: e,
                driver_id: p.driver_id,
                entry: p.start_time + entered,
                ready: p.start_time + ready,
                exit: p.start_time + done,
            });
        }
    }

    let mut out: Vec<TripResult> = plans
        .iter()
        .zip(&elapsed)
        .map(|(p, &tt)| TripResult {
            driver_id: p.driver_id,
            travel_time: tt,
            arrival_time: p.start_time + tt,
        })
        .collect();
    out.sort_by_key(|r| r.driver_id);
    Ok((out, events))
}

/// Renders a queue trace as `edge_id,driver_id,entry_s,ready_s,exit_s`,
/// ordered by edge then exit time.
pub fn queue_trace_csv(net: &Network, events: &[QueueEvent]) -> String {
    let mut sorted: Vec<&QueueEvent> = events.iter().collect();
    sorted.sort_by(|a, b| {
        a.edge.cmp(&b.edge).then(a.exit.total_cmp(&b.exit)).then(a.driver_id.cmp(&b.driver_id))
    });
    let mut out = String::from("edge_id,driver_id,entry_s,ready_s,exit_s\n");
    for ev in sorted {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            net.edge(ev.edge).id,
            ev.driver_id,
            ev.entry,
            ev.ready,
            ev.exit
        );
    }
    out
}
