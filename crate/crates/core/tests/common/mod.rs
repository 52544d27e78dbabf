#![allow(dead_code)]

use rand::Rng;
use routemix::net::{Edge, Network};
use routemix::ScenarioConfig;

/// Random DAG with at most `max_edges` edges; every node but the last has
/// an outgoing edge.
pub fn random_network<R: Rng>(rng: &mut R, max_edges: usize) -> Network {
    let n_nodes = rng.random_range(2..=6usize);
    let mut pairs = Vec::new();
    for a in 0..n_nodes - 1 {
        pairs.push((a, rng.random_range(a + 1..n_nodes)));
    }
    while pairs.len() < max_edges && rng.random_bool(0.7) {
        let a = rng.random_range(0..n_nodes - 1);
        pairs.push((a, rng.random_range(a + 1..n_nodes)));
    }
    pairs.truncate(max_edges);
    let edges = pairs
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| Edge {
            id: format!("e{k}"),
            from: format!("v{a}"),
            to: format!("v{b}"),
            length: rng.random_range(20.0..400.0),
            free_speed: rng.random_range(5.0..20.0),
            capacity: rng.random_range(0.05..1.0),
            priority_rank: rng.random_range(0..3),
        })
        .collect();
    Network::new(vec![], edges).unwrap()
}

/// Random walk from a random node until it stops or reaches a dead end.
pub fn random_path<R: Rng>(rng: &mut R, net: &Network) -> Vec<usize> {
    let mut path = Vec::new();
    let starts: Vec<&String> = net
        .nodes()
        .iter()
        .filter(|n| !net.adjacency(n).unwrap_or(&[]).is_empty())
        .collect();
    let mut node = starts[rng.random_range(0..starts.len())].clone();
    loop {
        let out = net.adjacency(&node).unwrap_or(&[]);
        if out.is_empty() || (!path.is_empty() && rng.random_bool(0.3)) {
            return path;
        }
        let e = out[rng.random_range(0..out.len())];
        path.push(e);
        node = net.edge(e).to.clone();
    }
}

/// 4x4 grid, 120 drivers (40 become AVs), phases 1/100/300, 500 episodes.
/// Edge capacity is scaled to the reduced demand.
pub fn desk_config(behavior: &str, seed: u64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.seed = seed;
    cfg.repetitions = 1;
    cfg.behavior = behavior.into();
    cfg.population.size = 120;
    cfg.population.av_count = 40;
    cfg.phases.shock_start = 100;
    cfg.phases.adapt_start = 300;
    cfg.phases.total_episodes = 500;
    cfg.network.grid.capacity_vps = 0.04;
    cfg.normalize_warmth = true;
    cfg.summary.window = 50;
    cfg
}

/// 12 drivers (4 become AVs), phases 1/3/5, 8 episodes.
pub fn smoke_config() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.seed = 7;
    cfg.repetitions = 1;
    cfg.population.size = 12;
    cfg.population.av_count = 4;
    cfg.phases.shock_start = 3;
    cfg.phases.adapt_start = 5;
    cfg.phases.total_episodes = 8;
    cfg.summary.window = 2;
    cfg
}

pub fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}
