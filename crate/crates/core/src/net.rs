//! Road network, free-flow times and fixed per-OD route sets.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of route options every driver chooses from.
pub const ROUTES_PER_OD: usize = 3;

pub const EDGE_LIST_HEADER: &str = "edge_id,from,to,length_m,speed_mps,capacity_vps,priority";
pub const NODE_LIST_HEADER: &str = "node_id";
pub const ROUTE_FILE_HEADER: &str = "od_origin,od_dest,route_index,edge_id_sequence";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("edge {edge} references undeclared node {node}")]
    DanglingNode { edge: String, node: String },
    #[error("duplicate edge id {0}")]
    DuplicateEdge(String),
    #[error("duplicate node id {0}")]
    DuplicateNode(String),
    #[error("edge {edge}: {field} must be strictly positive")]
    NonPositive { edge: String, field: &'static str },
    #[error("unknown edge {0}")]
    UnknownEdge(String),
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("path for {od} is empty")]
    EmptyPath { od: Od },
    #[error("path for {od} is invalid: {reason}")]
    InvalidPath { od: Od, reason: String },
    #[error("{od} is not connected")]
    Disconnected { od: Od },
    #[error("found only {found} of {wanted} distinct paths for {od}")]
    InsufficientPaths { od: Od, found: usize, wanted: usize },
    #[error("route file has no route set for {od}")]
    MissingRouteSet { od: Od },
}

/// Directed road segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: String,
    pub from: String,
    pub to: String,
    /// Meters.
    pub length: f64,
    /// Meters per second.
    pub free_speed: f64,
    /// Vehicles per second leaving the edge.
    pub capacity: f64,
    /// Lower rank wins at the downstream merge.
    pub priority_rank: u32,
}

impl Edge {
    pub fn free_flow_time(&self) -> f64 {
        self.length / self.free_speed
    }

    fn validate(&self) -> Result<(), NetError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        for (field, value) in [
            ("length", self.length),
            ("free_speed", self.free_speed),
            ("capacity", self.capacity),
        ] {
            if !positive(value) {
                return Err(NetError::NonPositive { edge: self.id.clone(), field });
            }
        }
        Ok(())
    }
}

/// Origin-destination pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Od {
    pub origin: String,
    pub destination: String,
}

impl Od {
    pub fn new(origin: impl Into<String>, destination: impl Into<String>) -> Self {
        Od { origin: origin.into(), destination: destination.into() }
    }
}

impl fmt::Display for Od {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OD({} -> {})", self.origin, self.destination)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Path {
    pub od: Od,
    pub edges: Vec<String>,
}

/// Exactly [`ROUTES_PER_OD`] distinct paths for one OD pair (in normal use).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteSet {
    pub od: Od,
    pub paths: Vec<Path>,
}

/// Route sets for every OD pair of a scenario, in OD order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RouteCatalog {
    pub sets: Vec<RouteSet>,
}

/// Immutable road network.
#[derive(Debug, Clone)]
pub struct Network {
    nodes: Vec<String>,
    node_index: HashMap<String, usize>,
    edges: Vec<Edge>,
    edge_index: HashMap<String, usize>,
    outgoing: Vec<Vec<usize>>,
    incoming: Vec<Vec<usize>>,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges
    }
}

impl Network {
    /// Builds and validates a network. `nodes` may be empty, in which case
    /// nodes are taken from the edge endpoints in first-seen order.
    pub fn new(nodes: Vec<String>, edges: Vec<Edge>) -> Result<Self, NetError> {
        let declared = !nodes.is_empty();
        let mut all_nodes = Vec::new();
        let mut node_index = HashMap::new();
        for n in nodes {
            if node_index.insert(n.clone(), all_nodes.len()).is_some() {
                return Err(NetError::DuplicateNode(n));
            }
            all_nodes.push(n);
        }
        let mut edge_index = HashMap::new();
        for (i, e) in edges.iter().enumerate() {
            e.validate()?;
            if edge_index.insert(e.id.clone(), i).is_some() {
                return Err(NetError::DuplicateEdge(e.id.clone()));
            }
            for n in [&e.from, &e.to] {
                if !node_index.contains_key(n) {
                    if declared {
                        return Err(NetError::DanglingNode { edge: e.id.clone(), node: n.clone() });
                    }
                    node_index.insert(n.clone(), all_nodes.len());
                    all_nodes.push(n.clone());
                }
            }
        }
        let mut outgoing = vec![Vec::new(); all_nodes.len()];
        let mut incoming = vec![Vec::new(); all_nodes.len()];
        for (i, e) in edges.iter().enumerate() {
            outgoing[node_index[&e.from]].push(i);
            incoming[node_index[&e.to]].push(i);
        }
        Ok(Network { nodes: all_nodes, node_index, edges, edge_index, outgoing, incoming })
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, idx: usize) -> &Edge {
        &self.edges[idx]
    }

    pub fn edge_idx(&self, id: &str) -> Option<usize> {
        self.edge_index.get(id).copied()
    }

    pub fn node_idx(&self, id: &str) -> Option<usize> {
        self.node_index.get(id).copied()
    }

    /// Outgoing edge indices of a node.
    pub fn adjacency(&self, node: &str) -> Option<&[usize]> {
        self.node_idx(node).map(|n| self.outgoing[n].as_slice())
    }

    /// Resolves a path's edge ids to indices after checking every path invariant.
    pub fn resolve(&self, path: &Path) -> Result<Vec<usize>, NetError> {
        let invalid = |reason: String| NetError::InvalidPath { od: path.od.clone(), reason };
        if path.edges.is_empty() {
            return Err(NetError::EmptyPath { od: path.od.clone() });
        }
        let idx: Vec<usize> = path
            .edges
            .iter()
            .map(|id| self.edge_idx(id).ok_or_else(|| NetError::UnknownEdge(id.clone())))
            .collect::<Result<_, _>>()?;
        if self.edges[idx[0]].from != path.od.origin {
            return Err(invalid(format!("first edge {} does not leave the origin", path.edges[0])));
        }
        let last = *idx.last().unwrap();
        if self.edges[last].to != path.od.destination {
            return Err(invalid(format!(
                "last edge {} does not enter the destination",
                self.edges[last].id
            )));
        }
        for w in idx.windows(2) {
            if self.edges[w[0]].to != self.edges[w[1]].from {
                return Err(invalid(format!(
                    "edges {} and {} are not connected",
                    self.edges[w[0]].id, self.edges[w[1]].id
                )));
            }
        }
        let mut seen = HashSet::new();
        for &i in &idx {
            if !seen.insert(i) {
                return Err(invalid(format!("edge {} repeats", self.edges[i].id)));
            }
        }
        Ok(idx)
    }

    /// Sum of length / free speed over the path's edges, in seconds.
    pub fn free_flow_time(&self, path: &Path) -> Result<f64, NetError> {
        if path.edges.is_empty() {
            return Err(NetError::EmptyPath { od: path.od.clone() });
        }
        path.edges.iter().try_fold(0.0, |acc, id| {
            let i = self.edge_idx(id).ok_or_else(|| NetError::UnknownEdge(id.clone()))?;
            Ok(acc + self.edges[i].free_flow_time())
        })
    }

    /// Free-flow shortest time from every node to `dest` (infinite when unreachable).
    pub fn times_to(&self, dest: usize) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.nodes.len()];
        let mut heap = BinaryHeap::new();
        dist[dest] = 0.0;
        heap.push(HeapItem { cost: 0.0, node: dest });
        while let Some(HeapItem { cost, node }) = heap.pop() {
            if cost > dist[node] {
                continue;
            }
            for &e in &self.incoming[node] {
                let edge = &self.edges[e];
                let tail = self.node_index[&edge.from];
                let c = cost + edge.free_flow_time();
                if c < dist[tail] {
                    dist[tail] = c;
                    heap.push(HeapItem { cost: c, node: tail });
                }
            }
        }
        dist
    }

    /// Parses the edge-list document. An optional leading `node_id` section
    /// (terminated by a blank line) declares nodes; without it nodes are
    /// inferred from the edges.
    pub fn from_edge_list(text: &str) -> Result<Self, NetError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        let mut first = loop {
            match lines.next() {
                Some((_, l)) if l.is_empty() || l.starts_with('#') => continue,
                Some(item) => break item,
                None => return Err(NetError::Parse { line: 0, msg: "empty document".into() }),
            }
        };
        if first.1 == NODE_LIST_HEADER {
            for (_, l) in lines.by_ref() {
                if l.is_empty() {
                    break;
                }
                nodes.push(l.to_string());
            }
            first = loop {
                match lines.next() {
                    Some((_, l)) if l.is_empty() || l.starts_with('#') => continue,
                    Some(item) => break item,
                    None => {
                        return Err(NetError::Parse { line: 0, msg: "missing edge section".into() })
                    }
                }
            };
        }
        if first.1 != EDGE_LIST_HEADER {
            return Err(NetError::Parse {
                line: first.0,
                msg: format!("expected header `{EDGE_LIST_HEADER}`"),
            });
        }
        for (line, l) in lines {
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            edges.push(parse_edge_row(line, l)?);
        }
        Network::new(nodes, edges)
    }

    /// Serializes with an explicit node section so that load(save(n)) == n.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        out.push_str(NODE_LIST_HEADER);
        out.push('\n');
        for n in &self.nodes {
            out.push_str(n);
            out.push('\n');
        }
        out.push('\n');
        out.push_str(EDGE_LIST_HEADER);
        out.push('\n');
        for e in &self.edges {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                e.id, e.from, e.to, e.length, e.free_speed, e.capacity, e.priority_rank
            ));
        }
        out
    }
}

fn parse_edge_row(line: usize, row: &str) -> Result<Edge, NetError> {
    let fields: Vec<&str> = row.split(',').map(str::trim).collect();
    if fields.len() != 7 {
        return Err(NetError::Parse {
            line,
            msg: format!("expected 7 fields, found {}", fields.len()),
        });
    }
    let num = |i: usize, name: &str| -> Result<f64, NetError> {
        fields[i]
            .parse::<f64>()
            .map_err(|_| NetError::Parse { line, msg: format!("bad {name} `{}`", fields[i]) })
    };
    let text = |i: usize, name: &str| -> Result<String, NetError> {
        let v = fields[i];
        if v.is_empty() || v.contains(';') {
            return Err(NetError::Parse { line, msg: format!("bad {name} `{v}`") });
        }
        Ok(v.to_string())
    };
    let priority_rank = fields[6]
        .parse::<u32>()
        .map_err(|_| NetError::Parse { line, msg: format!("bad priority `{}`", fields[6]) })?;
    Ok(Edge {
        id: text(0, "edge_id")?,
        from: text(1, "from")?,
        to: text(2, "to")?,
        length: num(3, "length_m")?,
        free_speed: num(4, "speed_mps")?,
        capacity: num(5, "capacity_vps")?,
        priority_rank,
    })
}

#[derive(PartialEq)]
struct HeapItem {
    cost: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Knobs of the logit-randomized walk used to build route sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathGenParams {
    pub count: usize,
    /// Logit sensitivity applied to edge scores in seconds.
    pub beta: f64,
    pub max_attempts: usize,
    /// Walks longer than this multiple of the shortest free-flow time are rejected.
    pub detour_factor: f64,
}

impl Default for PathGenParams {
    fn default() -> Self {
        PathGenParams { count: ROUTES_PER_OD, beta: -0.1, max_attempts: 10_000, detour_factor: 3.0 }
    }
}

/// Samples loop-free walks from origin to destination, choosing each next
/// edge with probability proportional to `exp(beta * (edge time + remaining
/// shortest time))`, until `count` distinct paths are found.
pub fn generate_paths<R: Rng + ?Sized>(
    net: &Network,
    od: &Od,
    params: &PathGenParams,
    rng: &mut R,
) -> Result<RouteSet, NetError> {
    let origin = net.node_idx(&od.origin).ok_or_else(|| NetError::UnknownNode(od.origin.clone()))?;
    let dest = net
        .node_idx(&od.destination)
        .ok_or_else(|| NetError::UnknownNode(od.destination.clone()))?;
    let to_dest = net.times_to(dest);
    let shortest = to_dest[origin];
    if !shortest.is_finite() || origin == dest {
        return Err(NetError::Disconnected { od: od.clone() });
    }
    let limit = params.detour_factor * shortest;

    let mut found: Vec<Vec<usize>> = Vec::new();
    let mut weights = Vec::new();
    let mut candidates = Vec::new();
    for _ in 0..params.max_attempts {
        if found.len() >= params.count {
            break;
        }
        let mut visited = vec![false; net.nodes.len()];
        visited[origin] = true;
        let mut node = origin;
        let mut elapsed = 0.0;
        let mut walk = Vec::new();
        let accepted = loop {
            if node == dest {
                break true;
            }
            candidates.clear();
            for &e in &net.outgoing[node] {
                let head = net.node_index[&net.edges[e].to];
                if !visited[head] && to_dest[head].is_finite() {
                    candidates.push((e, head, net.edges[e].free_flow_time() + to_dest[head]));
                }
            }
            if candidates.is_empty() {
                break false;
            }
            let best = candidates.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
            weights.clear();
            weights.extend(candidates.iter().map(|c| (params.beta * (c.2 - best)).exp()));
            let total: f64 = weights.iter().sum();
            let mut draw = rng.random::<f64>() * total;
            let mut pick = candidates.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                if draw < *w {
                    pick = i;
                    break;
                }
                draw -= w;
            }
            let (e, head, _) = candidates[pick];
            elapsed += net.edges[e].free_flow_time();
            if elapsed > limit {
                break false;
            }
            walk.push(e);
            visited[head] = true;
            node = head;
        };
        if accepted && !found.contains(&walk) {
            found.push(walk);
        }
    }
    if found.len() < params.count {
        return Err(NetError::InsufficientPaths {
            od: od.clone(),
            found: found.len(),
            wanted: params.count,
        });
    }
    let paths = found
        .into_iter()
        .map(|w| Path { od: od.clone(), edges: w.into_iter().map(|e| net.edges[e].id.clone()).collect() })
        .collect();
    Ok(RouteSet { od: od.clone(), paths })
}

impl RouteCatalog {
    pub fn get(&self, od: &Od) -> Option<&RouteSet> {
        self.sets.iter().find(|s| &s.od == od)
    }

    /// Checks every path against the network and the per-set invariants.
    pub fn validate(&self, net: &Network) -> Result<(), NetError> {
        for set in &self.sets {
            for (i, p) in set.paths.iter().enumerate() {
                if p.od != set.od {
                    return Err(NetError::InvalidPath {
                        od: set.od.clone(),
                        reason: format!("route {i} belongs to {}", p.od),
                    });
                }
                net.resolve(p)?;
                if set.paths[..i].iter().any(|q| q.edges == p.edges) {
                    return Err(NetError::InvalidPath {
                        od: set.od.clone(),
                        reason: format!("route {i} duplicates an earlier route"),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(ROUTE_FILE_HEADER);
        out.push('\n');
        for set in &self.sets {
            for (i, p) in set.paths.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    set.od.origin,
                    set.od.destination,
                    i,
                    p.edges.join(";")
                ));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, NetError> {
        let mut sets: Vec<RouteSet> = Vec::new();
        let mut header_seen = false;
        for (i, l) in text.lines().enumerate() {
            let line = i + 1;
            let l = l.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            if !header_seen {
                if l != ROUTE_FILE_HEADER {
                    return Err(NetError::Parse {
                        line,
                        msg: format!("expected header `{ROUTE_FILE_HEADER}`"),
                    });
                }
                header_seen = true;
                continue;
            }
            let f: Vec<&str> = l.split(',').map(str::trim).collect();
            if f.len() != 4 {
                return Err(NetError::Parse { line, msg: format!("expected 4 fields, found {}", f.len()) });
            }
            let index: usize = f[2]
                .parse()
                .map_err(|_| NetError::Parse { line, msg: format!("bad route_index `{}`", f[2]) })?;
            let od = Od::new(f[0], f[1]);
            let edges: Vec<String> =
                f[3].split(';').filter(|s| !s.is_empty()).map(String::from).collect();
            let set = match sets.iter_mut().position(|s| s.od == od) {
                Some(p) => &mut sets[p],
                None => {
                    sets.push(RouteSet { od: od.clone(), paths: Vec::new() });
                    sets.last_mut().unwrap()
                }
            };
            if index != set.paths.len() {
                return Err(NetError::Parse {
                    line,
                    msg: format!("route_index {index} out of sequence for {od}"),
                });
            }
            set.paths.push(Path { od, edges });
        }
        Ok(RouteCatalog { sets })
    }
}

/// Parameters of the synthetic grid generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridParams {
    pub rows: usize,
    pub cols: usize,
    pub edge_length_m: f64,
    pub speed_min_mps: f64,
    pub speed_max_mps: f64,
    pub capacity_vps: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams {
            rows: 4,
            cols: 4,
            edge_length_m: 200.0,
            speed_min_mps: 8.0,
            speed_max_mps: 14.0,
            capacity_vps: 0.5,
        }
    }
}

pub fn grid_node(r: usize, c: usize) -> String {
    format!("n{r}_{c}")
}

/// Bidirectional grid with uniformly randomized free speeds. Horizontal
/// edges carry priority rank 0 and vertical edges rank 1.
pub fn grid_network<R: Rng + ?Sized>(params: &GridParams, rng: &mut R) -> Result<Network, NetError> {
    let mut nodes = Vec::with_capacity(params.rows * params.cols);
    for r in 0..params.rows {
        for c in 0..params.cols {
            nodes.push(grid_node(r, c));
        }
    }
    let mut edges = Vec::new();
    let speed = |rng: &mut R| {
        if params.speed_max_mps > params.speed_min_mps {
            rng.random_range(params.speed_min_mps..params.speed_max_mps)
        } else {
            params.speed_min_mps
        }
    };
    let mut add = |from: String, to: String, rank: u32, rng: &mut R| {
        let id = format!("e{}", edges.len());
        edges.push(Edge {
            id,
            from,
            to,
            length: params.edge_length_m,
            free_speed: speed(rng),
            capacity: params.capacity_vps,
            priority_rank: rank,
        });
    };
    for r in 0..params.rows {
        for c in 0..params.cols {
            if c + 1 < params.cols {
                add(grid_node(r, c), grid_node(r, c + 1), 0, rng);
                add(grid_node(r, c + 1), grid_node(r, c), 0, rng);
            }
            if r + 1 < params.rows {
                add(grid_node(r, c), grid_node(r + 1, c), 1, rng);
                add(grid_node(r + 1, c), grid_node(r, c), 1, rng);
            }
        }
    }
    Network::new(nodes, edges)
}

/// Default OD endpoints on a grid: the two left corners as origins and the
/// two right corners as destinations.
pub fn grid_default_endpoints(params: &GridParams) -> (Vec<String>, Vec<String>) {
    let last_r = params.rows.saturating_sub(1);
    let last_c = params.cols.saturating_sub(1);
    (
        vec![grid_node(0, 0), grid_node(last_r, 0)],
        vec![grid_node(0, last_c), grid_node(last_r, last_c)],
    )
}
