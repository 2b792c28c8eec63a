//! Waypoint operation network: uniformly distributed 3-D nodes joined by
//! undirected weighted edges.
//!
//! Edges come from a symmetric k-nearest-neighbor union; if that leaves the
//! graph disconnected it is repaired by repeatedly adding the shortest link
//! between components. Every edge stores its Euclidean length and the
//! expected traversal time `length / cruise_speed` (zero expected delay;
//! realized delays belong to mission execution).

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("need at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("neighbors_per_node must be in [1, k-1], got {0} for k = {1}")]
    BadNeighborCount(usize, usize),
    #[error("volume bounds must be positive, got {0:?}")]
    BadBounds([f64; 3]),
    #[error("cruise speed must be positive, got {0}")]
    BadCruiseSpeed(f64),
    #[error("node ids must be unique and contiguous from 0")]
    BadNodeIds,
    #[error("edge ({0}, {1}) is invalid (self-loop, duplicate, or unknown node)")]
    BadEdge(usize, usize),
    #[error("graph is not connected")]
    Disconnected,
    #[error("node position {0:?} lies outside the declared bounds")]
    NodeOutOfBounds([f64; 3]),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Canonical undirected edge key: node ids ordered low to high.
pub type EdgeKey = (usize, usize);

pub fn edge_key(a: usize, b: usize) -> EdgeKey {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub position: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    /// Endpoint ids, stored with `i < j`.
    pub i: usize,
    pub j: usize,
    /// Euclidean length, meters.
    pub length: f64,
    /// Expected traversal time at cruise speed, seconds.
    pub expected_time: f64,
}

impl Edge {
    pub fn key(&self) -> EdgeKey {
        (self.i, self.j)
    }

    /// The endpoint opposite to `node`.
    pub fn other(&self, node: usize) -> usize {
        if node == self.i {
            self.j
        } else {
            self.i
        }
    }
}

/// Euclidean distance between two nodes.
pub fn edge_length(a: &Node, b: &Node) -> f64 {
    let dx = b.position[0] - a.position[0];
    let dy = b.position[1] - a.position[1];
    let dz = b.position[2] - a.position[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Expected traversal time `length / cruise_speed` with zero delay.
pub fn expected_edge_time(edge: &Edge, cruise_speed: f64) -> Result<f64, GraphError> {
    if !(cruise_speed > 0.0) {
        return Err(GraphError::BadCruiseSpeed(cruise_speed));
    }
    Ok(edge.length / cruise_speed)
}

/// Undirected weighted waypoint graph. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct OperationGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    /// Per-node indices into `edges`.
    adjacency: Vec<Vec<usize>>,
    bounds: [f64; 3],
    cruise_speed: f64,
    seed: u64,
}

/// Serializable graph description; lengths and times are recomputed on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFile {
    pub bounds: [f64; 3],
    pub cruise_speed: f64,
    pub seed: u64,
    pub positions: Vec<[f64; 3]>,
    pub edges: Vec<[usize; 2]>,
}

impl OperationGraph {
    /// Generate a random network of `k` nodes uniform in the volume.
    pub fn generate(
        k: usize,
        bounds: [f64; 3],
        neighbors_per_node: usize,
        cruise_speed: f64,
        seed: u64,
    ) -> Result<Self, GraphError> {
        if k < 2 {
            return Err(GraphError::TooFewNodes(k));
        }
        if neighbors_per_node < 1 || neighbors_per_node >= k {
            return Err(GraphError::BadNeighborCount(neighbors_per_node, k));
        }
        if bounds.iter().any(|b| !(*b > 0.0)) {
            return Err(GraphError::BadBounds(bounds));
        }
        if !(cruise_speed > 0.0) {
            return Err(GraphError::BadCruiseSpeed(cruise_speed));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nodes: Vec<Node> = (0..k)
            .map(|id| Node {
                id,
                position: [
                    rng.gen_range(0.0..=bounds[0]),
                    rng.gen_range(0.0..=bounds[1]),
                    rng.gen_range(0.0..=bounds[2]),
                ],
            })
            .collect();

        // Symmetric k-nearest-neighbor union.
        let mut edge_set: Vec<EdgeKey> = Vec::new();
        let mut known = std::collections::HashSet::new();
        for node in &nodes {
            let mut others: Vec<(f64, usize)> = nodes
                .iter()
                .filter(|o| o.id != node.id)
                .map(|o| (edge_length(node, o), o.id))
                .collect();
            others.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
            for (_, other) in others.into_iter().take(neighbors_per_node) {
                let key = edge_key(node.id, other);
                if known.insert(key) {
                    edge_set.push(key);
                }
            }
        }

        // Repair connectivity with the shortest inter-component link.
        let mut components = Components::new(k);
        for (a, b) in &edge_set {
            components.union(*a, *b);
        }
        while components.count() > 1 {
            let mut best: Option<(f64, EdgeKey)> = None;
            for a in &nodes {
                for b in &nodes {
                    if a.id < b.id && components.find(a.id) != components.find(b.id) {
                        let d = edge_length(a, b);
                        if best.is_none_or(|(bd, bk)| (d, (a.id, b.id)) < (bd, bk)) {
                            best = Some((d, (a.id, b.id)));
                        }
                    }
                }
            }
            let (_, key) = best.expect("disconnected graph has a crossing pair");
            edge_set.push(key);
            components.union(key.0, key.1);
        }

        edge_set.sort_unstable();
        Self::from_parts(nodes, &edge_set, bounds, cruise_speed, seed)
    }

    /// Build a graph from explicit nodes and edge pairs, validating all
    /// structural invariants.
    pub fn from_parts(
        nodes: Vec<Node>,
        edge_pairs: &[EdgeKey],
        bounds: [f64; 3],
        cruise_speed: f64,
        seed: u64,
    ) -> Result<Self, GraphError> {
        let k = nodes.len();
        if k < 2 {
            return Err(GraphError::TooFewNodes(k));
        }
        if !(cruise_speed > 0.0) {
            return Err(GraphError::BadCruiseSpeed(cruise_speed));
        }
        for (idx, node) in nodes.iter().enumerate() {
            if node.id != idx {
                return Err(GraphError::BadNodeIds);
            }
            for axis in 0..3 {
                if !(0.0..=bounds[axis]).contains(&node.position[axis]) {
                    return Err(GraphError::NodeOutOfBounds(node.position));
                }
            }
        }

        let mut seen = std::collections::HashSet::new();
        let mut edges = Vec::with_capacity(edge_pairs.len());
        let mut adjacency = vec![Vec::new(); k];
        for &(a, b) in edge_pairs {
            let (i, j) = edge_key(a, b);
            if i == j || j >= k || !seen.insert((i, j)) {
                return Err(GraphError::BadEdge(a, b));
            }
            let length = edge_length(&nodes[i], &nodes[j]);
            let edge = Edge { i, j, length, expected_time: length / cruise_speed };
            adjacency[i].push(edges.len());
            adjacency[j].push(edges.len());
            edges.push(edge);
        }

        let graph = Self { nodes, edges, adjacency, bounds, cruise_speed, seed };
        if !graph.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(graph)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, id: usize) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn bounds(&self) -> [f64; 3] {
        self.bounds
    }

    pub fn cruise_speed(&self) -> f64 {
        self.cruise_speed
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Indices into `edges()` of the edges incident to `node`.
    pub fn incident_edges(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn find_edge(&self, a: usize, b: usize) -> Option<&Edge> {
        let key = edge_key(a, b);
        self.adjacency
            .get(key.0)?
            .iter()
            .map(|&e| &self.edges[e])
            .find(|e| e.key() == key)
    }

    /// Expected traversal time per edge, keyed by endpoint pair.
    pub fn expected_time_map(&self) -> HashMap<EdgeKey, f64> {
        self.edges.iter().map(|e| (e.key(), e.expected_time)).collect()
    }

    pub fn is_connected(&self) -> bool {
        let mut components = Components::new(self.nodes.len());
        for edge in &self.edges {
            components.union(edge.i, edge.j);
        }
        components.count() == 1
    }

    /// Copy of this graph with the given edges removed.
    ///
    /// Node ids are preserved. The subgraph may be disconnected; route
    /// planning on it simply fails to decode across missing links.
    pub fn without_edges(&self, banned: &std::collections::BTreeSet<EdgeKey>) -> Self {
        let mut edges = Vec::new();
        let mut adjacency = vec![Vec::new(); self.nodes.len()];
        for edge in &self.edges {
            if banned.contains(&edge.key()) {
                continue;
            }
            adjacency[edge.i].push(edges.len());
            adjacency[edge.j].push(edges.len());
            edges.push(*edge);
        }
        Self {
            nodes: self.nodes.clone(),
            edges,
            adjacency,
            bounds: self.bounds,
            cruise_speed: self.cruise_speed,
            seed: self.seed,
        }
    }

    /// Whether `target` is reachable from `start`.
    pub fn reachable(&self, start: usize, target: usize) -> bool {
        let mut components = Components::new(self.nodes.len());
        for edge in &self.edges {
            components.union(edge.i, edge.j);
        }
        components.find(start) == components.find(target)
    }

    /// Node nearest the volume's minimum corner (default mission start).
    pub fn node_nearest_min_corner(&self) -> usize {
        self.nearest_to([0.0, 0.0, 0.0])
    }

    /// Node nearest the volume's maximum corner (default mission target).
    pub fn node_nearest_max_corner(&self) -> usize {
        self.nearest_to(self.bounds)
    }

    fn nearest_to(&self, point: [f64; 3]) -> usize {
        let probe = Node { id: usize::MAX, position: point };
        self.nodes
            .iter()
            .min_by(|a, b| {
                edge_length(a, &probe)
                    .partial_cmp(&edge_length(b, &probe))
                    .expect("finite distances")
            })
            .expect("non-empty graph")
            .id
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            bounds: self.bounds,
            cruise_speed: self.cruise_speed,
            seed: self.seed,
            positions: self.nodes.iter().map(|n| n.position).collect(),
            edges: self.edges.iter().map(|e| [e.i, e.j]).collect(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), GraphError> {
        let json = serde_json::to_string_pretty(&self.to_file())?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, GraphError> {
        let file: GraphFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let nodes = file
            .positions
            .iter()
            .enumerate()
            .map(|(id, &position)| Node { id, position })
            .collect();
        let pairs: Vec<EdgeKey> = file.edges.iter().map(|e| (e[0], e[1])).collect();
        Self::from_parts(nodes, &pairs, file.bounds, file.cruise_speed, file.seed)
    }
}

/// Union-find over node ids.
struct Components {
    parent: Vec<usize>,
    count: usize,
}

impl Components {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), count: n }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
            self.count -= 1;
        }
    }

    fn count(&self) -> usize {
        self.count
    }
}
