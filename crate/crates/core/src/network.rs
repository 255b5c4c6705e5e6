//! Supply-chain network: distance matrix, shortest-path closure, the
//! path-control value and satisfaction-maximizing route selection.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exponent arguments in [`path_control`] are clamped to this magnitude.
pub const PATH_CONTROL_CLAMP: f64 = 50.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("duplicate node id {0}")]
    DuplicateNode(usize),
    #[error("unknown node id {0}")]
    UnknownNode(usize),
    #[error("edge ({i}, {j}) has non-positive or non-finite weight {w}")]
    InvalidEdge { i: usize, j: usize, w: f64 },
    #[error("negative distance at ({i}, {j})")]
    NegativeWeight { i: usize, j: usize },
    #[error("node {0} has invalid attributes")]
    InvalidNode(usize),
    #[error("distance matrix is not square")]
    NotSquare,
    #[error("neighbor set is empty")]
    EmptyNeighborhood,
    #[error("no route candidates")]
    EmptyCandidateSet,
    #[error("invalid route: {0}")]
    InvalidRoute(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    /// Load `U` of the node.
    pub load: f64,
    pub capacity: f64,
    /// Importance weight used when scoring routes.
    pub importance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

impl NetworkGraph {
    pub fn from_json_str(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Map from node id to position in `nodes`.
    pub fn index(&self) -> HashMap<usize, usize> {
        self.nodes.iter().enumerate().map(|(k, n)| (n.id, k)).collect()
    }

    pub fn position(&self, id: usize) -> Result<usize, NetworkError> {
        self.nodes.iter().position(|n| n.id == id).ok_or(NetworkError::UnknownNode(id))
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        if self.nodes.is_empty() {
            return Err(NetworkError::EmptyGraph);
        }
        let mut seen = HashSet::new();
        for n in &self.nodes {
            if !seen.insert(n.id) {
                return Err(NetworkError::DuplicateNode(n.id));
            }
            let finite = [n.x, n.y, n.load, n.capacity, n.importance].iter().all(|v| v.is_finite());
            if !finite || n.importance < 0.0 {
                return Err(NetworkError::InvalidNode(n.id));
            }
        }
        for e in &self.edges {
            for end in [e.i, e.j] {
                if !seen.contains(&end) {
                    return Err(NetworkError::UnknownNode(end));
                }
            }
            if !(e.w > 0.0) || !e.w.is_finite() {
                return Err(NetworkError::InvalidEdge { i: e.i, j: e.j, w: e.w });
            }
        }
        Ok(())
    }

    /// Undirected adjacency lists by node position; parallel edges keep
    /// the lightest weight.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let idx = self.index();
        let mut best: HashMap<(usize, usize), f64> = HashMap::new();
        for e in &self.edges {
            let (a, b) = (idx[&e.i], idx[&e.j]);
            if a == b {
                continue;
            }
            let key = (a.min(b), a.max(b));
            let w = best.entry(key).or_insert(e.w);
            *w = w.min(e.w);
        }
        let mut adj = vec![Vec::new(); self.nodes.len()];
        let mut keys: Vec<_> = best.into_iter().collect();
        keys.sort_by_key(|k| k.0);
        for ((a, b), w) in keys {
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        adj
    }
}

/// Dense `n x n` distance matrix in node order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    pub d: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.d.len();
        (0..n).all(|i| (0..n).all(|j| self.d[i][j] == self.d[j][i]))
    }

    pub fn satisfies_triangle_inequality(&self, tol: f64) -> bool {
        let n = self.d.len();
        (0..n).all(|i| (0..n).all(|j| (0..n).all(|k| self.d[i][j] <= self.d[i][k] + self.d[k][j] + tol)))
    }
}

/// Edge weight where an edge exists, Euclidean coordinate distance
/// otherwise; symmetrized by the smaller of the two directions.
pub fn build_distance_matrix(g: &NetworkGraph) -> Result<DistanceMatrix, NetworkError> {
    g.validate()?;
    let n = g.len();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    let idx = g.index();
    for e in &g.edges {
        let (a, b) = (idx[&e.i], idx[&e.j]);
        if a != b {
            d[a][b] = d[a][b].min(e.w);
        }
    }
    for a in 0..n {
        for b in 0..n {
            if a != b && d[a][b].is_infinite() && d[b][a].is_infinite() {
                let (p, q) = (&g.nodes[a], &g.nodes[b]);
                d[a][b] = (p.x - q.x).hypot(p.y - q.y);
            }
        }
    }
    for a in 0..n {
        for b in (a + 1)..n {
            let m = d[a][b].min(d[b][a]);
            d[a][b] = m;
            d[b][a] = m;
        }
    }
    Ok(DistanceMatrix { d })
}

/// Shortest-path closure (Floyd-Warshall).
pub fn all_pairs_shortest(m: &DistanceMatrix) -> Result<DistanceMatrix, NetworkError> {
    let n = m.d.len();
    if n == 0 {
        return Err(NetworkError::EmptyGraph);
    }
    for (i, row) in m.d.iter().enumerate() {
        if row.len() != n {
            return Err(NetworkError::NotSquare);
        }
        for (j, &v) in row.iter().enumerate() {
            if v < 0.0 || v.is_nan() {
                return Err(NetworkError::NegativeWeight { i, j });
            }
        }
    }
    let mut d = m.d.clone();
    for k in 0..n {
        for i in 0..n {
            let dik = d[i][k];
            if dik.is_infinite() {
                continue;
            }
            for j in 0..n {
                let via = dik + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    Ok(DistanceMatrix { d })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathControlParams {
    /// Equivalent constraint quantity per node, in node order.
    pub d_s: Vec<f64>,
    /// Load-difference gain.
    pub gain: f64,
}

impl PathControlParams {
    pub fn uniform(n: usize, d_s: f64) -> Self {
        Self { d_s: vec![d_s; n], gain: 1.0 }
    }
}

/// `d_s(i) * sum_{j in neighbors} exp(gain * (U_j - U_i))`, exponent clamped
/// to `+-PATH_CONTROL_CLAMP`.
pub fn path_control(
    g: &NetworkGraph,
    i: usize,
    neighbors: &[usize],
    p: &PathControlParams,
) -> Result<f64, NetworkError> {
    if neighbors.is_empty() {
        return Err(NetworkError::EmptyNeighborhood);
    }
    let pi = g.position(i)?;
    let ds = *p.d_s.get(pi).ok_or(NetworkError::UnknownNode(i))?;
    let ui = g.nodes[pi].load;
    let mut sum = 0.0;
    for &j in neighbors {
        let uj = g.nodes[g.position(j)?].load;
        sum += (p.gain * (uj - ui)).clamp(-PATH_CONTROL_CLAMP, PATH_CONTROL_CLAMP).exp();
    }
    Ok(ds * sum)
}

/// A route (node ids in visiting order) and each visited node's
/// satisfaction with it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteCandidate {
    pub nodes: Vec<usize>,
    pub satisfaction: Vec<f64>,
}

impl RouteCandidate {
    pub fn validate(&self) -> Result<(), NetworkError> {
        if self.nodes.len() != self.satisfaction.len() {
            return Err(NetworkError::InvalidRoute("one satisfaction per node required".into()));
        }
        let distinct: HashSet<_> = self.nodes.iter().collect();
        if distinct.len() != self.nodes.len() {
            return Err(NetworkError::InvalidRoute("repeated node".into()));
        }
        if self.satisfaction.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(NetworkError::InvalidRoute("satisfaction outside [0, 1]".into()));
        }
        Ok(())
    }
}

/// Route score `sum_i importance_i * satisfaction_i`.
pub fn route_score(candidate: &RouteCandidate, g: &NetworkGraph) -> Result<f64, NetworkError> {
    candidate.validate()?;
    candidate
        .nodes
        .iter()
        .zip(&candidate.satisfaction)
        .map(|(&id, &s)| Ok(g.nodes[g.position(id)?].importance * s))
        .sum()
}

/// Highest-scoring candidate; exact score ties go to the lexicographically
/// smallest node sequence.
pub fn best_route(candidates: &[RouteCandidate], g: &NetworkGraph) -> Result<(RouteCandidate, f64), NetworkError> {
    let mut best: Option<(&RouteCandidate, f64)> = None;
    for c in candidates {
        let m = route_score(c, g)?;
        best = match best {
            None => Some((c, m)),
            Some((b, bm)) => {
                let better = match m.total_cmp(&bm) {
                    Ordering::Greater => true,
                    Ordering::Less => false,
                    Ordering::Equal => c.nodes < b.nodes,
                };
                if better {
                    Some((c, m))
                } else {
                    Some((b, bm))
                }
            }
        };
    }
    best.map(|(c, m)| (c.clone(), m)).ok_or(NetworkError::EmptyCandidateSet)
}

#[derive(Copy, Clone, PartialEq)]
struct State {
    cost: f64,
    node: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra_path(
    adj: &[Vec<(usize, f64)>],
    source: usize,
    sink: usize,
    banned_nodes: &HashSet<usize>,
    banned_edges: &HashSet<(usize, usize)>,
) -> Option<(Vec<usize>, f64)> {
    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(State { cost: 0.0, node: source });
    while let Some(State { cost, node }) = heap.pop() {
        if node == sink {
            break;
        }
        if cost > dist[node] {
            continue;
        }
        for &(next, w) in &adj[node] {
            if banned_nodes.contains(&next) || banned_edges.contains(&(node, next)) {
                continue;
            }
            let c = cost + w;
            if c < dist[next] {
                dist[next] = c;
                prev[next] = node;
                heap.push(State { cost: c, node: next });
            }
        }
    }
    if dist[sink].is_infinite() {
        return None;
    }
    let mut path = vec![sink];
    let mut at = sink;
    while at != source {
        at = prev[at];
        path.push(at);
    }
    path.reverse();
    Some((path, dist[sink]))
}

/// Single-source shortest distances over the edge graph, in node order.
pub fn shortest_from(g: &NetworkGraph, source: usize) -> Result<Vec<f64>, NetworkError> {
    g.validate()?;
    let adj = g.adjacency();
    let s = g.position(source)?;
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    heap.push(State { cost: 0.0, node: s });
    while let Some(State { cost, node }) = heap.pop() {
        if cost > dist[node] {
            continue;
        }
        for &(next, w) in &adj[node] {
            let c = cost + w;
            if c < dist[next] {
                dist[next] = c;
                heap.push(State { cost: c, node: next });
            }
        }
    }
    Ok(dist)
}

/// Up to `k` loopless paths from `source` to `sink` over the edge graph in
/// nondecreasing length (Yen's algorithm). Paths are returned as node ids.
pub fn k_shortest_paths(
    g: &NetworkGraph,
    source: usize,
    sink: usize,
    k: usize,
) -> Result<Vec<(Vec<usize>, f64)>, NetworkError> {
    g.validate()?;
    let adj = g.adjacency();
    let (s, t) = (g.position(source)?, g.position(sink)?);
    let weight = |a: usize, b: usize| adj[a].iter().find(|e| e.0 == b).map(|e| e.1).unwrap_or(f64::INFINITY);
    let length = |p: &[usize]| p.windows(2).map(|w| weight(w[0], w[1])).sum::<f64>();

    let mut found: Vec<(Vec<usize>, f64)> = Vec::new();
    let Some(first) = dijkstra_path(&adj, s, t, &HashSet::new(), &HashSet::new()) else {
        return Ok(found);
    };
    found.push(first);
    let mut pool: Vec<(Vec<usize>, f64)> = Vec::new();
    while found.len() < k {
        let last = found.last().expect("nonempty").0.clone();
        for spur in 0..last.len().saturating_sub(1) {
            let root = &last[..=spur];
            let mut banned_edges = HashSet::new();
            for (p, _) in &found {
                if p.len() > spur + 1 && &p[..=spur] == root {
                    banned_edges.insert((p[spur], p[spur + 1]));
                    banned_edges.insert((p[spur + 1], p[spur]));
                }
            }
            let banned_nodes: HashSet<usize> = root[..spur].iter().copied().collect();
            if let Some((tail, _)) = dijkstra_path(&adj, root[spur], t, &banned_nodes, &banned_edges) {
                let mut path = root[..spur].to_vec();
                path.extend(tail);
                let len = length(&path);
                if !found.iter().any(|(p, _)| *p == path) && !pool.iter().any(|(p, _)| *p == path) {
                    pool.push((path, len));
                }
            }
        }
        if pool.is_empty() {
            break;
        }
        pool.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        found.push(pool.remove(0));
    }
    Ok(found.into_iter().map(|(p, len)| (p.into_iter().map(|k| g.nodes[k].id).collect(), len)).collect())
}
