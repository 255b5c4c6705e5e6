//! Synthetic distribution networks, decision programs and risk histories.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{NetworkScale, ScenarioConfig, ScenarioError};
use crate::bilevel::{BilevelProblem, Matrix};
use crate::indicators::{normalize_matrix, IndicatorMatrix, Orientation};
use crate::math::sigmoid;
use crate::network::{Edge, NetworkGraph, Node};
use crate::risk::{RiskDataset, CATEGORIES};

/// Quarterly demand (pieces) at multiplier 1.
pub const BASE_DEMAND_REGIONAL: f64 = 2.0e6;
pub const BASE_DEMAND_NATIONAL: f64 = 8.0e6;
/// Importance multiplier for nodes whose sequence bit is set.
pub const HIGH_PRIORITY_FACTOR: f64 = 1.5;
/// Historical samples in the generated risk dataset.
pub const RISK_SAMPLES: usize = 600;
/// Assessment indices per sample; see [`decision_indices`].
pub const RISK_INDICES: usize = 6;

// Independent random streams per concern, so changing a multiplier never
// changes anything but the quantity it scales.
pub(crate) const STREAM_NETWORK: u64 = 1;
pub(crate) const STREAM_DEMAND: u64 = 2;
pub(crate) const STREAM_PROBLEM: u64 = 3;
pub(crate) const STREAM_RISK: u64 = 4;
pub(crate) const STREAM_SWARM: u64 = 5;
pub(crate) const STREAM_GUIDANCE: u64 = 6;
pub(crate) const STREAM_CYCLE: u64 = 100;

pub(crate) fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Everything the pipeline needs about one generated scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioInstance {
    pub graph: NetworkGraph,
    pub problem: BilevelProblem,
    pub risk: RiskDataset,
    pub hub: usize,
    pub distributors: Vec<usize>,
    pub clusters: Vec<usize>,
    /// Quarterly demand per cluster, aligned with `clusters`.
    pub demand: Vec<f64>,
    /// Share of total demand served through each distributor.
    pub shares: Vec<f64>,
    /// Raw distributor indicators: transport cost, distribution efficiency,
    /// inventory safety, service quality, emergency response time.
    pub indicators: IndicatorMatrix,
    /// Weighted normalized indicator score per distributor, in `[0, 1]`.
    pub node_scores: Vec<f64>,
}

impl ScenarioInstance {
    pub fn total_demand(&self) -> f64 {
        self.demand.iter().sum()
    }

    pub fn main_paths(&self) -> usize {
        self.clusters.len()
    }
}

struct Geography {
    distributor_radius: f64,
    cluster_radius: [f64; 2],
    base_demand: f64,
}

fn geography(scale: NetworkScale) -> Geography {
    match scale {
        NetworkScale::Regional => {
            Geography { distributor_radius: 30.0, cluster_radius: [45.0, 70.0], base_demand: BASE_DEMAND_REGIONAL }
        }
        NetworkScale::National => {
            Geography { distributor_radius: 550.0, cluster_radius: [900.0, 1300.0], base_demand: BASE_DEMAND_NATIONAL }
        }
    }
}

pub fn cluster_count(scale: NetworkScale, distributors: usize) -> usize {
    match scale {
        NetworkScale::Regional => distributors.min(5),
        NetworkScale::National => 2 * distributors + 6,
    }
}

fn dist(a: &Node, b: &Node) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}

pub fn generate_instance(cfg: &ScenarioConfig) -> Result<ScenarioInstance, ScenarioError> {
    cfg.validate()?;
    let l = cfg.distributors;
    let p = cluster_count(cfg.network_scale, l);
    let geo = geography(cfg.network_scale);
    let bits = cfg.pn_bits()?;
    let mut net = stream(cfg.seed, STREAM_NETWORK);

    let mut nodes = Vec::with_capacity(1 + l + p);
    let place = |rng: &mut ChaCha8Rng, id: usize, angle: f64, radius: f64| {
        let load = rng.random_range(0.3..0.8);
        let capacity = load + rng.random_range(0.2..0.7);
        Node {
            id,
            x: cfg.distance_multiplier * radius * angle.cos(),
            y: cfg.distance_multiplier * radius * angle.sin(),
            load,
            capacity,
            importance: 1.0,
        }
    };
    nodes.push(place(&mut net, 0, 0.0, 0.0));
    let tau = std::f64::consts::TAU;
    for d in 0..l {
        let angle = tau * (d as f64 + net.random_range(-0.2..0.2)) / l as f64;
        let radius = geo.distributor_radius * net.random_range(0.8..1.2);
        nodes.push(place(&mut net, 1 + d, angle, radius));
    }
    for c in 0..p {
        let angle = tau * (c as f64 + net.random_range(-0.3..0.3)) / p as f64;
        let radius = net.random_range(geo.cluster_radius[0]..geo.cluster_radius[1]);
        nodes.push(place(&mut net, 1 + l + c, angle, radius));
    }

    let tortuosity = |rng: &mut ChaCha8Rng| 1.0 + rng.random_range(0.05..0.3);
    let mut edges = Vec::new();
    for d in 1..=l {
        let w = dist(&nodes[0], &nodes[d]) * tortuosity(&mut net);
        edges.push(Edge { i: 0, j: d, w });
    }
    for d in 1..=l {
        let next = d % l + 1;
        let w = dist(&nodes[d], &nodes[next]) * tortuosity(&mut net);
        edges.push(Edge { i: d, j: next, w });
    }
    let mut nearest = Vec::with_capacity(p);
    for c in (1 + l)..(1 + l + p) {
        let mut order: Vec<usize> = (1..=l).collect();
        order.sort_by(|&a, &b| dist(&nodes[c], &nodes[a]).total_cmp(&dist(&nodes[c], &nodes[b])));
        nearest.push(order[0]);
        for &d in order.iter().take(2) {
            let w = dist(&nodes[c], &nodes[d]) * tortuosity(&mut net);
            edges.push(Edge { i: d, j: c, w });
        }
    }

    // Distributor indicators, then the weighted normalized score.
    let mut values = Vec::with_capacity(l);
    for _ in 0..l {
        values.push(vec![
            net.random_range(2.0..6.0),
            net.random_range(200.0..800.0),
            net.random_range(5.0..30.0),
            net.random_range(60.0..100.0),
            net.random_range(2.0..24.0),
        ]);
    }
    use Orientation::{Benefit, Cost};
    let indicators = IndicatorMatrix::new(values, vec![Cost, Benefit, Benefit, Benefit, Cost])
        .map_err(|e| ScenarioError::stage("indicators", e))?;
    let normalized = normalize_matrix(&indicators).map_err(|e| ScenarioError::stage("indicators", e))?;
    let w = cfg.normalized_weights();
    let node_scores: Vec<f64> =
        normalized.values.iter().map(|row| row.iter().zip(&w).map(|(v, wi)| v * wi).sum()).collect();

    for node in nodes.iter_mut() {
        let base = if (1..=l).contains(&node.id) { 0.5 + node_scores[node.id - 1] } else { 1.0 };
        let factor = if bits[node.id % 8] { HIGH_PRIORITY_FACTOR } else { 1.0 };
        node.importance = base * factor;
    }

    let mut dem = stream(cfg.seed, STREAM_DEMAND);
    let raw: Vec<f64> = (0..p).map(|_| dem.random_range(0.5..1.5)).collect();
    let raw_sum: f64 = raw.iter().sum();
    let total = geo.base_demand * cfg.demand_multiplier;
    let demand: Vec<f64> = raw.iter().map(|r| total * r / raw_sum).collect();
    let mut shares = vec![0.0; l];
    for (c, &d) in nearest.iter().enumerate() {
        shares[d - 1] += raw[c] / raw_sum;
    }

    let graph = NetworkGraph { nodes, edges };
    graph.validate().map_err(|e| ScenarioError::stage("network", e))?;
    let problem = decision_program(cfg, &shares, &node_scores);
    problem.validate().map_err(|e| ScenarioError::stage("bilevel", e))?;
    let risk = risk_history(cfg.seed);

    Ok(ScenarioInstance {
        graph,
        problem,
        risk,
        hub: 0,
        distributors: (1..=l).collect(),
        clusters: ((1 + l)..(1 + l + p)).collect(),
        demand,
        shares,
        indicators,
        node_scores,
    })
}

/// Leader block `(a, e)`: consolidation level and expedite share.
/// Follower `v` block `(s_v, r_v)`: distributor `v`'s own-fleet share and
/// safety-stock level. Rows: fleet capacity, warehouse capacity, labor.
/// Capacities shrink as demand grows.
fn decision_program(cfg: &ScenarioConfig, shares: &[f64], scores: &[f64]) -> BilevelProblem {
    let mut rng = stream(cfg.seed, STREAM_PROBLEM);
    let mut jitter = || rng.random_range(0.9..1.1);
    let [w_cost, _, w_safety, w_quality, w_emergency] = cfg.normalized_weights();
    let k = shares.len();

    let mut leader_coeffs = vec![vec![0.8 * w_cost * jitter(), (w_quality + w_emergency - 0.5 * w_cost) * jitter()]];
    for &sh in shares {
        leader_coeffs.push(vec![0.6 * w_cost * sh * jitter(), (0.8 * w_safety - 0.2 * w_cost) * sh * jitter()]);
    }

    let mut follower_coeffs = Vec::with_capacity(k);
    for (v, &score) in scores.iter().enumerate() {
        let mut blocks = vec![vec![0.0; 2]; k + 1];
        blocks[v + 1] = vec![(0.2 + 0.6 * score) * jitter(), 0.3 * (score - 0.5) * jitter()];
        follower_coeffs.push(blocks);
    }

    let mut constraint_blocks =
        vec![Matrix::from_rows(&[vec![0.4 * jitter(), 0.0], vec![0.0, 0.3 * jitter()], vec![0.5, 0.5]])];
    for &sh in shares {
        constraint_blocks.push(Matrix::from_rows(&[
            vec![sh * jitter(), 0.0],
            vec![0.0, sh * jitter()],
            vec![0.3 * sh, 0.2 * sh],
        ]));
    }
    let rhs = [0.7, 0.8, 0.9].iter().map(|b| b / cfg.demand_multiplier).collect();

    BilevelProblem {
        k,
        leader_coeffs,
        follower_coeffs,
        constraint_blocks,
        rhs,
        bounds: vec![vec![[0.0, 1.0]; 2]; k + 1],
    }
}

/// Loadings of the six assessment indices on three latent drivers:
/// network load, service pressure and financial strain.
const RISK_LOADINGS: [[f64; 3]; RISK_INDICES] =
    [[1.2, 0.2, 0.1], [0.2, 0.2, 1.1], [0.9, 0.6, 0.0], [0.1, 1.2, 0.2], [0.2, 0.9, 0.4], [0.7, 0.0, 0.8]];

/// Which indices drive each risk category: overload (fleet use,
/// consolidation), delay (consolidation, no expediting), stock-out (stock
/// shortfall, no expediting) and cost overrun (warehouse use, own fleet).
const CATEGORY_DRIVERS: [[usize; 2]; CATEGORIES] = [[0, 2], [2, 3], [4, 3], [1, 5]];

/// Probability of each event category given the six indices. Each category
/// reaches 20% when its two drivers average 0.8.
pub fn true_event_probability(x: &[f64]) -> [f64; CATEGORIES] {
    let mut q = [0.0; CATEGORIES];
    for (c, drivers) in CATEGORY_DRIVERS.iter().enumerate() {
        let z = 0.5 * (x[drivers[0]] + x[drivers[1]]);
        q[c] = sigmoid(-1.386 + 8.0 * (z - 0.8));
    }
    q
}

fn risk_history(seed: u64) -> RiskDataset {
    let mut rng = stream(seed, STREAM_RISK);
    let mut x = Vec::with_capacity(RISK_SAMPLES);
    let mut outcomes = Vec::with_capacity(RISK_SAMPLES);
    for _ in 0..RISK_SAMPLES {
        let f: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let row: Vec<f64> = RISK_LOADINGS
            .iter()
            .map(|l| {
                let noise: f64 = StandardNormal.sample(&mut rng);
                sigmoid(l[0] * f[0] + l[1] * f[1] + l[2] * f[2] + 0.15 * noise)
            })
            .collect();
        let q = true_event_probability(&row);
        outcomes.push(std::array::from_fn(|c| rng.random::<f64>() < q[c]));
        x.push(row);
    }
    RiskDataset { x, outcomes }
}

/// Maps a complete decision vector onto the six assessment indices: fleet
/// utilization, warehouse utilization, consolidation, lack of expediting,
/// stock shortfall and own-fleet reliance.
pub fn decision_indices(problem: &BilevelProblem, x: &crate::bilevel::DecisionVector) -> Vec<f64> {
    let lhs = problem.lhs(x);
    let util = |r: usize| if problem.rhs[r] > 0.0 { (lhs[r] / problem.rhs[r]).clamp(0.0, 1.0) } else { 1.0 };
    let k = problem.k.max(1) as f64;
    let s_mean = x.blocks[1..].iter().map(|b| b[0]).sum::<f64>() / k;
    let r_mean = x.blocks[1..].iter().map(|b| b[1]).sum::<f64>() / k;
    let lead = x.leader();
    vec![util(0), util(1), lead[0], 1.0 - lead[1], 1.0 - r_mean, s_mean]
}
