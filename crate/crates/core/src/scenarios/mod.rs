//! Scenario generation and the end-to-end planning pipeline.
//!
//! A run generates a distribution network and its decision program from a
//! seeded configuration, scores the distributors, fits the risk gate on
//! generated history, plans one main path per customer cluster, solves the
//! bilevel program with the guided swarm and simulates a number of
//! statistical cycles to report cost and on-time figures.
//!
//! The generators are calibrated to orders of magnitude only (unit cost of
//! one to three CNY per piece, on-time rates of 95 to 99 percent); they do
//! not model any real network.

mod compare;
mod finance;
mod generate;

use std::io::Write;

use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use compare::{
    compare_baseline, compare_batch, compare_leader, compare_leader_warm, improvement_pct, improvement_rows, summarize,
    BatchRow, ComparisonTable, ImprovementRow, LeaderComparison, Metric, Outcome, COMPARISON_GRID_STEP,
};
pub use finance::{
    adapt_finance, finance_metrics, finance_preference, CreditLevel, FinanceConfig, FinanceMetrics, FinanceParams,
    FinancingMode, CYCLES,
};
pub use generate::{
    cluster_count, decision_indices, generate_instance, true_event_probability, ScenarioInstance, BASE_DEMAND_NATIONAL,
    BASE_DEMAND_REGIONAL, HIGH_PRIORITY_FACTOR,
};

use crate::bilevel::{feasible, BilevelProblem, DecisionVector, FollowerMode};
use crate::network::{best_route, k_shortest_paths, NetworkGraph, RouteCandidate};
use crate::risk::{RiskGate, DEFAULT_Q_MAX};
use crate::swarm::{run, BilevelSearch, GuidanceController, SwarmConfig, SwarmResult};
use generate::{stream, STREAM_CYCLE, STREAM_GUIDANCE, STREAM_SWARM};

pub const ALLOWED_DISTRIBUTORS: [usize; 5] = [3, 5, 7, 8, 10];
/// Latent factors behind the risk indices.
pub const RISK_FACTORS: usize = 3;
/// Candidate paths considered per customer cluster.
pub const ROUTE_CANDIDATES: usize = 5;
/// Simulated deliveries per statistical cycle.
pub const DELIVERIES_PER_CYCLE: u64 = 20_000;
/// Largest unit-cost reduction the decision program can deliver.
pub const MAX_SAVINGS: f64 = 0.08;
/// Relative standard deviation of per-cycle cost noise.
pub const CYCLE_COST_NOISE: f64 = 0.02;
/// Fixed quarterly cost per distributor (CNY).
pub const FIXED_COST_PER_DISTRIBUTOR: f64 = 120_000.0;
/// Fixed quarterly cost per kilometre of network links (CNY).
pub const FIXED_COST_PER_KM: f64 = 400.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{stage} stage failed: {message}")]
    Stage { stage: &'static str, message: String },
}

impl ScenarioError {
    pub fn stage(stage: &'static str, err: impl std::fmt::Display) -> Self {
        ScenarioError::Stage { stage, message: err.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NetworkScale {
    Regional,
    National,
}

impl NetworkScale {
    pub fn as_str(self) -> &'static str {
        match self {
            NetworkScale::Regional => "regional",
            NetworkScale::National => "national",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub distributors: usize,
    /// Transport cost, distribution efficiency, inventory safety, service
    /// quality and emergency response weights. Only ratios matter.
    pub weights: [f64; 5],
    /// Eight-bit node priority pattern; bit `i mod 8` marks node `i` as
    /// high priority.
    pub pn_sequence: String,
    pub demand_multiplier: f64,
    pub distance_multiplier: f64,
    pub network_scale: NetworkScale,
    pub seed: u64,
    /// Statistical cycles simulated per run.
    pub replications: usize,
    /// Nominal sampling rate, carried into reports as metadata.
    pub sampling_khz: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            distributors: 5,
            weights: [0.38, 0.62, 0.27, 0.24, 0.06],
            pn_sequence: "01100101".into(),
            demand_multiplier: 1.0,
            distance_multiplier: 1.0,
            network_scale: NetworkScale::Regional,
            seed: 0,
            replications: 4,
            sampling_khz: 250.0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let fail = |m: String| Err(ScenarioError::InvalidConfig(m));
        if !ALLOWED_DISTRIBUTORS.contains(&self.distributors) {
            return fail(format!("distributors {} not in {ALLOWED_DISTRIBUTORS:?}", self.distributors));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) || self.weights.iter().sum::<f64>() <= 0.0 {
            return fail(format!("weights {:?} must be nonnegative with a positive sum", self.weights));
        }
        for (name, m) in
            [("demand_multiplier", self.demand_multiplier), ("distance_multiplier", self.distance_multiplier)]
        {
            if !(m > 0.0 && m.is_finite()) {
                return fail(format!("{name} {m} must be positive"));
            }
        }
        if self.replications == 0 {
            return fail("replications must be at least 1".into());
        }
        self.pn_bits().map(|_| ())
    }

    pub fn pn_bits(&self) -> Result<[bool; 8], ScenarioError> {
        let chars: Vec<char> = self.pn_sequence.chars().collect();
        if chars.len() != 8 || chars.iter().any(|c| *c != '0' && *c != '1') {
            return Err(ScenarioError::InvalidConfig(format!(
                "pn_sequence {:?} must be 8 binary digits",
                self.pn_sequence
            )));
        }
        Ok(std::array::from_fn(|i| chars[i] == '1'))
    }

    pub fn normalized_weights(&self) -> [f64; 5] {
        let s: f64 = self.weights.iter().sum();
        self.weights.map(|w| w / s)
    }
}

/// Controller settings for guided runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GuidanceSettings {
    pub epsilon: f64,
    pub period: usize,
}

impl Default for GuidanceSettings {
    fn default() -> Self {
        Self { epsilon: 0.1, period: 10 }
    }
}

/// Swarm settings used by the pipeline unless a config overrides them.
pub fn pipeline_swarm_defaults() -> SwarmConfig {
    SwarmConfig { population: 60, iterations: 150, ..SwarmConfig::default() }
}

/// Everything a JSON experiment file may hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub finance: Option<FinanceConfig>,
    #[serde(default)]
    pub swarm: Option<SwarmConfig>,
    #[serde(default)]
    pub guidance: Option<GuidanceSettings>,
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self, ScenarioError> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| ScenarioError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.scenario.validate()?;
        if let Some(f) = &self.finance {
            f.validate().map_err(ScenarioError::InvalidConfig)?;
        }
        if let Some(s) = &self.swarm {
            s.validate().map_err(|e| ScenarioError::InvalidConfig(e.to_string()))?;
        }
        Ok(())
    }

    pub fn swarm_config(&self) -> SwarmConfig {
        self.swarm.clone().unwrap_or_else(pipeline_swarm_defaults)
    }

    pub fn guidance_settings(&self) -> GuidanceSettings {
        self.guidance.unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub cycle: usize,
    /// CNY per piece.
    pub unit_cost: f64,
    pub on_time_rate: f64,
    /// 10,000 CNY per quarter.
    pub min_operating_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinanceReport {
    pub config: FinanceConfig,
    pub metrics: FinanceMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub network_scale: NetworkScale,
    pub distributors: usize,
    pub seed: u64,
    pub demand_multiplier: f64,
    pub distance_multiplier: f64,
    pub sampling_khz: f64,
    pub main_paths: usize,
    /// Demand-weighted length of the chosen main paths, km.
    pub mean_route_km: f64,
    pub total_demand: f64,
    pub leader_value: f64,
    /// Leader value rescaled to `[0, 1]` over the leader's box.
    pub savings_index: f64,
    /// Largest predicted event probability of the chosen decision.
    pub solution_risk: f64,
    /// Means over cycles.
    pub unit_cost: f64,
    pub on_time_rate: f64,
    pub min_operating_cost: f64,
    pub decision_code: String,
    pub decision: Vec<f64>,
    pub cycles: Vec<CycleReport>,
    pub finance: Option<FinanceReport>,
    pub swarm_evaluations: usize,
}

/// A planned solution together with the swarm run that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub report: RunReport,
    pub decision: DecisionVector,
    pub swarm: SwarmResult,
}

/// Ten bits: 1 where the flattened decision lies above its box midpoint.
/// Shorter vectors are padded with zeros, longer ones truncated.
pub fn decision_code(problem: &BilevelProblem, x: &DecisionVector) -> String {
    let mids = problem.bounds.iter().flatten().map(|b| 0.5 * (b[0] + b[1]));
    let mut bits: String = x.flatten().iter().zip(mids).map(|(v, m)| if *v > m { '1' } else { '0' }).take(10).collect();
    while bits.len() < 10 {
        bits.push('0');
    }
    bits
}

/// One chosen main path per customer cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedRoute {
    pub cluster: usize,
    pub nodes: Vec<usize>,
    pub length: f64,
    pub score: f64,
}

/// Chooses among the shortest loopless hub-to-cluster paths by route score.
/// A node's satisfaction with a path is the path's detour efficiency
/// (shortest length over path length) scaled by the node's spare capacity.
pub fn plan_routes(inst: &ScenarioInstance) -> Result<Vec<PlannedRoute>, ScenarioError> {
    let g: &NetworkGraph = &inst.graph;
    let spare = |id: usize| -> Result<f64, ScenarioError> {
        let n = &g.nodes[g.position(id).map_err(|e| ScenarioError::stage("paths", e))?];
        Ok((1.0 - n.load / n.capacity).clamp(0.0, 1.0))
    };
    let mut out = Vec::with_capacity(inst.clusters.len());
    for &c in &inst.clusters {
        let paths = k_shortest_paths(g, inst.hub, c, ROUTE_CANDIDATES).map_err(|e| ScenarioError::stage("paths", e))?;
        let Some(shortest) = paths.first().map(|p| p.1) else {
            return Err(ScenarioError::stage("paths", format!("cluster {c} unreachable")));
        };
        let mut candidates = Vec::with_capacity(paths.len());
        for (nodes, len) in &paths {
            let eff = if *len > 0.0 { shortest / len } else { 1.0 };
            let satisfaction =
                nodes.iter().map(|&id| Ok(eff * (0.5 + 0.5 * spare(id)?))).collect::<Result<_, ScenarioError>>()?;
            candidates.push(RouteCandidate { nodes: nodes.clone(), satisfaction });
        }
        let (best, score) = best_route(&candidates, g).map_err(|e| ScenarioError::stage("paths", e))?;
        let length = paths.iter().find(|p| p.0 == best.nodes).map(|p| p.1).expect("chosen from candidates");
        out.push(PlannedRoute { cluster: c, nodes: best.nodes, length, score });
    }
    Ok(out)
}

pub(crate) fn mean_route_km(inst: &ScenarioInstance, routes: &[PlannedRoute]) -> f64 {
    let total = inst.total_demand();
    routes.iter().zip(&inst.demand).map(|(r, d)| r.length * d).sum::<f64>() / total
}

/// Base unit cost (CNY/piece) for a demand-weighted main path length.
pub fn base_unit_cost(mean_route_km: f64) -> f64 {
    1.1 + 0.41 * (1.0 + mean_route_km / 50.0).ln()
}

/// Delivery-on-time probability for a path length and leader decision
/// (consolidation slows, expediting speeds up).
pub fn on_time_probability(mean_route_km: f64, leader: &[f64]) -> f64 {
    (0.988 - 0.0045 * (1.0 + mean_route_km / 50.0).ln() + 0.004 * leader[1] - 0.003 * leader[0]).clamp(0.5, 0.999)
}

fn leader_range(p: &BilevelProblem) -> (f64, f64) {
    let mut lo = 0.0;
    let mut hi = 0.0;
    for (coeffs, bounds) in p.leader_coeffs.iter().zip(&p.bounds) {
        for (c, b) in coeffs.iter().zip(bounds) {
            let (a, z) = (c * b[0].max(0.0), c * b[1]);
            lo += a.min(z);
            hi += a.max(z);
        }
    }
    (lo, hi)
}

pub(crate) struct Evaluated {
    pub leader_value: f64,
    pub savings_index: f64,
    pub solution_risk: f64,
    pub cycles: Vec<CycleReport>,
}

/// Simulates the statistical cycles for a decision. Cycle noise comes from
/// streams that depend only on the seed and cycle index.
pub(crate) fn evaluate_decision(
    cfg: &ScenarioConfig,
    inst: &ScenarioInstance,
    gate: &RiskGate,
    mean_km: f64,
    x: &DecisionVector,
) -> Result<Evaluated, ScenarioError> {
    if !feasible(&inst.problem, x).map_err(|e| ScenarioError::stage("metrics", e))? {
        return Err(ScenarioError::stage("metrics", "reported decision violates the constraints"));
    }
    let leader_value = inst.problem.raw_leader_objective(x);
    let (lo, hi) = leader_range(&inst.problem);
    let savings_index = if hi > lo { ((leader_value - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.0 };
    let solution_risk = gate.max_risk(&decision_indices(&inst.problem, x));
    let base = base_unit_cost(mean_km) * (1.0 - MAX_SAVINGS * savings_index);
    let p_on = on_time_probability(mean_km, x.leader());
    let link_km: f64 = inst.graph.edges.iter().map(|e| e.w).sum();
    let fixed = FIXED_COST_PER_DISTRIBUTOR * inst.distributors.len() as f64 + FIXED_COST_PER_KM * link_km;
    let volume = inst.total_demand();
    let binomial = Binomial::new(DELIVERIES_PER_CYCLE, p_on).map_err(|e| ScenarioError::stage("metrics", e))?;

    let cycles = (0..cfg.replications)
        .map(|c| {
            let mut rng = stream(cfg.seed, STREAM_CYCLE + c as u64);
            let z: f64 = StandardNormal.sample(&mut rng);
            let unit_cost = base * (1.0 + CYCLE_COST_NOISE * z.clamp(-3.0, 3.0));
            let on_time = binomial.sample(&mut rng) as f64 / DELIVERIES_PER_CYCLE as f64;
            CycleReport {
                cycle: c + 1,
                unit_cost,
                on_time_rate: on_time,
                min_operating_cost: (volume * unit_cost + fixed) / 1e4,
            }
        })
        .collect();
    Ok(Evaluated { leader_value, savings_index, solution_risk, cycles })
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n.max(1) as f64
}

pub(crate) fn assemble_report(
    cfg: &ScenarioConfig,
    inst: &ScenarioInstance,
    mean_km: f64,
    x: &DecisionVector,
    ev: Evaluated,
    finance: Option<FinanceReport>,
    swarm_evaluations: usize,
) -> RunReport {
    RunReport {
        network_scale: cfg.network_scale,
        distributors: cfg.distributors,
        seed: cfg.seed,
        demand_multiplier: cfg.demand_multiplier,
        distance_multiplier: cfg.distance_multiplier,
        sampling_khz: cfg.sampling_khz,
        main_paths: inst.main_paths(),
        mean_route_km: mean_km,
        total_demand: inst.total_demand(),
        leader_value: ev.leader_value,
        savings_index: ev.savings_index,
        solution_risk: ev.solution_risk,
        unit_cost: mean(ev.cycles.iter().map(|c| c.unit_cost)),
        on_time_rate: mean(ev.cycles.iter().map(|c| c.on_time_rate)),
        min_operating_cost: mean(ev.cycles.iter().map(|c| c.min_operating_cost)),
        decision_code: decision_code(&inst.problem, x),
        decision: x.flatten(),
        cycles: ev.cycles,
        finance,
        swarm_evaluations,
    }
}

pub(crate) fn fit_gate(inst: &ScenarioInstance) -> Result<RiskGate, ScenarioError> {
    RiskGate::fit(&inst.risk, RISK_FACTORS, DEFAULT_Q_MAX).map_err(|e| ScenarioError::stage("risk", e))
}

pub(crate) fn derived_seed(seed: u64, id: u64) -> u64 {
    use rand::RngCore;
    stream(seed, id).next_u64()
}

/// Full pipeline with guidance at default settings.
pub fn run_pipeline(
    cfg: &ScenarioConfig,
    finance: Option<&FinanceConfig>,
    swarm: &SwarmConfig,
) -> Result<PipelineOutput, ScenarioError> {
    run_pipeline_with(cfg, finance, swarm, Some(GuidanceSettings::default()))
}

/// Pipeline with explicit guidance settings; `None` runs the plain swarm.
/// The swarm and controller seeds are derived from the scenario seed.
pub fn run_pipeline_with(
    cfg: &ScenarioConfig,
    finance: Option<&FinanceConfig>,
    swarm: &SwarmConfig,
    guidance: Option<GuidanceSettings>,
) -> Result<PipelineOutput, ScenarioError> {
    if let Some(f) = finance {
        f.validate().map_err(ScenarioError::InvalidConfig)?;
    }
    let inst = generate_instance(cfg)?;
    let gate = fit_gate(&inst)?;
    let routes = plan_routes(&inst)?;
    let mean_km = mean_route_km(&inst, &routes);

    let safety = |d: &DecisionVector| gate.is_safe(&decision_indices(&inst.problem, d));
    let search = BilevelSearch::new(&inst.problem, FollowerMode::Exact)
        .map_err(|e| ScenarioError::stage("bilevel", e))?
        .with_safety(&safety);
    let mut sc = swarm.clone();
    sc.seed = derived_seed(cfg.seed, STREAM_SWARM);
    let mut gc = match guidance {
        Some(g) => Some(
            GuidanceController::new(g.epsilon, derived_seed(cfg.seed, STREAM_GUIDANCE))
                .map_err(|e| ScenarioError::stage("bilevel", e))?
                .with_period(g.period),
        ),
        None => None,
    };
    let result = run(&search, &sc, gc.as_mut()).map_err(|e| ScenarioError::stage("bilevel", e))?;
    let decision = search
        .decision(&result.best_position)
        .ok_or_else(|| ScenarioError::stage("bilevel", "best leader decision has no feasible follower reaction"))?;

    let ev = evaluate_decision(cfg, &inst, &gate, mean_km, &decision)?;
    let finance = finance.map(|fc| {
        let unit_cost = mean(ev.cycles.iter().map(|c| c.unit_cost));
        FinanceReport { config: fc.clone(), metrics: finance_metrics(unit_cost, ev.solution_risk, fc) }
    });
    let report = assemble_report(cfg, &inst, mean_km, &decision, ev, finance, result.evaluations);
    Ok(PipelineOutput { report, decision, swarm: result })
}

/// One CSV row per statistical cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRow {
    pub seed: u64,
    pub network_scale: String,
    pub distributors: usize,
    pub demand_multiplier: f64,
    pub distance_multiplier: f64,
    pub cycle: usize,
    pub unit_cost: f64,
    pub on_time_rate: f64,
    pub min_operating_cost: f64,
    pub decision_code: String,
    pub financing_cost_rate: Option<f64>,
    pub capital_turnover: Option<f64>,
    pub credit_risk_rate: Option<f64>,
    pub net_profit_rate: Option<f64>,
}

impl RunReport {
    pub fn cycle_rows(&self) -> Vec<CycleRow> {
        let f = self.finance.as_ref().map(|f| f.metrics);
        self.cycles
            .iter()
            .map(|c| CycleRow {
                seed: self.seed,
                network_scale: self.network_scale.as_str().into(),
                distributors: self.distributors,
                demand_multiplier: self.demand_multiplier,
                distance_multiplier: self.distance_multiplier,
                cycle: c.cycle,
                unit_cost: c.unit_cost,
                on_time_rate: c.on_time_rate,
                min_operating_cost: c.min_operating_cost,
                decision_code: self.decision_code.clone(),
                financing_cost_rate: f.map(|m| m.financing_cost_rate),
                capital_turnover: f.map(|m| m.capital_turnover),
                credit_risk_rate: f.map(|m| m.credit_risk_rate),
                net_profit_rate: f.map(|m| m.net_profit_rate),
            })
            .collect()
    }
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepFactor {
    Demand,
    Distance,
}

impl SweepFactor {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepFactor::Demand => "demand",
            SweepFactor::Distance => "distance",
        }
    }

    pub fn default_levels(self) -> Vec<f64> {
        match self {
            SweepFactor::Demand => vec![0.5, 0.6, 1.3, 1.5],
            SweepFactor::Distance => vec![0.6, 0.7, 1.3, 1.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub factor: String,
    pub level: f64,
    pub min_operating_cost: f64,
    pub unit_cost: f64,
    pub decision_code: String,
}

/// Runs the pipeline once per level of one multiplier; all other settings,
/// including the seed, stay fixed. Levels run concurrently.
pub fn sweep(
    cfg: &ScenarioConfig,
    factor: SweepFactor,
    levels: &[f64],
    swarm: &SwarmConfig,
    guidance: Option<GuidanceSettings>,
) -> Result<Vec<SweepRow>, ScenarioError> {
    if levels.len() < 2 {
        return Err(ScenarioError::InvalidConfig(format!("a sweep needs at least two levels, got {}", levels.len())));
    }
    levels
        .par_iter()
        .map(|&level| {
            let mut c = cfg.clone();
            match factor {
                SweepFactor::Demand => c.demand_multiplier = level,
                SweepFactor::Distance => c.distance_multiplier = level,
            }
            let out = run_pipeline_with(&c, None, swarm, guidance)?;
            Ok(SweepRow {
                factor: factor.as_str().into(),
                level,
                min_operating_cost: out.report.min_operating_cost,
                unit_cost: out.report.unit_cost,
                decision_code: out.report.decision_code,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinanceRow {
    pub mode: String,
    pub credit: String,
    pub cycle_days: u32,
    pub financing_cost_rate: f64,
    pub capital_turnover: f64,
    pub credit_risk_rate: f64,
    pub net_profit_rate: f64,
}

/// Finance metrics of one solution under every mode, credit level and cycle.
pub fn finance_table(report: &RunReport, base: &FinanceConfig) -> Vec<FinanceRow> {
    let mut rows = Vec::with_capacity(27);
    for mode in FinancingMode::ALL {
        for credit in CreditLevel::ALL {
            for days in CYCLES {
                let fc = FinanceConfig { mode, credit, cycle_days: days, ..base.clone() };
                let m = finance_metrics(report.unit_cost, report.solution_risk, &fc);
                rows.push(FinanceRow {
                    mode: mode.as_str().into(),
                    credit: credit.as_str().into(),
                    cycle_days: days,
                    financing_cost_rate: m.financing_cost_rate,
                    capital_turnover: m.capital_turnover,
                    credit_risk_rate: m.credit_risk_rate,
                    net_profit_rate: m.net_profit_rate,
                });
            }
        }
    }
    rows
}
