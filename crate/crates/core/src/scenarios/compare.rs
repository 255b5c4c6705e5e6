//! Full pipeline against a logistics-only baseline.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::{STREAM_GUIDANCE, STREAM_SWARM};
use super::{
    adapt_finance, decision_indices, derived_seed, evaluate_decision, finance_metrics, fit_gate, generate_instance,
    mean, mean_route_km, plan_routes, FinanceConfig, FinanceMetrics, FinancingMode, GuidanceSettings, ScenarioConfig,
    ScenarioError,
};
use crate::bilevel::{oracle_solve, BilevelProblem, DecisionVector, FollowerMode};
use crate::math::mean_sd;
use crate::swarm::{run, BilevelSearch, GuidanceController, SwarmConfig};

/// Swarm and oracle leader values on the same program.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeaderComparison {
    pub oracle_value: f64,
    pub swarm_value: f64,
}

impl LeaderComparison {
    /// Whether the swarm reached `fraction` of the oracle value. Negative
    /// oracle values are handled by measuring the shortfall against |oracle|.
    pub fn attains(&self, fraction: f64) -> bool {
        self.swarm_value >= self.oracle_value - (1.0 - fraction) * self.oracle_value.abs()
    }

    pub fn ratio(&self) -> f64 {
        self.swarm_value / self.oracle_value
    }
}

/// Runs the grid oracle and the swarm with grid followers at the same step.
pub fn compare_leader(
    problem: &BilevelProblem,
    grid_step: f64,
    swarm: &SwarmConfig,
    guidance: Option<&mut GuidanceController>,
) -> Result<LeaderComparison, ScenarioError> {
    let oracle = oracle_solve(problem, grid_step).map_err(|e| ScenarioError::stage("bilevel", e))?;
    let search = BilevelSearch::new(problem, FollowerMode::Grid { step: grid_step })
        .map_err(|e| ScenarioError::stage("bilevel", e))?;
    let result = run(&search, swarm, guidance).map_err(|e| ScenarioError::stage("bilevel", e))?;
    Ok(LeaderComparison { oracle_value: oracle.value, swarm_value: result.best_value })
}

/// Like [`compare_leader`], with one particle started at the oracle's
/// leader decision. The swarm's best value never drops, so it cannot end
/// below the oracle.
pub fn compare_leader_warm(
    problem: &BilevelProblem,
    grid_step: f64,
    swarm: &SwarmConfig,
    guidance: Option<&mut GuidanceController>,
) -> Result<LeaderComparison, ScenarioError> {
    let oracle = oracle_solve(problem, grid_step).map_err(|e| ScenarioError::stage("bilevel", e))?;
    let mut sc = swarm.clone();
    sc.warm_start = vec![oracle.decision.leader().to_vec()];
    compare_leader(problem, grid_step, &sc, guidance)
}

/// Metrics of one side of a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub leader_value: f64,
    pub unit_cost: f64,
    pub solution_risk: f64,
    pub safe: bool,
    pub finance: FinanceConfig,
    pub metrics: FinanceMetrics,
    pub decision: Vec<f64>,
}

impl Outcome {
    /// Mean of three 0-100 scores: financing cost control, credit risk
    /// control and profitability.
    pub fn efficiency_score(&self) -> f64 {
        let m = &self.metrics;
        let cost = (100.0 * (1.0 - m.financing_cost_rate / 10.0)).clamp(0.0, 100.0);
        let risk = (100.0 * (1.0 - m.credit_risk_rate / 5.0)).clamp(0.0, 100.0);
        let perf = (100.0 * m.net_profit_rate / 12.0).clamp(0.0, 100.0);
        (cost + risk + perf) / 3.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    LeaderValue,
    UnitCost,
    FinancingCost,
    NetProfit,
    EfficiencyScore,
}

impl Metric {
    pub const ALL: [Metric; 5] =
        [Metric::LeaderValue, Metric::UnitCost, Metric::FinancingCost, Metric::NetProfit, Metric::EfficiencyScore];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::LeaderValue => "leader_value",
            Metric::UnitCost => "unit_cost",
            Metric::FinancingCost => "financing_cost_rate",
            Metric::NetProfit => "net_profit_rate",
            Metric::EfficiencyScore => "efficiency_score",
        }
    }

    pub fn higher_is_better(self) -> bool {
        !matches!(self, Metric::UnitCost | Metric::FinancingCost)
    }

    pub fn of(self, o: &Outcome) -> f64 {
        match self {
            Metric::LeaderValue => o.leader_value,
            Metric::UnitCost => o.unit_cost,
            Metric::FinancingCost => o.metrics.financing_cost_rate,
            Metric::NetProfit => o.metrics.net_profit_rate,
            Metric::EfficiencyScore => o.efficiency_score(),
        }
    }
}

/// Percent improvement of `full` over `base`; positive means better.
pub fn improvement_pct(metric: Metric, base: f64, full: f64) -> f64 {
    if base.abs() < 1e-12 {
        return 0.0;
    }
    let gain = if metric.higher_is_better() { full - base } else { base - full };
    100.0 * gain / base.abs()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovementRow {
    pub metric: String,
    pub baseline: f64,
    pub full: f64,
    pub improvement_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub seed: u64,
    /// Whether the baseline decision passes the risk gate. The full run
    /// only accepts safe decisions, so it can trail an unsafe baseline.
    pub baseline_safe: bool,
    pub baseline: Outcome,
    pub full: Outcome,
    pub rows: Vec<ImprovementRow>,
}

pub fn improvement_rows(base: &Outcome, full: &Outcome) -> Vec<ImprovementRow> {
    Metric::ALL
        .iter()
        .map(|&m| {
            let (b, f) = (m.of(base), m.of(full));
            ImprovementRow {
                metric: m.as_str().into(),
                baseline: b,
                full: f,
                improvement_pct: improvement_pct(m, b, f),
            }
        })
        .collect()
}

/// Grid step of the baseline oracle and of the full run's followers.
pub const COMPARISON_GRID_STEP: f64 = 0.05;

/// Baseline: grid oracle on the logistics objective, traditional order
/// lending on a 90-day cycle. Full: guided swarm with the risk gate, warm
/// started at the baseline leader decision, then finance adaptation. Both
/// sides share the network, routes and cycle noise.
pub fn compare_baseline(
    cfg: &ScenarioConfig,
    finance: &FinanceConfig,
    swarm: &SwarmConfig,
    guidance: GuidanceSettings,
) -> Result<ComparisonTable, ScenarioError> {
    finance.validate().map_err(ScenarioError::InvalidConfig)?;
    let inst = generate_instance(cfg)?;
    let gate = fit_gate(&inst)?;
    let routes = plan_routes(&inst)?;
    let mean_km = mean_route_km(&inst, &routes);
    let problem = &inst.problem;
    let is_safe = |d: &DecisionVector| gate.is_safe(&decision_indices(problem, d));

    let oracle = oracle_solve(problem, COMPARISON_GRID_STEP).map_err(|e| ScenarioError::stage("bilevel", e))?;
    let base_ev = evaluate_decision(cfg, &inst, &gate, mean_km, &oracle.decision)?;
    let base_cost = mean(base_ev.cycles.iter().map(|c| c.unit_cost));
    let base_fc = finance.with(FinancingMode::OrderLending, 90);
    let baseline = Outcome {
        leader_value: base_ev.leader_value,
        unit_cost: base_cost,
        solution_risk: base_ev.solution_risk,
        safe: is_safe(&oracle.decision),
        metrics: finance_metrics(base_cost, base_ev.solution_risk, &base_fc),
        finance: base_fc,
        decision: oracle.decision.flatten(),
    };

    let search = BilevelSearch::new(problem, FollowerMode::Grid { step: COMPARISON_GRID_STEP })
        .map_err(|e| ScenarioError::stage("bilevel", e))?
        .with_safety(&is_safe);
    let mut sc = swarm.clone();
    sc.seed = derived_seed(cfg.seed, STREAM_SWARM);
    sc.warm_start = vec![oracle.decision.leader().to_vec()];
    let mut gc = GuidanceController::new(guidance.epsilon, derived_seed(cfg.seed, STREAM_GUIDANCE))
        .map_err(|e| ScenarioError::stage("bilevel", e))?
        .with_period(guidance.period);
    let result = run(&search, &sc, Some(&mut gc)).map_err(|e| ScenarioError::stage("bilevel", e))?;
    let decision = search
        .decision(&result.best_position)
        .ok_or_else(|| ScenarioError::stage("bilevel", "best leader decision has no feasible follower reaction"))?;
    let full_ev = evaluate_decision(cfg, &inst, &gate, mean_km, &decision)?;
    let full_cost = mean(full_ev.cycles.iter().map(|c| c.unit_cost));
    let (full_fc, full_metrics) = adapt_finance(full_cost, full_ev.solution_risk, finance);
    let full = Outcome {
        leader_value: full_ev.leader_value,
        unit_cost: full_cost,
        solution_risk: full_ev.solution_risk,
        safe: is_safe(&decision),
        finance: full_fc,
        metrics: full_metrics,
        decision: decision.flatten(),
    };

    let rows = improvement_rows(&baseline, &full);
    Ok(ComparisonTable { seed: cfg.seed, baseline_safe: baseline.safe, baseline, full, rows })
}

/// Mean and sample standard deviation of one metric over a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub metric: String,
    pub baseline_mean: f64,
    pub baseline_sd: f64,
    pub full_mean: f64,
    pub full_sd: f64,
    pub improvement_mean: f64,
    pub improvement_sd: f64,
    pub runs: usize,
}

pub fn summarize(tables: &[ComparisonTable]) -> Vec<BatchRow> {
    Metric::ALL
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let col = |f: fn(&ImprovementRow) -> f64| tables.iter().map(|t| f(&t.rows[i])).collect::<Vec<_>>();
            let (baseline_mean, baseline_sd) = mean_sd(&col(|r| r.baseline));
            let (full_mean, full_sd) = mean_sd(&col(|r| r.full));
            let (improvement_mean, improvement_sd) = mean_sd(&col(|r| r.improvement_pct));
            BatchRow {
                metric: m.as_str().into(),
                baseline_mean,
                baseline_sd,
                full_mean,
                full_sd,
                improvement_mean,
                improvement_sd,
                runs: tables.len(),
            }
        })
        .collect()
}

/// [`compare_baseline`] over several seeds, run concurrently.
pub fn compare_batch(
    cfg: &ScenarioConfig,
    finance: &FinanceConfig,
    swarm: &SwarmConfig,
    guidance: GuidanceSettings,
    seeds: &[u64],
) -> Result<(Vec<ComparisonTable>, Vec<BatchRow>), ScenarioError> {
    let tables = seeds
        .par_iter()
        .map(|&seed| compare_baseline(&ScenarioConfig { seed, ..cfg.clone() }, finance, swarm, guidance))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = summarize(&tables);
    Ok((tables, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(leader_value: f64, unit_cost: f64) -> Outcome {
        let finance = FinanceConfig::default();
        Outcome {
            leader_value,
            unit_cost,
            solution_risk: 0.1,
            safe: true,
            metrics: finance_metrics(unit_cost, 0.1, &finance),
            finance,
            decision: vec![],
        }
    }

    #[test]
    fn identical_sides_give_zero_improvement() {
        let o = outcome(0.4, 1.6);
        for row in improvement_rows(&o, &o) {
            assert_eq!(row.improvement_pct, 0.0, "{}", row.metric);
        }
    }

    #[test]
    fn improvement_sign_follows_direction() {
        assert!((improvement_pct(Metric::UnitCost, 2.0, 1.5) - 25.0).abs() < 1e-12);
        assert!((improvement_pct(Metric::NetProfit, 4.0, 5.0) - 25.0).abs() < 1e-12);
        assert!(improvement_pct(Metric::LeaderValue, -1.0, -0.5) > 0.0);
        assert_eq!(improvement_pct(Metric::LeaderValue, 0.0, 1.0), 0.0);
    }

    #[test]
    fn batch_statistics() {
        let mk = |v: f64| {
            let o = outcome(v, 1.6);
            ComparisonTable {
                seed: 0,
                baseline_safe: true,
                rows: improvement_rows(&o, &o),
                baseline: o.clone(),
                full: o,
            }
        };
        let rows = summarize(&[mk(1.0), mk(2.0), mk(3.0)]);
        assert_eq!(rows[0].metric, "leader_value");
        assert!((rows[0].baseline_mean - 2.0).abs() < 1e-12);
        assert!((rows[0].baseline_sd - 1.0).abs() < 1e-12);
        assert_eq!(rows[0].improvement_sd, 0.0);
        assert_eq!(rows[0].runs, 3);
    }

    #[test]
    fn attains_handles_sign() {
        assert!(LeaderComparison { oracle_value: 1.0, swarm_value: 0.995 }.attains(0.99));
        assert!(!LeaderComparison { oracle_value: 1.0, swarm_value: 0.98 }.attains(0.99));
        assert!(LeaderComparison { oracle_value: -1.0, swarm_value: -1.005 }.attains(0.99));
    }
}
