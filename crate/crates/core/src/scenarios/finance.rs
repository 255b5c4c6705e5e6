//! Supply-chain finance metrics for a planned solution.
//!
//! The functional forms are simple multiplicative models anchored on
//! published industry-level figures; every constant lives in
//! [`FinanceParams`] and can be overridden from configuration.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FinancingMode {
    Factoring,
    OrderLending,
    SupplyChainAbs,
}

impl FinancingMode {
    pub const ALL: [FinancingMode; 3] =
        [FinancingMode::Factoring, FinancingMode::OrderLending, FinancingMode::SupplyChainAbs];

    pub fn as_str(self) -> &'static str {
        match self {
            FinancingMode::Factoring => "factoring",
            FinancingMode::OrderLending => "order_lending",
            FinancingMode::SupplyChainAbs => "supply_chain_abs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CreditLevel {
    #[serde(rename = "AAA")]
    Aaa,
    #[serde(rename = "AA")]
    Aa,
    A,
}

impl CreditLevel {
    pub const ALL: [CreditLevel; 3] = [CreditLevel::Aaa, CreditLevel::Aa, CreditLevel::A];

    pub fn as_str(self) -> &'static str {
        match self {
            CreditLevel::Aaa => "AAA",
            CreditLevel::Aa => "AA",
            CreditLevel::A => "A",
        }
    }
}

pub const CYCLES: [u32; 3] = [30, 60, 90];

/// Per-category values, ordered as `[Factoring, OrderLending, SupplyChainAbs]`
/// or `[AAA, AA, A]`, and `[30, 60, 90]` days for cycles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FinanceParams {
    /// Base financing cost rate (%) by mode.
    pub base_rate: [f64; 3],
    pub credit_spread: [f64; 3],
    pub cycle_factor: [f64; 3],
    /// Relative financing cost increase per unit of solution risk.
    pub risk_loading: f64,
    /// Turnover per quarter at a 90-day cycle, by mode and by credit.
    pub turnover_mode: [f64; 3],
    pub turnover_credit: [f64; 3],
    /// Credit risk occurrence rate (%) at a 60-day cycle, by credit and by mode.
    pub risk_credit: [f64; 3],
    pub risk_mode: [f64; 3],
    /// Net profit rate (%) = margin - a * financing - b * unit cost - c * risk.
    pub gross_margin: f64,
    pub financing_drag: f64,
    pub unit_cost_drag: f64,
    pub risk_drag: f64,
}

impl Default for FinanceParams {
    fn default() -> Self {
        Self {
            base_rate: [4.28, 5.85, 3.726],
            credit_spread: [1.0, 1.1286, 1.1646],
            cycle_factor: [1.0, 1.06, 1.12],
            risk_loading: 0.05,
            turnover_mode: [5.0, 4.6, 7.5],
            turnover_credit: [1.0, 0.95, 0.9],
            risk_credit: [0.3, 1.2, 3.0],
            risk_mode: [1.0, 1.1, 0.85],
            gross_margin: 14.0,
            financing_drag: 0.6,
            unit_cost_drag: 1.15,
            risk_drag: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FinanceConfig {
    pub mode: FinancingMode,
    pub credit: CreditLevel,
    pub cycle_days: u32,
    /// Weight of financing cost when choosing a finance setup.
    pub omega6: f64,
    /// Weight of credit risk when choosing a finance setup.
    pub omega7: f64,
    pub params: FinanceParams,
}

impl Default for FinanceConfig {
    fn default() -> Self {
        Self {
            mode: FinancingMode::SupplyChainAbs,
            credit: CreditLevel::Aaa,
            cycle_days: 60,
            omega6: 0.42,
            omega7: 0.33,
            params: FinanceParams::default(),
        }
    }
}

impl FinanceConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !CYCLES.contains(&self.cycle_days) {
            return Err(format!("cycle_days {} not in {CYCLES:?}", self.cycle_days));
        }
        if !(self.omega6 >= 0.0 && self.omega7 >= 0.0 && self.omega6 + self.omega7 <= 1.0) {
            return Err(format!(
                "finance weights ({}, {}) must be nonnegative with sum <= 1",
                self.omega6, self.omega7
            ));
        }
        Ok(())
    }

    pub fn with(&self, mode: FinancingMode, cycle_days: u32) -> Self {
        Self { mode, cycle_days, ..self.clone() }
    }

    fn cycle_index(&self) -> usize {
        CYCLES.iter().position(|&c| c == self.cycle_days).unwrap_or(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinanceMetrics {
    /// Percent.
    pub financing_cost_rate: f64,
    /// Times per quarter.
    pub capital_turnover: f64,
    /// Percent.
    pub credit_risk_rate: f64,
    /// Percent.
    pub net_profit_rate: f64,
}

/// Finance metrics for a solution with the given logistics unit cost
/// (CNY/piece) and risk (largest event probability, in `[0, 1]`).
pub fn finance_metrics(unit_cost: f64, solution_risk: f64, fc: &FinanceConfig) -> FinanceMetrics {
    let p = &fc.params;
    let m = fc.mode as usize;
    let c = fc.credit as usize;
    let days = f64::from(fc.cycle_days);
    let risk = solution_risk.clamp(0.0, 1.0);

    let financing_cost_rate =
        p.base_rate[m] * p.credit_spread[c] * p.cycle_factor[fc.cycle_index()] * (1.0 + p.risk_loading * risk);
    let capital_turnover = p.turnover_mode[m] * p.turnover_credit[c] * (90.0 / days).sqrt();
    let credit_risk_rate = p.risk_credit[c] * p.risk_mode[m] * (days / 60.0).sqrt() * (1.0 + risk);
    let net_profit_rate = p.gross_margin
        - p.financing_drag * financing_cost_rate
        - p.unit_cost_drag * unit_cost
        - p.risk_drag * credit_risk_rate;
    FinanceMetrics { financing_cost_rate, capital_turnover, credit_risk_rate, net_profit_rate }
}

/// Weighted preference used to pick a finance setup: financing cost with
/// `omega6`, credit risk with `omega7`, turnover with the remainder. Each
/// term is scaled by a typical magnitude; higher is better.
pub fn finance_preference(m: &FinanceMetrics, fc: &FinanceConfig) -> f64 {
    let rest = 1.0 - fc.omega6 - fc.omega7;
    -fc.omega6 * m.financing_cost_rate / 5.0 - fc.omega7 * m.credit_risk_rate / 1.5 + rest * m.capital_turnover / 6.0
}

/// The mode and cycle that maximize [`finance_preference`] for the
/// configured credit level. Ties keep the earlier candidate.
pub fn adapt_finance(unit_cost: f64, solution_risk: f64, fc: &FinanceConfig) -> (FinanceConfig, FinanceMetrics) {
    let mut best: Option<(FinanceConfig, FinanceMetrics, f64)> = None;
    for mode in FinancingMode::ALL {
        for days in CYCLES {
            let cand = fc.with(mode, days);
            let m = finance_metrics(unit_cost, solution_risk, &cand);
            let score = finance_preference(&m, &cand);
            if best.as_ref().is_none_or(|b| score > b.2) {
                best = Some((cand, m, score));
            }
        }
    }
    let (cfg, m, _) = best.expect("candidate set is not empty");
    (cfg, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(mode: FinancingMode, credit: CreditLevel, days: u32) -> FinanceConfig {
        FinanceConfig { mode, credit, cycle_days: days, ..Default::default() }
    }

    #[test]
    fn anchors_at_zero_risk() {
        let abs = finance_metrics(1.55, 0.0, &cfg(FinancingMode::SupplyChainAbs, CreditLevel::Aaa, 60));
        assert!((abs.financing_cost_rate - 3.95).abs() < 0.01);
        let ol = finance_metrics(1.55, 0.0, &cfg(FinancingMode::OrderLending, CreditLevel::A, 90));
        assert!((ol.financing_cost_rate - 7.63).abs() < 0.01);
        let f = finance_metrics(1.55, 0.0, &cfg(FinancingMode::Factoring, CreditLevel::Aaa, 30));
        assert!((f.financing_cost_rate - 4.28).abs() < 1e-12);
    }

    #[test]
    fn orderings() {
        for risk in [0.0, 0.1, 0.5] {
            for uc in [1.0, 2.0, 3.0] {
                let best = finance_metrics(uc, risk, &cfg(FinancingMode::SupplyChainAbs, CreditLevel::Aaa, 60));
                let worst = finance_metrics(uc, risk, &cfg(FinancingMode::OrderLending, CreditLevel::A, 90));
                assert!(best.financing_cost_rate < worst.financing_cost_rate);
                assert!(best.net_profit_rate > worst.net_profit_rate);
                for mode in FinancingMode::ALL {
                    let short = finance_metrics(uc, risk, &cfg(mode, CreditLevel::Aa, 30));
                    let long = finance_metrics(uc, risk, &cfg(mode, CreditLevel::Aa, 90));
                    assert!(short.capital_turnover > long.capital_turnover);
                    let aaa = finance_metrics(uc, risk, &cfg(mode, CreditLevel::Aaa, 60));
                    let a = finance_metrics(uc, risk, &cfg(mode, CreditLevel::A, 60));
                    assert!(aaa.credit_risk_rate < a.credit_risk_rate);
                }
            }
        }
    }

    #[test]
    fn net_profit_decreases_with_unit_cost() {
        let c = FinanceConfig::default();
        assert!(finance_metrics(1.5, 0.1, &c).net_profit_rate > finance_metrics(2.5, 0.1, &c).net_profit_rate);
    }

    #[test]
    fn adaptation_prefers_abs_for_strong_credit() {
        let (chosen, _) = adapt_finance(1.55, 0.05, &FinanceConfig::default());
        assert_eq!(chosen.mode, FinancingMode::SupplyChainAbs);
    }

    #[test]
    fn json_round_trip_with_overrides() {
        let c: FinanceConfig = serde_json::from_str(
            r#"{"mode":"Factoring","credit":"AA","cycle_days":30,"params":{"gross_margin":12.0}}"#,
        )
        .unwrap();
        assert_eq!(c.credit, CreditLevel::Aa);
        assert_eq!(c.params.gross_margin, 12.0);
        assert_eq!(c.params.base_rate, FinanceParams::default().base_rate);
        assert!(c.validate().is_ok());
        assert!(cfg(FinancingMode::Factoring, CreditLevel::A, 45).validate().is_err());
    }
}
