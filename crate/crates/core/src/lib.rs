//! Supply-chain decision optimization.
//!
//! Indicator normalization and node scoring, logistic risk gating, network
//! path planning, a leader/follower bilevel program with a grid oracle, and
//! a sigmoid-gated particle swarm with a reward-driven guidance controller.
//! The `scenarios` module ties them into one seeded pipeline.

// `!(x > 0.0)` is used on purpose so NaN fails validation; dense matrix
// kernels read better with explicit indices.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bilevel;
pub mod indicators;
pub mod math;
pub mod network;
pub mod risk;
pub mod scenarios;
pub mod swarm;

pub use bilevel::{BilevelError, BilevelProblem, DecisionVector, FollowerMode, OracleSolution};
pub use indicators::{IndicatorError, IndicatorMatrix, Orientation, ScoreWeights};
pub use network::{DistanceMatrix, NetworkError, NetworkGraph};
pub use risk::{RiskDataset, RiskError, RiskGate};
pub use scenarios::{ExperimentConfig, FinanceConfig, NetworkScale, RunReport, ScenarioConfig, ScenarioError};
pub use swarm::{GuidanceController, SearchProblem, SwarmConfig, SwarmError, SwarmResult};
