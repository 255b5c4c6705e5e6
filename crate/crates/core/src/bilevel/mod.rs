//! Leader/follower decision programs with one leader block and `k`
//! follower blocks coupled through shared linear constraints
//! `sum_j A_j x_j <= b`.
//!
//! Block 0 always belongs to the leader; block `v` (1..=k) to follower `v`.
//! Followers react to the leader in one sequential sweep, and ties inside a
//! follower's response set are broken in the leader's favor (optimistic
//! semantics).

mod grid;
mod lp;

pub use grid::{
    follower_best_response, grid_points, oracle_grid_size, oracle_solve, GridCache, OracleSolution, GRID_GUARD,
    GRID_WARN,
};
pub use lp::exact_response;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::dot;

/// Slack allowed on every constraint and bound check.
pub const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BilevelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("objective evaluated at an infeasible decision")]
    InfeasibleEvaluation,
    #[error("follower {0} has no feasible grid response")]
    EmptyResponse(usize),
    #[error("grid of {points} points exceeds the guard of {limit}")]
    GridTooLarge { points: u128, limit: u128 },
    #[error("no feasible solution on the grid")]
    NoFeasibleSolution,
    #[error("grid step must be positive, got {0}")]
    InvalidStep(f64),
    #[error("unknown follower {0}")]
    UnknownFollower(usize),
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        Self { rows: rows.len(), cols, data: rows.iter().flatten().copied().collect() }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Adds `self * x` into `out`.
    pub fn mul_add(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate().take(self.rows) {
            *o += dot(self.row(r), x);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilevelProblem {
    /// Number of followers.
    pub k: usize,
    /// Leader objective coefficients, one vector per block.
    pub leader_coeffs: Vec<Vec<f64>>,
    /// `follower_coeffs[v - 1][j]`: follower `v`'s coefficients on block `j`.
    pub follower_coeffs: Vec<Vec<Vec<f64>>>,
    /// `A_j` for every block; all share the row count of `rhs`.
    pub constraint_blocks: Vec<Matrix>,
    pub rhs: Vec<f64>,
    /// `[lo, hi]` per variable, per block.
    pub bounds: Vec<Vec<[f64; 2]>>,
}

/// One value vector per block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionVector {
    pub blocks: Vec<Vec<f64>>,
}

impl DecisionVector {
    pub fn leader(&self) -> &[f64] {
        &self.blocks[0]
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.blocks.iter().flatten().copied().collect()
    }
}

/// Optimal responses of one follower for a fixed rest-of-vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseSet {
    pub follower: usize,
    pub conditioning: DecisionVector,
    /// `(x_v, follower objective)`; all share the optimal value within
    /// [`FEAS_TOL`].
    pub responses: Vec<(Vec<f64>, f64)>,
}

/// How followers compute their reaction to a leader decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FollowerMode {
    /// Exhaustive search over the boxed grid with the given step.
    Grid { step: f64 },
    /// Exact vertex enumeration of the follower's linear program.
    Exact,
}

impl BilevelProblem {
    pub fn from_json_str(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem serializes")
    }

    pub fn blocks(&self) -> usize {
        self.k + 1
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.bounds.iter().map(Vec::len).collect()
    }

    pub fn rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn validate(&self) -> Result<(), BilevelError> {
        let mismatch = |m: String| Err(BilevelError::DimensionMismatch(m));
        if self.k == 0 {
            return mismatch("at least one follower is required".into());
        }
        let nb = self.blocks();
        if self.bounds.len() != nb || self.leader_coeffs.len() != nb || self.constraint_blocks.len() != nb {
            return mismatch(format!("expected {nb} blocks"));
        }
        if self.follower_coeffs.len() != self.k {
            return mismatch(format!("expected {} follower coefficient sets", self.k));
        }
        let dims = self.block_dims();
        for (j, &d) in dims.iter().enumerate() {
            if d == 0 {
                return mismatch(format!("block {j} is empty"));
            }
            if self.leader_coeffs[j].len() != d {
                return mismatch(format!("leader coefficients for block {j}"));
            }
            let a = &self.constraint_blocks[j];
            if a.cols != d || a.rows != self.rhs.len() || a.data.len() != a.rows * a.cols {
                return mismatch(format!("constraint block {j} is {}x{}", a.rows, a.cols));
            }
            for (i, b) in self.bounds[j].iter().enumerate() {
                if !(b[0] <= b[1]) {
                    return mismatch(format!("empty box for block {j} variable {i}"));
                }
            }
        }
        for (v, fc) in self.follower_coeffs.iter().enumerate() {
            if fc.len() != nb || fc.iter().zip(&dims).any(|(c, &d)| c.len() != d) {
                return mismatch(format!("follower {} coefficients", v + 1));
            }
        }
        Ok(())
    }

    pub fn check_vector(&self, x: &DecisionVector) -> Result<(), BilevelError> {
        let dims = self.block_dims();
        if x.blocks.len() != dims.len() || x.blocks.iter().zip(&dims).any(|(b, &d)| b.len() != d) {
            return Err(BilevelError::DimensionMismatch(format!(
                "decision has blocks {:?}, problem expects {dims:?}",
                x.blocks.iter().map(Vec::len).collect::<Vec<_>>()
            )));
        }
        Ok(())
    }

    /// `sum_j A_j x_j`.
    pub fn lhs(&self, x: &DecisionVector) -> Vec<f64> {
        let mut out = vec![0.0; self.rows()];
        for (a, xb) in self.constraint_blocks.iter().zip(&x.blocks) {
            a.mul_add(xb, &mut out);
        }
        out
    }

    /// Lower bounds clamped at zero.
    pub fn floor_vector(&self) -> DecisionVector {
        DecisionVector { blocks: self.bounds.iter().map(|b| b.iter().map(|r| r[0].max(0.0)).collect()).collect() }
    }

    pub fn raw_leader_objective(&self, x: &DecisionVector) -> f64 {
        self.leader_coeffs.iter().zip(&x.blocks).map(|(c, b)| dot(c, b)).sum()
    }

    /// Objective of follower `v` (1-based).
    pub fn follower_objective(&self, v: usize, x: &DecisionVector) -> Result<f64, BilevelError> {
        let coeffs = self.follower_coeffs.get(v.wrapping_sub(1)).ok_or(BilevelError::UnknownFollower(v))?;
        Ok(coeffs.iter().zip(&x.blocks).map(|(c, b)| dot(c, b)).sum())
    }

    pub fn within_bounds(&self, x: &DecisionVector) -> bool {
        self.bounds.iter().zip(&x.blocks).all(|(bb, xb)| {
            bb.iter().zip(xb).all(|(b, &v)| v >= b[0] - FEAS_TOL && v <= b[1] + FEAS_TOL && v >= -FEAS_TOL)
        })
    }

    /// Follower `v`'s own-block feasible completions are limited by what the
    /// other blocks leave over: `b - sum_{j != v} A_j x_j`.
    pub fn slack_excluding(&self, v: usize, x: &DecisionVector) -> Vec<f64> {
        let mut used = vec![0.0; self.rows()];
        for (j, (a, xb)) in self.constraint_blocks.iter().zip(&x.blocks).enumerate() {
            if j != v {
                a.mul_add(xb, &mut used);
            }
        }
        self.rhs.iter().zip(used).map(|(b, u)| b - u).collect()
    }

    /// Sequential best-response sweep for followers `1..=k` given the
    /// leader block; unset followers start at their (nonnegative) lower
    /// bounds. Returns `None` when some follower has no feasible reaction
    /// or the assembled vector violates the coupling constraints.
    pub fn respond(&self, leader: &[f64], mode: FollowerMode, cache: Option<&GridCache>) -> Option<DecisionVector> {
        let mut x = self.floor_vector();
        x.blocks[0] = leader.to_vec();
        for v in 1..=self.k {
            let choice = match mode {
                FollowerMode::Exact => exact_response(self, v, &x)?,
                FollowerMode::Grid { step } => match cache {
                    Some(c) => c.optimistic_response(self, v, &x)?,
                    None => GridCache::new(self, step).ok()?.optimistic_response(self, v, &x)?,
                },
            };
            x.blocks[v] = choice;
        }
        feasible(self, &x).ok()?.then_some(x)
    }
}

/// Coupling constraints, nonnegativity and boxes.
pub fn feasible(p: &BilevelProblem, x: &DecisionVector) -> Result<bool, BilevelError> {
    p.check_vector(x)?;
    if !p.within_bounds(x) {
        return Ok(false);
    }
    Ok(p.lhs(x).iter().zip(&p.rhs).all(|(l, b)| *l <= b + FEAS_TOL))
}

pub fn leader_objective(p: &BilevelProblem, x: &DecisionVector) -> Result<f64, BilevelError> {
    if !feasible(p, x)? {
        return Err(BilevelError::InfeasibleEvaluation);
    }
    Ok(p.raw_leader_objective(x))
}

/// Seeded instance with `k` followers and `dim` variables per block on unit
/// boxes. All constraint coefficients are nonnegative so the origin is
/// always feasible; follower objectives favor their own block.
pub fn random_instance(seed: u64, k: usize, dim: usize, rows: usize) -> BilevelProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nb = k + 1;
    let leader_coeffs = (0..nb)
        .map(|j| {
            (0..dim).map(|_| if j == 0 { rng.random_range(0.2..1.0) } else { rng.random_range(-0.3..1.0) }).collect()
        })
        .collect();
    let follower_coeffs = (1..=k)
        .map(|v| {
            (0..nb)
                .map(|j| {
                    (0..dim)
                        .map(|_| if j == v { rng.random_range(0.2..1.0) } else { rng.random_range(-0.5..0.5) })
                        .collect()
                })
                .collect()
        })
        .collect();
    let constraint_blocks = (0..nb)
        .map(|_| {
            let rows: Vec<Vec<f64>> =
                (0..rows).map(|_| (0..dim).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
            Matrix::from_rows(&rows)
        })
        .collect();
    let scale = (nb * dim) as f64 / 6.0;
    let rhs = (0..rows).map(|_| scale * rng.random_range(1.0..2.0)).collect();
    BilevelProblem {
        k,
        leader_coeffs,
        follower_coeffs,
        constraint_blocks,
        rhs,
        bounds: vec![vec![[0.0, 1.0]; dim]; nb],
    }
}
