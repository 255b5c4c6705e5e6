use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{feasible, BilevelError, BilevelProblem, DecisionVector, FollowerMode, ResponseSet, FEAS_TOL};
use crate::math::dot;

/// Upper bound on `leader points x follower points` for [`oracle_solve`].
pub const GRID_GUARD: u128 = 10_000_000;
/// Grids above this size are still solved but callers should warn.
pub const GRID_WARN: u128 = 1_000_000;

fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n)
        .map(|i| {
            let v = lo + i as f64 * step;
            if (v - hi).abs() < 1e-9 {
                hi
            } else {
                v.min(hi)
            }
        })
        .collect()
}

fn axis_len(lo: f64, hi: f64, step: f64) -> u128 {
    ((hi - lo) / step + 1e-9).floor() as u128 + 1
}

fn check_step(step: f64) -> Result<(), BilevelError> {
    if step > 0.0 && step.is_finite() {
        Ok(())
    } else {
        Err(BilevelError::InvalidStep(step))
    }
}

pub(crate) fn grid_size(bounds: &[[f64; 2]], step: f64) -> u128 {
    bounds.iter().map(|b| axis_len(b[0], b[1], step)).product()
}

/// Cartesian grid over a box, in lexicographic order.
pub fn grid_points(bounds: &[[f64; 2]], step: f64) -> Result<Vec<Vec<f64>>, BilevelError> {
    check_step(step)?;
    let axes: Vec<Vec<f64>> = bounds.iter().map(|b| axis(b[0], b[1], step)).collect();
    let mut out = vec![Vec::with_capacity(bounds.len())];
    for ax in &axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                ax.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    Ok(out)
}

struct BlockGrid {
    points: Vec<Vec<f64>>,
    /// `A_j g` for every point.
    products: Vec<Vec<f64>>,
    /// Block owner's objective contribution (follower blocks only).
    own: Vec<f64>,
    /// Leader objective contribution.
    leader: Vec<f64>,
}

/// Precomputed follower grids for one problem and step.
pub struct GridCache {
    pub step: f64,
    blocks: Vec<BlockGrid>,
}

impl GridCache {
    pub fn new(p: &BilevelProblem, step: f64) -> Result<Self, BilevelError> {
        check_step(step)?;
        p.validate()?;
        let mut blocks = Vec::with_capacity(p.blocks());
        for j in 0..p.blocks() {
            if j == 0 {
                blocks.push(BlockGrid { points: vec![], products: vec![], own: vec![], leader: vec![] });
                continue;
            }
            let points: Vec<Vec<f64>> =
                grid_points(&p.bounds[j], step)?.into_iter().filter(|g| g.iter().all(|&v| v >= 0.0)).collect();
            let a = &p.constraint_blocks[j];
            let products = points
                .iter()
                .map(|g| {
                    let mut out = vec![0.0; a.rows];
                    a.mul_add(g, &mut out);
                    out
                })
                .collect();
            let own = points.iter().map(|g| dot(&p.follower_coeffs[j - 1][j], g)).collect();
            let leader = points.iter().map(|g| dot(&p.leader_coeffs[j], g)).collect();
            blocks.push(BlockGrid { points, products, own, leader });
        }
        Ok(Self { step, blocks })
    }

    fn feasible_indices(&self, p: &BilevelProblem, v: usize, x: &DecisionVector) -> Vec<usize> {
        let slack = p.slack_excluding(v, x);
        let b = &self.blocks[v];
        (0..b.points.len()).filter(|&g| b.products[g].iter().zip(&slack).all(|(a, s)| *a <= s + FEAS_TOL)).collect()
    }

    /// All grid maximizers of follower `v`'s objective.
    pub fn response_set(&self, p: &BilevelProblem, v: usize, x: &DecisionVector) -> Vec<Vec<f64>> {
        let b = &self.blocks[v];
        let idx = self.feasible_indices(p, v, x);
        let best = idx.iter().map(|&g| b.own[g]).fold(f64::NEG_INFINITY, f64::max);
        idx.into_iter().filter(|&g| b.own[g] >= best - FEAS_TOL).map(|g| b.points[g].clone()).collect()
    }

    /// The leader-favoring member of follower `v`'s response set; among
    /// equally good ones the lexicographically smallest.
    pub fn optimistic_response(&self, p: &BilevelProblem, v: usize, x: &DecisionVector) -> Option<Vec<f64>> {
        let b = &self.blocks[v];
        let idx = self.feasible_indices(p, v, x);
        let best = idx.iter().map(|&g| b.own[g]).fold(f64::NEG_INFINITY, f64::max);
        let ties: Vec<usize> = idx.into_iter().filter(|&g| b.own[g] >= best - FEAS_TOL).collect();
        let lead = ties.iter().map(|&g| b.leader[g]).fold(f64::NEG_INFINITY, f64::max);
        ties.into_iter().find(|&g| b.leader[g] >= lead - FEAS_TOL).map(|g| b.points[g].clone())
    }
}

/// Grid best responses of follower `v` with every other block fixed to the
/// values in `x` (`x`'s own block `v` is ignored).
pub fn follower_best_response(
    p: &BilevelProblem,
    v: usize,
    x: &DecisionVector,
    grid_step: f64,
) -> Result<ResponseSet, BilevelError> {
    p.validate()?;
    p.check_vector(x)?;
    if v == 0 || v > p.k {
        return Err(BilevelError::UnknownFollower(v));
    }
    let cache = GridCache::new(p, grid_step)?;
    let set = cache.response_set(p, v, x);
    if set.is_empty() {
        return Err(BilevelError::EmptyResponse(v));
    }
    let responses = set
        .into_iter()
        .map(|g| {
            let mut full = x.clone();
            full.blocks[v] = g.clone();
            let value = p.follower_objective(v, &full).expect("follower index checked");
            (g, value)
        })
        .collect();
    Ok(ResponseSet { follower: v, conditioning: x.clone(), responses })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub decision: DecisionVector,
    pub value: f64,
    pub grid_step: f64,
    pub leader_points: u128,
    pub evaluated_points: u128,
}

/// Total points the oracle visits for a step: leader grid times the sum of
/// follower grids.
pub fn oracle_grid_size(p: &BilevelProblem, step: f64) -> u128 {
    let leader = grid_size(&p.bounds[0], step);
    let followers: u128 = p.bounds[1..].iter().map(|b| grid_size(b, step)).sum();
    leader.saturating_mul(followers)
}

fn lex_less(a: &DecisionVector, b: &DecisionVector) -> bool {
    a.flatten().iter().zip(b.flatten()).find(|(x, y)| *x != y).is_some_and(|(x, y)| *x < y)
}

/// Exhaustive leader grid search with grid follower responses.
///
/// Leader points are evaluated in parallel and merged in grid order, so the
/// result does not depend on the worker count. Ties within [`FEAS_TOL`] go
/// to the lexicographically smallest decision.
pub fn oracle_solve(p: &BilevelProblem, grid_step: f64) -> Result<OracleSolution, BilevelError> {
    check_step(grid_step)?;
    p.validate()?;
    let evaluated_points = oracle_grid_size(p, grid_step);
    if evaluated_points > GRID_GUARD {
        return Err(BilevelError::GridTooLarge { points: evaluated_points, limit: GRID_GUARD });
    }
    let cache = GridCache::new(p, grid_step)?;
    let leader_grid = grid_points(&p.bounds[0], grid_step)?;
    let leader_points = leader_grid.len() as u128;
    let results: Vec<Option<(f64, DecisionVector)>> = leader_grid
        .par_iter()
        .map(|x1| {
            let x = p.respond(x1, FollowerMode::Grid { step: grid_step }, Some(&cache))?;
            debug_assert!(feasible(p, &x).unwrap_or(false));
            Some((p.raw_leader_objective(&x), x))
        })
        .collect();
    let mut best: Option<(f64, DecisionVector)> = None;
    for (value, x) in results.into_iter().flatten() {
        let replace = match &best {
            None => true,
            Some((bv, bx)) => value > bv + FEAS_TOL || ((value - bv).abs() <= FEAS_TOL && lex_less(&x, bx)),
        };
        if replace {
            best = Some((value, x));
        }
    }
    let (value, decision) = best.ok_or(BilevelError::NoFeasibleSolution)?;
    Ok(OracleSolution { decision, value, grid_step, leader_points, evaluated_points })
}
