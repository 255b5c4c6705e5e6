use super::{Evaluation, SearchProblem, Sense};
use crate::bilevel::{BilevelError, BilevelProblem, DecisionVector, FollowerMode, GridCache};

type SafetyCheck<'a> = dyn Fn(&DecisionVector) -> bool + Sync + 'a;

/// Searches the leader block of a bilevel program; every candidate is
/// completed by the followers' reaction before it is scored.
pub struct BilevelSearch<'a> {
    pub problem: &'a BilevelProblem,
    pub mode: FollowerMode,
    bounds: Vec<[f64; 2]>,
    cache: Option<GridCache>,
    safety: Option<&'a SafetyCheck<'a>>,
}

impl<'a> BilevelSearch<'a> {
    pub fn new(problem: &'a BilevelProblem, mode: FollowerMode) -> Result<Self, BilevelError> {
        problem.validate()?;
        let cache = match mode {
            FollowerMode::Grid { step } => Some(GridCache::new(problem, step)?),
            FollowerMode::Exact => None,
        };
        let bounds = problem.bounds[0].iter().map(|b| [b[0].max(0.0), b[1]]).collect();
        Ok(Self { problem, mode, bounds, cache, safety: None })
    }

    /// Second-layer check on the completed decision vector.
    pub fn with_safety(mut self, check: &'a SafetyCheck<'a>) -> Self {
        self.safety = Some(check);
        self
    }

    /// The full decision vector for a leader block, if the followers can
    /// react feasibly.
    pub fn decision(&self, leader: &[f64]) -> Option<DecisionVector> {
        self.problem.respond(leader, self.mode, self.cache.as_ref())
    }
}

impl SearchProblem for BilevelSearch<'_> {
    fn bounds(&self) -> &[[f64; 2]] {
        &self.bounds
    }

    fn sense(&self) -> Sense {
        Sense::Maximize
    }

    fn evaluate(&self, x: &[f64]) -> Evaluation {
        match self.decision(x) {
            Some(d) => Evaluation {
                value: self.problem.raw_leader_objective(&d),
                in_decision_set: true,
                safe: self.safety.is_none_or(|f| f(&d)),
            },
            None => Evaluation::outside(),
        }
    }

    /// Halfway back toward the leader's lower bounds, which frees capacity
    /// whenever the coupling coefficients are nonnegative.
    fn repair(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.bounds).map(|(v, b)| 0.5 * (v + b[0])).collect()
    }
}
