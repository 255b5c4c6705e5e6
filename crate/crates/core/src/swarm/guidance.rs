//! Reward-driven adaptation of swarm runtime parameters.
//!
//! The controller is an ε-greedy bandit over a small set of parameter
//! adjustments. Its value table keeps the running mean reward of every
//! action; that table is the only memory it has.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SwarmError;

/// Reward weights for the four observed metrics, in order.
pub const REWARD_WEIGHTS: [f64; 4] = [0.35, 0.30, 0.25, 0.10];

/// Change applied to the inertia decay per action.
pub const DECAY_STEP: f64 = 0.05;
/// Largest decay the controller may set. The configured decay is the
/// smallest: guidance can sharpen the inertia schedule late in a run but
/// never keeps the swarm looser than configured.
pub const DECAY_MAX: f64 = 0.7;
/// Share of `c1 + c2` moved between the coefficients per action.
pub const COEFF_STEP: f64 = 0.025;
/// `c1` stays within this share of `c1 + c2` around its configured value.
pub const COEFF_SPAN: f64 = 0.125;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Hold,
    RaiseDecay,
    LowerDecay,
    FavorCognitive,
    FavorSocial,
}

impl Action {
    pub const ALL: [Action; 5] =
        [Action::Hold, Action::RaiseDecay, Action::LowerDecay, Action::FavorCognitive, Action::FavorSocial];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|a| *a == self).expect("listed")
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Action::Hold => "hold",
            Action::RaiseDecay => "raise_decay",
            Action::LowerDecay => "lower_decay",
            Action::FavorCognitive => "favor_cognitive",
            Action::FavorSocial => "favor_social",
        }
    }
}

/// Parameters the controller may move while a run is in progress.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuntimeParams {
    pub decay: f64,
    pub c1: f64,
    pub c2: f64,
    pub decay_range: [f64; 2],
    /// `[min, max]` for `c1`; `c1 + c2` never changes.
    pub c1_range: [f64; 2],
}

impl RuntimeParams {
    pub fn new(decay: f64, c1: f64, c2: f64) -> Self {
        let total = c1 + c2;
        let lo = (c1 - COEFF_SPAN * total).max(0.0);
        let hi = (c1 + COEFF_SPAN * total).min(total);
        Self { decay, c1, c2, decay_range: [decay, decay.max(DECAY_MAX)], c1_range: [lo, hi] }
    }

    fn shift_c1(&mut self, delta: f64) {
        let total = self.c1 + self.c2;
        self.c1 = (self.c1 + delta).clamp(self.c1_range[0], self.c1_range[1]);
        self.c2 = total - self.c1;
    }

    pub fn apply(&mut self, action: Action) {
        let total = self.c1 + self.c2;
        match action {
            Action::Hold => {}
            Action::RaiseDecay => {
                self.decay = (self.decay + DECAY_STEP).clamp(self.decay_range[0], self.decay_range[1])
            }
            Action::LowerDecay => {
                self.decay = (self.decay - DECAY_STEP).clamp(self.decay_range[0], self.decay_range[1])
            }
            Action::FavorCognitive => self.shift_c1(COEFF_STEP * total),
            Action::FavorSocial => self.shift_c1(-COEFF_STEP * total),
        }
    }
}

/// Weighted reward of four metrics in `[0, 1]`, higher is better.
pub fn reward(metrics: [f64; 4]) -> Result<f64, SwarmError> {
    for (index, &value) in metrics.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(SwarmError::MetricOutOfRange { index, value });
        }
    }
    Ok(REWARD_WEIGHTS.iter().zip(metrics).map(|(w, m)| w * m).sum())
}

#[derive(Debug, Clone)]
pub struct GuidanceController {
    pub epsilon: f64,
    /// Iterations between controller steps inside [`super::run`].
    pub period: usize,
    values: [f64; 5],
    counts: [u64; 5],
    last: Option<Action>,
    rng: ChaCha8Rng,
}

impl GuidanceController {
    pub fn new(epsilon: f64, seed: u64) -> Result<Self, SwarmError> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(SwarmError::InvalidConfig(format!("epsilon {epsilon} outside [0, 1]")));
        }
        Ok(Self {
            epsilon,
            period: 10,
            values: [0.0; 5],
            counts: [0; 5],
            last: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn with_period(mut self, period: usize) -> Self {
        self.period = period.max(1);
        self
    }

    /// Seeds the value table, e.g. from an earlier run.
    pub fn with_values(mut self, values: [f64; 5]) -> Self {
        self.values = values;
        self
    }

    pub fn values(&self) -> [f64; 5] {
        self.values
    }

    pub fn counts(&self) -> [u64; 5] {
        self.counts
    }

    pub fn greedy(&self) -> Action {
        let mut best = 0;
        for a in 1..self.values.len() {
            if self.values[a] > self.values[best] {
                best = a;
            }
        }
        Action::ALL[best]
    }

    /// Credits `metrics` to the previous action, picks the next one and
    /// applies it to `params`.
    pub fn guidance_step(&mut self, metrics: [f64; 4], params: &mut RuntimeParams) -> Result<Action, SwarmError> {
        let r = reward(metrics)?;
        if let Some(prev) = self.last {
            let a = prev.index();
            self.counts[a] += 1;
            self.values[a] += (r - self.values[a]) / self.counts[a] as f64;
        }
        let explore = self.rng.random::<f64>() < self.epsilon;
        let action = if explore { Action::ALL[self.rng.random_range(0..Action::ALL.len())] } else { self.greedy() };
        params.apply(action);
        self.last = Some(action);
        Ok(action)
    }
}
