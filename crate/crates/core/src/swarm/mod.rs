//! Sigmoid-gated particle swarm with two-layer candidate screening.
//!
//! Each iteration updates velocities from the personal and global bests,
//! opens a per-particle gate with probability `sigmoid(|v|)` against a
//! uniform draw, and screens the moved candidates: first against the
//! problem's decision set (with one repair and one re-perturbation), then
//! against its safety check. Candidates that fail both layers are rejected
//! and the particle returns to its personal best.
//!
//! All random numbers are drawn on the calling thread in particle order;
//! only fitness evaluation runs on the rayon pool, so a run is a pure
//! function of its seed and configuration.

mod adapter;
mod guidance;

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adapter::BilevelSearch;
pub use guidance::{reward, Action, GuidanceController, RuntimeParams, DECAY_MAX, REWARD_WEIGHTS};

use crate::math::norm2;
pub use crate::math::sigmoid;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SwarmError {
    #[error("invalid swarm configuration: {0}")]
    InvalidConfig(String),
    #[error("no particle could be placed in the decision set after {retries} attempts each")]
    NoFeasibleParticle { retries: usize },
    #[error("metric {index} = {value} is outside [0, 1]")]
    MetricOutOfRange { index: usize, value: f64 },
    #[error("trace output failed: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    /// True when `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Sense::Minimize => a < b,
            Sense::Maximize => a > b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    /// First layer: constraint / decision-set membership.
    pub in_decision_set: bool,
    /// Second layer: safety verification.
    pub safe: bool,
}

impl Evaluation {
    pub fn accepted(value: f64) -> Self {
        Self { value, in_decision_set: true, safe: true }
    }

    pub fn outside() -> Self {
        Self { value: f64::NAN, in_decision_set: false, safe: false }
    }
}

/// What the swarm needs from a problem. `evaluate` must be pure: it is
/// called concurrently and in no particular order.
pub trait SearchProblem: Sync {
    fn bounds(&self) -> &[[f64; 2]];
    fn sense(&self) -> Sense;
    fn evaluate(&self, x: &[f64]) -> Evaluation;

    /// First-layer re-check: a nearby point to try when `x` falls outside
    /// the decision set. Defaults to `x` itself.
    fn repair(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
}

/// How a particle moves once its gate is open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PositionRule {
    /// Unit step along the velocity direction.
    UnitStep,
    /// Full velocity step.
    GatedVelocity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SwarmConfig {
    pub population: usize,
    pub iterations: usize,
    pub c1: f64,
    pub c2: f64,
    pub seed: u64,
    /// Per-coordinate velocity limit as a fraction of the box width.
    pub velocity_clamp: f64,
    /// Initial inertia decay; ω runs from 0.9 down to `0.9 - decay`.
    pub decay: f64,
    pub position_rule: PositionRule,
    /// Placement attempts per particle at initialization.
    pub init_retries: usize,
    pub record_history: bool,
    /// Positions tried first for the leading particles.
    #[serde(skip)]
    pub warm_start: Vec<Vec<f64>>,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        Self {
            population: 200,
            iterations: 500,
            c1: 2.0,
            c2: 2.0,
            seed: 0,
            velocity_clamp: 0.1,
            decay: 0.5,
            position_rule: PositionRule::GatedVelocity,
            init_retries: 100,
            record_history: false,
            warm_start: Vec::new(),
        }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<(), SwarmError> {
        let fail = |m: String| Err(SwarmError::InvalidConfig(m));
        if self.population < 2 {
            return fail(format!("population {} < 2", self.population));
        }
        if self.iterations < 1 {
            return fail("iterations must be at least 1".into());
        }
        if !(self.c1 >= 0.0 && self.c2 >= 0.0) {
            return fail(format!("negative acceleration coefficients ({}, {})", self.c1, self.c2));
        }
        if !(self.velocity_clamp > 0.0 && self.velocity_clamp.is_finite()) {
            return fail(format!("velocity clamp {} must be positive", self.velocity_clamp));
        }
        if !(0.0..0.9).contains(&self.decay) {
            return fail(format!("decay {} outside [0, 0.9)", self.decay));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub value: f64,
    pub pbest_position: Vec<f64>,
    pub pbest_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub best_value: f64,
    pub omega: f64,
    pub action: String,
}

/// Per-iteration particle values (`None` for rejected candidates) and
/// personal bests after the update.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryFrame {
    pub values: Vec<Option<f64>>,
    pub pbest: Vec<f64>,
}

/// Position and value a particle settles on after screening.
type Accepted = (Vec<f64>, f64);

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmResult {
    pub best_position: Vec<f64>,
    pub best_value: f64,
    pub trace: Vec<TraceRow>,
    pub history: Vec<HistoryFrame>,
    pub evaluations: usize,
    pub rejected: usize,
    pub final_params: RuntimeParams,
}

/// Inertia weight for iteration `i` of `t` with the default decay.
pub fn inertia(i: usize, t: usize) -> f64 {
    inertia_with_decay(i, t, 0.5)
}

pub fn inertia_with_decay(i: usize, t: usize, decay: f64) -> f64 {
    0.9 - decay * i as f64 / (t as f64 + 1.0)
}

/// `ω v + c1 r1 (pbest - x) + c2 r2 (gbest - x)`, clamped per coordinate
/// to `±clamp[d]`.
#[allow(clippy::too_many_arguments)]
pub fn update_velocity(
    p: &Particle,
    gbest: &[f64],
    omega: f64,
    c1: f64,
    c2: f64,
    r1: f64,
    r2: f64,
    clamp: &[f64],
) -> Vec<f64> {
    (0..p.position.len())
        .map(|d| {
            let x = p.position[d];
            let v = omega * p.velocity[d] + c1 * r1 * (p.pbest_position[d] - x) + c2 * r2 * (gbest[d] - x);
            v.clamp(-clamp[d], clamp[d])
        })
        .collect()
}

fn clamp_to(x: &mut [f64], bounds: &[[f64; 2]]) {
    for (v, b) in x.iter_mut().zip(bounds) {
        *v = v.clamp(b[0], b[1]);
    }
}

fn gate_open(v: &[f64], r_e: f64) -> Option<f64> {
    let n = norm2(v);
    (n > 0.0 && n.is_finite() && sigmoid(n) > r_e).then_some(n)
}

/// Gated unit step: when `sigmoid(|v|) > r_e` the particle moves by
/// `v / |v|`, otherwise it stays. A zero velocity keeps the gate closed.
/// The result is clamped to `bounds`.
pub fn update_position(x: &[f64], v: &[f64], r_e: f64, bounds: &[[f64; 2]]) -> Vec<f64> {
    let mut out = x.to_vec();
    if let Some(n) = gate_open(v, r_e) {
        for (o, vi) in out.iter_mut().zip(v) {
            *o += vi / n;
        }
    }
    clamp_to(&mut out, bounds);
    out
}

impl PositionRule {
    /// Returns the new position and whether the gate opened.
    pub fn apply(self, x: &[f64], v: &[f64], r_e: f64, bounds: &[[f64; 2]]) -> (Vec<f64>, bool) {
        match self {
            PositionRule::UnitStep => {
                let open = gate_open(v, r_e).is_some();
                (update_position(x, v, r_e, bounds), open)
            }
            PositionRule::GatedVelocity => {
                let mut out = x.to_vec();
                let open = gate_open(v, r_e).is_some();
                if open {
                    for (o, vi) in out.iter_mut().zip(v) {
                        *o += vi;
                    }
                }
                clamp_to(&mut out, bounds);
                (out, open)
            }
        }
    }
}

/// Screens one candidate. Returns the accepted point and value, or `None`
/// when both layers reject it.
fn screen<P: SearchProblem>(
    problem: &P,
    candidate: Vec<f64>,
    pbest: &[f64],
    u: f64,
    evals: &mut usize,
) -> Option<(Vec<f64>, f64)> {
    let bounds = problem.bounds();
    let mut point = candidate;
    *evals += 1;
    let mut eval = problem.evaluate(&point);
    if !eval.in_decision_set {
        let mut repaired = problem.repair(&point);
        clamp_to(&mut repaired, bounds);
        *evals += 1;
        let e = problem.evaluate(&repaired);
        if e.in_decision_set {
            point = repaired;
            eval = e;
        } else {
            let mut perturbed: Vec<f64> = point.iter().zip(pbest).map(|(x, p)| x + u * (p - x)).collect();
            clamp_to(&mut perturbed, bounds);
            *evals += 1;
            eval = problem.evaluate(&perturbed);
            point = perturbed;
        }
    }
    (eval.in_decision_set && eval.safe && eval.value.is_finite()).then_some((point, eval.value))
}

fn uniform_in(rng: &mut ChaCha8Rng, bounds: &[[f64; 2]]) -> Vec<f64> {
    bounds.iter().map(|b| if b[1] > b[0] { rng.random_range(b[0]..=b[1]) } else { b[0] }).collect()
}

fn initialize<P: SearchProblem>(
    problem: &P,
    cfg: &SwarmConfig,
    rng: &mut ChaCha8Rng,
    vmax: &[f64],
    evaluations: &mut usize,
) -> Result<Vec<Particle>, SwarmError> {
    let bounds = problem.bounds();
    let n = cfg.population;
    let mut placed: Vec<Option<(Vec<f64>, f64)>> = vec![None; n];

    let mut warm: Vec<(usize, Vec<f64>)> = Vec::new();
    for (i, w) in cfg.warm_start.iter().take(n).enumerate() {
        if w.len() == bounds.len() {
            let mut p = w.clone();
            clamp_to(&mut p, bounds);
            warm.push((i, p));
        }
    }
    let results: Vec<Evaluation> = warm.par_iter().map(|(_, p)| problem.evaluate(p)).collect();
    *evaluations += warm.len();
    for ((i, p), e) in warm.into_iter().zip(results) {
        if e.in_decision_set && e.safe && e.value.is_finite() {
            placed[i] = Some((p, e.value));
        }
    }

    for _ in 0..cfg.init_retries {
        let pending: Vec<usize> = (0..n).filter(|&i| placed[i].is_none()).collect();
        if pending.is_empty() {
            break;
        }
        let draws: Vec<Vec<f64>> = pending.iter().map(|_| uniform_in(rng, bounds)).collect();
        let results: Vec<Evaluation> = draws.par_iter().map(|p| problem.evaluate(p)).collect();
        *evaluations += draws.len();
        for ((i, p), e) in pending.into_iter().zip(draws).zip(results) {
            if e.in_decision_set && e.safe && e.value.is_finite() {
                placed[i] = Some((p, e.value));
            }
        }
    }

    let ok: Vec<(Vec<f64>, f64)> = placed.iter().flatten().cloned().collect();
    if ok.is_empty() {
        return Err(SwarmError::NoFeasibleParticle { retries: cfg.init_retries });
    }
    if ok.len() < n {
        log::warn!("{} of {n} particles could not be placed; reusing feasible positions", n - ok.len());
    }
    let mut spare = 0;
    Ok(placed
        .into_iter()
        .map(|slot| {
            let (position, value) = slot.unwrap_or_else(|| {
                spare += 1;
                ok[(spare - 1) % ok.len()].clone()
            });
            let velocity = vmax.iter().map(|&m| rng.random_range(-m..=m)).collect();
            Particle { pbest_position: position.clone(), pbest_value: value, position, velocity, value }
        })
        .collect())
}

#[derive(Default)]
struct Window {
    start_best: f64,
    pbest_improved: usize,
    evaluated: usize,
    accepted: usize,
    gate_open: usize,
    moves: usize,
}

impl Window {
    fn metrics(&self, best: f64) -> [f64; 4] {
        let gain = if self.start_best.is_finite() && best.is_finite() {
            ((best - self.start_best).abs() / self.start_best.abs().max(1e-12)).min(1.0)
        } else {
            0.0
        };
        let frac = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        [
            gain,
            frac(self.pbest_improved, self.moves),
            if self.evaluated == 0 { 1.0 } else { frac(self.accepted, self.evaluated) },
            frac(self.gate_open, self.moves),
        ]
    }
}

/// Runs the swarm. With a controller, every `gc.period` iterations the
/// search-progress metrics of the last window (relative gbest gain,
/// personal-best improvement rate, acceptance rate, gate-open rate) are fed
/// to [`GuidanceController::guidance_step`], which may move the inertia
/// decay and the `c1`/`c2` balance.
pub fn run<P: SearchProblem>(
    problem: &P,
    cfg: &SwarmConfig,
    mut gc: Option<&mut GuidanceController>,
) -> Result<SwarmResult, SwarmError> {
    cfg.validate()?;
    let bounds = problem.bounds();
    if bounds.is_empty() || bounds.iter().any(|b| !(b[0] <= b[1]) || !b[0].is_finite() || !b[1].is_finite()) {
        return Err(SwarmError::InvalidConfig("bounds must be finite with lo <= hi".into()));
    }
    let sense = problem.sense();
    let dim = bounds.len();
    let vmax: Vec<f64> = bounds.iter().map(|b| (cfg.velocity_clamp * (b[1] - b[0])).max(f64::MIN_POSITIVE)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut evaluations = 0;
    let mut particles = initialize(problem, cfg, &mut rng, &vmax, &mut evaluations)?;

    let mut gbest = 0;
    for (i, p) in particles.iter().enumerate() {
        if sense.better(p.pbest_value, particles[gbest].pbest_value) {
            gbest = i;
        }
    }
    let mut gbest_position = particles[gbest].pbest_position.clone();
    let mut gbest_value = particles[gbest].pbest_value;

    let mut params = RuntimeParams::new(cfg.decay, cfg.c1, cfg.c2);
    let mut trace = Vec::with_capacity(cfg.iterations);
    let mut history = Vec::new();
    let mut rejected = 0;
    let mut window = Window { start_best: gbest_value, ..Default::default() };

    for it in 0..cfg.iterations {
        let omega = inertia_with_decay(it, cfg.iterations, params.decay);
        let draws: Vec<[f64; 4]> = (0..particles.len()).map(|_| rng.random::<[f64; 4]>()).collect();

        let moves: Vec<(Vec<f64>, Vec<f64>, bool)> = particles
            .iter()
            .zip(&draws)
            .map(|(p, r)| {
                let v = update_velocity(p, &gbest_position, omega, params.c1, params.c2, r[0], r[1], &vmax);
                let (x, open) = cfg.position_rule.apply(&p.position, &v, r[2], bounds);
                (v, x, open)
            })
            .collect();

        let outcomes: Vec<(Option<Accepted>, usize)> = moves
            .par_iter()
            .zip(&particles)
            .zip(&draws)
            .map(|(((_, x, open), p), r)| {
                if !open || *x == p.position {
                    return (Some((x.clone(), p.value)), 0);
                }
                let mut evals = 0;
                let out = screen(problem, x.clone(), &p.pbest_position, r[3], &mut evals);
                (out, evals)
            })
            .collect();

        let mut frame = HistoryFrame { values: Vec::new(), pbest: Vec::new() };
        for ((p, (v, _, open)), (outcome, evals)) in particles.iter_mut().zip(moves).zip(outcomes) {
            window.moves += 1;
            if open {
                window.gate_open += 1;
            }
            if evals > 0 {
                window.evaluated += 1;
                evaluations += evals;
            }
            match outcome {
                Some((x, value)) => {
                    if evals > 0 {
                        window.accepted += 1;
                    }
                    p.position = x;
                    p.velocity = v;
                    p.value = value;
                    if sense.better(value, p.pbest_value) {
                        p.pbest_value = value;
                        p.pbest_position.clone_from(&p.position);
                        window.pbest_improved += 1;
                    }
                    frame.values.push(Some(value));
                }
                None => {
                    rejected += 1;
                    p.position.clone_from(&p.pbest_position);
                    p.value = p.pbest_value;
                    p.velocity = vec![0.0; dim];
                    frame.values.push(None);
                }
            }
            if sense.better(p.pbest_value, gbest_value) {
                gbest_value = p.pbest_value;
                gbest_position.clone_from(&p.pbest_position);
            }
            if cfg.record_history {
                frame.pbest.push(p.pbest_value);
            }
        }
        if cfg.record_history {
            history.push(frame);
        }

        let mut action = String::from("-");
        if let Some(gc) = gc.as_deref_mut() {
            if (it + 1) % gc.period == 0 {
                let a = gc.guidance_step(window.metrics(gbest_value), &mut params)?;
                action = a.as_str().to_string();
                window = Window { start_best: gbest_value, ..Default::default() };
            }
        }
        trace.push(TraceRow { iteration: it, best_value: gbest_value, omega, action });
    }

    Ok(SwarmResult {
        best_position: gbest_position,
        best_value: gbest_value,
        trace,
        history,
        evaluations,
        rejected,
        final_params: params,
    })
}

pub fn write_trace_csv<W: Write>(rows: &[TraceRow], out: W) -> Result<(), SwarmError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| SwarmError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| SwarmError::Io(e.to_string()))
}

/// Plain box-constrained objective, mainly for benchmarks and tests.
pub struct FnProblem<F> {
    pub bounds: Vec<[f64; 2]>,
    pub sense: Sense,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> SearchProblem for FnProblem<F> {
    fn bounds(&self) -> &[[f64; 2]] {
        &self.bounds
    }

    fn sense(&self) -> Sense {
        self.sense
    }

    fn evaluate(&self, x: &[f64]) -> Evaluation {
        Evaluation::accepted((self.f)(x))
    }
}

/// The sphere function on `[-5.12, 5.12]^dim`.
pub fn sphere(dim: usize) -> FnProblem<fn(&[f64]) -> f64> {
    fn f(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }
    FnProblem { bounds: vec![[-5.12, 5.12]; dim], sense: Sense::Minimize, f }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn particle(x: Vec<f64>, v: Vec<f64>, pb: Vec<f64>) -> Particle {
        Particle { position: x, velocity: v, value: 0.0, pbest_position: pb, pbest_value: 0.0 }
    }

    #[test]
    fn inertia_schedule() {
        assert_eq!(inertia(0, 1800), 0.9);
        assert!((inertia(9, 9) - 0.45).abs() < 1e-15);
        for i in 1..=1800 {
            assert!(inertia(i, 1800) < inertia(i - 1, 1800));
        }
        assert!(inertia(1800, 1800) > 0.4);
    }

    #[test]
    fn sigmoid_examples() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(50.0) >= 1.0 - 1e-9 && sigmoid(50.0) < 1.0);
        assert!((sigmoid(3f64.ln()) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn velocity_examples() {
        let p = particle(vec![1.0, -2.0], vec![0.3, -0.4], vec![0.0, 0.0]);
        let big = [10.0, 10.0];
        assert_eq!(update_velocity(&p, &[5.0, 5.0], 1.0, 0.0, 0.0, 0.7, 0.2, &big), vec![0.3, -0.4]);
        let q = particle(vec![1.0, 1.0], vec![0.3, -0.4], vec![1.0, 1.0]);
        let v = update_velocity(&q, &[1.0, 1.0], 0.6, 2.0, 2.0, 0.5, 0.5, &big);
        assert!((v[0] - 0.18).abs() < 1e-15 && (v[1] + 0.24).abs() < 1e-15);
        let clamped = update_velocity(&p, &[5.0, 5.0], 1.0, 2.0, 2.0, 1.0, 1.0, &[0.5, 0.5]);
        assert_eq!(clamped, vec![0.5, 0.5]);
    }

    #[test]
    fn position_examples() {
        let b = [[-10.0, 10.0]; 2];
        assert_eq!(update_position(&[1.0, 1.0], &[3.0, 4.0], 1.0, &b), vec![1.0, 1.0]);
        let moved = update_position(&[0.0, 0.0], &[3.0, 4.0], 0.0, &b);
        assert!((moved[0] - 0.6).abs() < 1e-15 && (moved[1] - 0.8).abs() < 1e-15);
        assert_eq!(update_position(&[2.0, 2.0], &[0.0, 0.0], 0.0, &b), vec![2.0, 2.0]);
        let (g, open) = PositionRule::GatedVelocity.apply(&[0.0, 0.0], &[0.3, 0.4], 0.0, &b);
        assert!(open && g == vec![0.3, 0.4]);
        let (c, _) = PositionRule::GatedVelocity.apply(&[9.9, 0.0], &[0.3, 0.4], 0.0, &b);
        assert_eq!(c[0], 10.0);
    }

    #[test]
    fn constant_fitness_sets_gbest_immediately() {
        let p = FnProblem { bounds: vec![[0.0, 1.0]; 3], sense: Sense::Minimize, f: |_: &[f64]| 4.25 };
        let cfg = SwarmConfig { population: 10, iterations: 3, ..Default::default() };
        let r = run(&p, &cfg, None).unwrap();
        assert!(r.trace.iter().all(|t| t.best_value == 4.25));
    }

    #[test]
    fn infeasible_everywhere_is_an_error() {
        struct Nope;
        impl SearchProblem for Nope {
            fn bounds(&self) -> &[[f64; 2]] {
                &[[0.0, 1.0]]
            }
            fn sense(&self) -> Sense {
                Sense::Maximize
            }
            fn evaluate(&self, _: &[f64]) -> Evaluation {
                Evaluation::outside()
            }
        }
        let cfg = SwarmConfig { population: 4, iterations: 2, init_retries: 5, ..Default::default() };
        assert_eq!(run(&Nope, &cfg, None).unwrap_err(), SwarmError::NoFeasibleParticle { retries: 5 });
    }

    #[test]
    fn config_validation() {
        assert!(SwarmConfig { population: 1, ..Default::default() }.validate().is_err());
        assert!(SwarmConfig { iterations: 0, ..Default::default() }.validate().is_err());
        assert!(SwarmConfig { c1: -1.0, ..Default::default() }.validate().is_err());
        assert!(SwarmConfig::default().validate().is_ok());
    }

    #[test]
    fn trace_csv_has_header_and_rows() {
        let rows = vec![TraceRow { iteration: 0, best_value: 1.5, omega: 0.9, action: "-".into() }];
        let mut buf = Vec::new();
        write_trace_csv(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "iteration,best_value,omega,action\n0,1.5,0.9,-\n");
    }
}
