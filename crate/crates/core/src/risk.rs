//! Risk assessment: principal-factor reduction of the assessment indices,
//! four independent logistic safety models fitted by maximum likelihood,
//! and elastic-net hinge feature weights.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{dot, sigmoid};

/// Number of independently modelled risk categories.
pub const CATEGORIES: usize = 4;

pub const DEFAULT_Q_MAX: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RiskError {
    #[error("covariance has {nonzero} nonzero eigenvalues, {requested} factors requested")]
    RankDeficient { nonzero: usize, requested: usize },
    #[error("invalid factor count {t} for {m} indices")]
    InvalidFactorCount { t: usize, m: usize },
    #[error("category {category}: likelihood is unbounded (separable outcomes)")]
    Separation { category: usize },
    #[error("no convergence after {iterations} iterations (gradient norm {grad_norm:e})")]
    NoConvergence { iterations: usize, grad_norm: f64 },
    #[error("invalid risk data: {0}")]
    InvalidData(String),
}

/// Historical assessment indices and the observed events per category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskDataset {
    pub x: Vec<Vec<f64>>,
    pub outcomes: Vec<[bool; CATEGORIES]>,
}

impl RiskDataset {
    pub fn samples(&self) -> usize {
        self.x.len()
    }

    pub fn indices(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<(), RiskError> {
        let m = self.indices();
        if self.x.is_empty() || m == 0 {
            return Err(RiskError::InvalidData("empty index matrix".into()));
        }
        if self.outcomes.len() != self.x.len() {
            return Err(RiskError::InvalidData(format!(
                "{} outcome rows for {} samples",
                self.outcomes.len(),
                self.x.len()
            )));
        }
        check_matrix(&self.x, m)
    }
}

fn check_matrix(x: &[Vec<f64>], cols: usize) -> Result<(), RiskError> {
    for (i, row) in x.iter().enumerate() {
        if row.len() != cols {
            return Err(RiskError::InvalidData(format!("row {i} has {} columns, expected {cols}", row.len())));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(RiskError::InvalidData(format!("row {i} has non-finite values")));
        }
    }
    Ok(())
}

/// Principal-direction factor model (no rotation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorModel {
    /// `m x t`; column `f` is the f-th principal direction.
    pub loadings: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub t: usize,
    /// All `m` covariance eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
}

impl FactorModel {
    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        (0..self.t)
            .map(|f| row.iter().zip(&self.mean).zip(&self.loadings).map(|((x, mu), l)| (x - mu) * l[f]).sum())
            .collect()
    }

    pub fn reconstruct(&self, scores: &[f64]) -> Vec<f64> {
        self.mean.iter().zip(&self.loadings).map(|(mu, l)| mu + dot(&l[..self.t], scores)).collect()
    }

    pub fn explained_variance_ratio(&self) -> f64 {
        let total: f64 = self.eigenvalues.iter().map(|v| v.max(0.0)).sum();
        if total == 0.0 {
            return 1.0;
        }
        self.eigenvalues[..self.t].iter().map(|v| v.max(0.0)).sum::<f64>() / total
    }

    /// Mean squared per-entry residual after projecting onto the factors.
    pub fn reconstruction_error(&self, x: &[Vec<f64>]) -> f64 {
        let entries = (x.len() * self.mean.len()).max(1) as f64;
        x.iter()
            .map(|row| {
                let back = self.reconstruct(&self.scores(row));
                row.iter().zip(back).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
            })
            .sum::<f64>()
            / entries
    }
}

/// Extracts the top-`t` principal directions of the centered indices and
/// returns the model together with the `n x t` factor scores.
pub fn extract_factors(x: &[Vec<f64>], t: usize) -> Result<(FactorModel, Vec<Vec<f64>>), RiskError> {
    let m = x.first().map_or(0, Vec::len);
    if x.len() < 2 || m == 0 {
        return Err(RiskError::InvalidData("need at least two samples".into()));
    }
    check_matrix(x, m)?;
    if t == 0 || t > m {
        return Err(RiskError::InvalidFactorCount { t, m });
    }
    let n = x.len();
    let mean: Vec<f64> = (0..m).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let centered = DMatrix::from_fn(n, m, |i, j| x[i][j] - mean[j]);
    let cov = (centered.transpose() * &centered) / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let tol = 1e-10 * eigenvalues[0].abs().max(f64::MIN_POSITIVE);
    let nonzero = eigenvalues.iter().filter(|&&v| v > tol).count();
    if nonzero < t {
        return Err(RiskError::RankDeficient { nonzero, requested: t });
    }

    let mut loadings = vec![vec![0.0; t]; m];
    for (f, &k) in order.iter().take(t).enumerate() {
        let col = eig.eigenvectors.column(k);
        // Sign convention: largest-magnitude entry positive, so runs agree.
        let pivot = (0..m).max_by(|&a, &b| col[a].abs().total_cmp(&col[b].abs())).unwrap_or(0);
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for (j, row) in loadings.iter_mut().enumerate() {
            row[f] = sign * col[j];
        }
    }
    let model = FactorModel { loadings, mean, t, eigenvalues };
    let scores = x.iter().map(|row| model.scores(row)).collect();
    Ok((model, scores))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryModel {
    pub intercept: f64,
    pub coeffs: Vec<f64>,
}

impl CategoryModel {
    pub fn logit(&self, factors: &[f64]) -> f64 {
        self.intercept + dot(&self.coeffs, factors)
    }
}

/// Four independent binary logistic models over the same factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRiskModel {
    pub categories: Vec<CategoryModel>,
}

/// Per-category outcome of a Newton fit, including the log-likelihood at
/// every accepted iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub model: CategoryModel,
    pub iterations: usize,
    pub grad_norm: f64,
    pub loglik_trace: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { max_iter: 200, grad_tol: 1e-6 }
    }
}

fn log_likelihood(design: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>) -> f64 {
    let eta = design * beta;
    eta.iter()
        .zip(y.iter())
        .map(|(&e, &yi)| {
            // log(1 + exp(e)) evaluated stably
            let softplus = if e > 0.0 { e + (-e).exp().ln_1p() } else { e.exp().ln_1p() };
            yi * e - softplus
        })
        .sum()
}

/// Damped Newton fit of one binary logistic model with intercept.
pub fn fit_binary_logistic(
    x: &[Vec<f64>],
    y: &[bool],
    category: usize,
    opts: NewtonOptions,
) -> Result<LogisticFit, RiskError> {
    let n = x.len();
    let t = x.first().map_or(0, Vec::len);
    if n != y.len() || n == 0 {
        return Err(RiskError::InvalidData(format!("{n} samples, {} outcomes", y.len())));
    }
    let positives = y.iter().filter(|&&v| v).count();
    if positives == 0 || positives == n {
        return Err(RiskError::Separation { category });
    }
    let design = DMatrix::from_fn(n, t + 1, |i, j| if j == 0 { 1.0 } else { x[i][j - 1] });
    let yv = DVector::from_iterator(n, y.iter().map(|&b| if b { 1.0 } else { 0.0 }));
    let base = positives as f64 / n as f64;
    let mut beta = DVector::zeros(t + 1);
    beta[0] = (base / (1.0 - base)).ln();
    let mut ll = log_likelihood(&design, &yv, &beta);
    let mut trace = vec![ll];
    let mut grad_norm = f64::INFINITY;

    for iter in 0..=opts.max_iter {
        let p = (&design * &beta).map(sigmoid);
        let grad = design.transpose() * (&yv - &p);
        grad_norm = grad.norm();
        if grad_norm <= opts.grad_tol {
            return Ok(LogisticFit {
                model: CategoryModel { intercept: beta[0], coeffs: beta.iter().skip(1).copied().collect() },
                iterations: iter,
                grad_norm,
                loglik_trace: trace,
            });
        }
        if iter == opts.max_iter {
            break;
        }
        let w = p.map(|pi| pi * (1.0 - pi));
        let weighted = DMatrix::from_fn(n, t + 1, |i, j| design[(i, j)] * w[i]);
        let hessian = design.transpose() * weighted;
        let step = match hessian.cholesky() {
            Some(ch) => ch.solve(&grad),
            None => return Err(RiskError::Separation { category }),
        };
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let candidate = &beta + &step * scale;
            let cand_ll = log_likelihood(&design, &yv, &candidate);
            // Near the optimum the gain drops below the rounding of `ll`.
            if cand_ll >= ll - 1e-12 * ll.abs().max(1.0) {
                beta = candidate;
                ll = cand_ll;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
        trace.push(ll);
        if ll > -1e-6 || beta.amax() > 1e3 {
            return Err(RiskError::Separation { category });
        }
    }
    Err(RiskError::NoConvergence { iterations: opts.max_iter, grad_norm })
}

/// Fits each category independently on the given factor scores.
pub fn fit_logistic(scores: &[Vec<f64>], outcomes: &[[bool; CATEGORIES]]) -> Result<LogisticRiskModel, RiskError> {
    Ok(LogisticRiskModel {
        categories: fit_logistic_detailed(scores, outcomes, NewtonOptions::default())?
            .into_iter()
            .map(|f| f.model)
            .collect(),
    })
}

pub fn fit_logistic_detailed(
    scores: &[Vec<f64>],
    outcomes: &[[bool; CATEGORIES]],
    opts: NewtonOptions,
) -> Result<Vec<LogisticFit>, RiskError> {
    let t = scores.first().map_or(0, Vec::len);
    check_matrix(scores, t)?;
    (0..CATEGORIES)
        .map(|c| {
            let y: Vec<bool> = outcomes.iter().map(|o| o[c]).collect();
            fit_binary_logistic(scores, &y, c, opts)
        })
        .collect()
}

/// Event probability per category for one factor vector.
pub fn predict_risk(model: &LogisticRiskModel, factors: &[f64]) -> [f64; CATEGORIES] {
    let mut q = [0.0; CATEGORIES];
    for (qc, cat) in q.iter_mut().zip(&model.categories) {
        *qc = sigmoid(cat.logit(factors));
    }
    q
}

/// Safety filter: a decision is safe when every category probability is at
/// most `q_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskGate {
    pub factors: FactorModel,
    pub model: LogisticRiskModel,
    pub q_max: f64,
}

impl RiskGate {
    /// Fits the factor model and the four logistic models from history.
    pub fn fit(data: &RiskDataset, t: usize, q_max: f64) -> Result<Self, RiskError> {
        data.validate()?;
        let (factors, scores) = extract_factors(&data.x, t)?;
        let model = fit_logistic(&scores, &data.outcomes)?;
        Ok(Self { factors, model, q_max })
    }

    pub fn assess(&self, indices: &[f64]) -> [f64; CATEGORIES] {
        predict_risk(&self.model, &self.factors.scores(indices))
    }

    pub fn max_risk(&self, indices: &[f64]) -> f64 {
        self.assess(indices).into_iter().fold(0.0, f64::max)
    }

    pub fn is_safe(&self, indices: &[f64]) -> bool {
        self.max_risk(indices) <= self.q_max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureWeights {
    pub beta: Vec<f64>,
    pub beta0: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubgradientOptions {
    pub max_iter: usize,
    /// Stop once the best objective improves by less than this (relative)
    /// over one window.
    pub tol: f64,
    pub window: usize,
}

impl Default for SubgradientOptions {
    fn default() -> Self {
        Self { max_iter: 40_000, tol: 1e-9, window: 2_000 }
    }
}

/// `sum_i max(0, 1 - y_i (beta . k_i + beta0)) + l1 |beta|_1 + l2 |beta|^2 / 2`
pub fn hinge_objective(
    samples: &[Vec<f64>],
    labels: &[f64],
    beta: &[f64],
    beta0: f64,
    lambda1: f64,
    lambda2: f64,
) -> f64 {
    let loss: f64 = samples.iter().zip(labels).map(|(k, &y)| (1.0 - y * (dot(beta, k) + beta0)).max(0.0)).sum();
    let l1: f64 = beta.iter().map(|b| b.abs()).sum();
    let l2: f64 = beta.iter().map(|b| b * b).sum();
    loss + lambda1 * l1 + lambda2 * l2 / 2.0
}

/// Elastic-net hinge feature weights by proximal subgradient descent.
///
/// The hinge and ridge terms take a subgradient step; the L1 term is
/// applied through soft-thresholding so heavily penalized coordinates land
/// on exact zeros. The best iterate seen is returned, starting from zero.
pub fn fit_feature_weights(
    samples: &[Vec<f64>],
    labels: &[f64],
    lambda1: f64,
    lambda2: f64,
    opts: SubgradientOptions,
) -> Result<FeatureWeights, RiskError> {
    let n = samples.len();
    let d = samples.first().map_or(0, Vec::len);
    if n < 2 || labels.len() != n {
        return Err(RiskError::InvalidData(format!("{n} samples, {} labels", labels.len())));
    }
    check_matrix(samples, d)?;
    if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
        return Err(RiskError::InvalidData("labels must be +1 or -1".into()));
    }
    if !labels.contains(&1.0) || !labels.contains(&-1.0) {
        return Err(RiskError::InvalidData("both labels must be present".into()));
    }
    if !(lambda1 >= 0.0 && lambda2 >= 0.0) {
        return Err(RiskError::InvalidData("regularizers must be nonnegative".into()));
    }

    let max_sq = samples.iter().map(|k| dot(k, k)).fold(0.0, f64::max) + 1.0;
    let eta0 = 1.0 / max_sq;
    let nf = n as f64;
    let mut beta = vec![0.0; d];
    let mut beta0 = 0.0;
    let mut best = (beta.clone(), beta0, hinge_objective(samples, labels, &beta, beta0, lambda1, lambda2));
    let mut window_start = best.2;
    let mut grad = vec![0.0; d];

    for it in 0..opts.max_iter {
        let eta = eta0 / ((it + 1) as f64).sqrt();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut grad0 = 0.0;
        for (k, &y) in samples.iter().zip(labels) {
            if y * (dot(&beta, k) + beta0) < 1.0 {
                for (g, kj) in grad.iter_mut().zip(k) {
                    *g -= y * kj;
                }
                grad0 -= y;
            }
        }
        for ((b, g), _) in beta.iter_mut().zip(&grad).zip(0..) {
            let moved = *b - eta * (g / nf + lambda2 * *b / nf);
            let thresh = eta * lambda1 / nf;
            *b = moved.signum() * (moved.abs() - thresh).max(0.0);
        }
        beta0 -= eta * grad0 / nf;

        let obj = hinge_objective(samples, labels, &beta, beta0, lambda1, lambda2);
        if !obj.is_finite() {
            return Err(RiskError::NoConvergence { iterations: it, grad_norm: f64::NAN });
        }
        if obj < best.2 {
            best = (beta.clone(), beta0, obj);
        }
        if (it + 1) % opts.window == 0 {
            let gain = (window_start - best.2) / window_start.abs().max(1.0);
            if gain <= opts.tol {
                break;
            }
            window_start = best.2;
            if it + 1 == opts.max_iter && gain > 1e-3 {
                return Err(RiskError::NoConvergence { iterations: it + 1, grad_norm: gain });
            }
        }
    }
    let (beta, beta0, objective) = best;
    Ok(FeatureWeights { beta, beta0, lambda1, lambda2, objective })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normal(rng: &mut ChaCha8Rng) -> f64 {
        StandardNormal.sample(rng)
    }

    #[test]
    fn embedded_low_rank_data_reconstructs_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let load = [[1.0, 0.0], [0.5, 1.0], [0.0, 2.0], [1.0, 1.0], [-1.0, 0.3]];
        let x: Vec<Vec<f64>> = (0..200)
            .map(|_| {
                let f = [normal(&mut rng), normal(&mut rng)];
                load.iter().map(|l| 3.0 + l[0] * f[0] + l[1] * f[1]).collect()
            })
            .collect();
        let (model, scores) = extract_factors(&x, 2).unwrap();
        assert_eq!(scores.len(), 200);
        assert!(model.reconstruction_error(&x) < 1e-20);
        assert!(matches!(extract_factors(&x, 3), Err(RiskError::RankDeficient { nonzero: 2, requested: 3 })));
    }

    #[test]
    fn full_rank_reproduces_centered_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x: Vec<Vec<f64>> = (0..50).map(|_| (0..4).map(|_| normal(&mut rng)).collect()).collect();
        let (model, scores) = extract_factors(&x, 4).unwrap();
        assert!(model.reconstruction_error(&x) < 1e-24);
        // Rotation preserves squared norms of centered rows.
        for (row, s) in x.iter().zip(&scores) {
            let c: f64 = row.iter().zip(&model.mean).map(|(a, m)| (a - m).powi(2)).sum();
            assert!((c - dot(s, s)).abs() < 1e-10);
        }
        // Orthonormal loadings.
        for a in 0..4 {
            for b in 0..4 {
                let ip: f64 = model.loadings.iter().map(|r| r[a] * r[b]).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn factor_count_validation() {
        let x = vec![vec![1.0, 2.0], vec![2.0, 1.0], vec![0.0, 0.5]];
        assert!(matches!(extract_factors(&x, 0), Err(RiskError::InvalidFactorCount { .. })));
        assert!(matches!(extract_factors(&x, 3), Err(RiskError::InvalidFactorCount { .. })));
    }

    #[test]
    fn explained_variance_nondecreasing_in_t() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<Vec<f64>> = (0..300).map(|_| (0..6).map(|j| normal(&mut rng) * (j + 1) as f64).collect()).collect();
        let mut prev_ratio = 0.0;
        let mut prev_err = f64::INFINITY;
        for t in 1..=6 {
            let (m, _) = extract_factors(&x, t).unwrap();
            assert!(m.explained_variance_ratio() >= prev_ratio - 1e-12);
            let err = m.reconstruction_error(&x);
            assert!(err <= prev_err + 1e-12);
            prev_ratio = m.explained_variance_ratio();
            prev_err = err;
        }
    }

    #[test]
    fn zero_coefficients_recover_base_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 4000;
        let scores: Vec<Vec<f64>> = (0..n).map(|_| vec![normal(&mut rng), normal(&mut rng)]).collect();
        let outcomes: Vec<[bool; 4]> = (0..n)
            .map(|_| [rng.random_bool(0.3), rng.random_bool(0.5), rng.random_bool(0.1), rng.random_bool(0.7)])
            .collect();
        let model = fit_logistic(&scores, &outcomes).unwrap();
        for (c, cat) in model.categories.iter().enumerate() {
            let rate = outcomes.iter().filter(|o| o[c]).count() as f64 / n as f64;
            assert!((cat.intercept - (rate / (1.0 - rate)).ln()).abs() < 0.05, "category {c}");
            assert!(cat.coeffs.iter().all(|b| b.abs() < 0.1), "category {c}: {:?}", cat.coeffs);
        }
    }

    #[test]
    fn single_factor_recovery_and_monotone_likelihood() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 5000;
        let x: Vec<Vec<f64>> = (0..n).map(|_| vec![normal(&mut rng)]).collect();
        let y: Vec<bool> = x.iter().map(|r| rng.random_bool(sigmoid(r[0]))).collect();
        let fit = fit_binary_logistic(&x, &y, 0, NewtonOptions::default()).unwrap();
        assert!(fit.model.intercept.abs() <= 0.15);
        assert!((fit.model.coeffs[0] - 1.0).abs() <= 0.15);
        assert!(fit.grad_norm <= 1e-6);
        for w in fit.loglik_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-12 * w[0].abs());
        }
    }

    #[test]
    fn separable_category_is_rejected() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 - 20.0]).collect();
        let y: Vec<bool> = x.iter().map(|r| r[0] > 0.0).collect();
        assert_eq!(
            fit_binary_logistic(&x, &y, 2, NewtonOptions::default()),
            Err(RiskError::Separation { category: 2 })
        );
        let constant = vec![false; 40];
        assert_eq!(
            fit_binary_logistic(&x, &constant, 1, NewtonOptions::default()),
            Err(RiskError::Separation { category: 1 })
        );
    }

    #[test]
    fn newton_iteration_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x: Vec<Vec<f64>> = (0..500).map(|_| vec![normal(&mut rng)]).collect();
        let y: Vec<bool> = x.iter().map(|r| rng.random_bool(sigmoid(2.0 * r[0]))).collect();
        let opts = NewtonOptions { max_iter: 1, grad_tol: 1e-12 };
        assert!(matches!(fit_binary_logistic(&x, &y, 0, opts), Err(RiskError::NoConvergence { .. })));
    }

    #[test]
    fn predict_risk_examples() {
        let zero = LogisticRiskModel { categories: vec![CategoryModel { intercept: 0.0, coeffs: vec![0.0; 3] }; 4] };
        assert_eq!(predict_risk(&zero, &[1.0, -2.0, 3.0]), [0.5; 4]);
        let mut m = zero.clone();
        m.categories[0].intercept = 3f64.ln();
        assert!((predict_risk(&m, &[0.0; 3])[0] - 0.75).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cats: Vec<CategoryModel> = (0..4)
            .map(|_| CategoryModel { intercept: normal(&mut rng), coeffs: (0..3).map(|_| normal(&mut rng)).collect() })
            .collect();
        let model = LogisticRiskModel { categories: cats.clone() };
        let f = [0.3, -1.2, 0.7];
        let q = predict_risk(&model, &f);
        for (c, cat) in cats.iter().enumerate() {
            let eta = cat.intercept + cat.coeffs[0] * f[0] + cat.coeffs[1] * f[1] + cat.coeffs[2] * f[2];
            assert!((q[c] - 1.0 / (1.0 + (-eta).exp())).abs() < 1e-15);
        }
    }

    #[test]
    fn predict_risk_monotone_in_positive_coefficient() {
        let model =
            LogisticRiskModel { categories: vec![CategoryModel { intercept: -1.0, coeffs: vec![0.8, -0.4] }; 4] };
        let mut prev = 0.0;
        for i in -50..50 {
            let q = predict_risk(&model, &[i as f64 * 0.2, 0.5])[0];
            assert!(q > prev);
            prev = q;
        }
    }

    #[test]
    fn huge_l1_zeroes_weights() {
        let samples = vec![vec![1.0, 2.0], vec![2.0, 0.5], vec![-1.0, -1.5], vec![-2.0, 0.1], vec![0.5, 0.5]];
        let labels = vec![1.0, 1.0, -1.0, -1.0, 1.0];
        let w = fit_feature_weights(&samples, &labels, 1e6, 0.0, SubgradientOptions::default()).unwrap();
        assert!(w.beta.iter().all(|&b| b == 0.0), "{:?}", w.beta);
        // Majority class is +1, so the bias settles on the positive side.
        assert!(w.beta0 > 0.0);
        let zero = hinge_objective(&samples, &labels, &[0.0, 0.0], 0.0, 1e6, 0.0);
        assert!(w.objective <= zero + 1e-9);
    }

    #[test]
    fn separable_data_reaches_zero_hinge() {
        let samples =
            vec![vec![2.0, 2.0], vec![3.0, 1.0], vec![2.5, 3.0], vec![-2.0, -1.0], vec![-3.0, -2.5], vec![-1.5, -3.0]];
        let labels = vec![1.0, 1.0, 1.0, -1.0, -1.0, -1.0];
        let w = fit_feature_weights(&samples, &labels, 1e-3, 1e-3, SubgradientOptions::default()).unwrap();
        for (k, &y) in samples.iter().zip(&labels) {
            let margin = y * (dot(&w.beta, k) + w.beta0);
            assert!(margin >= 1.0 - 1e-6, "margin {margin}");
        }
    }

    #[test]
    fn feature_weight_input_validation() {
        let s = vec![vec![1.0], vec![2.0]];
        assert!(fit_feature_weights(&s, &[1.0, 1.0], 0.1, 0.1, SubgradientOptions::default()).is_err());
        assert!(fit_feature_weights(&s, &[1.0, 0.0], 0.1, 0.1, SubgradientOptions::default()).is_err());
        assert!(fit_feature_weights(&s, &[1.0, -1.0], -0.1, 0.1, SubgradientOptions::default()).is_err());
    }

    #[test]
    fn hinge_objective_is_convex_along_segments() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let samples: Vec<Vec<f64>> =
            (0..30).map(|_| vec![normal(&mut rng), normal(&mut rng), normal(&mut rng)]).collect();
        let labels: Vec<f64> = (0..30).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
        for _ in 0..500 {
            let a: Vec<f64> = (0..4).map(|_| 3.0 * normal(&mut rng)).collect();
            let b: Vec<f64> = (0..4).map(|_| 3.0 * normal(&mut rng)).collect();
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
            let f = |v: &[f64]| hinge_objective(&samples, &labels, &v[..3], v[3], 0.7, 0.3);
            assert!(f(&mid) <= 0.5 * (f(&a) + f(&b)) + 1e-9);
        }
    }
}
