use rand::Rng;

use super::DecisionResult;
use crate::answers::AnswerMatrix;
use crate::error::{Error, Result};
use crate::llr::{log_odds_weight, settle};
use crate::population::PROB_FLOOR;
use crate::quadrature::GaussLegendre;

/// Upper end of the error-probability support.
const SUPPORT: f64 = 0.5;
const LAMBDA_BRACKET: f64 = 1e4;

/// Prior family on each worker's error probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prior {
    /// Maximum-entropy density on `[0, 1/2]` with the class mean.
    MaxEntropy,
    /// Two-point prior on `{0, 1}`.
    Haldane,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpConfig {
    pub iterations: usize,
    pub prior: Prior,
    pub quadrature_nodes: usize,
    pub lambda_tolerance: f64,
}

impl Default for MpConfig {
    fn default() -> Self {
        Self {
            iterations: 10,
            prior: Prior::MaxEntropy,
            quadrature_nodes: 64,
            lambda_tolerance: 1e-10,
        }
    }
}

impl MpConfig {
    pub fn haldane() -> Self {
        Self {
            prior: Prior::Haldane,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::InvalidParameter(
                "message passing needs at least one iteration".into(),
            ));
        }
        if self.quadrature_nodes < 8 {
            return Err(Error::InvalidParameter(format!(
                "quadrature_nodes = {} is below the minimum of 8",
                self.quadrature_nodes
            )));
        }
        if self.lambda_tolerance.is_nan() || self.lambda_tolerance <= 0.0 {
            return Err(Error::InvalidParameter("lambda_tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Mean of the density proportional to `exp(lambda p)` on `[0, SUPPORT]`.
fn exp_density_mean(lambda: f64) -> f64 {
    let l = SUPPORT;
    if (lambda * l).abs() < 1e-3 {
        return l / 2.0 + lambda * l * l / 12.0 - lambda.powi(3) * l.powi(4) / 720.0;
    }
    let positive = |lam: f64| l / -(-lam * l).exp_m1() - 1.0 / lam;
    if lambda > 0.0 {
        positive(lambda)
    } else {
        l - positive(-lambda)
    }
}

/// `lambda` such that the density proportional to `exp(lambda p)` on
/// `[0, 1/2]` has mean `pi`, by bisection on `[-1e4, 1e4]`.
pub fn solve_lambda(pi: f64, tolerance: f64) -> Result<f64> {
    if !(pi > 0.0 && pi < SUPPORT) {
        return Err(Error::InvalidParameter(format!("class mean {pi} must lie in (0, 1/2)")));
    }
    let (mut lo, mut hi) = (-LAMBDA_BRACKET, LAMBDA_BRACKET);
    if exp_density_mean(lo) > pi + tolerance || exp_density_mean(hi) < pi - tolerance {
        return Err(Error::InvalidParameter(format!(
            "class mean {pi} is not reachable with |lambda| <= {LAMBDA_BRACKET}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let mean = exp_density_mean(mid);
        if (mean - pi).abs() <= tolerance {
            return Ok(mid);
        }
        if mean < pi {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Prior of one class on `[0, 1/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassPrior {
    /// Every worker has exactly this error probability.
    PointMass(f64),
    /// Density proportional to `exp(lambda p)`.
    Exponential { lambda: f64 },
}

impl ClassPrior {
    /// Maximum-entropy prior with mean `pi`. Spammer classes (`pi >= 1/2`)
    /// and classes too reliable for the bisection bracket are point masses.
    pub fn max_entropy(pi: f64, tolerance: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&pi) {
            return Err(Error::InvalidParameter(format!("class mean {pi} is not a probability")));
        }
        if pi >= SUPPORT {
            return Ok(Self::PointMass(SUPPORT));
        }
        let pi = pi.max(PROB_FLOOR);
        Ok(match solve_lambda(pi, tolerance) {
            Ok(lambda) => Self::Exponential { lambda },
            Err(_) => Self::PointMass(pi),
        })
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::PointMass(p) => p,
            Self::Exponential { lambda } => exp_density_mean(lambda),
        }
    }
}

/// `a tanh(m / 2)`, the part of a message factor that does not depend on `p`.
fn soft_answer(a: i8, m: f64) -> f64 {
    f64::from(a) * (0.5 * m).tanh()
}

/// `ln(1 + (1 - 2p) s)`, or `None` for a zero factor.
fn log_factor(p: f64, s: f64) -> Option<f64> {
    let x = (1.0 - 2.0 * p) * s;
    (x > -1.0).then(|| x.ln_1p())
}

fn weighted_mean(rule: &GaussLegendre, lambda: f64, log_like: impl Fn(usize) -> Option<f64>) -> Option<f64> {
    let logs: Vec<Option<f64>> = (0..rule.len())
        .map(|j| log_like(j).map(|l| l + lambda * rule.nodes[j]))
        .collect();
    let max = logs.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return None;
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (j, l) in logs.iter().enumerate() {
        if let Some(l) = l {
            let w = rule.weights[j] * (l - max).exp();
            num += w * rule.nodes[j];
            den += w;
        }
    }
    Some(num / den)
}

/// Posterior mean of `p` under `prior` given `(a, m)` pairs: the prior times
/// `prod [1 + (1 - 2p) a tanh(m / 2)]`, integrated with `rule`.
pub fn posterior_mean(prior: &ClassPrior, messages: &[(i8, f64)], rule: &GaussLegendre) -> f64 {
    let lambda = match *prior {
        ClassPrior::PointMass(p) => return p,
        ClassPrior::Exponential { lambda } => lambda,
    };
    let soft: Vec<f64> = messages.iter().map(|&(a, m)| soft_answer(a, m)).collect();
    weighted_mean(rule, lambda, |j| {
        soft.iter()
            .try_fold(0.0, |acc, &s| log_factor(rule.nodes[j], s).map(|l| acc + l))
    })
    .unwrap_or_else(|| prior.mean())
}

/// Scale step used to keep running products of factors in range.
const RESCALE: f64 = 1e150;

/// For each incoming pair, the posterior mean given all the other pairs.
///
/// At each node the product of all factors is formed once, with explicit
/// rescaling so that its logarithm is exact even when it would underflow;
/// each extrinsic value then divides its own factor back out. Zero factors
/// are counted separately so that they cancel exactly.
pub fn extrinsic_posterior_weights(prior: &ClassPrior, messages: &[(i8, f64)], rule: &GaussLegendre) -> Vec<f64> {
    let lambda = match *prior {
        ClassPrior::PointMass(p) => return vec![p; messages.len()],
        ClassPrior::Exponential { lambda } => lambda,
    };
    let soft: Vec<f64> = messages.iter().map(|&(a, m)| soft_answer(a, m)).collect();
    let n = rule.len();
    let mut log_total = vec![0.0; n];
    let mut zeros = vec![0usize; n];
    for j in 0..n {
        let c = 1.0 - 2.0 * rule.nodes[j];
        let (mut prod, mut shifts) = (1.0f64, 0i32);
        for &s in &soft {
            let f = 1.0 + c * s;
            if f <= 0.0 {
                zeros[j] += 1;
                continue;
            }
            prod *= f;
            if prod < 1.0 / RESCALE {
                prod *= RESCALE;
                shifts += 1;
            }
        }
        log_total[j] = prod.ln() - f64::from(shifts) * RESCALE.ln() + lambda * rule.nodes[j];
    }
    let max = log_total.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let base: Vec<f64> = (0..n).map(|j| rule.weights[j] * (log_total[j] - max).exp()).collect();
    soft.iter()
        .map(|&s| {
            let (mut num, mut den) = (0.0, 0.0);
            for j in 0..n {
                let f = 1.0 + (1.0 - 2.0 * rule.nodes[j]) * s;
                let w = match zeros[j] {
                    0 => base[j] / f,
                    1 if f <= 0.0 => base[j],
                    _ => 0.0,
                };
                num += w * rule.nodes[j];
                den += w;
            }
            if den > 0.0 && den.is_finite() {
                num / den
            } else {
                prior.mean()
            }
        })
        .collect()
}

fn clamped_weight(p: f64) -> f64 {
    log_odds_weight(p.clamp(PROB_FLOOR, SUPPORT))
}

fn check_shape(answers: &AnswerMatrix, class_of: &[usize], num_classes: usize) -> Result<()> {
    if class_of.len() != answers.num_workers() {
        return Err(Error::OutOfRange(format!(
            "class map covers {} workers, answer matrix has {}",
            class_of.len(),
            answers.num_workers()
        )));
    }
    if let Some(&k) = class_of.iter().find(|&&k| k >= num_classes) {
        return Err(Error::OutOfRange(format!(
            "class {k} has no prior ({num_classes} given)"
        )));
    }
    Ok(())
}

/// Per-task scores `sum_w a_tw weight_e` and their absolute scale.
fn task_llrs(answers: &AnswerMatrix, weights: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (0..answers.num_tasks())
        .map(|t| {
            answers.row_range(t).fold((0.0, 0.0), |(s, m), e| {
                (s + f64::from(answers.entry_value(e)) * weights[e], m + weights[e].abs())
            })
        })
        .unzip()
}

/// Extrinsic task-to-worker messages `LLR_t - a_tw weight_tw`.
fn task_messages(answers: &AnswerMatrix, weights: &[f64], llr: &[f64]) -> Vec<f64> {
    let mut m = vec![0.0; answers.nnz()];
    for (t, &l) in llr.iter().enumerate() {
        for e in answers.row_range(t) {
            m[e] = l - f64::from(answers.entry_value(e)) * weights[e];
        }
    }
    m
}

fn finish<R: Rng + ?Sized>(llr: Vec<f64>, scale: Vec<f64>, rng: &mut R) -> DecisionResult {
    let scores = llr.into_iter().zip(scale).map(|(l, s)| settle(l, s)).collect();
    DecisionResult::from_scores(scores, rng)
}

/// Message passing with per-class maximum-entropy priors.
///
/// Workers start at their class mean `pi[k]`; each iteration forms the task
/// LLRs from the current worker estimates, sends extrinsic messages to the
/// workers, and replaces each edge's error probability with the worker's
/// posterior mean given its other tasks. One iteration is exactly the MAP rule.
pub fn decide_mp<R: Rng + ?Sized>(
    answers: &AnswerMatrix,
    class_of: &[usize],
    pi: &[f64],
    cfg: &MpConfig,
    rng: &mut R,
) -> Result<DecisionResult> {
    cfg.validate()?;
    if cfg.prior == Prior::Haldane {
        return decide_mp_haldane(answers, cfg, rng);
    }
    check_shape(answers, class_of, pi.len())?;
    if let Some(&p) = pi.iter().find(|&&p| !(p > 0.0 && p <= SUPPORT)) {
        return Err(Error::InvalidParameter(format!(
            "class mean {p} must lie in (0, 1/2]; clamp zero probabilities first"
        )));
    }
    let priors = pi
        .iter()
        .map(|&p| ClassPrior::max_entropy(p, cfg.lambda_tolerance))
        .collect::<Result<Vec<_>>>()?;
    let rule = GaussLegendre::new(cfg.quadrature_nodes, 0.0, SUPPORT);
    let columns = answers.column_entries();

    let mut weights: Vec<f64> = (0..answers.nnz())
        .map(|e| clamped_weight(pi[class_of[answers.entry_worker(e)]]))
        .collect();
    let mut iteration = 1;
    loop {
        let (llr, scale) = task_llrs(answers, &weights);
        if iteration == cfg.iterations {
            return Ok(finish(llr, scale, rng));
        }
        let m = task_messages(answers, &weights, &llr);
        for (w, col) in columns.iter().enumerate() {
            if col.is_empty() {
                continue;
            }
            let incoming: Vec<(i8, f64)> = col.iter().map(|&e| (answers.entry_value(e), m[e])).collect();
            let p = extrinsic_posterior_weights(&priors[class_of[w]], &incoming, &rule);
            for (&e, p) in col.iter().zip(p) {
                weights[e] = clamped_weight(p);
            }
        }
        iteration += 1;
    }
}

/// Message passing under the two-point prior on `{0, 1}`.
///
/// With that prior the posterior log-odds of a worker being reliable is the
/// sum of its extrinsic messages, `y = sum_{t' != t} a_t'w m_t'->w`, which is
/// used directly as the edge weight. Weights start at 1, so the first
/// iteration is a majority vote, and are rescaled by their largest magnitude
/// after every update since only their ratios affect decisions.
///
/// The prior is symmetric under swapping reliable and adversarial workers, so
/// a weight vector and its negation fit equally well. The orientation with a
/// non-negative weight sum is kept, as for the LRA singular vector.
pub fn decide_mp_haldane<R: Rng + ?Sized>(
    answers: &AnswerMatrix,
    cfg: &MpConfig,
    rng: &mut R,
) -> Result<DecisionResult> {
    cfg.validate()?;
    let columns = answers.column_entries();
    let mut weights = vec![1.0; answers.nnz()];
    let mut iteration = 1;
    loop {
        let (llr, scale) = task_llrs(answers, &weights);
        if iteration == cfg.iterations {
            return Ok(finish(llr, scale, rng));
        }
        let m = task_messages(answers, &weights, &llr);
        for col in &columns {
            let sum: f64 = col.iter().map(|&e| f64::from(answers.entry_value(e)) * m[e]).sum();
            for &e in col {
                weights[e] = sum - f64::from(answers.entry_value(e)) * m[e];
            }
        }
        let top = weights.iter().fold(0.0f64, |acc, w| acc.max(w.abs()));
        if top > 0.0 {
            let sign = if weights.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
            weights.iter_mut().for_each(|w| *w *= sign / top);
        }
        iteration += 1;
    }
}
