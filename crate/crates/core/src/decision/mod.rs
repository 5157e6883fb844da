//! Answer aggregation rules.
//!
//! Each rule maps an [`AnswerMatrix`] to one score per task and decides by the
//! score's sign. Zero scores are ties and are broken with a fair coin drawn
//! from the caller's generator, in task order.

mod lra;
mod mp;

use std::fmt::Write as _;

use rand::Rng;

pub use lra::{decide_lra, decide_lra_blocks, leading_right_singular_vector};
pub use mp::{
    decide_mp, decide_mp_haldane, extrinsic_posterior_weights, posterior_mean, solve_lambda, ClassPrior, MpConfig,
    Prior,
};

use crate::answers::AnswerMatrix;
use crate::error::{Error, Result};
use crate::llr::{log_odds_weight, settle};
use crate::population::{ClassProfile, Population, TaskTruths};

/// Task estimates with the scores they were taken from.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionResult {
    pub estimates: Vec<i8>,
    pub scores: Vec<f64>,
    pub tie_broken: Vec<bool>,
}

impl DecisionResult {
    /// Decides by sign; exact zeros become random guesses.
    pub fn from_scores<R: Rng + ?Sized>(scores: Vec<f64>, rng: &mut R) -> Self {
        let mut estimates = Vec::with_capacity(scores.len());
        let mut tie_broken = Vec::with_capacity(scores.len());
        for &s in &scores {
            if s > 0.0 {
                estimates.push(1);
                tie_broken.push(false);
            } else if s < 0.0 {
                estimates.push(-1);
                tie_broken.push(false);
            } else {
                estimates.push(if rng.random::<bool>() { 1 } else { -1 });
                tie_broken.push(true);
            }
        }
        Self {
            estimates,
            scores,
            tie_broken,
        }
    }

    pub fn len(&self) -> usize {
        self.estimates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimates.is_empty()
    }

    /// `tau_hat_t != tau_t` for every task.
    pub fn errors(&self, truths: &TaskTruths) -> Vec<bool> {
        self.estimates
            .iter()
            .zip(truths.values())
            .map(|(&e, &t)| e != t)
            .collect()
    }

    /// `task,estimate,score,tie_broken` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("task,estimate,score,tie_broken\n");
        for t in 0..self.len() {
            let _ = writeln!(
                out,
                "{t},{},{},{}",
                self.estimates[t], self.scores[t], self.tie_broken[t]
            );
        }
        out
    }
}

/// Majority vote: the sign of the answer sum.
pub fn decide_majority<R: Rng + ?Sized>(answers: &AnswerMatrix, rng: &mut R) -> DecisionResult {
    let scores = (0..answers.num_tasks())
        .map(|t| answers.row(t).map(|(_, a)| f64::from(a)).sum())
        .collect();
    DecisionResult::from_scores(scores, rng)
}

fn check_weight_prob(p: f64, what: &str) -> Result<()> {
    if p > 0.0 && p <= 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{what} = {p} must lie in (0, 1/2]; clamp zero probabilities first"
        )))
    }
}

/// MAP decision with class-level error probabilities:
/// `LLR_t = sum_k (d_tk - 2 m_tk) ln((1 - pi_tk) / pi_tk)`.
pub fn decide_map<R: Rng + ?Sized>(
    answers: &AnswerMatrix,
    profile: &ClassProfile,
    rng: &mut R,
) -> Result<DecisionResult> {
    if answers.num_tasks() != profile.num_tasks() || answers.num_workers() != profile.num_workers() {
        return Err(Error::OutOfRange("answer matrix and profile differ in shape".into()));
    }
    let k_count = profile.num_classes();
    let class_of = profile.class_of();
    let mut counts = vec![(0i64, 0i64); k_count];
    let mut scores = Vec::with_capacity(answers.num_tasks());
    for t in 0..answers.num_tasks() {
        counts.iter_mut().for_each(|c| *c = (0, 0));
        for (w, a) in answers.row(t) {
            let c = &mut counts[class_of[w]];
            c.0 += 1;
            if a < 0 {
                c.1 += 1;
            }
        }
        let mut llr = 0.0;
        let mut scale = 0.0;
        for (k, &(d, m)) in counts.iter().enumerate() {
            if d == 0 {
                continue;
            }
            let pi = profile.pi(t, k);
            check_weight_prob(pi, &format!("pi[{t}][{k}]"))?;
            let z = log_odds_weight(pi);
            llr += (d - 2 * m) as f64 * z;
            scale += d as f64 * z;
        }
        scores.push(settle(llr, scale));
    }
    Ok(DecisionResult::from_scores(scores, rng))
}

/// Oracle MAP with the true individual error probabilities:
/// `OLLR_t = sum_w a_tw ln((1 - p_tw) / p_tw)`.
pub fn decide_oracle_map<R: Rng + ?Sized>(
    answers: &AnswerMatrix,
    pop: &Population,
    rng: &mut R,
) -> Result<DecisionResult> {
    if answers.num_tasks() != pop.num_tasks() || answers.num_workers() != pop.num_workers() {
        return Err(Error::OutOfRange("answer matrix and population differ in shape".into()));
    }
    let mut scores = Vec::with_capacity(answers.num_tasks());
    for t in 0..answers.num_tasks() {
        let mut llr = 0.0;
        let mut scale = 0.0;
        for (w, a) in answers.row(t) {
            let p = pop.p(t, w);
            check_weight_prob(p, &format!("p[{t}][{w}]"))?;
            let z = log_odds_weight(p);
            llr += f64::from(a) * z;
            scale += z;
        }
        scores.push(settle(llr, scale));
    }
    Ok(DecisionResult::from_scores(scores, rng))
}
