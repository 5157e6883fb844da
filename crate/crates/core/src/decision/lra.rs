use rand::Rng;

use super::DecisionResult;
use crate::answers::AnswerMatrix;
use crate::error::{Error, Result};
use crate::llr::settle;

const POWER_TOLERANCE: f64 = 1e-10;
const POWER_MAX_ITERATIONS: usize = 1000;

/// Union-find over tasks and workers; returns the component of every worker
/// that has at least one answer.
fn worker_components(answers: &AnswerMatrix) -> Vec<Option<usize>> {
    let t_count = answers.num_tasks();
    let mut parent: Vec<usize> = (0..t_count + answers.num_workers()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (t, w, _) in answers.entries() {
        let a = find(&mut parent, t);
        let b = find(&mut parent, t_count + w);
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut seen = vec![false; answers.num_workers()];
    for (_, w, _) in answers.entries() {
        seen[w] = true;
    }
    let mut label = vec![usize::MAX; parent.len()];
    let mut next = 0;
    (0..answers.num_workers())
        .map(|w| {
            if !seen[w] {
                return None;
            }
            let root = find(&mut parent, t_count + w);
            if label[root] == usize::MAX {
                label[root] = next;
                next += 1;
            }
            Some(label[root])
        })
        .collect()
}

fn mul_a(answers: &AnswerMatrix, v: &[f64], out: &mut [f64]) {
    for (t, o) in out.iter_mut().enumerate() {
        *o = answers.row(t).map(|(w, a)| f64::from(a) * v[w]).sum();
    }
}

fn mul_at(answers: &AnswerMatrix, u: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for (t, w, a) in answers.entries() {
        out[w] += f64::from(a) * u[t];
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Leading right singular vector of `A`, with `sum_w v_w >= 0`.
///
/// Computed by power iteration on `A^T A` from the normalized all-ones
/// vector. The answer graph is split into connected components first, since
/// `A^T A` is block diagonal over them: the result is the leading vector of
/// the component with the largest singular value and zero on every other
/// worker. Returns the all-zero vector for an all-zero matrix.
pub fn leading_right_singular_vector(answers: &AnswerMatrix) -> Vec<f64> {
    let w_count = answers.num_workers();
    let comp = worker_components(answers);
    let n_comp = comp.iter().flatten().max().map_or(0, |&c| c + 1);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut u = vec![0.0; answers.num_tasks()];
    let mut next = vec![0.0; w_count];
    for c in 0..n_comp {
        let mut v: Vec<f64> = comp.iter().map(|&x| if x == Some(c) { 1.0 } else { 0.0 }).collect();
        normalize(&mut v);
        let mut sigma_sq = 0.0;
        for _ in 0..POWER_MAX_ITERATIONS {
            mul_a(answers, &v, &mut u);
            mul_at(answers, &u, &mut next);
            // Other components are zero in v, hence in next.
            sigma_sq = normalize(&mut next);
            if sigma_sq == 0.0 {
                break;
            }
            let change = v.iter().zip(&next).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            std::mem::swap(&mut v, &mut next);
            if change < POWER_TOLERANCE {
                break;
            }
        }
        if sigma_sq > 0.0 && best.as_ref().is_none_or(|(s, _)| sigma_sq > *s) {
            best = Some((sigma_sq, v));
        }
    }
    let Some((_, mut v)) = best else {
        return vec![0.0; w_count];
    };
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

fn lra_scores(answers: &AnswerMatrix) -> Vec<f64> {
    let v = leading_right_singular_vector(answers);
    (0..answers.num_tasks())
        .map(|t| {
            let (score, scale) = answers
                .row(t)
                .fold((0.0, 0.0), |(s, m), (w, a)| (s + f64::from(a) * v[w], m + v[w].abs()));
            settle(score, scale)
        })
        .collect()
}

/// Low-rank decision: `score_t = sum_w a_tw v_w` with `v` the leading right
/// singular vector of the whole answer matrix.
pub fn decide_lra<R: Rng + ?Sized>(answers: &AnswerMatrix, rng: &mut R) -> DecisionResult {
    DecisionResult::from_scores(lra_scores(answers), rng)
}

/// Runs the low-rank rule separately on each group of tasks, using only the
/// workers that answered within the group.
pub fn decide_lra_blocks<R: Rng + ?Sized>(
    answers: &AnswerMatrix,
    groups: &[Vec<usize>],
    rng: &mut R,
) -> Result<DecisionResult> {
    check_partition(groups, answers.num_tasks())?;
    let mut scores = vec![0.0; answers.num_tasks()];
    for group in groups {
        let (block, _) = answers.restrict(group)?;
        for (&t, s) in group.iter().zip(lra_scores(&block)) {
            scores[t] = s;
        }
    }
    Ok(DecisionResult::from_scores(scores, rng))
}

pub(crate) fn check_partition(groups: &[Vec<usize>], num_tasks: usize) -> Result<()> {
    let mut seen = vec![false; num_tasks];
    for &t in groups.iter().flatten() {
        if t >= num_tasks || std::mem::replace(&mut seen[t], true) {
            return Err(Error::InvalidParameter(format!(
                "task groups must partition 0..{num_tasks}; task {t} is out of range or repeated"
            )));
        }
    }
    if let Some(t) = seen.iter().position(|&s| !s) {
        return Err(Error::InvalidParameter(format!("task {t} belongs to no group")));
    }
    Ok(())
}
