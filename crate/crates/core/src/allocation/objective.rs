//! Per-task performance measures and the six allocation objectives.
//!
//! Every measure depends on a task only through its class counts `d_t` and the
//! class error probabilities `pi_t`. Answers from the same class are
//! exchangeable, so sums over raw answer vectors collapse to sums over count
//! vectors `m = (m_1..m_K)`, `0 <= m_k <= d_tk`, weighted by
//! `prod_k binom(d_tk, m_k)`.

use std::f64::consts::LN_2;

use crate::allocation::WeightMatrix;
use crate::error::{Error, Result};
use crate::llr::{log_odds_weight, settle};
use crate::population::ClassProfile;

/// Allocation objective, always to be maximized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectiveKind {
    /// Minus the average MAP error probability.
    AvgErrorProb,
    /// Minus the average Chernoff bound.
    AvgChernoff,
    /// Total mutual information between answers and task values.
    AvgMutualInfo,
    /// Minus the worst task error probability.
    MaxErrorProb,
    /// Minus the worst Chernoff bound.
    MaxChernoff,
    /// Smallest per-task mutual information.
    MinMutualInfo,
}

/// The per-task quantity an objective aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TaskMeasure {
    ErrorProb,
    Chernoff,
    MutualInfo,
}

impl TaskMeasure {
    pub(crate) fn eval(self, d: &[usize], pi: &[f64]) -> f64 {
        match self {
            TaskMeasure::ErrorProb => task_error_probability(d, pi),
            TaskMeasure::Chernoff => task_chernoff_bound(d, pi),
            TaskMeasure::MutualInfo => task_mutual_information(d, pi),
        }
    }

    /// Contribution of one task's measure to an objective to maximize.
    pub(crate) fn utility(self, value: f64) -> f64 {
        match self {
            TaskMeasure::MutualInfo => value,
            TaskMeasure::ErrorProb | TaskMeasure::Chernoff => -value,
        }
    }
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 6] = [
        ObjectiveKind::AvgErrorProb,
        ObjectiveKind::AvgChernoff,
        ObjectiveKind::AvgMutualInfo,
        ObjectiveKind::MaxErrorProb,
        ObjectiveKind::MaxChernoff,
        ObjectiveKind::MinMutualInfo,
    ];

    pub(crate) fn measure(self) -> TaskMeasure {
        match self {
            ObjectiveKind::AvgErrorProb | ObjectiveKind::MaxErrorProb => TaskMeasure::ErrorProb,
            ObjectiveKind::AvgChernoff | ObjectiveKind::MaxChernoff => TaskMeasure::Chernoff,
            ObjectiveKind::AvgMutualInfo | ObjectiveKind::MinMutualInfo => TaskMeasure::MutualInfo,
        }
    }

    /// Max-min objectives score the worst task instead of the average.
    pub fn is_worst_case(self) -> bool {
        matches!(
            self,
            ObjectiveKind::MaxErrorProb | ObjectiveKind::MaxChernoff | ObjectiveKind::MinMutualInfo
        )
    }

    /// Aggregates per-task measures into the objective value.
    pub(crate) fn aggregate(self, values: &[f64]) -> f64 {
        let n = values.len() as f64;
        match self {
            ObjectiveKind::AvgErrorProb | ObjectiveKind::AvgChernoff => -values.iter().sum::<f64>() / n,
            ObjectiveKind::AvgMutualInfo => values.iter().sum(),
            ObjectiveKind::MaxErrorProb | ObjectiveKind::MaxChernoff => {
                -values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            }
            ObjectiveKind::MinMutualInfo => values.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }
}

/// Evaluates an objective on a weight matrix using the profile's class
/// error probabilities.
pub fn evaluate_objective(kind: ObjectiveKind, d: &WeightMatrix, profile: &ClassProfile) -> Result<f64> {
    if d.num_tasks() != profile.num_tasks() || d.num_classes() != profile.num_classes() {
        return Err(Error::InvalidParameter(format!(
            "weight matrix is {}x{}, profile is {}x{}",
            d.num_tasks(),
            d.num_classes(),
            profile.num_tasks(),
            profile.num_classes()
        )));
    }
    let measure = kind.measure();
    let values: Vec<f64> = (0..d.num_tasks())
        .map(|t| measure.eval(d.row(t), profile.pi_row(t)))
        .collect();
    Ok(kind.aggregate(&values))
}

/// Calls `f` on every count vector `m` with `0 <= m_k <= d_k`.
pub(crate) fn for_each_count_vector<F: FnMut(&[usize])>(d: &[usize], mut f: F) {
    let mut m = vec![0usize; d.len()];
    loop {
        f(&m);
        let mut k = 0;
        loop {
            if k == d.len() {
                return;
            }
            if m[k] < d[k] {
                m[k] += 1;
                break;
            }
            m[k] = 0;
            k += 1;
        }
    }
}

/// `count * ln_p`, with `0 * ln 0 = 0`.
fn scaled_log(count: usize, ln_p: f64) -> f64 {
    if count == 0 {
        0.0
    } else {
        count as f64 * ln_p
    }
}

fn ln_binomials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(acc);
    for m in 0..n {
        acc += ((n - m) as f64).ln() - ((m + 1) as f64).ln();
        out.push(acc);
    }
    out
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let hi = a.max(b);
    hi + (-(a - b).abs()).exp().ln_1p()
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    let h = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    h(p) + h(1.0 - p)
}

/// Log-probabilities of one answer pattern of class counts `m` (number of
/// `-1` answers per class), given `tau = +1` and `tau = -1`.
struct PatternTables {
    ln_binom: Vec<Vec<f64>>,
    ln_pi: Vec<f64>,
    ln_one_minus: Vec<f64>,
}

impl PatternTables {
    fn new(d: &[usize], pi: &[f64]) -> Self {
        assert_eq!(d.len(), pi.len(), "class counts and probabilities differ in length");
        Self {
            ln_binom: d.iter().map(|&n| ln_binomials(n)).collect(),
            ln_pi: pi.iter().map(|&p| p.ln()).collect(),
            ln_one_minus: pi.iter().map(|&p| (1.0 - p).ln()).collect(),
        }
    }

    /// `(ln multiplicity, ln P{pattern | +1}, ln P{pattern | -1})`.
    fn eval(&self, d: &[usize], m: &[usize]) -> (f64, f64, f64) {
        let mut ln_mult = 0.0;
        let mut ln_plus = 0.0;
        let mut ln_minus = 0.0;
        for k in 0..d.len() {
            ln_mult += self.ln_binom[k][m[k]];
            ln_plus += scaled_log(m[k], self.ln_pi[k]) + scaled_log(d[k] - m[k], self.ln_one_minus[k]);
            ln_minus += scaled_log(d[k] - m[k], self.ln_pi[k]) + scaled_log(m[k], self.ln_one_minus[k]);
        }
        (ln_mult, ln_plus, ln_minus)
    }
}

/// Total probability of all answer patterns, `sum_m N(m) P{a = m}`. Equal to
/// one up to rounding.
pub fn pattern_mass(d: &[usize], pi: &[f64]) -> f64 {
    let tables = PatternTables::new(d, pi);
    let mut total = 0.0;
    for_each_count_vector(d, |m| {
        let (ln_mult, ln_plus, ln_minus) = tables.eval(d, m);
        total += (ln_mult + (0.5f64).ln() + log_add_exp(ln_plus, ln_minus)).exp();
    });
    total
}

/// `I(a_t; tau_t)` in bits for a task answered by `d[k]` workers of error
/// probability `pi[k]`, computed as `H(a_t) - sum_k d_k H_b(pi_k)`.
pub fn task_mutual_information(d: &[usize], pi: &[f64]) -> f64 {
    if d.iter().all(|&n| n == 0) {
        return 0.0;
    }
    let tables = PatternTables::new(d, pi);
    let mut entropy = 0.0;
    for_each_count_vector(d, |m| {
        let (ln_mult, ln_plus, ln_minus) = tables.eval(d, m);
        let ln_p = (0.5f64).ln() + log_add_exp(ln_plus, ln_minus);
        if ln_p > f64::NEG_INFINITY {
            entropy -= (ln_mult + ln_p).exp() * ln_p / LN_2;
        }
    });
    let noise: f64 = d.iter().zip(pi).map(|(&n, &p)| n as f64 * binary_entropy(p)).sum();
    (entropy - noise).max(0.0)
}

/// Exact MAP error probability of one task, with ties between the two
/// hypotheses counted as a coin flip.
pub fn task_error_probability(d: &[usize], pi: &[f64]) -> f64 {
    assert_eq!(d.len(), pi.len(), "class counts and probabilities differ in length");
    if d.iter().zip(pi).any(|(&n, &p)| n > 0 && p == 0.0) {
        return 0.0;
    }
    let z: Vec<f64> = pi.iter().map(|&p| log_odds_weight(p)).collect();
    let tables = PatternTables::new(d, pi);
    let mut pe = 0.0;
    for_each_count_vector(d, |m| {
        let mut llr = 0.0;
        let mut scale = 0.0;
        for k in 0..d.len() {
            if d[k] > 0 {
                let coef = d[k] as f64 - 2.0 * m[k] as f64;
                llr += coef * z[k];
                scale += d[k] as f64 * z[k].abs();
            }
        }
        let llr = settle(llr, scale);
        if llr <= 0.0 {
            let (ln_mult, ln_plus, _) = tables.eval(d, m);
            let mass = (ln_mult + ln_plus).exp();
            pe += if llr < 0.0 { mass } else { 0.5 * mass };
        }
    });
    pe
}

/// Chernoff-type bound on the MAP error probability, evaluated as
/// `exp(-[sum_k d_k (1 - 2 pi_k) z_k] / [sum_k (d_k z_k)^2])` with
/// `z_k = ln((1 - pi_k) / pi_k)`.
pub fn task_chernoff_bound(d: &[usize], pi: &[f64]) -> f64 {
    assert_eq!(d.len(), pi.len(), "class counts and probabilities differ in length");
    if d.iter().zip(pi).any(|(&n, &p)| n > 0 && p == 0.0) {
        return 0.0;
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (&n, &p) in d.iter().zip(pi) {
        if n == 0 {
            continue;
        }
        let z = log_odds_weight(p);
        num += n as f64 * (1.0 - 2.0 * p) * z;
        den += (n as f64 * z).powi(2);
    }
    if den == 0.0 {
        1.0
    } else {
        (-num / den).exp()
    }
}
