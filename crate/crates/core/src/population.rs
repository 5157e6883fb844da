//! Worker populations, task truths and answer sampling.
//!
//! Workers are binary symmetric channels: queried about task `t`, worker `w`
//! flips the true value with probability `p[t][w]`. Requesters only see the
//! class-level view in [`ClassProfile`].

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::allocation::Allocation;
use crate::answers::AnswerMatrix;
use crate::error::{Error, Result};

/// Smallest error probability used when a log-likelihood weight is needed.
pub const PROB_FLOOR: f64 = 1e-9;

fn check_prob(p: f64, what: &str) -> Result<()> {
    if p.is_finite() && (0.0..=0.5).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidProfile(format!("{what} = {p} is outside [0, 1/2]")))
    }
}

/// Class-level knowledge available to the requester.
///
/// `pi` is a `T x K` row-major table of representative error probabilities.
/// Workers are tied to classes through `class_of`; the contiguous layout
/// produced by [`ClassProfile::new`] puts class 0 first.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProfile {
    num_tasks: usize,
    num_classes: usize,
    pi: Vec<f64>,
    class_of: Vec<usize>,
    per_worker_limit: Vec<usize>,
    budget: usize,
}

impl ClassProfile {
    /// Builds a profile with contiguous classes of the given sizes and a
    /// common per-worker limit.
    pub fn new(pi_rows: Vec<Vec<f64>>, sizes: &[usize], limit: usize, budget: usize) -> Result<Self> {
        let class_of: Vec<usize> = sizes
            .iter()
            .enumerate()
            .flat_map(|(k, &n)| std::iter::repeat_n(k, n))
            .collect();
        let limits = vec![limit; class_of.len()];
        Self::with_class_map(pi_rows, sizes.len(), class_of, limits, budget)
    }

    /// Builds a profile from an explicit worker-to-class map.
    pub fn with_class_map(
        pi_rows: Vec<Vec<f64>>,
        num_classes: usize,
        class_of: Vec<usize>,
        per_worker_limit: Vec<usize>,
        budget: usize,
    ) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::InvalidProfile("at least one class is required".into()));
        }
        if pi_rows.is_empty() {
            return Err(Error::InvalidProfile("at least one task is required".into()));
        }
        let num_tasks = pi_rows.len();
        let mut pi = Vec::with_capacity(num_tasks * num_classes);
        for (t, row) in pi_rows.iter().enumerate() {
            if row.len() != num_classes {
                return Err(Error::InvalidProfile(format!(
                    "pi row {t} has {} entries, expected {num_classes}",
                    row.len()
                )));
            }
            for (k, &p) in row.iter().enumerate() {
                check_prob(p, &format!("pi[{t}][{k}]"))?;
            }
            pi.extend_from_slice(row);
        }
        if let Some(&k) = class_of.iter().find(|&&k| k >= num_classes) {
            return Err(Error::InvalidProfile(format!("class index {k} >= {num_classes}")));
        }
        if per_worker_limit.len() != class_of.len() {
            return Err(Error::InvalidProfile(format!(
                "{} per-worker limits for {} workers",
                per_worker_limit.len(),
                class_of.len()
            )));
        }
        Ok(Self {
            num_tasks,
            num_classes,
            pi,
            class_of,
            per_worker_limit,
            budget,
        })
    }

    pub fn num_tasks(&self) -> usize {
        self.num_tasks
    }

    pub fn num_workers(&self) -> usize {
        self.class_of.len()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn pi(&self, t: usize, k: usize) -> f64 {
        self.pi[t * self.num_classes + k]
    }

    pub fn pi_row(&self, t: usize) -> &[f64] {
        &self.pi[t * self.num_classes..(t + 1) * self.num_classes]
    }

    pub fn class_of(&self) -> &[usize] {
        &self.class_of
    }

    pub fn limit(&self, w: usize) -> usize {
        self.per_worker_limit[w]
    }

    pub fn limits(&self) -> &[usize] {
        &self.per_worker_limit
    }

    /// Total number of assignments the workers can absorb.
    pub fn capacity(&self) -> usize {
        self.per_worker_limit.iter().sum()
    }

    /// `W_k` for every class.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_classes];
        for &k in &self.class_of {
            sizes[k] += 1;
        }
        sizes
    }

    /// Copy with every `pi` clamped to `[floor, 1/2]`.
    pub fn clamped(&self, floor: f64) -> Self {
        Self {
            pi: self.pi.iter().map(|&x| x.clamp(floor, 0.5)).collect(),
            ..self.clone()
        }
    }

    pub fn workers_in(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.class_of
            .iter()
            .enumerate()
            .filter(move |(_, &c)| c == k)
            .map(|(w, _)| w)
    }
}

/// True per-worker, per-task error probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    num_tasks: usize,
    num_workers: usize,
    p: Vec<f64>,
    class_of: Vec<usize>,
}

impl Population {
    pub fn from_matrix(p_rows: Vec<Vec<f64>>, class_of: Vec<usize>) -> Result<Self> {
        let num_tasks = p_rows.len();
        let num_workers = class_of.len();
        let mut p = Vec::with_capacity(num_tasks * num_workers);
        for (t, row) in p_rows.iter().enumerate() {
            if row.len() != num_workers {
                return Err(Error::InvalidProfile(format!(
                    "row {t} has {} workers, expected {num_workers}",
                    row.len()
                )));
            }
            for (w, &x) in row.iter().enumerate() {
                check_prob(x, &format!("p[{t}][{w}]"))?;
            }
            p.extend_from_slice(row);
        }
        Ok(Self {
            num_tasks,
            num_workers,
            p,
            class_of,
        })
    }

    pub fn num_tasks(&self) -> usize {
        self.num_tasks
    }

    pub fn num_workers(&self) -> usize {
        self.num_workers
    }

    pub fn p(&self, t: usize, w: usize) -> f64 {
        self.p[t * self.num_workers + w]
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.p[t * self.num_workers..(t + 1) * self.num_workers]
    }

    pub fn class_of(&self) -> &[usize] {
        &self.class_of
    }

    pub fn set_class_of(&mut self, class_of: Vec<usize>) {
        assert_eq!(class_of.len(), self.num_workers);
        self.class_of = class_of;
    }

    /// Copy with every probability clamped to `[floor, 1/2]`.
    pub fn clamped(&self, floor: f64) -> Self {
        Self {
            p: self.p.iter().map(|&x| x.clamp(floor, 0.5)).collect(),
            ..self.clone()
        }
    }
}

/// Ground-truth task values in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskTruths(Vec<i8>);

impl TaskTruths {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if values.iter().any(|&v| v != 1 && v != -1) {
            return Err(Error::InvalidParameter("task truths must be -1 or +1".into()));
        }
        Ok(Self(values))
    }

    pub fn draw<R: Rng + ?Sized>(num_tasks: usize, rng: &mut R) -> Self {
        Self(
            (0..num_tasks)
                .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                .collect(),
        )
    }

    pub fn values(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Every worker behaves exactly as its class: `p[t][w] = pi[t][k(w)]`.
pub fn make_deterministic_population(profile: &ClassProfile) -> Population {
    let t_count = profile.num_tasks();
    let class_of = profile.class_of().to_vec();
    let mut p = Vec::with_capacity(t_count * class_of.len());
    for t in 0..t_count {
        p.extend(class_of.iter().map(|&k| profile.pi(t, k)));
    }
    Population {
        num_tasks: t_count,
        num_workers: class_of.len(),
        p,
        class_of,
    }
}

/// Two-type mixture inside each class.
///
/// A class-`k` worker is bad with probability `2 pi_tk` and then has error
/// probability `(1 - x) pi_tk + x/2`; otherwise `(1 - x) pi_tk`. The type is
/// drawn once per worker for each distinct value of `pi_tk` in that worker's
/// class column, so behaviour is consistent across a homogeneous task group.
pub fn make_bimodal_population<R: Rng + ?Sized>(profile: &ClassProfile, x: f64, rng: &mut R) -> Result<Population> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidParameter(format!("bimodal x = {x} is outside [0, 1]")));
    }
    let t_count = profile.num_tasks();
    let w_count = profile.num_workers();
    let mut p = vec![0.0; t_count * w_count];
    let mut types: Vec<(u64, bool)> = Vec::new();
    for (w, &k) in profile.class_of().iter().enumerate() {
        types.clear();
        for t in 0..t_count {
            let pi = profile.pi(t, k);
            let key = pi.to_bits();
            let bad = match types.iter().find(|(b, _)| *b == key) {
                Some(&(_, bad)) => bad,
                None => {
                    let bad = rng.random::<f64>() < 2.0 * pi;
                    types.push((key, bad));
                    bad
                }
            };
            let base = (1.0 - x) * pi;
            p[t * w_count + w] = if bad { (base + 0.5 * x).min(0.5) } else { base };
        }
    }
    Ok(Population {
        num_tasks: t_count,
        num_workers: w_count,
        p,
        class_of: profile.class_of().to_vec(),
    })
}

/// Individual error probabilities uniform on `(0, 1/2]`, one per worker and
/// shared by all tasks. Every worker starts in class 0.
pub fn make_uniform_population<R: Rng + ?Sized>(
    num_tasks: usize,
    num_workers: usize,
    rng: &mut R,
) -> Result<Population> {
    if num_tasks == 0 || num_workers == 0 {
        return Err(Error::InvalidParameter("uniform population needs T, W >= 1".into()));
    }
    let per_worker: Vec<f64> = (0..num_workers).map(|_| 0.5 - 0.5 * rng.random::<f64>()).collect();
    let mut p = Vec::with_capacity(num_tasks * num_workers);
    for _ in 0..num_tasks {
        p.extend_from_slice(&per_worker);
    }
    Ok(Population {
        num_tasks,
        num_workers,
        p,
        class_of: vec![0; num_workers],
    })
}

/// How much evidence is available when estimating each worker's reliability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Training {
    /// The estimate equals the true error probability.
    Exact,
    /// Empirical error rate over this many training answers. Zero means no
    /// information, and classes are assigned at random.
    Samples(u64),
}

impl Training {
    pub fn as_f64(self) -> f64 {
        match self {
            Training::Exact => f64::INFINITY,
            Training::Samples(n) => n as f64,
        }
    }
}

impl std::fmt::Display for Training {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Training::Exact => write!(f, "inf"),
            Training::Samples(n) => write!(f, "{n}"),
        }
    }
}

impl std::str::FromStr for Training {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("exact") {
            return Ok(Training::Exact);
        }
        s.parse::<u64>()
            .map(Training::Samples)
            .map_err(|_| Error::InvalidParameter(format!("bad training length '{s}'")))
    }
}

/// Representative error probability of class `k` (0-based) out of `K`
/// uniform bins over `[0, 1/2]`: the bin midpoint `(2k + 1) / (4K)`.
pub fn quantized_class_pi(k: usize, num_classes: usize) -> f64 {
    (2 * k + 1) as f64 / (4 * num_classes) as f64
}

/// 0-based bin of an estimate `p_hat` in `[0, 1/2]`: bin `k` covers
/// `(k/(2K), (k+1)/(2K)]`, with zero going to bin 0.
fn quantize(p_hat: f64, num_classes: usize) -> usize {
    let scaled = (p_hat.clamp(0.0, 0.5) * (2 * num_classes) as f64).ceil() as usize;
    scaled.clamp(1, num_classes) - 1
}

/// Same binning for an empirical rate `errors / n`, done in integers.
fn quantize_counts(errors: u64, n: u64, num_classes: usize) -> usize {
    if 2 * errors >= n {
        return num_classes - 1;
    }
    let scaled = (errors as u128 * 2 * num_classes as u128).div_ceil(n as u128) as usize;
    scaled.clamp(1, num_classes) - 1
}

/// Estimates each worker's error probability from training answers and
/// quantizes the estimates into `K` uniform classes.
///
/// Returns the 0-based class map and the per-class representative error
/// probabilities. Workers are assumed task-independent; the first task row is
/// used as the worker's error probability.
pub fn estimate_and_classify<R: Rng + ?Sized>(
    pop: &Population,
    training: Training,
    num_classes: usize,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<f64>)> {
    if num_classes == 0 {
        return Err(Error::InvalidParameter("number of classes must be >= 1".into()));
    }
    let pi: Vec<f64> = (0..num_classes).map(|k| quantized_class_pi(k, num_classes)).collect();
    let w_count = pop.num_workers();
    let class_of = match training {
        Training::Samples(0) => (0..w_count).map(|_| rng.random_range(0..num_classes)).collect(),
        Training::Exact => (0..w_count).map(|w| quantize(pop.p(0, w), num_classes)).collect(),
        Training::Samples(n) => (0..w_count)
            .map(|w| {
                let errors = Binomial::new(n, pop.p(0, w))
                    .map_err(|e| Error::InvalidParameter(e.to_string()))?
                    .sample(rng);
                Ok(quantize_counts(errors, n, num_classes))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    Ok((class_of, pi))
}

/// Draws one answer per allocated pair: the truth with probability `1 - p`,
/// its negation otherwise.
pub fn sample_answers<R: Rng + ?Sized>(
    pop: &Population,
    alloc: &Allocation,
    truths: &TaskTruths,
    rng: &mut R,
) -> Result<AnswerMatrix> {
    if alloc.num_tasks() != pop.num_tasks() || alloc.num_workers() != pop.num_workers() {
        return Err(Error::OutOfRange(format!(
            "allocation is {}x{}, population is {}x{}",
            alloc.num_tasks(),
            alloc.num_workers(),
            pop.num_tasks(),
            pop.num_workers()
        )));
    }
    if truths.len() != pop.num_tasks() {
        return Err(Error::OutOfRange(format!(
            "{} truths for {} tasks",
            truths.len(),
            pop.num_tasks()
        )));
    }
    let entries = alloc
        .pairs()
        .iter()
        .map(|&(t, w)| {
            let tau = truths.values()[t];
            let answer = if rng.random::<f64>() < pop.p(t, w) { -tau } else { tau };
            (t, w, answer)
        })
        .collect();
    AnswerMatrix::from_entries(pop.num_tasks(), pop.num_workers(), entries)
}
