//! Task allocations, their feasibility constraints, objectives and allocators.
//!
//! An allocation is a set of `(task, worker)` pairs. The feasible family is a
//! matroid: at most `C` pairs in total, at most `r_w` pairs per worker, and
//! no pair repeated.

mod greedy;
pub mod objective;
mod uniform;

use std::fmt::Write as _;

pub use greedy::greedy_allocate;
pub use objective::{
    evaluate_objective, task_chernoff_bound, task_error_probability, task_mutual_information, ObjectiveKind,
};
pub use uniform::uniform_allocate;

use crate::error::{Error, Result};
use crate::population::ClassProfile;

/// A list of `(task, worker)` assignments, kept sorted.
///
/// Duplicates can be represented so that [`is_feasible`] can reject them; the
/// allocators never produce any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    num_tasks: usize,
    num_workers: usize,
    pairs: Vec<(usize, usize)>,
}

impl Allocation {
    pub fn empty(num_tasks: usize, num_workers: usize) -> Self {
        Self {
            num_tasks,
            num_workers,
            pairs: Vec::new(),
        }
    }

    pub fn from_pairs(num_tasks: usize, num_workers: usize, mut pairs: Vec<(usize, usize)>) -> Result<Self> {
        if let Some(&(t, w)) = pairs.iter().find(|&&(t, w)| t >= num_tasks || w >= num_workers) {
            return Err(Error::OutOfRange(format!(
                "pair ({t}, {w}) outside {num_tasks}x{num_workers}"
            )));
        }
        pairs.sort_unstable();
        Ok(Self {
            num_tasks,
            num_workers,
            pairs,
        })
    }

    pub fn num_tasks(&self) -> usize {
        self.num_tasks
    }

    pub fn num_workers(&self) -> usize {
        self.num_workers
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, t: usize, w: usize) -> bool {
        self.pairs.binary_search(&(t, w)).is_ok()
    }

    pub fn has_duplicates(&self) -> bool {
        self.pairs.windows(2).any(|p| p[0] == p[1])
    }

    /// Copy with one more pair.
    pub fn with_pair(&self, t: usize, w: usize) -> Result<Self> {
        let mut pairs = self.pairs.clone();
        pairs.push((t, w));
        Self::from_pairs(self.num_tasks, self.num_workers, pairs)
    }

    /// `L(w)`: number of tasks held by every worker.
    pub fn loads(&self) -> Vec<usize> {
        let mut loads = vec![0; self.num_workers];
        for &(_, w) in &self.pairs {
            loads[w] += 1;
        }
        loads
    }

    pub fn task_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_tasks];
        for &(t, _) in &self.pairs {
            deg[t] += 1;
        }
        deg
    }

    /// Binary `T x W` incidence matrix.
    pub fn incidence(&self) -> Vec<Vec<u8>> {
        let mut g = vec![vec![0u8; self.num_workers]; self.num_tasks];
        for &(t, w) in &self.pairs {
            g[t][w] = 1;
        }
        g
    }

    /// `D = {d_tk}`: assignments of each task to each class.
    pub fn weight_matrix(&self, class_of: &[usize], num_classes: usize) -> WeightMatrix {
        let mut d = WeightMatrix::zeros(self.num_tasks, num_classes);
        for &(t, w) in &self.pairs {
            d.counts[t * num_classes + class_of[w]] += 1;
        }
        d
    }

    /// One `t w` line per pair, 0-based.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for &(t, w) in &self.pairs {
            let _ = writeln!(out, "{t} {w}");
        }
        out
    }

    pub fn from_edge_list(num_tasks: usize, num_workers: usize, text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(t)), Some(Ok(w)), None) => pairs.push((t, w)),
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "edge list line {}: expected 't w', got '{line}'",
                        i + 1
                    )))
                }
            }
        }
        Self::from_pairs(num_tasks, num_workers, pairs)
    }
}

/// `T x K` matrix of per-task, per-class assignment counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightMatrix {
    num_tasks: usize,
    num_classes: usize,
    counts: Vec<usize>,
}

impl WeightMatrix {
    pub fn zeros(num_tasks: usize, num_classes: usize) -> Self {
        Self {
            num_tasks,
            num_classes,
            counts: vec![0; num_tasks * num_classes],
        }
    }

    pub fn from_rows(rows: Vec<Vec<usize>>) -> Result<Self> {
        let num_classes = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != num_classes) {
            return Err(Error::InvalidParameter("ragged weight matrix".into()));
        }
        Ok(Self {
            num_tasks: rows.len(),
            num_classes,
            counts: rows.into_iter().flatten().collect(),
        })
    }

    pub fn num_tasks(&self) -> usize {
        self.num_tasks
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn get(&self, t: usize, k: usize) -> usize {
        self.counts[t * self.num_classes + k]
    }

    pub fn row(&self, t: usize) -> &[usize] {
        &self.counts[t * self.num_classes..(t + 1) * self.num_classes]
    }

    pub(crate) fn row_mut(&mut self, t: usize) -> &mut [usize] {
        &mut self.counts[t * self.num_classes..(t + 1) * self.num_classes]
    }

    /// CSV with a `task,class_1..class_K` header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("task");
        for k in 0..self.num_classes {
            let _ = write!(out, ",class_{}", k + 1);
        }
        out.push('\n');
        for t in 0..self.num_tasks {
            let _ = write!(out, "{t}");
            for &d in self.row(t) {
                let _ = write!(out, ",{d}");
            }
            out.push('\n');
        }
        out
    }
}

/// Checks every allocation constraint against the profile: dimensions, no
/// repeated pair, per-worker loads, total budget and `d_tk <= W_k`.
pub fn is_feasible(alloc: &Allocation, profile: &ClassProfile) -> bool {
    if alloc.num_tasks() != profile.num_tasks() || alloc.num_workers() != profile.num_workers() {
        return false;
    }
    if alloc.has_duplicates() || alloc.len() > profile.budget() {
        return false;
    }
    if alloc
        .loads()
        .iter()
        .zip(profile.limits())
        .any(|(&load, &limit)| load > limit)
    {
        return false;
    }
    let sizes = profile.sizes();
    let d = alloc.weight_matrix(profile.class_of(), profile.num_classes());
    (0..d.num_tasks()).all(|t| d.row(t).iter().zip(&sizes).all(|(&dk, &wk)| dk <= wk))
}
