//! Sparse answer matrix.

use crate::error::{Error, Result};

/// Sparse `T x W` matrix of answers in `{-1, +1}`, stored row-compressed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerMatrix {
    num_tasks: usize,
    num_workers: usize,
    row_ptr: Vec<usize>,
    workers: Vec<usize>,
    values: Vec<i8>,
}

impl AnswerMatrix {
    pub fn from_entries(num_tasks: usize, num_workers: usize, mut entries: Vec<(usize, usize, i8)>) -> Result<Self> {
        for &(t, w, a) in &entries {
            if t >= num_tasks || w >= num_workers {
                return Err(Error::OutOfRange(format!(
                    "answer ({t}, {w}) outside {num_tasks}x{num_workers}"
                )));
            }
            if a != 1 && a != -1 {
                return Err(Error::InvalidParameter(format!("answer ({t}, {w}) = {a} is not +-1")));
            }
        }
        entries.sort_unstable_by_key(|&(t, w, _)| (t, w));
        if let Some(pair) = entries.windows(2).find(|p| (p[0].0, p[0].1) == (p[1].0, p[1].1)) {
            return Err(Error::InvalidParameter(format!(
                "duplicate answer for ({}, {})",
                pair[0].0, pair[0].1
            )));
        }
        let mut row_ptr = vec![0; num_tasks + 1];
        for &(t, _, _) in &entries {
            row_ptr[t + 1] += 1;
        }
        for t in 0..num_tasks {
            row_ptr[t + 1] += row_ptr[t];
        }
        Ok(Self {
            num_tasks,
            num_workers,
            row_ptr,
            workers: entries.iter().map(|e| e.1).collect(),
            values: entries.iter().map(|e| e.2).collect(),
        })
    }

    /// Builds from a dense `T x W` matrix where zero means "not asked".
    pub fn from_dense(rows: &[Vec<i8>]) -> Result<Self> {
        let num_workers = rows.first().map_or(0, Vec::len);
        let mut entries = Vec::new();
        for (t, row) in rows.iter().enumerate() {
            if row.len() != num_workers {
                return Err(Error::InvalidParameter("ragged dense answer matrix".into()));
            }
            entries.extend(row.iter().enumerate().filter(|(_, &a)| a != 0).map(|(w, &a)| (t, w, a)));
        }
        Self::from_entries(rows.len(), num_workers, entries)
    }

    pub fn num_tasks(&self) -> usize {
        self.num_tasks
    }

    pub fn num_workers(&self) -> usize {
        self.num_workers
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(worker, answer)` pairs for task `t`, sorted by worker.
    pub fn row(&self, t: usize) -> impl Iterator<Item = (usize, i8)> + '_ {
        let range = self.row_ptr[t]..self.row_ptr[t + 1];
        self.workers[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub(crate) fn row_range(&self, t: usize) -> std::ops::Range<usize> {
        self.row_ptr[t]..self.row_ptr[t + 1]
    }

    pub(crate) fn entry_worker(&self, e: usize) -> usize {
        self.workers[e]
    }

    pub(crate) fn entry_value(&self, e: usize) -> i8 {
        self.values[e]
    }

    /// All `(task, worker, answer)` triples in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, i8)> + '_ {
        (0..self.num_tasks).flat_map(move |t| self.row(t).map(move |(w, a)| (t, w, a)))
    }

    pub fn get(&self, t: usize, w: usize) -> i8 {
        let range = self.row_range(t);
        match self.workers[range.clone()].binary_search(&w) {
            Ok(i) => self.values[range.start + i],
            Err(_) => 0,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<i8>> {
        let mut dense = vec![vec![0i8; self.num_workers]; self.num_tasks];
        for (t, w, a) in self.entries() {
            dense[t][w] = a;
        }
        dense
    }

    /// For each worker, the entry indices of its answers.
    pub(crate) fn column_entries(&self) -> Vec<Vec<usize>> {
        let mut cols = vec![Vec::new(); self.num_workers];
        for (e, &w) in self.workers.iter().enumerate() {
            cols[w].push(e);
        }
        cols
    }

    /// Row block for `tasks`, keeping only workers that answered at least one
    /// of them. Returns the block and the original index of each kept worker.
    pub fn restrict(&self, tasks: &[usize]) -> Result<(AnswerMatrix, Vec<usize>)> {
        if let Some(&t) = tasks.iter().find(|&&t| t >= self.num_tasks) {
            return Err(Error::OutOfRange(format!("task {t} >= {}", self.num_tasks)));
        }
        let mut kept: Vec<usize> = tasks.iter().flat_map(|&t| self.row(t).map(|(w, _)| w)).collect();
        kept.sort_unstable();
        kept.dedup();
        let mut local = vec![usize::MAX; self.num_workers];
        for (i, &w) in kept.iter().enumerate() {
            local[w] = i;
        }
        let entries = tasks
            .iter()
            .enumerate()
            .flat_map(|(i, &t)| self.row(t).map(move |(w, a)| (i, w, a)))
            .map(|(i, w, a)| (i, local[w], a))
            .collect();
        let block = AnswerMatrix::from_entries(tasks.len(), kept.len(), entries)?;
        Ok((block, kept))
    }
}
