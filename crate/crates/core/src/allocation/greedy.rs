use std::cmp::{Ordering, Reverse};
use std::collections::HashMap;

use super::objective::{ObjectiveKind, TaskMeasure};
use super::{Allocation, WeightMatrix};
use crate::population::ClassProfile;
use crate::rng::derive_seed;

/// Class-level load state. Counts `d_tk` can be realized by concrete
/// workers iff, for every `s`, the `s` largest counts of the class sum to at
/// most `sum_w min(r_w, s)` (a cut bound on the task-worker flow network).
struct ClassLoads {
    /// `sum_w min(r_w, s)` for `s = 0..=T`.
    cap: Vec<usize>,
    /// Number of tasks holding each count.
    count: Vec<usize>,
    /// Whether a task at a given count may take one more worker.
    ok: Vec<bool>,
}

impl ClassLoads {
    fn new(limits: &[usize], num_tasks: usize) -> Self {
        let cap = (0..=num_tasks)
            .map(|s| limits.iter().map(|&r| r.min(s)).sum())
            .collect();
        let mut count = vec![0; limits.len() + 2];
        count[0] = num_tasks;
        let mut loads = Self {
            cap,
            count,
            ok: Vec::new(),
        };
        loads.refresh();
        loads
    }

    fn refresh(&mut self) {
        let t_count = self.cap.len() - 1;
        // slack of the prefix sums of the counts in decreasing order
        let mut slack = vec![0isize; t_count + 1];
        let (mut s, mut sum) = (0, 0);
        slack[0] = self.cap[0] as isize;
        for v in (0..self.count.len()).rev() {
            for _ in 0..self.count[v] {
                s += 1;
                sum += v;
                slack[s] = self.cap[s] as isize - sum as isize;
            }
        }
        let mut suffix_min = vec![isize::MAX; t_count + 2];
        for s in (0..=t_count).rev() {
            suffix_min[s] = suffix_min[s + 1].min(slack[s]);
        }
        // raising one count v moves it to position `above + 1`, where
        // `above` tasks hold more than v
        let mut above = 0;
        self.ok = vec![false; self.count.len()];
        for v in (0..self.count.len()).rev() {
            if self.count[v] > 0 && above < t_count {
                self.ok[v] = suffix_min[above + 1] >= 1;
            }
            above += self.count[v];
        }
    }

    fn can_raise(&self, v: usize) -> bool {
        self.ok[v]
    }

    fn raise(&mut self, v: usize) {
        self.count[v] -= 1;
        self.count[v + 1] += 1;
        self.refresh();
    }
}

/// Concrete pairs for class counts that satisfy the cut bound. Each task in
/// turn takes the class members with the most spare capacity, which never
/// gets stuck on a realizable input. Ties go to the smallest fixed hash of
/// `(t, w)`, so equal workers are scattered across tasks.
fn realize(profile: &ClassProfile, d: &WeightMatrix) -> Vec<(usize, usize)> {
    let mut residual = profile.limits().to_vec();
    let mut pairs = Vec::new();
    for k in 0..profile.num_classes() {
        let mut members: Vec<usize> = profile.workers_in(k).collect();
        for t in 0..profile.num_tasks() {
            let need = d.get(t, k);
            members.sort_by_key(|&w| (Reverse(residual[w]), derive_seed(t as u64, &[w as u64])));
            for &w in &members[..need] {
                assert!(residual[w] > 0, "class counts exceed worker capacity");
                residual[w] -= 1;
                pairs.push((t, w));
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Smallest and second-smallest utility with the index of the smallest.
fn two_lowest(values: &[f64]) -> (usize, f64, f64) {
    let mut lo = (usize::MAX, f64::INFINITY);
    let mut second = f64::INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if v < lo.1 {
            second = lo.1;
            lo = (i, v);
        } else if v < second {
            second = v;
        }
    }
    (lo.0, lo.1, second)
}

/// Greedy allocation: starting from the empty set, repeatedly add the
/// feasible `(task, worker)` pair that maximizes the objective, until no pair
/// can be added.
///
/// Under class-level objectives the value of a pair only depends on the task
/// and the worker's class, so each step scores one candidate per
/// `(task, class)` and the search runs on the counts `d_tk`. A count may grow
/// whenever some set of concrete workers can still carry the counts; workers
/// are bound at the end (see `realize`). Equal scores go to the
/// lowest task, then the lowest class. For worst-case objectives, candidates
/// that leave the objective unchanged are further ranked by the improvement
/// of their own task.
pub fn greedy_allocate(profile: &ClassProfile, kind: ObjectiveKind) -> Allocation {
    let t_count = profile.num_tasks();
    let k_count = profile.num_classes();
    let measure: TaskMeasure = kind.measure();

    let mut loads: Vec<ClassLoads> = (0..k_count)
        .map(|k| {
            let limits: Vec<usize> = profile.workers_in(k).map(|w| profile.limit(w)).collect();
            ClassLoads::new(&limits, t_count)
        })
        .collect();
    let mut d = WeightMatrix::zeros(t_count, k_count);
    let empty = vec![0usize; k_count];
    // utilities of the current per-task measure, and of each one-step extension
    let mut current: Vec<f64> = (0..t_count)
        .map(|t| measure.utility(measure.eval(&empty, profile.pi_row(t))))
        .collect();
    let mut extended = vec![0.0; t_count * k_count];
    // tasks usually share a few reliability rows, so identical
    // (row, counts) evaluations are memoized
    let mut row_id = vec![0usize; t_count];
    let mut distinct: Vec<&[f64]> = Vec::new();
    for (t, id) in row_id.iter_mut().enumerate() {
        let row = profile.pi_row(t);
        *id = distinct.iter().position(|r| *r == row).unwrap_or_else(|| {
            distinct.push(row);
            distinct.len() - 1
        });
    }
    let mut memo: HashMap<(usize, Vec<usize>), f64> = HashMap::new();
    let mut refresh = |t: usize, d: &WeightMatrix, extended: &mut [f64]| {
        let mut row = d.row(t).to_vec();
        for k in 0..k_count {
            row[k] += 1;
            extended[t * k_count + k] = *memo
                .entry((row_id[t], row.clone()))
                .or_insert_with(|| measure.utility(measure.eval(&row, profile.pi_row(t))));
            row[k] -= 1;
        }
    };
    for t in 0..t_count {
        refresh(t, &d, &mut extended);
    }

    let mut placed = 0;
    let budget = profile.budget().min(profile.capacity());
    while placed < budget {
        let worst = kind.is_worst_case().then(|| two_lowest(&current));
        let mut best: Option<(usize, usize, f64, f64)> = None;
        for t in 0..t_count {
            for k in 0..k_count {
                if !loads[k].can_raise(d.get(t, k)) {
                    continue;
                }
                let gain = extended[t * k_count + k] - current[t];
                let primary = match worst {
                    None => gain,
                    Some((lo_t, lo, second)) => {
                        let others = if t == lo_t { second } else { lo };
                        others.min(extended[t * k_count + k])
                    }
                };
                let better = match best {
                    None => true,
                    Some((_, _, bp, bg)) => match primary.partial_cmp(&bp) {
                        Some(Ordering::Greater) => true,
                        Some(Ordering::Equal) => worst.is_some() && gain > bg,
                        _ => false,
                    },
                };
                if better {
                    best = Some((t, k, primary, gain));
                }
            }
        }
        let Some((t, k, _, _)) = best else { break };
        loads[k].raise(d.get(t, k));
        d.row_mut(t)[k] += 1;
        current[t] = extended[t * k_count + k];
        refresh(t, &d, &mut extended);
        placed += 1;
    }
    Allocation::from_pairs(t_count, profile.num_workers(), realize(profile, &d)).expect("greedy pairs are in range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::is_feasible;

    /// Whether some simple bipartite graph gives task `t` exactly `d[t]`
    /// workers while worker `w` carries at most `limits[w]`.
    fn realizable(d: &[usize], limits: &mut [usize], t: usize, from: usize, need: usize) -> bool {
        if t == d.len() {
            return true;
        }
        if need == 0 {
            let next = d.get(t + 1).copied().unwrap_or(0);
            return realizable(d, limits, t + 1, 0, next);
        }
        for w in from..limits.len() {
            if limits[w] > 0 {
                limits[w] -= 1;
                let found = realizable(d, limits, t, w + 1, need - 1);
                limits[w] += 1;
                if found {
                    return true;
                }
            }
        }
        false
    }

    #[test]
    fn cut_bound_matches_exhaustive_realization() {
        use rand::Rng;
        let mut rng = crate::rng::rng_from_seed(3);
        for _ in 0..2000 {
            let t_count = rng.random_range(1..=4);
            let limits: Vec<usize> = (0..rng.random_range(1..=4)).map(|_| rng.random_range(0..=3)).collect();
            let mut loads = ClassLoads::new(&limits, t_count);
            let mut d = vec![0; t_count];
            for _ in 0..12 {
                let t = rng.random_range(0..t_count);
                let mut raised = d.clone();
                raised[t] += 1;
                let expect = realizable(&raised, &mut limits.clone(), 0, 0, raised[0]);
                assert_eq!(
                    loads.can_raise(d[t]),
                    expect,
                    "limits {limits:?}, counts {d:?} + task {t}"
                );
                if expect {
                    loads.raise(d[t]);
                    d = raised;
                }
            }
        }
    }

    #[test]
    fn full_class_is_packed_exactly() {
        // three workers with two slots each, three tasks: every slot is used
        let profile = ClassProfile::new(vec![vec![0.1]; 3], &[3], 2, 6).unwrap();
        let a = greedy_allocate(&profile, ObjectiveKind::AvgMutualInfo);
        assert!(is_feasible(&a, &profile));
        assert_eq!(a.len(), 6);
        assert_eq!(a.task_degrees(), vec![2, 2, 2]);
    }

    #[test]
    fn zero_budget_gives_empty_allocation() {
        let profile = ClassProfile::new(vec![vec![0.1]; 3], &[4], 2, 0).unwrap();
        assert!(greedy_allocate(&profile, ObjectiveKind::AvgMutualInfo).is_empty());
    }

    #[test]
    fn single_task_uses_distinct_workers() {
        let profile = ClassProfile::new(vec![vec![0.1]], &[5], 20, 3).unwrap();
        let a = greedy_allocate(&profile, ObjectiveKind::AvgMutualInfo);
        assert_eq!(a.len(), 3);
        assert!(is_feasible(&a, &profile));
        assert_eq!(a.weight_matrix(profile.class_of(), 1).row(0), &[3]);
    }

    #[test]
    fn prefers_reliable_class() {
        let profile = ClassProfile::new(vec![vec![0.3, 0.1]; 2], &[4, 4], 1, 4).unwrap();
        for kind in ObjectiveKind::ALL {
            let a = greedy_allocate(&profile, kind);
            assert!(is_feasible(&a, &profile), "{kind:?}");
            assert_eq!(a.len(), 4);
        }
        let a = greedy_allocate(&profile, ObjectiveKind::AvgMutualInfo);
        let d = a.weight_matrix(profile.class_of(), 2);
        assert_eq!(d.row(0), &[0, 2]);
        assert_eq!(d.row(1), &[0, 2]);
    }

    #[test]
    fn stops_at_capacity() {
        let profile = ClassProfile::new(vec![vec![0.2]; 3], &[2], 2, 100).unwrap();
        let a = greedy_allocate(&profile, ObjectiveKind::AvgErrorProb);
        assert_eq!(a.len(), 4);
        assert!(is_feasible(&a, &profile));
    }

    #[test]
    fn worst_case_objective_spreads_load() {
        let profile = ClassProfile::new(vec![vec![0.1]; 4], &[8], 20, 8).unwrap();
        let a = greedy_allocate(&profile, ObjectiveKind::MinMutualInfo);
        assert_eq!(a.task_degrees(), vec![2, 2, 2, 2]);
    }
}
