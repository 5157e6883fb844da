use std::collections::HashMap;

use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::Allocation;
use crate::error::{Error, Result};
use crate::population::ClassProfile;

const MAX_ATTEMPTS: usize = 100;

/// Class-blind allocation on a random bipartite graph.
///
/// `ceil(C / r)` workers are drawn uniformly; each receives `r` tasks except
/// the last, which takes the remainder. Task degrees are `floor(C / T)` or
/// `ceil(C / T)`. Edges come from a random stub matching whose repeated pairs
/// are removed by degree-preserving swaps; an attempt that cannot be repaired
/// is redrawn, up to a fixed number of attempts.
pub fn uniform_allocate<R: Rng + ?Sized>(profile: &ClassProfile, rng: &mut R) -> Result<Allocation> {
    let t_count = profile.num_tasks();
    let w_count = profile.num_workers();
    let budget = profile.budget();
    if budget == 0 {
        return Ok(Allocation::empty(t_count, w_count));
    }
    let r = match profile.limits().split_first() {
        Some((&r, rest)) if rest.iter().all(|&x| x == r) => r,
        _ => {
            return Err(Error::AllocationFailed(
                "uniform allocation needs a common per-worker limit".into(),
            ))
        }
    };
    let r = r.min(t_count);
    if r == 0 || budget > r * w_count {
        return Err(Error::AllocationFailed(format!(
            "budget {budget} exceeds the capacity {} of {w_count} workers",
            r * w_count
        )));
    }
    let selected_count = budget.div_ceil(r);
    let task_base = budget / t_count;
    let task_extra = budget % t_count;
    if task_base + usize::from(task_extra > 0) > selected_count {
        return Err(Error::AllocationFailed(format!(
            "tasks need {} distinct workers but only {selected_count} are selected",
            task_base + 1
        )));
    }

    for _ in 0..MAX_ATTEMPTS {
        let selected = index::sample(rng, w_count, selected_count).into_vec();
        let mut worker_stubs = Vec::with_capacity(budget);
        for (i, &w) in selected.iter().enumerate() {
            let degree = if i + 1 == selected_count {
                budget - r * (selected_count - 1)
            } else {
                r
            };
            worker_stubs.extend(std::iter::repeat_n(w, degree));
        }
        let mut heavy: Vec<usize> = (0..t_count).collect();
        heavy.shuffle(rng);
        let mut task_stubs = Vec::with_capacity(budget);
        for (i, &t) in heavy.iter().enumerate() {
            let degree = task_base + usize::from(i < task_extra);
            task_stubs.extend(std::iter::repeat_n(t, degree));
        }
        task_stubs.shuffle(rng);
        let mut edges: Vec<(usize, usize)> = task_stubs.into_iter().zip(worker_stubs).collect();
        if repair_duplicates(&mut edges, rng) {
            return Allocation::from_pairs(t_count, w_count, edges);
        }
    }
    Err(Error::AllocationFailed(format!(
        "no simple bipartite graph found in {MAX_ATTEMPTS} attempts"
    )))
}

/// Swaps endpoints of repeated edges with random partner edges until every
/// pair is distinct. Returns false if some repeat cannot be resolved.
fn repair_duplicates<R: Rng + ?Sized>(edges: &mut [(usize, usize)], rng: &mut R) -> bool {
    let mut count: HashMap<(usize, usize), usize> = HashMap::with_capacity(edges.len());
    let mut repeats = Vec::new();
    for (i, &e) in edges.iter().enumerate() {
        let c = count.entry(e).or_insert(0);
        *c += 1;
        if *c > 1 {
            repeats.push(i);
        }
    }
    let n = edges.len();
    'repeat: for i in repeats {
        if count[&edges[i]] < 2 {
            continue;
        }
        for _ in 0..50 * n {
            let j = rng.random_range(0..n);
            let (t1, w1) = edges[i];
            let (t2, w2) = edges[j];
            if t1 == t2 || w1 == w2 {
                continue;
            }
            let (a, b) = ((t2, w1), (t1, w2));
            if count.get(&a).is_some_and(|&c| c > 0) || count.get(&b).is_some_and(|&c| c > 0) {
                continue;
            }
            for old in [(t1, w1), (t2, w2)] {
                *count.get_mut(&old).expect("edge is counted") -= 1;
            }
            *count.entry(a).or_insert(0) += 1;
            *count.entry(b).or_insert(0) += 1;
            edges[i] = b;
            edges[j] = a;
            continue 'repeat;
        }
        return false;
    }
    true
}
