//! Property checks shared by the integration tests and the acceptance run.
//! Each returns a short description of the first violation it finds.

#![allow(dead_code)]

use crowd_core::allocation::objective::{
    evaluate_objective, pattern_mass, task_error_probability, task_mutual_information,
};
use crowd_core::decision::{decide_map, decide_mp, leading_right_singular_vector, solve_lambda, MpConfig};
use crowd_core::llr::log_odds_weight;
use crowd_core::rng::rng_from_seed;
use crowd_core::{greedy_allocate, is_feasible, Allocation, AnswerMatrix, ClassProfile, ObjectiveKind};
use rand::Rng;

pub type Check = Result<String, String>;

fn random_pi<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.random_range(0.01..0.5)).collect()
}

/// Monotonicity and diminishing returns of the per-task mutual information
/// along random nested count vectors.
pub fn mutual_information_is_submodular(instances: usize) -> Check {
    let mut rng = rng_from_seed(11);
    for i in 0..instances {
        let k = rng.random_range(1..=3);
        let pi = random_pi(&mut rng, k);
        let small: Vec<usize> = (0..k).map(|_| rng.random_range(0..=3)).collect();
        let large: Vec<usize> = small.iter().map(|&d| d + rng.random_range(0..=3)).collect();
        let add = rng.random_range(0..k);
        let f = |d: &[usize]| task_mutual_information(d, &pi);
        let bump = |d: &[usize]| {
            let mut e = d.to_vec();
            e[add] += 1;
            e
        };
        let (fs, fl) = (f(&small), f(&large));
        if fl < fs - 1e-12 {
            return Err(format!(
                "instance {i}: I({large:?}) = {fl} < I({small:?}) = {fs}, pi {pi:?}"
            ));
        }
        let gain_small = f(&bump(&small)) - fs;
        let gain_large = f(&bump(&large)) - fl;
        if gain_large > gain_small + 1e-12 {
            return Err(format!(
                "instance {i}: gain {gain_large} at {large:?} exceeds {gain_small} at {small:?}, pi {pi:?}"
            ));
        }
    }
    Ok(format!("{instances} nested instances"))
}

fn subset(ground: &[(usize, usize)], mask: u32, t: usize, w: usize) -> Allocation {
    let pairs = ground
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, &p)| p)
        .collect();
    Allocation::from_pairs(t, w, pairs).unwrap()
}

/// Augmentation property of the feasible allocations, checked over every pair
/// of feasible sets on small instances.
pub fn feasible_sets_form_a_matroid() -> Check {
    let mut checked = 0u64;
    for (t, w) in [(2, 3), (3, 2), (2, 2)] {
        let ground: Vec<(usize, usize)> = (0..t).flat_map(|a| (0..w).map(move |b| (a, b))).collect();
        for limit in 1..=2 {
            for budget in 0..=ground.len() {
                let profile = ClassProfile::new(vec![vec![0.2, 0.3]; t], &[1, w - 1], limit, budget).unwrap();
                let feasible: Vec<u32> = (0..1u32 << ground.len())
                    .filter(|&m| is_feasible(&subset(&ground, m, t, w), &profile))
                    .collect();
                for &a in &feasible {
                    for &b in &feasible {
                        if b.count_ones() <= a.count_ones() {
                            continue;
                        }
                        checked += 1;
                        let grows = (0..ground.len())
                            .filter(|&i| b >> i & 1 == 1 && a >> i & 1 == 0)
                            .any(|i| feasible.contains(&(a | 1 << i)));
                        if !grows {
                            return Err(format!(
                                "T={t} W={w} r={limit} C={budget}: {a:b} cannot grow from {b:b}"
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(format!("{checked} set pairs"))
}

/// Greedy reaches at least half of the exhaustive optimum of the mutual
/// information objective.
pub fn greedy_is_half_optimal(instances: usize) -> Check {
    let mut rng = rng_from_seed(12);
    let mut worst: f64 = 1.0;
    for i in 0..instances {
        let t = rng.random_range(1..=3);
        let w = rng.random_range(2..=12 / t);
        let k = rng.random_range(1..=w.min(3));
        let class_of: Vec<usize> = (0..w).map(|j| if j < k { j } else { rng.random_range(0..k) }).collect();
        let pi_rows: Vec<Vec<f64>> = (0..t).map(|_| random_pi(&mut rng, k)).collect();
        let limits: Vec<usize> = (0..w).map(|_| rng.random_range(1..=t)).collect();
        let budget = rng.random_range(1..=t * w);
        let profile = ClassProfile::with_class_map(pi_rows, k, class_of, limits, budget).unwrap();
        let kind = ObjectiveKind::AvgMutualInfo;
        let value =
            |a: &Allocation| evaluate_objective(kind, &a.weight_matrix(profile.class_of(), k), &profile).unwrap();
        let ground: Vec<(usize, usize)> = (0..t).flat_map(|a| (0..w).map(move |b| (a, b))).collect();
        let best = (0..1u32 << ground.len())
            .map(|m| subset(&ground, m, t, w))
            .filter(|a| is_feasible(a, &profile))
            .map(|a| value(&a))
            .fold(0.0, f64::max);
        let greedy = greedy_allocate(&profile, kind);
        if !is_feasible(&greedy, &profile) {
            return Err(format!("instance {i}: greedy allocation is infeasible"));
        }
        let got = value(&greedy);
        if got < 0.5 * best - 1e-12 {
            return Err(format!("instance {i}: greedy {got} < half of optimum {best}"));
        }
        if best > 0.0 {
            worst = worst.min(got / best);
        }
    }
    Ok(format!("{instances} instances, worst ratio {worst:.4}"))
}

pub fn pattern_probabilities_sum_to_one(instances: usize) -> Check {
    let mut rng = rng_from_seed(13);
    for i in 0..instances {
        let k = rng.random_range(1..=4);
        let pi = random_pi(&mut rng, k);
        let d: Vec<usize> = (0..k).map(|_| rng.random_range(0..=6)).collect();
        let mass = pattern_mass(&d, &pi);
        if (mass - 1.0).abs() > 1e-12 {
            return Err(format!("instance {i}: mass {mass} for d {d:?}, pi {pi:?}"));
        }
    }
    Ok(format!("{instances} instances"))
}

/// MAP error probability over all `2^n` raw answer vectors, by symmetry
/// conditioned on a `+1` task.
pub fn brute_force_error_probability(d: &[usize], pi: &[f64]) -> f64 {
    let workers: Vec<f64> = d
        .iter()
        .zip(pi)
        .flat_map(|(&n, &p)| std::iter::repeat_n(p, n))
        .collect();
    let n = workers.len();
    let scale: f64 = workers.iter().map(|&p| log_odds_weight(p).abs()).sum();
    let mut pe = 0.0;
    for mask in 0..1u32 << n {
        let mut prob = 1.0;
        let mut llr = 0.0;
        for (j, &p) in workers.iter().enumerate() {
            let wrong = mask >> j & 1 == 1;
            prob *= if wrong { p } else { 1.0 - p };
            llr += if wrong { -1.0 } else { 1.0 } * log_odds_weight(p);
        }
        if llr.abs() <= 1e-9 * scale {
            pe += 0.5 * prob;
        } else if llr < 0.0 {
            pe += prob;
        }
    }
    pe
}

pub fn error_probability_matches_brute_force(instances: usize) -> Check {
    let mut rng = rng_from_seed(14);
    for i in 0..instances {
        let k = rng.random_range(1..=3);
        // a shared value now and then makes exact ties possible
        let mut pi = random_pi(&mut rng, k);
        if k > 1 && rng.random_bool(0.3) {
            pi[1] = pi[0];
        }
        let mut d: Vec<usize> = (0..k).map(|_| rng.random_range(0..=4)).collect();
        while d.iter().sum::<usize>() > 10 {
            let j = d.iter().position(|&x| x > 0).unwrap();
            d[j] -= 1;
        }
        let fast = task_error_probability(&d, &pi);
        let slow = brute_force_error_probability(&d, &pi);
        if (fast - slow).abs() > 1e-12 {
            return Err(format!("instance {i}: {fast} vs {slow} for d {d:?}, pi {pi:?}"));
        }
    }
    Ok(format!("{instances} instances"))
}

fn random_answers<R: Rng>(rng: &mut R, t: usize, w: usize, density: f64) -> AnswerMatrix {
    let rows: Vec<Vec<i8>> = (0..t)
        .map(|_| {
            (0..w)
                .map(|_| {
                    if rng.random_bool(density) {
                        if rng.random_bool(0.7) {
                            1
                        } else {
                            -1
                        }
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect();
    AnswerMatrix::from_dense(&rows).unwrap()
}

pub fn first_mp_iteration_is_map(instances: usize) -> Check {
    let mut rng = rng_from_seed(15);
    let cfg = MpConfig {
        iterations: 1,
        ..MpConfig::default()
    };
    for i in 0..instances {
        let (t, w, k) = (
            rng.random_range(1..=8),
            rng.random_range(1..=12),
            rng.random_range(1..=3),
        );
        let class_of: Vec<usize> = (0..w).map(|_| rng.random_range(0..k)).collect();
        let pi = random_pi(&mut rng, k);
        let a = random_answers(&mut rng, t, w, 0.6);
        let profile =
            ClassProfile::with_class_map(vec![pi.clone(); t], k, class_of.clone(), vec![t; w], t * w).unwrap();
        let mp = decide_mp(&a, &class_of, &pi, &cfg, &mut rng_from_seed(1)).unwrap();
        let map = decide_map(&a, &profile, &mut rng_from_seed(1)).unwrap();
        for (x, y) in mp.scores.iter().zip(&map.scores) {
            if (x - y).abs() > 1e-9 {
                return Err(format!("instance {i}: MP {x} vs MAP {y}"));
            }
        }
    }
    Ok(format!("{instances} instances"))
}

/// Mean of the density proportional to `exp(lambda p)` on `[0, 1/2]` by
/// composite Simpson.
pub fn simpson_mean(lambda: f64) -> f64 {
    let n = 20_000;
    let h = 0.5 / n as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..=n {
        let p = i as f64 * h;
        let c = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let f = (lambda * p).exp();
        num += c * p * f;
        den += c * f;
    }
    num / den
}

pub fn lambda_matches_quadrature() -> Check {
    let mut worst: f64 = 0.0;
    for pi in [0.01, 0.05, 0.1, 0.2, 0.25, 0.3, 0.4, 0.45, 0.49] {
        let lambda = solve_lambda(pi, 1e-12).map_err(|e| e.to_string())?;
        let err = (simpson_mean(lambda) - pi).abs();
        if err > 1e-9 {
            return Err(format!("pi {pi}: lambda {lambda} gives mean error {err}"));
        }
        worst = worst.max(err);
    }
    Ok(format!("worst mean error {worst:.1e}"))
}

pub fn lra_matches_dense_svd(instances: usize) -> Check {
    let mut rng = rng_from_seed(16);
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let a = random_answers(&mut rng, 20, 10, 0.7);
        let dense = a.to_dense();
        let m = nalgebra::DMatrix::from_fn(20, 10, |r, c| f64::from(dense[r][c]));
        let svd = m.clone().svd(false, true);
        let v_t = svd.v_t.unwrap();
        let top = (0..svd.singular_values.len())
            .max_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]))
            .unwrap();
        let mut oracle: Vec<f64> = v_t.row(top).iter().copied().collect();
        if oracle.iter().sum::<f64>() < 0.0 {
            oracle.iter_mut().for_each(|x| *x = -*x);
        }
        let v = leading_right_singular_vector(&a);
        let scores = |v: &[f64]| -> Vec<f64> {
            dense
                .iter()
                .map(|row| row.iter().zip(v).map(|(&x, &y)| f64::from(x) * y).sum())
                .collect()
        };
        for (x, y) in scores(&v).iter().zip(scores(&oracle)) {
            let err = (x - y).abs();
            if err > 1e-6 {
                return Err(format!("instance {i}: score {x} vs {y}"));
            }
            worst = worst.max(err);
        }
    }
    Ok(format!("{instances} matrices, worst score error {worst:.1e}"))
}

/// Every property check with its name.
pub fn all_properties() -> Vec<(&'static str, Check)> {
    vec![
        (
            "mutual information monotone and submodular",
            mutual_information_is_submodular(1000),
        ),
        (
            "feasible allocations satisfy augmentation",
            feasible_sets_form_a_matroid(),
        ),
        ("greedy at least half of optimum", greedy_is_half_optimal(200)),
        (
            "pattern probabilities sum to one",
            pattern_probabilities_sum_to_one(500),
        ),
        (
            "count enumeration matches raw enumeration",
            error_probability_matches_brute_force(300),
        ),
        ("first MP iteration equals MAP", first_mp_iteration_is_map(200)),
        ("lambda solver matches quadrature", lambda_matches_quadrature()),
        ("LRA matches dense SVD", lra_matches_dense_svd(50)),
    ]
}

/// Distinct per-task class counts of each task group under greedy mutual
/// information allocation of a preset at `beta`.
pub fn greedy_group_rows(scenario: &str, beta: f64) -> Vec<Vec<Vec<usize>>> {
    let s = crowd_core::harness::preset(scenario).unwrap();
    let profile = s.profile(s.budget_for(beta).unwrap()).unwrap().unwrap();
    let alloc = greedy_allocate(&profile, ObjectiveKind::AvgMutualInfo);
    assert!(is_feasible(&alloc, &profile));
    let d = alloc.weight_matrix(profile.class_of(), profile.num_classes());
    s.task_groups()
        .iter()
        .map(|tasks| {
            let mut rows: Vec<Vec<usize>> = tasks.iter().map(|&t| d.row(t).to_vec()).collect();
            rows.sort();
            rows.dedup();
            rows
        })
        .collect()
}
