use crowd_core::harness::{
    preset, read_results, run_sweep, run_trial, write_results, ExperimentResult, ResultRow, StrategySpec, Sweep,
};
use crowd_core::rng::derive_seed;
use proptest::prelude::*;

fn spec(s: &str) -> StrategySpec {
    s.parse().unwrap()
}

#[test]
fn map_and_oracle_coincide_on_scenario1() {
    let s = preset("s1").unwrap();
    for beta in [2.0, 6.0, 10.0] {
        let budget = s.budget_for(beta).unwrap();
        for seed in 0..200 {
            let map = run_trial(&s, &spec("greedy-mi:map"), budget, seed).unwrap();
            let omap = run_trial(&s, &spec("greedy-mi:omap"), budget, seed).unwrap();
            assert_eq!(map, omap, "beta {beta}, seed {seed}");
        }
    }
}

#[test]
fn zero_budget_is_a_coin_flip() {
    let s = preset("s2").unwrap();
    let r = run_sweep(
        &s,
        &[spec("uniform:majority"), spec("greedy-mi:map")],
        &Sweep::Beta(vec![0.0]),
        10_000,
        3,
    )
    .unwrap();
    for row in &r.rows {
        assert!(
            (row.p_e - 0.5).abs() <= row.ci_halfwidth,
            "{}: {}",
            row.strategy,
            row.p_e
        );
    }
}

#[test]
fn same_seed_same_errors() {
    let s = preset("s3").unwrap();
    for strategy in ["greedy-mi:lra-blocks", "uniform:mp-haldane", "greedy-maxmin-ep:mp"] {
        let a = run_trial(&s, &spec(strategy), 600, 42).unwrap();
        assert_eq!(a, run_trial(&s, &spec(strategy), 600, 42).unwrap());
    }
}

#[test]
fn single_trial_sweep_is_one_trial() {
    let s = preset("s1").unwrap();
    let strategy = spec("greedy-ep:majority");
    let r = run_sweep(&s, &[strategy], &Sweep::Beta(vec![4.0]), 1, 17).unwrap();
    let errors = run_trial(&s, &strategy, 400, derive_seed(17, &[0, 0, 0])).unwrap();
    let expect = errors.iter().filter(|&&e| e).count() as f64 / errors.len() as f64;
    assert_eq!(r.rows.len(), 1);
    assert_eq!(r.rows[0].p_e, expect);
}

#[test]
fn sweeps_are_reproducible() {
    let s = preset("s4").unwrap();
    let sweep: Sweep = "K=1,3".parse().unwrap();
    let a = run_sweep(&s, &[spec("greedy-mi:lra")], &sweep, 20, 5).unwrap();
    let b = run_sweep(&s, &[spec("greedy-mi:lra")], &sweep, 20, 5).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.sweep_variable.as_deref(), Some("K"));
}

#[test]
fn scenario4_lra_improves_with_classes() {
    let s = preset("s4").unwrap();
    let sweep: Sweep = "K=1,3,6".parse().unwrap();
    for beta in [4.0, 8.0] {
        let mut point = s.clone();
        point.beta = beta;
        let r = run_sweep(&point, &[spec("greedy-mi:lra")], &sweep, 300, 11).unwrap();
        for pair in r.rows.windows(2) {
            let slack = (pair[0].ci_halfwidth.powi(2) + pair[1].ci_halfwidth.powi(2)).sqrt();
            assert!(pair[1].p_e <= pair[0].p_e + slack, "beta {beta}: {:?}", r.rows);
        }
    }
}

fn row_strategy() -> impl Strategy<Value = ResultRow> {
    (
        -1e6f64..1e6,
        "[a-z-]{1,12}:[a-z-]{1,10}",
        0f64..1.0,
        0f64..0.1,
        1usize..100_000,
        any::<u64>(),
    )
        .prop_map(|(sweep_value, strategy, p_e, ci_halfwidth, n_trials, seed)| ResultRow {
            sweep_value,
            strategy,
            p_e,
            ci_halfwidth,
            n_trials,
            seed,
        })
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 5e-6 * a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip(rows in prop::collection::vec(row_strategy(), 0..8)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let result = ExperimentResult { sweep_variable: None, rows };
        write_results(&result, &path).unwrap();
        let back = read_results(&path).unwrap();
        prop_assert_eq!(back.rows.len(), result.rows.len());
        for (x, y) in result.rows.iter().zip(&back.rows) {
            prop_assert!(close(x.sweep_value, y.sweep_value), "{} vs {}", x.sweep_value, y.sweep_value);
            prop_assert!(close(x.p_e, y.p_e));
            prop_assert!(close(x.ci_halfwidth, y.ci_halfwidth));
            prop_assert_eq!(&x.strategy, &y.strategy);
            prop_assert_eq!(x.n_trials, y.n_trials);
            prop_assert_eq!(x.seed, y.seed);
        }
    }

    #[test]
    fn beta_ranges_are_inclusive(start in 0u32..10, steps in 0u32..20, step in 1u32..5) {
        let stop = start + steps * step;
        let sweep: Sweep = format!("beta={start}:{stop}:{step}").parse().unwrap();
        let values = sweep.values();
        prop_assert_eq!(values.len(), steps as usize + 1);
        prop_assert_eq!(values[0], f64::from(start));
        prop_assert_eq!(*values.last().unwrap(), f64::from(stop));
    }
}

#[test]
fn emitted_file_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let s = preset("s2").unwrap();
    let r = run_sweep(
        &s,
        &[spec("greedy-mi:map"), spec("uniform:lra")],
        &"beta=2:4:2".parse().unwrap(),
        5,
        1,
    )
    .unwrap();
    write_results(&r, &path).unwrap();
    let back = read_results(&path).unwrap();
    assert_eq!(back.rows.len(), 4);
    for (x, y) in r.rows.iter().zip(&back.rows) {
        assert!(close(x.p_e, y.p_e) && x.strategy == y.strategy && x.sweep_value == y.sweep_value);
    }
}
