use std::path::Path;
use std::process::{Command, Output};

use crowd_core::harness::{read_results, ALLOCATOR_TOKENS, DECIDER_TOKENS};

fn crowdsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crowdsim"))
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_lists_every_token() {
    let o = crowdsim(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for token in ALLOCATOR_TOKENS.iter().chain(DECIDER_TOKENS.iter()) {
        assert!(text.contains(token), "--help does not mention {token}");
    }
}

#[test]
fn unknown_strategy_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = crowdsim(&[
        "run",
        "--scenario",
        "s1",
        "--strategy",
        "greedy-mi:vote",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("vote"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn unknown_flag_is_rejected() {
    let o = crowdsim(&[
        "run",
        "--scenario",
        "s1",
        "--strategy",
        "uniform:map",
        "--out",
        "x.csv",
        "--fast",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--fast"));
}

#[test]
fn block_lra_needs_groups() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = crowdsim(&[
        "run",
        "--scenario",
        "s1",
        "--strategy",
        "greedy-mi:lra-blocks",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("lra-blocks"), "{}", stderr(&o));
}

#[test]
fn empty_range_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = crowdsim(&[
        "sweep",
        "--scenario",
        "s1",
        "--strategy",
        "greedy-mi:map",
        "--sweep",
        "beta=20:2:2",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("20:2:2"), "{}", stderr(&o));
}

#[test]
fn over_capacity_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = crowdsim(&[
        "run",
        "--scenario",
        "s4",
        "--beta",
        "30",
        "--strategy",
        "uniform:map",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn presets_list_all_scenarios() {
    let o = crowdsim(&["presets"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for name in ["s1", "s2", "s3", "s4"] {
        assert!(text.contains(name));
    }
    assert!(text.contains("40") && text.contains("120"));
}

#[test]
fn validate_reports_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.toml");
    let bad = dir.path().join("bad.toml");
    let text = "[scenario]\nname = \"two\"\ntasks = 100\n\n[classes]\nsizes = [30, 120, 150]\n\n\
                [groups]\nsizes = [50, 50]\npi = [[0.05, 0.1, 0.5], [0.1, 0.2, 0.5]]\n";
    std::fs::write(&good, text).unwrap();
    std::fs::write(&bad, text.replace("tasks = 100", "tasks = 80")).unwrap();
    assert_eq!(
        crowdsim(&["validate", "--config", path_str(&good)]).status.code(),
        Some(0)
    );
    let o = crowdsim(&["validate", "--config", path_str(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.toml"));
}

#[test]
fn reruns_are_byte_identical_and_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let o = crowdsim(&[
            "sweep",
            "--scenario",
            "s2",
            "--strategy",
            "greedy-mi:map",
            "--strategy",
            "uniform:mp-haldane",
            "--sweep",
            "beta=2:6:2",
            "--trials",
            "20",
            "--seed",
            "7",
            "--out",
            path_str(out),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert_eq!(stdout(&o).lines().count(), 2);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let r = read_results(&a).unwrap();
    assert_eq!(r.rows.len(), 6);
    assert!(r.rows.iter().all(|row| row.seed == 7 && row.n_trials == 20));
}

#[test]
fn overrides_reach_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = crowdsim(&[
        "run",
        "--scenario",
        "s4",
        "--beta",
        "4",
        "--classes",
        "3",
        "--training",
        "10",
        "--strategy",
        "greedy-mi:lra",
        "--trials",
        "5",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = crowdsim(&[
        "run",
        "--scenario",
        "s1",
        "--classes",
        "3",
        "--strategy",
        "uniform:map",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
}
