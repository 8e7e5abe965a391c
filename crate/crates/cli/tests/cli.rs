use std::path::Path;
use std::process::{Command, Output};

fn longpath(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_longpath")).current_dir(dir).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "{args:?} failed: {}{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn field(stdout: &[u8], name: &str) -> String {
    let text = String::from_utf8_lossy(stdout);
    text.lines()
        .find_map(|l| l.strip_prefix(name).map(|v| v.trim().to_string()))
        .unwrap_or_else(|| panic!("no `{name}` in output:\n{text}"))
}

#[test]
fn generate_solve_partition_and_bench() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    longpath(d, &["gen", "maze", "--side", "9", "--seed", "4", "--out", "suite", "--name", "m"]);
    longpath(d, &["gen", "subgraph", "--graph", "suite/m.graph", "--size", "15", "--seed", "2", "--out", "suite"]);
    assert!(d.join("suite/m.problem").exists());
    assert!(d.join("suite/m_15_2.graph").exists());

    let weights: Vec<String> = ["lpdp", "exhdfs", "dfbnb"]
        .iter()
        .map(|s| field(&longpath(d, &["solve", "--graph", "suite/m.graph", "--solver", s]).stdout, "weight "))
        .collect();
    assert!(weights.iter().all(|w| w == &weights[0]), "{weights:?}");

    longpath(d, &["partition", "--graph", "suite/m.graph", "--target-block-size", "6", "--out", "h.txt"]);
    let parallel = longpath(d, &["solve", "--graph", "suite/m.graph", "--hierarchy", "h.txt", "--threads", "3", "--print-path"]);
    assert_eq!(field(&parallel.stdout, "weight "), weights[0]);
    let path = field(&parallel.stdout, "path ");
    assert_eq!(path.split_whitespace().count() - 1, field(&parallel.stdout, "edges ").parse::<usize>().unwrap());

    longpath(d, &["bench", "--suite", "suite", "--threads", "1,2", "--time-limit", "10", "--out", "r.csv"]);
    let csv = std::fs::read_to_string(d.join("r.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("instance,solver,threads,eps,partitioner,time_ms,status,weight"));
    // two instances, lpdp at two thread counts plus both baselines
    assert_eq!(lines.filter(|l| l.contains(",solved,")).count(), 8);
    let report = longpath(d, &["report", "--csv", "r.csv"]);
    assert!(String::from_utf8_lossy(&report.stdout).contains("lpdp x2: solved 2/2"));
}

#[test]
fn failures_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let missing = Command::new(env!("CARGO_BIN_EXE_longpath")).current_dir(d).args(["solve", "--graph", "none.graph"]).output().unwrap();
    assert!(!missing.status.success());
    longpath(d, &["gen", "maze", "--side", "12", "--seed", "1", "--name", "m"]);
    let trivial = Command::new(env!("CARGO_BIN_EXE_longpath"))
        .current_dir(d)
        .args(["gen", "subgraph", "--graph", "m.graph", "--size", "1"])
        .output()
        .unwrap();
    assert!(!trivial.status.success());
    longpath(d, &["gen", "subgraph", "--graph", "m.graph", "--size", "1", "--allow-trivial", "--name", "one"]);
    let timeout = Command::new(env!("CARGO_BIN_EXE_longpath"))
        .current_dir(d)
        .args(["solve", "--graph", "m.graph", "--solver", "exhdfs", "--time-limit", "0"])
        .output()
        .unwrap();
    assert_eq!(timeout.status.code(), Some(2));
    assert_eq!(field(&timeout.stdout, "status "), "timeout");
}
