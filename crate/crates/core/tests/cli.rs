use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use extail::graph::GraphJson;
use extail::models::{reference_emn, reference_ts_xscm_lagged_only, reference_xscm};

fn run(args: &[&str]) -> i32 {
    extail::cli::run(std::iter::once("extail").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn write_spec<T: serde::Serialize>(dir: &Path, name: &str, spec: &T) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string(spec).unwrap()).unwrap();
    path
}

fn spec_graph(dir: &Path) -> GraphJson {
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("spec.json")).unwrap()).unwrap();
    GraphJson::from_json_str(&v["graph"].to_string()).unwrap()
}

#[test]
fn simulate_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let code = run(&["--no-timing", "simulate", "--model", "xscm", "--p", "6", "--phi", "0.5", "--seed", "7", "--n", "500", "--out", p(dir)]);
        assert_eq!(code, 0);
    }
    assert_eq!(read_dir_bytes(&a), read_dir_bytes(&b));
    let names: Vec<String> = read_dir_bytes(&a).into_iter().map(|f| f.0).collect();
    assert_eq!(names, ["data.csv", "manifest.json", "spec.json"]);
    let csv = fs::read_to_string(a.join("data.csv")).unwrap();
    assert_eq!(csv.lines().count(), 500);
    assert!(csv.lines().all(|l| l.split(',').count() == 6));
}

#[test]
fn simulate_emn_from_spec_file() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = reference_emn();
    let path = write_spec(tmp.path(), "q.json", &serde_json::json!({ "Q": extail::linalg::to_rows(spec.precision()) }));
    let out = tmp.path().join("emn");
    assert_eq!(run(&["simulate", "--model", "emn", "--spec-file", p(&path), "--out", p(&out)]), 0);
    assert_eq!(fs::read_to_string(out.join("data.csv")).unwrap().lines().count(), 5000);
    let q = spec.precision();
    let expected: BTreeSet<(usize, usize)> =
        (0..q.nrows()).flat_map(|i| (i + 1..q.nrows()).map(move |j| (i, j))).filter(|&(i, j)| q[(i, j)] < 0.0).collect();
    let got: BTreeSet<(usize, usize)> = spec_graph(&out).undirected.iter().map(|e| (e[0], e[1])).collect();
    assert_eq!(got, expected);
    assert!(!expected.is_empty());
}

#[test]
fn lagged_only_series_has_zero_contemporaneous_matrix() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ts");
    let code = run(&["simulate", "--model", "ts-xscm", "--p", "4", "--phi", "0.5", "--tau", "1", "--n", "300", "--seed", "3", "--out", p(&out)]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("spec.json")).unwrap()).unwrap();
    let b0 = v["spec"]["B"][0].as_array().unwrap();
    assert_eq!(b0.len(), 4);
    assert!(b0.iter().flat_map(|r| r.as_array().unwrap()).all(|x| x.as_f64() == Some(0.0)));
    assert!(spec_graph(&out).directed.is_empty());
}

#[test]
fn malformed_csv_exits_one_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("bad.csv");
    let mut text = String::from("1,2\n3\n");
    for _ in 0..20 {
        text.push_str("1,2\n");
    }
    fs::write(&input, text).unwrap();
    let out = tmp.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_extail"))
        .args(["discover", p(&input), "--out", p(&out)])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&status.stderr).contains("line 2"));
    assert!(!out.exists());
}

#[test]
fn estimation_failure_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("short.csv");
    let rows: String = (0..12).map(|l| format!("{},{}\n", l + 1, (l * 7) % 12 + 1)).collect();
    fs::write(&input, rows).unwrap();
    let out = tmp.path().join("out");
    // 12 rows leave no exceedances above the 0.99 quantile
    assert_eq!(run(&["discover", p(&input), "--out", p(&out)]), 2);
    assert!(!out.exists());
}

#[test]
fn lagged_discovery_marks_red_edges() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "ts.json", &reference_ts_xscm_lagged_only());
    let sim = tmp.path().join("sim");
    assert_eq!(run(&["simulate", "--model", "ts-xscm", "--spec-file", p(&spec), "--n", "20000", "--seed", "11", "--out", p(&sim)]), 0);
    let out = tmp.path().join("disc");
    assert_eq!(run(&["discover", p(&sim.join("data.csv")), "--tau", "1", "--out", p(&out)]), 0);
    let dot = fs::read_to_string(out.join("graph.dot")).unwrap();
    assert!(dot.contains("[color=red, label=\"lag=1\"]"), "{dot}");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    for key in ["config", "tests_run", "tests_skipped", "orientation_conflicts", "runtime_ms", "seed"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    let truth = spec_graph(&sim);
    let est = GraphJson::from_json_str(&fs::read_to_string(out.join("graph.json")).unwrap()).unwrap();
    let common = truth.lagged.iter().filter(|e| est.lagged.contains(e)).count();
    assert!(common * 2 >= truth.lagged.len(), "{:?} vs {:?}", truth.lagged, est.lagged);
}

fn simulate_reference(dir: &Path, n: &str) -> PathBuf {
    let spec = write_spec(dir, "xscm.json", &reference_xscm());
    let sim = dir.join("sim");
    assert_eq!(run(&["simulate", "--model", "xscm", "--spec-file", p(&spec), "--n", n, "--seed", "5", "--out", p(&sim)]), 0);
    sim
}

#[test]
fn learned_graphs_are_idempotent_and_thread_independent() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = simulate_reference(tmp.path(), "20000");
    let data = sim.join("data.csv");
    for cmd in ["discover", "learn-mn"] {
        let mut outputs = Vec::new();
        for (i, threads) in ["1", "4", "4"].iter().enumerate() {
            let out = tmp.path().join(format!("{cmd}{i}"));
            assert_eq!(run(&["--no-timing", "--threads", threads, cmd, p(&data), "--out", p(&out)]), 0);
            outputs.push(read_dir_bytes(&out));
        }
        assert_eq!(outputs[0], outputs[1], "{cmd}");
        assert_eq!(outputs[1], outputs[2], "{cmd}");
    }
}

#[test]
fn evaluate_reports_all_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = simulate_reference(tmp.path(), "50000");
    let disc = tmp.path().join("disc");
    assert_eq!(run(&["discover", p(&sim.join("data.csv")), "--out", p(&disc)]), 0);
    let out = tmp.path().join("eval");
    assert_eq!(run(&["evaluate", p(&sim.join("spec.json")), p(&disc.join("graph.json")), "--out", p(&out)]), 0);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    // misses are weak true edges; nothing spurious is added
    assert!(m["uned"].as_f64().unwrap() <= 0.3, "{m}");
    assert!(m["ned"].is_f64() && m["ned_star"].is_f64());
    let truth = spec_graph(&sim).to_dag().unwrap().skeleton();
    let est = GraphJson::from_json_str(&fs::read_to_string(disc.join("graph.json")).unwrap()).unwrap();
    assert!(est.to_undirected().unwrap().edges().is_subset(truth.edges()));

    let bad = tmp.path().join("small.json");
    fs::write(&bad, r#"{"p": 2, "directed": [[0, 1]]}"#).unwrap();
    assert_eq!(run(&["evaluate", p(&sim.join("spec.json")), p(&bad)]), 1);
}

#[test]
fn replay_reproduces_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    assert_eq!(run(&["--no-timing", "simulate", "--model", "max-linear", "--p", "5", "--n", "200", "--seed", "9", "--out", p(&first)]), 0);
    let again = tmp.path().join("again");
    assert_eq!(run(&["--no-timing", "replay", p(&first.join("manifest.json")), "--out", p(&again)]), 0);
    assert_eq!(read_dir_bytes(&first), read_dir_bytes(&again));

    let disc = tmp.path().join("disc");
    assert_eq!(run(&["--no-timing", "learn-mn", p(&first.join("data.csv")), "--q", "0.9", "--out", p(&disc)]), 0);
    let disc2 = tmp.path().join("disc2");
    assert_eq!(run(&["--no-timing", "replay", p(&disc.join("manifest.json")), "--out", p(&disc2)]), 0);
    assert_eq!(read_dir_bytes(&disc), read_dir_bytes(&disc2));
}

#[test]
fn experiment_table_shape_and_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let mut tables = Vec::new();
    for (i, threads) in ["1", "4"].iter().enumerate() {
        let out = tmp.path().join(format!("exp{i}"));
        let code = run(&[
            "--no-timing", "--threads", threads, "experiment", "--scenario", "dag", "--p", "4,5", "--phi", "0.4",
            "--n", "2000,4000", "--replicates", "3", "--seed", "2", "--out", p(&out),
        ]);
        assert_eq!(code, 0);
        tables.push(read_dir_bytes(&out));
    }
    assert_eq!(tables[0], tables[1]);
    let table = String::from_utf8(tables[0].iter().find(|f| f.0 == "table.csv").unwrap().1.clone()).unwrap();
    assert_eq!(table.lines().count(), 1 + 2 * 2 * 3);
    let summary = String::from_utf8(tables[0].iter().find(|f| f.0 == "summary.csv").unwrap().1.clone()).unwrap();
    assert_eq!(summary.lines().count(), 1 + 2 * 2);

    let grid = tmp.path().join("grid");
    let code = run(&[
        "experiment", "--scenario", "emn", "--p", "4", "--phi", "0.5", "--n", "3000", "--replicates", "2",
        "--alpha-grid", "0.001,0.01", "--q-grid", "0.95,0.99", "--out", p(&grid),
    ]);
    assert_eq!(code, 0);
    assert_eq!(fs::read_to_string(grid.join("table.csv")).unwrap().lines().count(), 1 + 2 * 4);
}

#[test]
fn help_and_bad_flags() {
    assert_eq!(run(&["--help"]), 0);
    assert_eq!(run(&["discover"]), 1);
    assert_eq!(run(&["simulate", "--model", "nope", "--out", "x"]), 1);
}
