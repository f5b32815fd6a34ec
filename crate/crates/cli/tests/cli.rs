use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tmpidan_core::domains::{generate_clutter, two_blocker_instance};
use tmpidan_core::report::AGGREGATE_HEADER;
use tmpidan_core::ObjectModel;
use tmpidan_core::Category;

fn tmpidan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tmpidan"))
        .args(args)
        .env_remove("TMPIDAN_SEED")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Compares against a checked-in file; `TMPIDAN_BLESS=1` rewrites it.
fn golden(name: &str, actual: &str) {
    let path = golden_dir().join(name);
    if std::env::var_os("TMPIDAN_BLESS").is_some() {
        fs::create_dir_all(golden_dir()).unwrap();
        fs::write(&path, actual).unwrap();
        return;
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(actual, expected, "golden mismatch for {name}");
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn run_writes_one_row_per_repetition() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.csv");
    let o = tmpidan(&["run", "--domain", "clutter", "--objects", "8", "--seed", "7", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("8,r0,0,7,"));

    let o = tmpidan(&["run", "--objects", "8", "--reps", "4"]);
    assert_eq!(stdout(&o).lines().count(), 5);
}

#[test]
fn hanoi_ideal_run_has_optimal_depth() {
    let o = tmpidan(&["run", "--domain", "hanoi", "--disks", "3", "--ideal-motion", "--format", "json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rows[0]["d"], 7);
    assert_eq!(rows[0]["solved"], true);
}

#[test]
fn unsolved_run_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("blocked.json");
    fs::write(&sc, two_blocker_instance().to_json()).unwrap();
    let o = tmpidan(&["run", "--scenario", p(&sc), "--depth-limit", "1"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let o = tmpidan(&["run", "--scenario", p(&sc)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&tmpidan(&["run", "--reps", "0"])), 1);
    assert_eq!(code(&tmpidan(&["run", "--fail-prob", "1.5"])), 1);
    assert_eq!(code(&tmpidan(&["run", "--domain", "maze"])), 1);
    assert_eq!(code(&tmpidan(&["run", "--robots", "9"])), 1);
}

#[test]
fn malformed_scenario_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\n  \"table\": {\"min\": {\"x\": 0.0, \"y\": 0.0},\n  oops\n}\n").unwrap();
    for args in [vec!["validate", p(&bad)], vec!["run", "--scenario", p(&bad)]] {
        let o = tmpidan(&args);
        assert_eq!(code(&o), 1);
        let err = stderr(&o);
        assert!(err.contains("line 3"), "{err}");
        assert!(err.contains("column"), "{err}");
    }
}

#[test]
fn validate_reports_violations() {
    let dir = tempfile::tempdir().unwrap();
    let ok = dir.path().join("ok.json");
    let sc = generate_clutter(6, 1, 3).unwrap();
    fs::write(&ok, sc.to_json()).unwrap();
    let o = tmpidan(&["validate", p(&ok)]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));

    let mut overlap = sc.clone();
    let first = overlap.objects[0].clone();
    let mut twin = ObjectModel::disc("twin", first.pose.x, first.pose.y, 0.02, Category::Graspable);
    twin.pose.x += 0.01;
    overlap.objects.push(twin);
    let path = dir.path().join("overlap.json");
    fs::write(&path, overlap.to_json()).unwrap();
    let o = tmpidan(&["validate", p(&path)]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains(&format!("objects {} and twin overlap", first.id)), "{}", stdout(&o));

    let mut outside = sc.clone();
    outside.objects[0].pose.x = 5.0;
    let path = dir.path().join("outside.json");
    fs::write(&path, outside.to_json()).unwrap();
    let o = tmpidan(&["validate", p(&path)]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("out of bounds"), "{}", stdout(&o));
}

#[test]
fn bench_counts_rows_and_writes_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = tmpidan(&["bench", "--objects", "4,8", "--reps", "3", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let agg = fs::read_to_string(&out).unwrap();
    let raw = fs::read_to_string(dir.path().join("sweep.raw.csv")).unwrap();
    let plot = fs::read_to_string(dir.path().join("sweep.plot.csv")).unwrap();
    assert_eq!(agg.lines().count(), 3);
    assert_eq!(raw.lines().count(), 7);
    assert_eq!(plot.lines().next(), Some("d,TP_s"));
    assert_eq!(plot.lines().count(), 7);
    let header: Vec<&str> = agg.lines().next().unwrap().split(',').collect();
    assert_eq!(&header[..6], &AGGREGATE_HEADER);
}

#[test]
fn bench_json_mirrors_csv_fields() {
    let o = tmpidan(&["bench", "--objects", "4", "--reps", "2", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let row = &v["aggregate"][0]["rows"][0];
    for key in AGGREGATE_HEADER {
        assert!(row.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["raw"].as_array().unwrap().len(), 2);
}

#[test]
fn bench_with_only_failures_exits_one() {
    let o = tmpidan(&["bench", "--objects", "5000", "--reps", "1"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("5000"), "{}", stderr(&o));
}

#[test]
fn output_is_reproducible_across_thread_counts() {
    let args = |jobs: &'static str| ["bench", "--objects", "8,20", "--reps", "2", "--seed", "3", "--jobs", jobs];
    let a = stdout(&tmpidan(&args("1")));
    let b = stdout(&tmpidan(&args("4")));
    assert_eq!(a, b);
    assert_eq!(a, stdout(&tmpidan(&args("4"))));
}

#[test]
fn seed_falls_back_to_environment() {
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_tmpidan"));
        c.args(["run", "--objects", "6"]).args(extra).env_remove("TMPIDAN_SEED");
        if let Some(s) = env {
            c.env("TMPIDAN_SEED", s);
        }
        stdout(&c.output().unwrap())
    };
    let from_env = run(Some("42"), &[]);
    assert!(from_env.lines().nth(1).unwrap().starts_with("6,r0,0,42,"));
    assert_eq!(from_env, run(None, &["--seed", "42"]));
    assert_eq!(run(Some("42"), &["--seed", "5"]), run(None, &["--seed", "5"]));
}

#[test]
fn golden_single_robot_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("single.csv");
    let o = tmpidan(&["bench", "--objects", "4,8,49", "--reps", "3", "--seed", "0", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    golden("single.csv", &fs::read_to_string(&out).unwrap());
    golden("single.raw.csv", &fs::read_to_string(dir.path().join("single.raw.csv")).unwrap());
}

#[test]
fn golden_two_robot_sweep() {
    let o = tmpidan(&["bench", "--objects", "6,12", "--robots", "2", "--reps", "2", "--seed", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.matches("# robot=").count(), 2);
    golden("two_robots.csv", &text);
}

#[test]
fn golden_hanoi_run() {
    let o = tmpidan(&["run", "--domain", "hanoi", "--disks", "4", "--seed", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    golden("hanoi4.csv", &stdout(&o));
}
