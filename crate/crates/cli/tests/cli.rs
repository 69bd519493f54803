use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pareto-precode"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf8 output")
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf8 path")
}

fn toy(dir: &TempDir) -> PathBuf {
    let path = dir.path().join("toy.json");
    let o = run(&["gen-channel", "--toy", "--out", path_str(&path)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    path
}

fn json_of(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&stdout(o)).expect("valid json")
}

fn f(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["bogus"]).status.code(), Some(1));
    assert_eq!(run(&["gen-channel", "--out", "x.json"]).status.code(), Some(1));
    assert_eq!(run(&["pareto", "--channel", "/nonexistent/channel.json"]).status.code(), Some(1));
}

#[test]
fn invalid_thread_count_exits_one() {
    let dir = TempDir::new().unwrap();
    let c = toy(&dir);
    let o = bin().env("PARETO_THREADS", "zero").args(["surface", "--channel", path_str(&c), "--points", "2"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn malformed_channel_exits_one() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"m_tx\": 2}").unwrap();
    let o = run(&["baseline", "--channel", path_str(&path), "--method", "zf"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unreachable_convergence_exits_two() {
    let dir = TempDir::new().unwrap();
    let c = toy(&dir);
    let o = run(&["pareto", "--channel", path_str(&c), "--delta", "1e-12", "--max-iter", "1"]);
    assert_eq!(o.status.code(), Some(2));
    // rows are still written before the failure status
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn toy_channel_reports_dimensions() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("toy.json");
    let o = run(&["gen-channel", "--toy", "--out", path_str(&path)]);
    assert!(stdout(&o).starts_with("m_tx=8 m_ue=3"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["m_tx"], 8);
    assert_eq!(v["h_real"][1][0], -0.4);
}

#[test]
fn generated_channels_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let o = run(&["gen-channel", "--svd-decay", "inverse-square", "12", "4", "--seed", "7", "--chi", "0.1", "--out", path_str(p)]);
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn surface_is_deterministic_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let c = toy(&dir);
    let args = ["surface", "--channel", path_str(&c), "--points", "6", "--seed", "3"];
    let one = bin().env("PARETO_THREADS", "1").args(args).output().unwrap();
    let four = bin().env("PARETO_THREADS", "4").args(args).output().unwrap();
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn baseline_reference_points() {
    let dir = TempDir::new().unwrap();
    let c = toy(&dir);
    let zf = json_of(&run(&["baseline", "--channel", path_str(&c), "--method", "zf", "--alloc", "kappa=0.3481,0.2184,0.4335", "--format", "json"]));
    assert!((f(&zf["mean_db"]) - 5.5647).abs() < 1e-3, "{}", zf["mean_db"]);
    let slnr = json_of(&run(&["baseline", "--channel", path_str(&c), "--method", "slnr", "--alloc", "kappa=0.2787,0.3172,0.4042", "--format", "json"]));
    assert!((f(&slnr["mean_db"]) - 6.0375).abs() < 1e-3, "{}", slnr["mean_db"]);
    let shares: f64 = slnr["kappa"].as_array().unwrap().iter().map(f).sum();
    assert!((shares - 1.0).abs() < 1e-12);
    assert!(slnr["row_power"].as_array().unwrap().iter().all(|x| f(x) <= 1.0 + 1e-12));
}

#[test]
fn baseline_csv_layout() {
    let dir = TempDir::new().unwrap();
    let c = toy(&dir);
    let o = run(&["baseline", "--channel", path_str(&c), "--method", "zf", "--alloc", "waterfill"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0].split(',').count(), 2 + 3 * 3 + 2 + 8);
    assert!(lines[1].starts_with("zf,waterfill,"));
}

#[test]
fn pareto_fixed_and_converged_points() {
    let dir = TempDir::new().unwrap();
    let c = toy(&dir);
    let cases: [(&str, &str, [f64; 3]); 3] = [
        ("0.3123,0.2616,0.4261", "0", [2.9065, 2.5335, 3.6363]),
        ("0.2693,0.2495,0.4812", "1", [3.6413, 3.2667, 5.9677]),
        ("0.3307,0.3326,0.3368", "converge", [4.1696, 4.1328, 4.6920]),
    ];
    for (lambda, iters, expected) in cases {
        let v = json_of(&run(&["pareto", "--channel", path_str(&c), "--lambda", lambda, "--iters", iters, "--delta", "0.01", "--format", "json"]));
        let row = &v[0];
        for (s, e) in row["sinr"].as_array().unwrap().iter().zip(expected) {
            assert!((f(s) - e).abs() < 1e-2 * e, "iters {iters}: {s} vs {e}");
        }
        if iters == "converge" {
            assert_eq!(row["converged"], true);
            assert_eq!(row["status"], "ok");
        }
        assert!(row["trace"]["alpha_history"].is_array());
    }
}

#[test]
fn pareto_random_lambdas() {
    let dir = TempDir::new().unwrap();
    let c = toy(&dir);
    let o = run(&["pareto", "--channel", path_str(&c), "--lambda", "random", "5", "--seed", "2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 6);
    assert!(text.lines().skip(1).all(|l| l.contains(",true,ok,")));
}

#[test]
fn save_precoder_requires_single_lambda() {
    let dir = TempDir::new().unwrap();
    let c = toy(&dir);
    let p = dir.path().join("p.json");
    let o = run(&["pareto", "--channel", path_str(&c), "--lambda", "random", "2", "--save-precoder", path_str(&p)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn iteration_stats_small_run() {
    let o = run(&["iteration-stats", "--sizes", "24x8", "--deltas", "1e-2", "--trials", "40", "--format", "json"]);
    let v = json_of(&o);
    let s = &v["stats"][0];
    assert_eq!(s["m_tx"], 24);
    assert_eq!(s["failed"], 0);
    assert!((3.0..7.0).contains(&f(&s["mean"])), "{}", s["mean"]);
}

#[test]
fn sweep_rows_and_gains() {
    let o = run(&["sweep", "--chi-list", "0.1", "--sizes-list", "12x4", "--seeds", "2", "--format", "json"]);
    let v = json_of(&o);
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert_eq!(r["status"], "ok");
        let refs = r["references"].as_array().unwrap();
        assert_eq!(refs.len(), 4);
        for x in refs {
            assert!(f(&x["g_avg"]).is_finite());
        }
    }
}

#[test]
fn verify_separates_refined_from_zero_forcing() {
    let dir = TempDir::new().unwrap();
    let c = toy(&dir);
    let refined = dir.path().join("refined.json");
    let zf = dir.path().join("zf.json");
    assert!(run(&["pareto", "--channel", path_str(&c), "--delta", "1e-4", "--save-precoder", path_str(&refined)]).status.success());
    assert!(run(&["baseline", "--channel", path_str(&c), "--method", "zf", "--alloc", "global", "--save-precoder", path_str(&zf)]).status.success());

    let r = json_of(&run(&["verify", "--channel", path_str(&c), "--precoder", path_str(&refined), "--format", "json"]));
    assert_eq!(r["feasible"], true);
    assert_ne!(r["improvement"], "found");
    assert_eq!(r["kruskal_full"], false);

    let z = json_of(&run(&["verify", "--channel", path_str(&c), "--precoder", path_str(&zf), "--format", "json"]));
    assert_eq!(z["improvement"], "found");
    assert!(f(&z["step"]) > 0.0);
}

#[test]
fn verify_rejects_mismatched_precoder() {
    let dir = TempDir::new().unwrap();
    let c = toy(&dir);
    let other = dir.path().join("other.json");
    let p = dir.path().join("p.json");
    assert!(run(&["gen-channel", "--gaussian", "6", "2", "--out", path_str(&other)]).status.success());
    assert!(run(&["baseline", "--channel", path_str(&other), "--method", "zf", "--save-precoder", path_str(&p)]).status.success());
    let o = run(&["verify", "--channel", path_str(&c), "--precoder", path_str(&p)]);
    assert_eq!(o.status.code(), Some(1));
}
