use std::path::Path;
use std::process::{Command, Output};

fn kcover(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kcover")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn two_point_circle_is_not_covered() {
    let out = kcover(&["coverage", "--d", "1", "--k", "1", "--points", "0.0,0.5", "--r", "0.2"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["covered"], "no");
    let wit = &v["witness"]["critical_point"];
    assert_eq!(wit["mu"], 1);
    let x = wit["center"][0].as_f64().unwrap();
    assert!((x - 0.25).abs() < 1e-12 || (x - 0.75).abs() < 1e-12);
    assert!(wit["rho"].as_f64().unwrap() > 0.2);
}

#[test]
fn sweep_writes_one_row_per_offset() {
    let args = ["sweep", "--d", "2", "--k", "2", "--mu", "2", "--n", "50000", "--w", "-6,-3,0,3,6", "--trials", "10", "--seed", "42"];
    let text = stdout(&kcover(&args));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6);
    assert!(lines[0].starts_with("n,w,mu,"));
    let ws: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(ws, [-6.0, -3.0, 0.0, 3.0, 6.0]);
}

#[test]
fn identical_invocations_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let path = dir.path().join(name);
        let p = path.to_str().unwrap();
        let out = kcover(&["--threads", threads, "--seed", "9", "--out", p, "sweep", "--d", "2", "--k", "2", "--mu", "2", "--n", "5000", "--w", "-2,0,2", "--trials", "12"]);
        assert!(out.status.success());
        std::fs::read(path).unwrap()
    };
    let a = run("a.csv", "1");
    assert_eq!(a, run("b.csv", "1"));
    assert_eq!(a, run("c.csv", "3"));
}

#[test]
fn sampled_cloud_round_trips_through_critical_points() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("cloud.jsonl");
    let c = cloud.to_str().unwrap();
    assert!(kcover(&["sample", "--d", "2", "--count", "50", "--seed", "3", "--out", c]).status.success());
    let text = std::fs::read_to_string(&cloud).unwrap();
    let mut lines = text.lines();
    let header: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert_eq!(header["dim"], 2);
    assert_eq!(header["seed"], 3);
    assert_eq!(header["trial_id"], 0);
    assert!(header.get("n").is_some());
    let points: Vec<Vec<f64>> = lines.map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(points.len(), 50);
    assert!(points.iter().flatten().all(|&x| (0.0..1.0).contains(&x)));

    let crit = stdout(&kcover(&["critical-points", "--d", "2", "--input", c, "--k", "1"]));
    for line in crit.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        for key in ["center", "rho", "mu", "generators", "interior_count", "delta"] {
            assert!(v.get(key).is_some(), "{key} missing in {line}");
        }
    }
    assert!(crit.lines().count() > 50);
}

#[test]
fn window_writes_report_and_marks() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("w.json");
    let out = kcover(&["window", "--n", "5000", "--d", "2", "--k", "1", "--lambda0", "0", "--trials", "500", "--seed", "1", "--out", report.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(v["report"].is_object());
    let marks = std::fs::read_to_string(Path::new(&report).with_extension("marks.csv")).unwrap();
    assert_eq!(marks.lines().next().unwrap(), "x1,x2,lambda,rho,trial_id");
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"schema_version": 1, "d": 2}"#).unwrap();
    assert_eq!(kcover(&["sweep", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(kcover(&["coverage", "--d", "2", "--k", "1", "--points", "0.1,0.2,0.3", "--r", "0.1"]).status.code(), Some(1));
    assert_eq!(kcover(&["sweep", "--d", "2"]).status.code(), Some(1));
    assert_eq!(kcover(&["window", "--n", "100", "--d", "2", "--k", "1", "--lambda0", "0", "--trials", "10"]).status.code(), Some(1));
    assert_eq!(kcover(&["--help"]).status.code(), Some(0));
}

#[test]
fn euler_and_constants_formats() {
    let csv = stdout(&kcover(&["euler", "--n", "500", "--d", "2", "--k", "1", "--lambdas", "2,4", "--trials", "10", "--seed", "2"]));
    assert_eq!(csv.lines().next().unwrap(), "Lambda,mean_chi,se,trials");
    assert_eq!(csv.lines().count(), 3);
    let json = stdout(&kcover(&["constants", "--d", "2", "--k", "2", "--samples", "100000", "--seed", "1"]));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 0.1);
}
