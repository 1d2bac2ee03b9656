use std::path::Path;
use std::process::{Command, Output};

fn weylscope(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weylscope"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .env_remove("CI")
        .output()
        .expect("binary runs")
}

#[test]
fn config_errors_exit_3_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"task": {"command": "count", "grid": "1:2:x"}}"#).unwrap();
    let o = weylscope(dir.path(), &["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("task.grid"));

    std::fs::write(&cfg, r#"{"task": {"command": "count", "grdi": "1:2:3"}}"#).unwrap();
    let o = weylscope(dir.path(), &["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grdi"));

    let o = weylscope(dir.path(), &["--tolerance", "solver.rtol=-1", "count"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn config_file_and_subcommand_agree() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"manifold": {"kind": "perturbed_sphere", "epsilon": 0.01, "a": 0.5, "b": 1.0},
            "task": {"command": "classify", "grid": "0.2:1.4:7"}}"#,
    )
    .unwrap();
    assert!(weylscope(&a, &["--config", cfg.to_str().unwrap()]).status.success());
    assert!(weylscope(&b, &["--manifold", "perturbed", "classify", "--grid", "0.2:1.4:7"]).status.success());
    let ra = std::fs::read_to_string(a.join("classify.csv")).unwrap();
    let rb = std::fs::read_to_string(b.join("classify.csv")).unwrap();
    assert_eq!(ra, rb);
    assert!(ra.starts_with("# weylscope "));
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<String> = ["1", "2"]
        .iter()
        .map(|t| {
            let out = dir.path().join(t);
            let o = weylscope(
                &out,
                &["--threads", t, "--seed", "5", "nonperiodic-measure", "--radii", "0.05,0.02", "--samples", "4000"],
            );
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            std::fs::read_to_string(out.join("nonperiodic-measure.csv")).unwrap()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn seed_required_in_ci_mode() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_weylscope"))
        .arg("--out-dir")
        .arg(dir.path())
        .args(["nonperiodic-measure", "--samples", "100"])
        .env("CI", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seeds"));
}

#[test]
fn scenario_verdict_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = weylscope(dir.path(), &["--seed", "0", "scenario", "sphere-sharpness"]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("sphere-sharpness/verdict.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["header"]["command"], "scenario sphere-sharpness");
    assert!(v["body"]["claims"].as_array().unwrap().iter().all(|c| c["pass"] == true));

    // A bracket that cannot hold turns into a failing claim.
    let cfg = dir.path().join("s.json");
    std::fs::write(
        &cfg,
        r#"{"seeds": [0], "task": {"command": "scenario", "name": "sphere-sharpness",
            "params": {"constant_bracket": [10.0, 20.0]}}}"#,
    )
    .unwrap();
    let o = weylscope(dir.path(), &["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL sphere-sharpness"));

    let o = weylscope(dir.path(), &["scenario", "no-such"]);
    assert_eq!(o.status.code(), Some(3));
    let o = weylscope(dir.path(), &["--manifold", "s2xs1", "rotation-number"]);
    assert_eq!(o.status.code(), Some(3));
}
