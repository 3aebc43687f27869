use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_powertriad"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn diagnose_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("loud.csv"), "x,v\n1,2\n-1,-2\n").unwrap();
    std::fs::write(d.join("quiet.csv"), "x,v\n1,0.5\n-1,-0.5\n").unwrap();
    std::fs::write(d.join("flip.csv"), "x,v\n1,-1\n-1,1\n").unwrap();

    let out = run(&["diagnose", "--input", "loud.csv"], d);
    assert_eq!(out.status.code(), Some(3));
    let v = json(&out);
    assert_eq!(v["regime"], "PowerDominant");
    assert_eq!(v["power_ratio"], 4.0);
    assert_eq!(v["verdict"]["satisfied"], true);

    let out = run(&["diagnose", "--input", "quiet.csv"], d);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["regime"], "PowerConservative");

    let out = run(&["diagnose", "--input", "flip.csv"], d);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["regime"], "PowerBalance");
}

#[test]
fn errors_and_usage() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.csv"), "x,v\n1,2\n3,oops\n").unwrap();
    let out = run(&["diagnose", "--input", "bad.csv"], d);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");

    assert_eq!(run(&["diagnose"], d).status.code(), Some(1));
    assert_eq!(run(&["diagnose", "--nope"], d).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"], d).status.code(), Some(2));
    assert_eq!(run(&["diagnose", "--problem", "nonsense"], d).status.code(), Some(1));
    assert_eq!(run(&["scale", "--moments", "1,2"], d).status.code(), Some(1));
    // violates Cauchy-Schwarz
    assert_eq!(run(&["scale", "--moments", "1,1,5"], d).status.code(), Some(1));
    assert_eq!(
        run(&["diagnose", "--problem", "gaussian_shrinkage", "--estimator", "amplifier:c=0.5"], d).status.code(),
        Some(1)
    );
}

#[test]
fn config_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("a.conf"), "problem = gaussian_shrinkage\nestimator = amplifier:c=2\nsamples = 500\n").unwrap();
    let out = run(
        &["diagnose", "--config", "a.conf", "--estimator", "zero", "--samples", "10"],
        d,
    );
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["regime"], "PowerDominant");

    std::fs::write(d.join("b.conf"), "samples = 500\nunknown_key = 1\n").unwrap();
    let out = run(&["diagnose", "--config", "b.conf", "--problem", "gaussian_shrinkage"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown_key"));
}

#[test]
fn scale_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["scale", "--moments", "1,2,1"], dir.path());
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["t_star"], 0.5);
    assert_eq!(v["mse_at_star"], 0.5);
    assert_eq!(v["collinear"], false);

    let out = run(&["scale", "--moments", "1,4,2"], dir.path());
    assert_eq!(json(&out)["collinear"], true);
}

#[test]
fn path_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("ctl.conf"), "kind = projected\neta = 2.0\n").unwrap();
    let out = run(&["path", "--moments", "1,2,1", "--controller", "ctl.conf", "--out", "trace.csv"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(d.join("trace.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("k,t,mse,regime"));
    assert!(!csv.contains("PowerDominant"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("trace.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["kind"], "projected");
    assert_eq!(summary["forbidden_steps"], 0);
    // only the two outputs, no leftover temporaries
    assert_eq!(std::fs::read_dir(d).unwrap().count(), 3);
}

#[test]
fn track_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["track", "--seed", "1", "--format", "json"], dir.path());
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["lambda"], 0.99);
    let reentry = v["reentry_step"].as_u64().unwrap();
    assert!((1000..=1500).contains(&reentry), "{reentry}");

    let out = run(&["track", "--lambda", "1.5"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn map_directory_and_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = run(&["map", "--out", "maps", "--estimator", "identity", "--estimator", "amplifier:c=3"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut names: Vec<_> = std::fs::read_dir(d.join("maps"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["left.csv", "left.json", "left.svg", "right.csv", "right.json", "right.svg"]);
    let csv = std::fs::read_to_string(d.join("maps/right.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.contains("amplifier(c=3)"));

    let out = run(&["map", "--which", "left", "--format", "json"], d);
    assert!(out.status.success());
    assert_eq!(json(&out)["kind"], "left");
    let out = run(&["map"], d);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("<?xml"));
}

#[test]
fn zoo_list_and_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["zoo", "list"], dir.path());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["gaussian_shrinkage", "heavy_tail", "step_change", "drifting_power", "amplifier", "empirical_mmse"] {
        assert!(text.contains(name), "{name}");
    }
    let out = run(&["zoo", "run", "--problem", "heavy_tail", "--samples", "5", "--estimator", "scale:c=0.5"], dir.path());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert_eq!(text.lines().next(), Some("x,v"));
}

#[test]
fn documented_examples() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("two.csv"), "x,v\n1,2\n-1,0\n").unwrap();
    let out = run(&["diagnose", "--input", "two.csv"], d);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["coupling"], 1.0);

    let out = run(&["diagnose", "--problem", "gaussian_shrinkage", "--estimator", "zero"], d);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["regime"], "PowerConservative");

    std::fs::write(d.join("ideal.csv"), "x,v\n1,1\n-2,-2\n").unwrap();
    let out = run(&["diagnose", "--input", "ideal.csv"], d);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["verdict"]["degenerate"], true);

    std::fs::write(d.join("xz.csv"), "x,v\n1,2\n-1,0\n").unwrap();
    assert_eq!(json(&run(&["scale", "--input", "xz.csv"], d))["t_star"], 0.5);
    let v = json(&run(&["scale", "--problem", "gaussian_shrinkage:noise=0"], d));
    assert_eq!(v["collinear"], true);

    let args = ["zoo", "run", "--problem", "gaussian_shrinkage", "--seed", "7", "--samples", "100", "--out", "z.csv"];
    run(&args, d);
    let first = std::fs::read(d.join("z.csv")).unwrap();
    assert_eq!(String::from_utf8_lossy(&first).lines().count(), 101);
    run(&args, d);
    assert_eq!(std::fs::read(d.join("z.csv")).unwrap(), first);
}

#[test]
fn exit_status_follows_regime() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let xs = [1.0, -0.5, 2.0, 0.25, -1.5];
    for c in [0.0, 0.3, 0.9, 1.0, -1.0, 1.1, 2.0, -3.0] {
        let mut csv = String::from("x,v\n");
        for (i, x) in xs.iter().enumerate() {
            // perturb the estimate so only the scale decides the regime
            let v = c * x + if c == 1.0 || c == -1.0 { 0.0 } else { 0.01 * (i as f64 - 2.0) };
            csv.push_str(&format!("{x},{v}\n"));
        }
        std::fs::write(d.join("s.csv"), csv).unwrap();
        let out = run(&["diagnose", "--input", "s.csv"], d);
        let regime = json(&out)["regime"].as_str().unwrap().to_owned();
        let expected = match regime.as_str() {
            "PowerDominant" => 3,
            _ => 0,
        };
        assert_eq!(out.status.code(), Some(expected), "c={c} {regime}");
        let want = if c.abs() > 1.0 {
            "PowerDominant"
        } else if c.abs() == 1.0 {
            "PowerBalance"
        } else {
            "PowerConservative"
        };
        assert_eq!(regime, want, "c={c}");
    }
}
