use std::fs;
use std::process::Command;

fn payrule() -> Command {
    Command::new(env!("CARGO_BIN_EXE_payrule"))
}

#[test]
fn list_presets_names_the_experiments() {
    let out = payrule().arg("list-presets").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["exante-pareto", "exante-gamma", "exante-burr", "blinded-pareto"] {
        assert!(text.contains(name), "{name}");
    }
    assert!(text.contains("exante-pareto --shape {-0.1,0.01,1}"));
}

#[test]
fn solve_writes_artifacts_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    fs::write(
        &config,
        r#"{"distribution": {"family": "gpd", "shape": 1.0}, "gamma": 0.25, "subsamples": 40, "output_dir": "a"}"#,
    )
    .unwrap();
    let files = [
        "rule.csv",
        "strategy.csv",
        "ratio.csv",
        "surface.csv",
        "summary.json",
        "report.txt",
    ];
    let mut outputs = Vec::new();
    for out in ["a", "b"] {
        let target = dir.path().join(out);
        let status = payrule()
            .args(["solve", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&target)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        outputs.push(files.map(|f| fs::read(target.join(f)).unwrap()));
        assert!(target.join("timing.json").exists());
    }
    assert_eq!(outputs[0], outputs[1]);

    let summary: serde_json::Value = serde_json::from_slice(&outputs[0][4]).unwrap();
    assert_eq!(summary["converged"], true);
    assert_eq!(summary["gamma"], 0.25);
    assert_eq!(summary["bins"], 50);
    assert!(summary["shade"].as_f64().unwrap() > 0.0);
    // keys appear in declaration order, not sorted
    let text = String::from_utf8(outputs[0][4].clone()).unwrap();
    let at = |key: &str| text.find(&format!("\"{key}\"")).unwrap();
    assert!(at("converged") < at("rounds"));
    assert!(at("rounds") < at("mode"));
    assert!(at("k") < at("budget_collected"));
}

#[test]
fn infeasible_budget_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let status = payrule()
        .args(["preset", "exante-gamma", "--gamma", "0.75", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn non_convergence_exits_3_and_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    fs::write(
        &config,
        r#"{"distribution": {"family": "gpd", "shape": 1.0}, "gamma": 0.25, "subsamples": 40, "max_rounds": 2}"#,
    )
    .unwrap();
    let status = payrule()
        .args(["solve", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("o"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
    assert!(dir.path().join("o/summary.json").exists());
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    fs::write(
        &config,
        r#"{"distribution": {"family": "gpd", "shape": 1.0}, "alpha": 0}"#,
    )
    .unwrap();
    let status = payrule().args(["solve", "--config"]).arg(&config).status().unwrap();
    assert_eq!(status.code(), Some(1));
    let status = payrule().args(["preset", "no-such-preset"]).status().unwrap();
    assert_eq!(status.code(), Some(1));
    let status = payrule()
        .args(["solve", "--config"])
        .arg(dir.path().join("missing.json"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn empirical_path_is_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    let samples: String = (0..400).map(|i| format!("{}\n", (i % 97) as f64 / 10.0)).collect();
    fs::write(dir.path().join("samples.txt"), samples).unwrap();
    fs::write(
        dir.path().join("run.json"),
        r#"{"distribution": {"family": "empirical", "path": "samples.txt"}, "gamma": 0.1, "subsamples": 20}"#,
    )
    .unwrap();
    let out = payrule()
        .args(["solve", "--config"])
        .arg(dir.path().join("run.json"))
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert!(
        matches!(out.status.code(), Some(0) | Some(3)),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn diagnose_scores_a_rule() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    fs::write(
        &config,
        r#"{"distribution": {"family": "gpd", "shape": 1.0}, "subsamples": 20}"#,
    )
    .unwrap();
    let rule = dir.path().join("rule.csv");
    let mut csv = String::from("psi,payment_above_critical\n");
    for b in 0..50 {
        let psi = 0.1 + 0.2 * b as f64;
        csv.push_str(&format!("{psi},{}\n", psi.min(1.0)));
    }
    fs::write(&rule, csv).unwrap();
    let out = payrule()
        .args(["diagnose", "--rule"])
        .arg(&rule)
        .arg("--config")
        .arg(&config)
        .args(["--mu-sigma", "5"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let d: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((d["worst_case_regret"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(d["deviation_incentive"].as_f64().unwrap() >= -1e-6);
    assert!(d["best_response_shade"].as_f64().unwrap() > 0.0);
}
