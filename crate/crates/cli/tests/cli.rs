use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_humanet"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/scenarios")
        .join(name)
}

#[test]
fn run_prints_json_report() {
    let out = bin().arg("run").arg(scenario("fig5.scenario")).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["transmissions"]["by_kind"]["MCSTART"], 4);
    assert_eq!(v["communities"][0]["alias"], "C1");
}

#[test]
fn run_writes_report_file_and_honors_seed() {
    let dir = std::env::temp_dir().join(format!("humanet-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let status = bin()
        .args(["run", "--seed", "42", "--out"])
        .arg(&path)
        .arg(scenario("ftp.scenario"))
        .status()
        .unwrap();
    assert!(status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["seed"], 42);
    assert_eq!(v["transfers"][0]["content_match"], true);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn compare_reports_ratio() {
    let out = bin().arg("compare").arg(scenario("random20.scenario")).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["baseline_control_tx"], 8000);
    assert!(v["ratio"].as_f64().unwrap() >= 5.0);
}

#[test]
fn validate_rejects_bad_scenarios_with_line_numbers() {
    let out = bin().arg("validate").arg(scenario("watchdog.scenario")).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("environment open"));

    let dir = std::env::temp_dir().join(format!("humanet-cli-bad-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.scenario");
    std::fs::write(&bad, "humanet-scenario 1\n[nodes]\nA 0 0\n[events]\n0 A fly\n").unwrap();
    let out = bin().arg("validate").arg(&bad).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 5"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn trace_has_one_line_per_event() {
    let out = bin().arg("trace").arg(scenario("fig5.scenario")).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let first = text.lines().next().unwrap();
    assert_eq!(first, "0.000000000 n0 MCSTART 0:0 broadcast");
    assert!(text.lines().all(|l| l.split_whitespace().count() == 5));
}

#[test]
fn embedded_errors_give_nonzero_exit() {
    let dir = std::env::temp_dir().join(format!("humanet-cli-err-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let sc = dir.join("err.scenario");
    std::fs::write(&sc, "humanet-scenario 1\n[nodes]\nA 0 0\nB 9 9\n[events]\n0 A start F as C\n1 B join C\n").unwrap();
    let out = bin().arg("run").arg(&sc).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["errors"][0]["kind"], "NotAnnounced");
    std::fs::remove_dir_all(dir).unwrap();
}
