use std::process::Command;

fn lab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pressure-lab"))
}

#[test]
fn lists_every_experiment() {
    let out = lab().arg("list-experiments").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 12);
    assert!(text.contains("torus-double") && text.contains("bilinear-symmetry"));
}

#[test]
fn run_from_flags_and_from_config_agree() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let status = lab()
        .args(["run", "--experiment", "bilinear-symmetry", "--theta", "0.3", "--grid", "64", "--seed", "7", "--out"])
        .arg(&a)
        .status()
        .unwrap();
    assert!(status.success());

    let cfg = std::fs::read_to_string(a.join("config.toml")).unwrap();
    let b = dir.path().join("b");
    let cfg = cfg.replace(&a.display().to_string(), &b.display().to_string());
    let path = dir.path().join("b.toml");
    std::fs::write(&path, cfg).unwrap();
    let status = lab().args(["run", "--config"]).arg(&path).status().unwrap();
    assert!(status.success());
    assert_eq!(std::fs::read(a.join("report.csv")).unwrap(), std::fs::read(b.join("report.csv")).unwrap());
}

#[test]
fn bad_input_exits_nonzero() {
    let out = lab().args(["run", "--experiment", "torus-triple"]).output().unwrap();
    assert!(!out.status.success());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    std::fs::write(&path, "experiment = \"torus-double\"\nthetas = []\nseeds = [1]\noutput_dir = \"x\"\n").unwrap();
    let out = lab().args(["run", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("theta"));
}

#[test]
fn verify_reports_each_selected_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab().args(["verify", "--only", "1", "--only", "14", "--out"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("pass  1 spectral oracle"), "{text}");
    assert!(text.contains("pass 14 bilinear symmetry"), "{text}");
}
