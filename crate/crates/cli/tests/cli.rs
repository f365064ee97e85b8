use std::path::Path;
use std::process::Command;

fn ddm() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ddm"))
}

fn write_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let path = dir.join("cfg.toml");
    std::fs::write(
        &path,
        format!(
            "problem.id = \"example1\"\ngrid.nx = 32\ntime.T = 0.5\ntime.steps = 8\n\
             sweep.epsilons = [\"1/8\", \"1/16\"]\noutput.dir = {:?}\n{extra}",
            dir.join("out")
        ),
    )
    .unwrap();
    path
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = ddm().arg("sweep").arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    assert!(csv.starts_with("epsilon,l2_error,l2_rate,h1_error,h1_rate,runtime_s"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn output_dir_can_come_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let env_dir = dir.path().join("env");
    let out = ddm().arg("sweep").arg(&cfg).env("DDM_OUTPUT_DIR", &env_dir).output().unwrap();
    assert!(out.status.success());
    assert!(env_dir.join("sweep.csv").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "assembly.quadrature = 9\n");
    assert_eq!(ddm().arg("run").arg(&bad).status().unwrap().code(), Some(1));
    assert_eq!(ddm().args(["run", "no-such-preset.toml"]).status().unwrap().code(), Some(3));
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, "").unwrap();
    let cfg = write_config(dir.path(), "");
    let status = ddm().arg("sweep").arg(&cfg).arg("--out").arg(blocker.join("x")).status().unwrap();
    assert_eq!(status.code(), Some(3));
    let solver = write_config(dir.path(), "solver.type = \"cg\"\nsolver.max_iter = 1\nsolver.tol = 1e-14\n");
    assert_eq!(ddm().arg("run").arg(&solver).status().unwrap().code(), Some(2));
}

#[test]
fn field_and_run_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let file = dir.path().join("omega.vtk");
    let out = ddm()
        .args(["field", "--what", "omega", "--epsilon", "1/16", "--file"])
        .arg(&file)
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(std::fs::read_to_string(&file).unwrap().starts_with("# vtk DataFile Version 3.0"));
    let out = ddm().arg("run").arg(&cfg).output().unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains("l2_error="));
    let out = ddm().arg("presets").output().unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains("table1-circle"));
}

#[test]
fn verify_reports_pass_lines() {
    let out = ddm().args(["verify", "--samples", "200000"]).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 5);
}
