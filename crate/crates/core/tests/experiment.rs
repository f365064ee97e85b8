use ddm_core::experiment::{
    field_dump, read_sweep_csv, run_single, run_sweep, ExperimentConfig, FieldKind,
};
use ddm_core::geometry::Point;

fn small(problem: &str, dir: &std::path::Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset("quick-table1-circle").unwrap();
    cfg.problem.id = problem.into();
    cfg.grid.nx = 32;
    cfg.time.steps = 8;
    cfg.sweep.epsilons = vec![0.125, 0.0625];
    cfg.output.dir = dir.to_owned();
    cfg
}

#[test]
fn zero_problem_has_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_single(&small("zero", dir.path()), 0.125).unwrap();
    assert_eq!(out.report.l2_error, 0.0);
    assert_eq!(out.report.h1_error, 0.0);
}

#[test]
fn sweep_writes_reproducible_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small("example2", &dir.path().join("a"));
    cfg.assembly.bitwise = true;
    let sweep = run_sweep(&cfg).unwrap();
    let first = std::fs::read(dir.path().join("a/sweep.csv")).unwrap();
    cfg.output.dir = dir.path().join("b");
    cfg.assembly.workers = 3;
    run_sweep(&cfg).unwrap();
    let second = std::fs::read(dir.path().join("b/sweep.csv")).unwrap();
    assert_eq!(first, second);
    let back = read_sweep_csv(&dir.path().join("a/sweep.csv")).unwrap();
    assert_eq!(back.reports.len(), 2);
    for (a, b) in sweep.reports.iter().zip(&back.reports) {
        assert_eq!(a.l2_error.to_bits(), b.l2_error.to_bits());
        assert_eq!(a.h1_error.to_bits(), b.h1_error.to_bits());
    }
}

#[test]
fn invalid_sweeps_are_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small("example1", dir.path());
    cfg.sweep.epsilons = vec![0.125, 0.125];
    assert_eq!(run_sweep(&cfg).unwrap_err().exit_code(), 1);
    assert!(!dir.path().join("sweep.csv").exists());
}

#[test]
fn omega_dump_values() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small("example1", dir.path());
    cfg.grid.nx = 64;
    let dump = field_dump(&cfg, 1.0 / 16.0, FieldKind::Omega).unwrap();
    let grid = dump.grid;
    let omega = dump.array("omega").unwrap();
    let center = grid.node_index(32, 32);
    assert_eq!(grid.node(center), Point::origin());
    assert!((omega[center] - 1.0).abs() < 1e-6);
    // node (0.25, 0) lies on the circle
    let on_boundary = grid.node_index(48, 32);
    assert!((omega[on_boundary] - 0.5).abs() < 1e-12);
    let path = dir.path().join("omega.csv");
    dump.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next().unwrap(), "x,y,value");
    assert_eq!(text.lines().count(), grid.node_count() + 1);
}

#[test]
fn error_dump_vanishes_for_zero_problem() {
    let dir = tempfile::tempdir().unwrap();
    let dump = field_dump(&small("zero", dir.path()), 0.125, FieldKind::Error).unwrap();
    assert!(dump.array("error").unwrap().iter().all(|v| *v == 0.0));
}

#[test]
fn vtk_output_from_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small("example1", dir.path());
    cfg.output.format = vec![ddm_core::experiment::OutputFormat::Csv, ddm_core::experiment::OutputFormat::Vtk];
    run_sweep(&cfg).unwrap();
    let vtk = std::fs::read_to_string(dir.path().join("fields_1.vtk")).unwrap();
    for name in ["solution", "exact", "error", "omega"] {
        assert!(vtk.contains(&format!("SCALARS {name} double 1")));
    }
    assert!(vtk.contains("DIMENSIONS 33 33 1"));
}
