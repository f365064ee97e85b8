use std::sync::Arc;

use ddm_core::extension::{example1, ExactSolution, ProblemSpec};
use ddm_core::fem::{AssemblyOptions, FemSystem, QuadratureRule, SolverOptions, StructuredGrid};
use ddm_core::geometry::{make_circle, PhaseField, Point};
use ddm_core::norms::{weighted_h1_error, weighted_l2_error};
use ddm_core::oracle::{dense_reference_solve, relative_difference};
use ddm_core::time::{run_transient, TimeGrid};

fn system(n: usize, radius: f64, eps: f64) -> FemSystem {
    FemSystem::new(
        StructuredGrid::unit_square(n).unwrap(),
        PhaseField::new(Arc::new(make_circle(Point::origin(), radius).unwrap()), eps, 1e-8).unwrap(),
        QuadratureRule::tensor(4),
        AssemblyOptions::default(),
    )
    .unwrap()
}

fn cg() -> SolverOptions {
    SolverOptions::cg(1e-13, 10_000)
}

#[test]
fn sparse_paths_match_dense_reference() {
    // the covering disk makes every weight 1
    for sys in [system(8, 10.0, 0.05), system(8, 0.25, 1.0 / 8.0)] {
        let spec = example1();
        let time = TimeGrid::new(0.5, 32).unwrap();
        let m = sys.assemble_weighted_mass();
        let k = sys.assemble_weighted_stiffness(&spec, 0.0);
        let u0 = sys.initial_values(&spec).unwrap();
        let dense = dense_reference_solve(&m, &k, |t| sys.assemble_load(&spec, t), time, &u0).unwrap();
        for options in [cg(), SolverOptions::cholesky()] {
            let sol = run_transient(&sys, &spec, time, &options, &[]).unwrap();
            let diff = relative_difference(sol.final_values(), &dense);
            assert!(diff < 1e-8, "{diff}");
        }
    }
}

#[test]
fn constant_state_is_steady() {
    let sys = system(32, 0.25, 1.0 / 8.0);
    let spec = ProblemSpec::zero().with_initial(|_| 2.5);
    let sol = run_transient(&sys, &spec, TimeGrid::new(1.0, 20).unwrap(), &cg(), &[0.5]).unwrap();
    assert_eq!(sol.snapshots.len(), 2);
    for snap in &sol.snapshots {
        assert!(snap.values.iter().all(|v| (v - 2.5).abs() < 1e-9));
    }
}

#[test]
fn zero_data_gives_zero_error() {
    let sys = system(32, 0.25, 1.0 / 8.0);
    let spec = ProblemSpec::zero();
    let sol = run_transient(&sys, &spec, TimeGrid::new(0.5, 8).unwrap(), &cg(), &[]).unwrap();
    let exact = spec.exact.as_ref();
    assert_eq!(weighted_l2_error(&sys, sol.final_values(), exact, 0.5).unwrap(), 0.0);
    assert_eq!(weighted_h1_error(&sys, sol.final_values(), exact, 0.5).unwrap(), 0.0);
}

#[test]
fn solution_is_linear_in_the_data() {
    let sys = system(24, 0.25, 1.0 / 8.0);
    let time = TimeGrid::new(0.25, 10).unwrap();
    let a = ProblemSpec::zero()
        .with_source(|t, x| (1.0 + t) * x.x)
        .with_neumann(|_, b| b.normal.y)
        .with_initial(|x| x.y * x.y);
    let b = ProblemSpec::zero()
        .with_source(|_, x| x.y.cos())
        .with_neumann(|t, _| t)
        .with_initial(|x| x.x - 0.1);
    let sum = ProblemSpec::zero()
        .with_source(|t, x| (1.0 + t) * x.x + x.y.cos())
        .with_neumann(|t, b| b.normal.y + t)
        .with_initial(|x| x.y * x.y + x.x - 0.1);
    let options = SolverOptions::cholesky();
    let run = |s: &ProblemSpec| run_transient(&sys, s, time, &options, &[]).unwrap().final_values().to_vec();
    let (ua, ub, us) = (run(&a), run(&b), run(&sum));
    let combined: Vec<f64> = ua.iter().zip(&ub).map(|(x, y)| x + y).collect();
    assert!(relative_difference(&combined, &us) < 1e-12);
}

#[test]
fn snapshots_follow_requests() {
    let sys = system(16, 0.25, 1.0 / 8.0);
    let sol = run_transient(&sys, &example1(), TimeGrid::new(0.5, 16).unwrap(), &cg(), &[0.0, 0.25, 0.5])
        .unwrap();
    let times: Vec<f64> = sol.snapshots.iter().map(|s| s.time).collect();
    assert_eq!(times, vec![0.0, 0.25, 0.5]);
    assert_eq!(sol.iterations.len(), 16);
    assert!(sol.snapshots.iter().all(|s| s.values.iter().all(|v| v.is_finite())));
}

#[test]
fn example1_converges_in_epsilon_on_a_coarse_grid() {
    let spec = example1();
    let exact: &ExactSolution = spec.exact.as_ref().unwrap();
    let mut errors = Vec::new();
    for eps in [1.0 / 8.0, 1.0 / 16.0] {
        let sys = system(128, 0.25, eps);
        let sol = run_transient(&sys, &spec, TimeGrid::new(0.5, 64).unwrap(), &SolverOptions::cholesky(), &[]).unwrap();
        errors.push(weighted_l2_error(&sys, sol.final_values(), Some(exact), 0.5).unwrap());
    }
    let rate = (errors[0] / errors[1]).log2();
    assert!(rate > 1.7, "{errors:?}");
}
