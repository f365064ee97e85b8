//! BDF2 time stepping of `M u' + K u = F(t)` with one backward-Euler startup
//! step. The load is taken at the new time level.

use crate::extension::ProblemSpec;
use crate::fem::{CsrMatrix, FemSystem, PreparedSolver, SolverOptions, StructuredGrid};
use crate::{DdmError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    final_time: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(final_time: f64, steps: usize) -> Result<Self> {
        if !(final_time.is_finite() && final_time > 0.0) {
            return Err(DdmError::config(format!("final time must be positive, got {final_time}")));
        }
        if steps < 2 {
            return Err(DdmError::config(format!("need at least 2 time steps, got {steps}")));
        }
        Ok(TimeGrid { final_time, steps })
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.final_time / self.steps as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        if n == self.steps {
            self.final_time
        } else {
            n as f64 * self.dt()
        }
    }

    /// Index of the time level closest to `t`.
    pub fn nearest_step(&self, t: f64) -> usize {
        ((t / self.dt()).round().max(0.0) as usize).min(self.steps)
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TransientSolution {
    pub grid: StructuredGrid,
    pub snapshots: Vec<Snapshot>,
    /// Solver iterations per step; direct solves report 1.
    pub iterations: Vec<usize>,
}

impl TransientSolution {
    /// State at the final time.
    pub fn final_values(&self) -> &[f64] {
        &self.snapshots.last().expect("final state is always recorded").values
    }
}

/// Nodal interpolation of the extended initial value.
pub fn initialize(system: &FemSystem, spec: &ProblemSpec) -> Result<Vec<f64>> {
    system.initial_values(spec)
}

/// Solves `(M/Δτ + K) u = M u_n / Δτ + F`.
pub fn step_be(
    mass: &CsrMatrix,
    stiffness: &CsrMatrix,
    u_n: &[f64],
    load: &[f64],
    dt: f64,
    options: &SolverOptions,
) -> Result<Vec<f64>> {
    let lhs = mass.linear_combination(1.0 / dt, stiffness, 1.0)?;
    let rhs = be_rhs(mass, u_n, load, dt);
    let (u, _) = PreparedSolver::new(lhs, *options)?.solve(&rhs, Some(u_n))?;
    Ok(u)
}

/// Solves `(3M/(2Δτ) + K) u = M (4u_n − u_{n−1}) / (2Δτ) + F`.
pub fn step_bdf2(
    mass: &CsrMatrix,
    stiffness: &CsrMatrix,
    u_n: &[f64],
    u_prev: &[f64],
    load: &[f64],
    dt: f64,
    options: &SolverOptions,
) -> Result<Vec<f64>> {
    let lhs = mass.linear_combination(1.5 / dt, stiffness, 1.0)?;
    let rhs = bdf2_rhs(mass, u_n, u_prev, load, dt);
    let guess = extrapolate(u_n, u_prev);
    let (u, _) = PreparedSolver::new(lhs, *options)?.solve(&rhs, Some(&guess))?;
    Ok(u)
}

fn be_rhs(mass: &CsrMatrix, u_n: &[f64], load: &[f64], dt: f64) -> Vec<f64> {
    let mut rhs = mass.mul_vec(u_n);
    for (r, f) in rhs.iter_mut().zip(load) {
        *r = *r / dt + f;
    }
    rhs
}

fn bdf2_rhs(mass: &CsrMatrix, u_n: &[f64], u_prev: &[f64], load: &[f64], dt: f64) -> Vec<f64> {
    let combo: Vec<f64> = u_n.iter().zip(u_prev).map(|(a, b)| 4.0 * a - b).collect();
    let mut rhs = mass.mul_vec(&combo);
    for (r, f) in rhs.iter_mut().zip(load) {
        *r = *r / (2.0 * dt) + f;
    }
    rhs
}

fn extrapolate(u_n: &[f64], u_prev: &[f64]) -> Vec<f64> {
    u_n.iter().zip(u_prev).map(|(a, b)| 2.0 * a - b).collect()
}

/// Integrates `M u' + K u = F(t)` from `u0` over `time`.
///
/// Both system matrices are prepared once. `load(t, out)` fills the right-hand
/// side at time `t`; `observe(n, t, u)` is called for every level including 0.
pub fn integrate<L, O>(
    mass: &CsrMatrix,
    stiffness: &CsrMatrix,
    u0: Vec<f64>,
    time: TimeGrid,
    options: &SolverOptions,
    mut load: L,
    mut observe: O,
) -> Result<(Vec<f64>, Vec<usize>)>
where
    L: FnMut(f64, &mut [f64]) -> Result<()>,
    O: FnMut(usize, f64, &[f64]),
{
    let n = mass.dim();
    if u0.len() != n || stiffness.dim() != n {
        return Err(DdmError::config("system dimensions do not match the initial state"));
    }
    let dt = time.dt();
    let at_step = |step: usize| move |e: DdmError| DdmError::Step { step, source: Box::new(e) };
    let mut iterations = Vec::with_capacity(time.steps());
    let mut f = vec![0.0; n];
    observe(0, 0.0, &u0);

    let be = PreparedSolver::new(mass.linear_combination(1.0 / dt, stiffness, 1.0)?, *options)
        .map_err(at_step(1))?;
    load(time.time(1), &mut f).map_err(at_step(1))?;
    let (u1, stats) = be.solve(&be_rhs(mass, &u0, &f, dt), Some(&u0)).map_err(at_step(1))?;
    drop(be);
    iterations.push(stats.iterations);
    check_finite(&u1).map_err(at_step(1))?;
    observe(1, time.time(1), &u1);

    let bdf2 = PreparedSolver::new(mass.linear_combination(1.5 / dt, stiffness, 1.0)?, *options)
        .map_err(at_step(2))?;
    let (mut prev, mut cur) = (u0, u1);
    for step in 2..=time.steps() {
        let t = time.time(step);
        load(t, &mut f).map_err(at_step(step))?;
        let rhs = bdf2_rhs(mass, &cur, &prev, &f, dt);
        let guess = extrapolate(&cur, &prev);
        let (next, stats) = bdf2.solve(&rhs, Some(&guess)).map_err(at_step(step))?;
        check_finite(&next).map_err(at_step(step))?;
        iterations.push(stats.iterations);
        observe(step, t, &next);
        prev = std::mem::replace(&mut cur, next);
    }
    Ok((cur, iterations))
}

fn check_finite(u: &[f64]) -> Result<()> {
    if u.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(DdmError::Breakdown("non-finite value in the time-step solution".into()))
    }
}

/// Assembles the weighted system once and integrates it to the final time,
/// keeping the states at the levels nearest to `snapshot_times` and at `T`.
pub fn run_transient(
    system: &FemSystem,
    spec: &ProblemSpec,
    time: TimeGrid,
    options: &SolverOptions,
    snapshot_times: &[f64],
) -> Result<TransientSolution> {
    let mass = system.assemble_weighted_mass();
    let stiffness = system.assemble_weighted_stiffness(spec, 0.0);
    let u0 = initialize(system, spec)?;
    let mut wanted: Vec<usize> = snapshot_times.iter().map(|&t| time.nearest_step(t)).collect();
    wanted.push(time.steps());
    wanted.sort_unstable();
    wanted.dedup();
    let mut snapshots = Vec::with_capacity(wanted.len());
    let (_, iterations) = integrate(
        &mass,
        &stiffness,
        u0,
        time,
        options,
        |t, out| {
            system.assemble_load_into(spec, t, out);
            Ok(())
        },
        |n, t, u| {
            if wanted.binary_search(&n).is_ok() {
                snapshots.push(Snapshot { step: n, time: t, values: u.to_vec() });
            }
            log::debug!("step {n} t={t:.6}");
        },
    )?;
    Ok(TransientSolution { grid: *system.grid(), snapshots, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scalar(v: f64) -> CsrMatrix {
        CsrMatrix::from_triplets(1, &[(0, 0, v)]).unwrap()
    }

    fn direct() -> SolverOptions {
        SolverOptions::cholesky()
    }

    #[test]
    fn backward_euler_scalar() {
        let u = step_be(&scalar(1.0), &scalar(1.0), &[1.0], &[0.0], 0.1, &direct()).unwrap();
        assert_abs_diff_eq!(u[0], 1.0 / 1.1, epsilon = 1e-14);
    }

    #[test]
    fn backward_euler_pure_mass() {
        let u = step_be(&scalar(2.0), &scalar(0.0), &[1.0], &[4.0], 0.1, &direct()).unwrap();
        assert_abs_diff_eq!(u[0], 1.0 + 0.1 * 4.0 / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn bdf2_scalar() {
        let u1 = (-0.1f64).exp();
        let u = step_bdf2(&scalar(1.0), &scalar(1.0), &[u1], &[1.0], &[0.0], 0.1, &direct()).unwrap();
        assert_abs_diff_eq!(u[0], 0.8185468, epsilon = 1e-7);
    }

    #[test]
    fn bdf2_keeps_steady_constant() {
        let k = CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 1.0)])
            .unwrap();
        let m = CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 1, 0.0), (1, 0, 0.0), (1, 1, 1.0)])
            .unwrap();
        let u = step_bdf2(&m, &k, &[3.0, 3.0], &[3.0, 3.0], &[0.0; 2], 0.5, &direct()).unwrap();
        assert_abs_diff_eq!(u[0], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(u[1], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn stiff_decay_is_bounded() {
        let grid = TimeGrid::new(1.0, 50).unwrap();
        let mut last = f64::INFINITY;
        integrate(&scalar(1.0), &scalar(1e8), vec![1.0], grid, &direct(), |_, f| {
            f[0] = 1e8;
            Ok(())
        }, |n, _, u| {
            if n > 2 {
                assert!((u[0] - 1.0).abs() <= last + 1e-12);
                last = (u[0] - 1.0).abs();
            }
        })
        .unwrap();
    }

    fn ode_error(steps: usize) -> f64 {
        let grid = TimeGrid::new(1.0, steps).unwrap();
        let (u, _) = integrate(&scalar(1.0), &scalar(1.0), vec![1.0], grid, &direct(), |_, f| {
            f[0] = 0.0;
            Ok(())
        }, |_, _, _| {})
        .unwrap();
        (u[0] - (-1.0f64).exp()).abs()
    }

    #[test]
    fn temporal_order_is_two() {
        let (xs, ys): (Vec<f64>, Vec<f64>) = [32usize, 64, 128, 256, 512]
            .iter()
            .map(|&n| ((1.0 / n as f64).ln(), ode_error(n).ln()))
            .unzip();
        let slope = crate::norms::least_squares_slope(&xs, &ys);
        assert!((slope - 2.0).abs() <= 0.1, "slope {slope}");
    }

    #[test]
    fn unconditionally_stable() {
        let k = CsrMatrix::from_triplets(
            3,
            &[(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0), (1, 2, -1.0), (2, 1, -1.0), (2, 2, 2.0)],
        )
        .unwrap();
        let m = CsrMatrix::from_triplets(
            3,
            &[(0, 0, 1.0), (0, 1, 0.0), (1, 0, 0.0), (1, 1, 2.0), (1, 2, 0.0), (2, 1, 0.0), (2, 2, 1.0)],
        )
        .unwrap();
        let norm = |u: &[f64]| m.mul_vec(u).iter().zip(u).map(|(a, b)| a * b).sum::<f64>();
        for dt in [1e-3, 1.0, 1e3] {
            let grid = TimeGrid::new(100.0 * dt, 100).unwrap();
            let mut states: Vec<Vec<f64>> = Vec::new();
            integrate(&m, &k, vec![1.0, -2.0, 0.5], grid, &direct(), |_, f| {
                f.fill(0.0);
                Ok(())
            }, |_, _, u| states.push(u.to_vec()))
            .unwrap();
            assert_eq!(states.len(), 101);
            assert!(norm(&states[1]) <= norm(&states[0]));
            // BDF2 contracts |u^n|² + |2u^n − u^{n−1}|², not |u^n| itself
            let g_norm = |n: usize| {
                let lin: Vec<f64> = states[n].iter().zip(&states[n - 1]).map(|(a, b)| 2.0 * a - b).collect();
                norm(&states[n]) + norm(&lin)
            };
            for n in 2..=100 {
                assert!(g_norm(n) <= g_norm(n - 1) * (1.0 + 1e-12) + 1e-300, "dt={dt} n={n}");
                if dt <= 1.0 {
                    assert!(norm(&states[n]) <= norm(&states[n - 1]) * (1.0 + 1e-12), "dt={dt} n={n}");
                }
            }
        }
    }

    #[test]
    fn time_grid_validation() {
        assert!(TimeGrid::new(1.0, 1).is_err());
        assert!(TimeGrid::new(0.0, 4).is_err());
        let g = TimeGrid::new(0.5, 512).unwrap();
        assert_eq!(g.dt(), 1.0 / 1024.0);
        assert_eq!(g.time(512), 0.5);
        assert_eq!(g.nearest_step(0.25), 256);
    }

    #[test]
    fn step_errors_carry_index() {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let err = integrate(&scalar(1.0), &scalar(1.0), vec![1.0], grid, &direct(), |t, f| {
            if t > 0.6 {
                return Err(DdmError::Breakdown("boom".into()));
            }
            f[0] = 0.0;
            Ok(())
        }, |_, _, _| {})
        .unwrap_err();
        assert!(matches!(err, DdmError::Step { step: 3, .. }));
    }
}
