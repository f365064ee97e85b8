//! Brute-force reference computations: Monte-Carlo integrals, finite-difference
//! gradient checks and a dense transient solve.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::fem::{AssemblyOptions, CsrMatrix, FemSystem, QuadratureRule, SolverOptions, StructuredGrid};
use crate::geometry::{make_circle, PhaseField, Point, Rect, Vector};
use crate::time::{integrate, TimeGrid};
use crate::{DdmError, Result};

const MIN_SAMPLES: usize = 10_000;
const MC_SHARDS: u64 = 64;
const DENSE_LIMIT: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Plain Monte-Carlo estimate of `∫_region h`, optionally weighted by `ω_ε`.
///
/// Samples are split into a fixed number of shards with their own ChaCha
/// streams, so the estimate depends only on `seed`.
pub fn mc_weighted_integral<F>(
    integrand: F,
    region: &Rect,
    pf: Option<&PhaseField>,
    samples: usize,
    seed: u64,
) -> Result<McEstimate>
where
    F: Fn(&Point) -> f64 + Sync,
{
    if samples < MIN_SAMPLES {
        return Err(DdmError::config(format!("need at least {MIN_SAMPLES} samples, got {samples}")));
    }
    let per_shard = samples as u64 / MC_SHARDS;
    let extra = samples as u64 % MC_SHARDS;
    let sums: Vec<Result<(f64, f64)>> = (0..MC_SHARDS)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard);
            let count = per_shard + u64::from(shard < extra);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let x = Point::new(
                    rng.gen_range(region.min.x..region.max.x),
                    rng.gen_range(region.min.y..region.max.y),
                );
                let mut v = integrand(&x);
                if let Some(pf) = pf {
                    v *= pf.weight(&x);
                }
                if !v.is_finite() {
                    return Err(DdmError::NonFiniteSample { x: x.x, y: x.y });
                }
                s += v;
                s2 += v * v;
            }
            Ok((s, s2))
        })
        .collect();
    let (mut s, mut s2) = (0.0, 0.0);
    for r in sums {
        let (a, b) = r?;
        s += a;
        s2 += b;
    }
    let n = samples as f64;
    let mean = s / n;
    let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
    let area = region.area();
    Ok(McEstimate {
        value: mean * area,
        standard_error: area * (var / n).sqrt(),
        samples,
        seed,
    })
}

/// Largest relative deviation between `gradient` and central differences of
/// `field` with step `step`, over `points`. Relative errors are taken against
/// `max(|∇f|, 1)`.
pub fn fd_gradient_check<F, G>(field: F, gradient: G, points: &[Point], step: f64) -> f64
where
    F: Fn(&Point) -> f64,
    G: Fn(&Point) -> Vector,
{
    points
        .iter()
        .map(|x| {
            let ex = Vector::new(step, 0.0);
            let ey = Vector::new(0.0, step);
            let fd = Vector::new(
                (field(&(x + ex)) - field(&(x - ex))) / (2.0 * step),
                (field(&(x + ey)) - field(&(x - ey))) / (2.0 * step),
            );
            let g = gradient(x);
            (fd - g).norm() / g.norm().max(1.0)
        })
        .fold(0.0, f64::max)
}

/// Backward Euler followed by BDF2 for `M u' + K u = F(t)` with dense
/// Cholesky factorizations.
pub fn dense_reference_solve<L>(
    mass: &CsrMatrix,
    stiffness: &CsrMatrix,
    mut load: L,
    time: TimeGrid,
    u0: &[f64],
) -> Result<Vec<f64>>
where
    L: FnMut(f64) -> Vec<f64>,
{
    let n = mass.dim();
    if n > DENSE_LIMIT {
        return Err(DdmError::config(format!(
            "dense reference solve is limited to {DENSE_LIMIT} unknowns, got {n}"
        )));
    }
    let m = mass.to_dense();
    let k = stiffness.to_dense();
    let dt = time.dt();
    let factor = |a: DMatrix<f64>| {
        a.cholesky()
            .ok_or_else(|| DdmError::Breakdown("dense system is not positive definite".into()))
    };
    let be = factor(&m / dt + &k)?;
    let bdf2 = factor(&m * (1.5 / dt) + &k)?;
    let mut prev = DVector::from_column_slice(u0);
    let rhs = &m * &prev / dt + DVector::from_vec(load(time.time(1)));
    let mut cur = be.solve(&rhs);
    for step in 2..=time.steps() {
        let rhs = &m * (&cur * 4.0 - &prev) / (2.0 * dt) + DVector::from_vec(load(time.time(step)));
        let next = bdf2.solve(&rhs);
        prev = std::mem::replace(&mut cur, next);
    }
    Ok(cur.as_slice().to_vec())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn within(name: &str, measured: f64, tolerance: f64) -> Self {
        CheckResult {
            name: name.into(),
            measured,
            tolerance,
            passed: measured.is_finite() && measured <= tolerance,
        }
    }
}

/// Self-checks of the discretization against the oracles above.
pub fn verify_suite(samples: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let domain = Arc::new(make_circle(Point::origin(), 0.25)?);
    let omega = Rect::new(-0.5, 0.5, -0.5, 0.5);
    let pf = PhaseField::new(domain.clone(), 1.0 / 32.0, 1e-8)?;

    let area = mc_weighted_integral(|_| 1.0, &omega, Some(&pf), samples, seed)?;
    out.push(CheckResult::within(
        "mc_volume_vs_disk_area_in_se",
        (area.value - PI / 16.0).abs() / area.standard_error.max(f64::MIN_POSITIVE),
        3.0,
    ));
    let perimeter = mc_weighted_integral(
        |x| pf.gradient(x).1,
        &omega,
        None,
        samples,
        seed.wrapping_add(1),
    )?;
    out.push(CheckResult::within(
        "mc_perimeter_vs_circumference_in_se",
        (perimeter.value - PI / 2.0).abs() / perimeter.standard_error.max(f64::MIN_POSITIVE),
        3.0,
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let band: Vec<Point> = (0..1000)
        .map(|_| {
            let theta = rng.gen_range(0.0..2.0 * PI);
            let r = 0.25 + rng.gen_range(-1.5..1.5) * pf.epsilon();
            Point::new(r * theta.cos(), r * theta.sin())
        })
        .filter(|p| p.coords.norm() > 1e-3)
        .collect();
    let fd = fd_gradient_check(|x| pf.weight(x), |x| pf.gradient(x).0, &band, 1e-7);
    out.push(CheckResult::within("fd_phase_gradient_rel", fd, 1e-5));

    let grid = StructuredGrid::unit_square(8)?;
    let system = FemSystem::new(
        grid,
        pf.clone(),
        QuadratureRule::tensor(4),
        AssemblyOptions::default(),
    )?;
    let spec = crate::extension::example1();
    let mass = system.assemble_weighted_mass();
    let stiffness = system.assemble_weighted_stiffness(&spec, 0.0);
    let u0 = system.initial_values(&spec)?;
    let time = TimeGrid::new(0.5, 16)?;
    let reference = dense_reference_solve(&mass, &stiffness, |t| system.assemble_load(&spec, t), time, &u0)?;
    let options = SolverOptions::cg(1e-13, 10_000);
    let (sparse, _) = integrate(&mass, &stiffness, u0, time, &options, |t, f| {
        system.assemble_load_into(&spec, t, f);
        Ok(())
    }, |_, _, _| {})?;
    out.push(CheckResult::within("sparse_vs_dense_transient_rel", relative_difference(&sparse, &reference), 1e-8));

    let ode = |steps: usize| -> Result<f64> {
        let one = CsrMatrix::identity(1);
        let u = dense_reference_solve(&one, &one, |_| vec![0.0], TimeGrid::new(1.0, steps)?, &[1.0])?;
        Ok((u[0] - (-1.0f64).exp()).abs())
    };
    let order = (ode(256)? / ode(512)?).log2();
    out.push(CheckResult::within("bdf2_temporal_order_deviation", (order - 2.0).abs(), 0.1));
    Ok(out)
}

/// `‖a − b‖ / ‖b‖` in the Euclidean norm.
pub fn relative_difference(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_integrand() {
        let unit = Rect::new(0.0, 1.0, 0.0, 1.0);
        let e = mc_weighted_integral(|_| 1.0, &unit, None, MIN_SAMPLES, 3).unwrap();
        assert_eq!(e.value, 1.0);
        assert!(e.standard_error < 1e-12);
    }

    #[test]
    fn reproducible_per_seed() {
        let unit = Rect::new(0.0, 1.0, 0.0, 1.0);
        let f = |x: &Point| x.x * x.y.sin();
        let a = mc_weighted_integral(f, &unit, None, 20_000, 11).unwrap();
        let b = mc_weighted_integral(f, &unit, None, 20_000, 11).unwrap();
        let c = mc_weighted_integral(f, &unit, None, 20_000, 12).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_ne!(a.value, c.value);
    }

    #[test]
    fn rejects_small_sample_counts_and_nan() {
        let unit = Rect::new(0.0, 1.0, 0.0, 1.0);
        assert!(mc_weighted_integral(|_| 1.0, &unit, None, 100, 0).is_err());
        let err = mc_weighted_integral(|_| f64::NAN, &unit, None, MIN_SAMPLES, 0).unwrap_err();
        assert!(matches!(err, DdmError::NonFiniteSample { .. }));
    }

    #[test]
    fn fd_check_on_linear_and_kink() {
        let pts = [Point::new(0.1, 0.2), Point::new(-0.3, 0.4)];
        let lin = fd_gradient_check(|x| 2.0 * x.x - 3.0 * x.y, |_| Vector::new(2.0, -3.0), &pts, 1e-6);
        assert!(lin <= 1e-10 * 1e3, "{lin}");
        let kink = fd_gradient_check(|x| x.x.abs(), |_| Vector::new(1.0, 0.0), &[Point::origin()], 1e-3);
        assert!(kink >= 0.5);
    }

    #[test]
    fn dense_scalar_recursion_and_zero() {
        let one = CsrMatrix::identity(1);
        let time = TimeGrid::new(0.2, 2).unwrap();
        let u = dense_reference_solve(&one, &one, |_| vec![0.0], time, &[1.0]).unwrap();
        let u1 = 1.0 / 1.1;
        assert!((u[0] - (4.0 * u1 - 1.0) / 3.2).abs() < 1e-14);
        let zero = dense_reference_solve(&one, &one, |_| vec![0.0], time, &[0.0]).unwrap();
        assert_eq!(zero[0], 0.0);
    }

    #[test]
    fn dense_guard() {
        let big = CsrMatrix::identity(DENSE_LIMIT + 1);
        let time = TimeGrid::new(1.0, 2).unwrap();
        let u0 = vec![0.0; DENSE_LIMIT + 1];
        let err = dense_reference_solve(&big, &big, |_| u0.clone(), time, &u0).unwrap_err();
        assert!(matches!(err, DdmError::Config(_)));
    }
}
