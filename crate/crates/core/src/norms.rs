//! Weighted error norms on the original domain and convergence rates.
//!
//! Integrals run over the quadrature points of the assembly rule that fall
//! inside `D` (`d < 0`), weighted with the unfloored `ω_ε`.

use rayon::prelude::*;

use crate::extension::ExactSolution;
use crate::fem::{CellClass, FemSystem};
use crate::{DdmError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub epsilon: f64,
    pub l2_error: f64,
    pub h1_error: f64,
    /// Quadrature points inside `D` that entered the sums.
    pub quadrature_points: usize,
    pub runtime_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    pub reports: Vec<ErrorReport>,
}

impl SweepResult {
    pub fn push(&mut self, report: ErrorReport) {
        self.reports.push(report);
    }

    pub fn l2_rates(&self) -> Vec<Option<f64>> {
        convergence_rates(&self.reports.iter().map(|r| r.l2_error).collect::<Vec<_>>())
    }

    pub fn h1_rates(&self) -> Vec<Option<f64>> {
        convergence_rates(&self.reports.iter().map(|r| r.h1_error).collect::<Vec<_>>())
    }
}

/// Squared weighted errors `(∫ ω e², ∫ ω |∇e|²)` over `D` and the number of
/// contributing quadrature points.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ErrorIntegrals {
    pub l2_squared: f64,
    pub gradient_squared: f64,
    pub points: usize,
}

impl ErrorIntegrals {
    pub fn l2(&self) -> f64 {
        self.l2_squared.sqrt()
    }

    pub fn h1(&self) -> f64 {
        (self.l2_squared + self.gradient_squared).sqrt()
    }
}

/// Computes both error integrals of the bilinear field `u_h` against `exact` at time `t`.
pub fn error_integrals(
    system: &FemSystem,
    u_h: &[f64],
    exact: &ExactSolution,
    t: f64,
) -> Result<ErrorIntegrals> {
    let grid = *system.grid();
    if u_h.len() != grid.node_count() {
        return Err(DdmError::config(format!(
            "expected {} nodal values, got {}",
            grid.node_count(),
            u_h.len()
        )));
    }
    let pf = system.phase_field();
    let rule = system.rule();
    let basis = system.basis();
    let area = grid.cell_area();
    let (hx, hy) = (grid.hx(), grid.hy());
    let per_cell: Vec<ErrorIntegrals> = system.install(|| {
        (0..grid.cell_count())
            .into_par_iter()
            .map(|c| {
                let mut acc = ErrorIntegrals::default();
                let class = system.class_of(c);
                if class == CellClass::Exterior {
                    return acc;
                }
                let (ci, cj) = (c % grid.nx(), c / grid.nx());
                let nodes = grid.cell_nodes(ci, cj);
                let local = nodes.map(|k| u_h[k]);
                let origin = grid.cell_origin(ci, cj);
                for q in 0..rule.len() {
                    let omega = match system.qp_distance(c, q) {
                        Some(d) if d < 0.0 => pf.weight_at_distance(d),
                        Some(_) => continue,
                        None => 1.0,
                    };
                    let x = system.qp_point(&origin, q);
                    let mut uh = 0.0;
                    let (mut gx, mut gy) = (0.0, 0.0);
                    for (a, u) in local.iter().enumerate() {
                        uh += u * basis.values[q][a];
                        gx += u * basis.d_xi[q][a] / hx;
                        gy += u * basis.d_eta[q][a] / hy;
                    }
                    let e = uh - (exact.value)(t, &x);
                    let g = (exact.gradient)(t, &x);
                    let s = rule.weights()[q] * area * omega;
                    acc.l2_squared += s * e * e;
                    acc.gradient_squared += s * ((gx - g.x).powi(2) + (gy - g.y).powi(2));
                    acc.points += 1;
                }
                acc
            })
            .collect()
    });
    Ok(per_cell.iter().fold(ErrorIntegrals::default(), |mut a, c| {
        a.l2_squared += c.l2_squared;
        a.gradient_squared += c.gradient_squared;
        a.points += c.points;
        a
    }))
}

pub fn weighted_l2_error(
    system: &FemSystem,
    u_h: &[f64],
    exact: Option<&ExactSolution>,
    t: f64,
) -> Result<f64> {
    let exact = exact.ok_or_else(|| DdmError::config("weighted error requires an exact solution"))?;
    Ok(error_integrals(system, u_h, exact, t)?.l2())
}

pub fn weighted_h1_error(
    system: &FemSystem,
    u_h: &[f64],
    exact: Option<&ExactSolution>,
    t: f64,
) -> Result<f64> {
    let exact = exact.ok_or_else(|| DdmError::config("weighted error requires an exact solution"))?;
    Ok(error_integrals(system, u_h, exact, t)?.h1())
}

/// `log₂(e_k / e_{k+1})` for consecutive entries; `None` where undefined.
pub fn convergence_rates(errors: &[f64]) -> Vec<Option<f64>> {
    errors
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            (a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()).then(|| (a / b).log2())
        })
        .collect()
}

/// Least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
