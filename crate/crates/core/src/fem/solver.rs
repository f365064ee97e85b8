//! Solvers for the symmetric positive definite systems of each time step.
//!
//! Two backends share one interface: Jacobi-preconditioned conjugate
//! gradients, and a sparse Cholesky factorization (faer) that is computed once
//! and reused for every right-hand side.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMat, Triplet};
use faer::Side;
use serde::{Deserialize, Serialize};

use super::CsrMatrix;
use crate::{DdmError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearSolver {
    Cg,
    Cholesky,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preconditioner {
    None,
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub solver: LinearSolver,
    pub preconditioner: Preconditioner,
    /// Relative residual target `‖b - Ax‖ / ‖b‖`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            solver: LinearSolver::Cg,
            preconditioner: Preconditioner::Jacobi,
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

impl SolverOptions {
    pub fn cg(tol: f64, max_iter: usize) -> Self {
        SolverOptions {
            tol,
            max_iter,
            ..Self::default()
        }
    }

    pub fn cholesky() -> Self {
        SolverOptions {
            solver: LinearSolver::Cholesky,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
    /// Extreme Ritz values of the (preconditioned) operator from the CG
    /// Lanczos coefficients. `None` for direct solves.
    pub min_ritz: Option<f64>,
    pub max_ritz: Option<f64>,
}

/// CG solve from a zero initial guess.
pub fn solve_spd(
    a: &CsrMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
    preconditioner: Preconditioner,
) -> Result<(Vec<f64>, SolveStats)> {
    solve_spd_with_guess(a, b, None, tol, max_iter, preconditioner)
}

pub fn solve_spd_with_guess(
    a: &CsrMatrix,
    b: &[f64],
    guess: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
    preconditioner: Preconditioner,
) -> Result<(Vec<f64>, SolveStats)> {
    let inv_diag = match preconditioner {
        Preconditioner::None => None,
        Preconditioner::Jacobi => Some(inverse_diagonal(a)?),
    };
    conjugate_gradient(a, b, guess, tol, max_iter, inv_diag.as_deref())
}

fn inverse_diagonal(a: &CsrMatrix) -> Result<Vec<f64>> {
    a.diagonal()
        .into_iter()
        .enumerate()
        .map(|(i, d)| {
            if d > 0.0 && d.is_finite() {
                Ok(1.0 / d)
            } else {
                Err(DdmError::Breakdown(format!(
                    "non-positive diagonal entry {d} in row {i}"
                )))
            }
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn residual(a: &CsrMatrix, x: &[f64], b: &[f64], out: &mut [f64]) {
    a.matvec(x, out);
    for (r, bi) in out.iter_mut().zip(b) {
        *r = bi - *r;
    }
}

fn conjugate_gradient(
    a: &CsrMatrix,
    b: &[f64],
    guess: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
    inv_diag: Option<&[f64]>,
) -> Result<(Vec<f64>, SolveStats)> {
    let n = a.dim();
    if b.len() != n {
        return Err(DdmError::config(format!(
            "right-hand side has length {}, matrix has dimension {n}",
            b.len()
        )));
    }
    let b_norm = norm(b);
    if !b_norm.is_finite() {
        return Err(DdmError::Breakdown("non-finite right-hand side".into()));
    }
    if b_norm == 0.0 {
        return Ok((vec![0.0; n], SolveStats::default()));
    }
    let mut x = guess.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let precondition = |r: &[f64], z: &mut [f64]| match inv_diag {
        Some(d) => z.iter_mut().zip(r.iter().zip(d)).for_each(|(z, (r, d))| *z = r * d),
        None => z.copy_from_slice(r),
    };

    let mut iterations = 0;
    let mut lanczos_diag = Vec::new();
    let mut lanczos_off = Vec::new();
    // Outer loop restarts from the true residual if the recursive one drifted.
    loop {
        residual(a, &x, b, &mut r);
        let mut res = norm(&r) / b_norm;
        if res <= tol {
            let (min_ritz, max_ritz) = ritz_extremes(&lanczos_diag, &lanczos_off);
            return Ok((
                x,
                SolveStats {
                    iterations,
                    relative_residual: res,
                    min_ritz,
                    max_ritz,
                },
            ));
        }
        if iterations >= max_iter {
            return Err(DdmError::SolverFailure {
                iterations,
                residual: res,
            });
        }
        precondition(&r, &mut z);
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);
        let mut prev: Option<(f64, f64)> = None; // (alpha, beta) of the previous iteration
        while iterations < max_iter {
            a.matvec(&p, &mut ap);
            let curvature = dot(&p, &ap);
            if !curvature.is_finite() {
                return Err(DdmError::Breakdown(format!(
                    "non-finite curvature at CG iteration {iterations}"
                )));
            }
            if curvature <= 0.0 {
                return Err(DdmError::Breakdown(format!(
                    "non-positive curvature {curvature:e} at CG iteration {iterations}; matrix is not SPD"
                )));
            }
            let alpha = rz / curvature;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            iterations += 1;
            res = norm(&r) / b_norm;
            if !res.is_finite() {
                return Err(DdmError::Breakdown(format!(
                    "non-finite residual at CG iteration {iterations}"
                )));
            }
            let diag = match prev {
                Some((pa, pb)) => 1.0 / alpha + pb / pa,
                None => 1.0 / alpha,
            };
            lanczos_diag.push(diag);
            if res <= tol {
                break;
            }
            precondition(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            lanczos_off.push(beta.sqrt() / alpha);
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
            prev = Some((alpha, beta));
        }
        // a restart invalidates the Lanczos recurrence
        lanczos_off.truncate(lanczos_diag.len().saturating_sub(1));
        if res > tol && iterations >= max_iter {
            return Err(DdmError::SolverFailure {
                iterations,
                residual: res,
            });
        }
    }
}

/// Extreme eigenvalues of the symmetric tridiagonal Lanczos matrix, by bisection.
fn ritz_extremes(diag: &[f64], off: &[f64]) -> (Option<f64>, Option<f64>) {
    let k = diag.len();
    if k == 0 {
        return (None, None);
    }
    let off = &off[..off.len().min(k - 1)];
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..k {
        let left = if i > 0 && i - 1 < off.len() { off[i - 1].abs() } else { 0.0 };
        let right = if i < off.len() { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - left - right);
        hi = hi.max(diag[i] + left + right);
    }
    // number of eigenvalues below x (Sturm sequence)
    let count_below = |x: f64| {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..k {
            let b2 = if i > 0 && i - 1 < off.len() { off[i - 1] * off[i - 1] } else { 0.0 };
            q = diag[i] - x - if i > 0 { b2 / q } else { 0.0 };
            if q == 0.0 {
                q = f64::MIN_POSITIVE;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    let bisect = |target: usize| {
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if count_below(m) > target {
                b = m;
            } else {
                a = m;
            }
            if b - a <= 1e-14 * (a.abs() + b.abs()) {
                break;
            }
        }
        0.5 * (a + b)
    };
    (Some(bisect(0)), Some(bisect(k - 1)))
}

/// A system matrix prepared for repeated solves with different right-hand sides.
pub struct PreparedSolver {
    matrix: CsrMatrix,
    options: SolverOptions,
    backend: Backend,
}

enum Backend {
    Cg { inv_diag: Option<Vec<f64>> },
    Cholesky { llt: Llt<usize, f64> },
}

impl PreparedSolver {
    pub fn new(matrix: CsrMatrix, options: SolverOptions) -> Result<Self> {
        let backend = match options.solver {
            LinearSolver::Cg => Backend::Cg {
                inv_diag: match options.preconditioner {
                    Preconditioner::None => None,
                    Preconditioner::Jacobi => Some(inverse_diagonal(&matrix)?),
                },
            },
            LinearSolver::Cholesky => Backend::Cholesky {
                llt: factorize(&matrix)?,
            },
        };
        Ok(PreparedSolver {
            matrix,
            options,
            backend,
        })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn solve(&self, b: &[f64], guess: Option<&[f64]>) -> Result<(Vec<f64>, SolveStats)> {
        match &self.backend {
            Backend::Cg { inv_diag } => conjugate_gradient(
                &self.matrix,
                b,
                guess,
                self.options.tol,
                self.options.max_iter,
                inv_diag.as_deref(),
            ),
            Backend::Cholesky { llt } => {
                let n = self.matrix.dim();
                if b.len() != n {
                    return Err(DdmError::config(format!(
                        "right-hand side has length {}, matrix has dimension {n}",
                        b.len()
                    )));
                }
                let mut rhs = faer::Mat::from_fn(n, 1, |i, _| b[i]);
                llt.solve_in_place(rhs.as_mut());
                let x: Vec<f64> = (0..n).map(|i| rhs[(i, 0)]).collect();
                let mut r = vec![0.0; n];
                residual(&self.matrix, &x, b, &mut r);
                let b_norm = norm(b);
                let res = if b_norm > 0.0 { norm(&r) / b_norm } else { norm(&r) };
                if !res.is_finite() {
                    return Err(DdmError::Breakdown("non-finite Cholesky solution".into()));
                }
                Ok((
                    x,
                    SolveStats {
                        iterations: 1,
                        relative_residual: res,
                        min_ritz: None,
                        max_ritz: None,
                    },
                ))
            }
        }
    }
}

fn factorize(m: &CsrMatrix) -> Result<Llt<usize, f64>> {
    let n = m.dim();
    let mut triplets = Vec::with_capacity(m.nnz());
    for r in 0..n {
        for k in m.row_ptr()[r]..m.row_ptr()[r + 1] {
            triplets.push(Triplet::new(r, m.col_idx()[k], m.values()[k]));
        }
    }
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| DdmError::Breakdown(format!("sparse matrix conversion failed: {e:?}")))?;
    mat.sp_cholesky(Side::Lower)
        .map_err(|e| DdmError::Breakdown(format!("Cholesky factorization failed: {e:?}")))
}
