//! Weighted Q1 assembly: `M_ij = ∫ w φ_i φ_j`, `K_ij = ∫ A w ∇φ_i·∇φ_j` and the
//! load `F_i = ∫ (f̃ w + g̃ |∇ω|) φ_i`, with `w = max(ω_ε, δ)`.
//!
//! Cells whose whole extent lies where `w` is exactly `1` or exactly `δ` in
//! floating point skip per-point phase-field evaluation; the remaining band
//! cells cache distance, weight, slope and foot point at every quadrature point.

use std::sync::Arc;

use rayon::prelude::*;

use super::{CsrMatrix, QuadratureRule, ReferenceBasis, StructuredGrid};
use crate::extension::{neumann_extension, ExtensionMode, FieldId, ProblemSpec};
use crate::geometry::{BandLabel, BoundarySample, PhaseField, Point, Vector};
use crate::{DdmError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssemblyOptions {
    /// Worker threads; `0` uses the global rayon pool.
    pub workers: usize,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions { workers: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellClass {
    /// Assembly weight is exactly 1 on the whole cell.
    Interior,
    /// Assembly weight is exactly `δ` on the whole cell.
    Exterior,
    Band,
}

#[derive(Debug, Clone, Copy)]
struct QpGeometry {
    distance: f64,
    weight: f64,
    slope: f64,
    foot: BoundarySample,
}

/// Discretization of one phase field on one grid: cell classification,
/// cached band geometry and the assembly routines.
pub struct FemSystem {
    grid: StructuredGrid,
    pf: PhaseField,
    rule: QuadratureRule,
    basis: ReferenceBasis,
    classes: Vec<CellClass>,
    band_offset: Vec<u32>,
    band_geometry: Vec<QpGeometry>,
    pool: Option<Arc<rayon::ThreadPool>>,
}

const NOT_BAND: u32 = u32::MAX;

impl FemSystem {
    pub fn new(
        grid: StructuredGrid,
        pf: PhaseField,
        rule: QuadratureRule,
        options: AssemblyOptions,
    ) -> Result<Self> {
        let pool = if options.workers == 0 {
            None
        } else {
            Some(Arc::new(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(options.workers)
                    .build()
                    .map_err(|e| DdmError::config(format!("cannot build worker pool: {e}")))?,
            ))
        };
        let basis = ReferenceBasis::new(&rule);
        let mut sys = FemSystem {
            grid,
            pf,
            rule,
            basis,
            classes: Vec::new(),
            band_offset: Vec::new(),
            band_geometry: Vec::new(),
            pool,
        };
        sys.classify_cells();
        Ok(sys)
    }

    pub(crate) fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        match &self.pool {
            Some(pool) => pool.install(f),
            None => f(),
        }
    }

    fn classify_cells(&mut self) {
        let grid = self.grid;
        let pf = &self.pf;
        let hd = grid.half_diagonal();
        let d_int = pf.interior_saturation_distance();
        let d_ext = pf.exterior_saturation_distance();
        let classes: Vec<CellClass> = self.install(|| {
            (0..grid.cell_count())
                .into_par_iter()
                .map(|c| {
                    let (ci, cj) = (c % grid.nx(), c / grid.nx());
                    let d = pf.domain().signed_distance(&grid.cell_center(ci, cj));
                    if d + hd < d_int {
                        CellClass::Interior
                    } else if d - hd > d_ext {
                        CellClass::Exterior
                    } else {
                        CellClass::Band
                    }
                })
                .collect()
        });
        let nq = self.rule.len();
        let mut band_offset = vec![NOT_BAND; classes.len()];
        let mut band_cells = Vec::new();
        for (c, class) in classes.iter().enumerate() {
            if *class == CellClass::Band {
                band_offset[c] = (band_cells.len() * nq) as u32;
                band_cells.push(c);
            }
        }
        let rule = &self.rule;
        let geometry: Vec<QpGeometry> = self.install(|| {
            band_cells
                .par_iter()
                .flat_map_iter(|&c| {
                    let (ci, cj) = (c % grid.nx(), c / grid.nx());
                    let origin = grid.cell_origin(ci, cj);
                    rule.points().iter().map(move |&(xi, eta)| {
                        let x = origin + Vector::new(xi * grid.hx(), eta * grid.hy());
                        let proj = pf.domain().project(&x);
                        QpGeometry {
                            distance: proj.distance,
                            weight: pf.assembly_weight_at_distance(proj.distance),
                            slope: pf.gradient_magnitude_at_distance(proj.distance),
                            foot: proj.sample(),
                        }
                    })
                })
                .collect()
        });
        self.classes = classes;
        self.band_offset = band_offset;
        self.band_geometry = geometry;
    }

    pub fn grid(&self) -> &StructuredGrid {
        &self.grid
    }

    pub fn phase_field(&self) -> &PhaseField {
        &self.pf
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn cell_class(&self, ci: usize, cj: usize) -> CellClass {
        self.classes[cj * self.grid.nx() + ci]
    }

    /// Number of cells in each class: `(interior, exterior, band)`.
    pub fn class_counts(&self) -> (usize, usize, usize) {
        let mut counts = (0, 0, 0);
        for c in &self.classes {
            match c {
                CellClass::Interior => counts.0 += 1,
                CellClass::Exterior => counts.1 += 1,
                CellClass::Band => counts.2 += 1,
            }
        }
        counts
    }

    pub(crate) fn basis(&self) -> &ReferenceBasis {
        &self.basis
    }

    pub(crate) fn class_of(&self, cell: usize) -> CellClass {
        self.classes[cell]
    }

    /// Cached signed distance at quadrature point `q` of a band cell.
    pub(crate) fn qp_distance(&self, cell: usize, q: usize) -> Option<f64> {
        self.qp_geometry(cell, q).map(|g| g.distance)
    }

    #[inline]
    pub(crate) fn qp_point(&self, origin: &Point, q: usize) -> Point {
        let (xi, eta) = self.rule.points()[q];
        origin + Vector::new(xi * self.grid.hx(), eta * self.grid.hy())
    }

    /// Evaluation point of interior data under its extension mode.
    fn data_point(&self, mode: ExtensionMode, x: &Point, geo: Option<&QpGeometry>) -> Point {
        match mode {
            ExtensionMode::ClosestPointConstant => {
                let (d, foot) = match geo {
                    Some(g) => (g.distance, g.foot.point),
                    None => {
                        let p = self.pf.domain().project(x);
                        (p.distance, p.point)
                    }
                };
                if d < 0.0 {
                    *x
                } else {
                    foot
                }
            }
            _ => *x,
        }
    }

    fn constant_weight(&self, class: CellClass) -> f64 {
        match class {
            CellClass::Interior => 1.0,
            _ => self.pf.floor(),
        }
    }

    /// Element matrices of every cell, in cell order.
    fn element_matrices<F>(&self, kernel: F) -> Vec<[f64; 16]>
    where
        F: Fn(usize, &Point, usize, f64) -> [f64; 16] + Sync,
    {
        let grid = self.grid;
        self.install(|| {
            (0..grid.cell_count())
                .into_par_iter()
                .map(|c| {
                    let (ci, cj) = (c % grid.nx(), c / grid.nx());
                    let origin = grid.cell_origin(ci, cj);
                    let class = self.classes[c];
                    let mut elem = [0.0; 16];
                    for q in 0..self.rule.len() {
                        let w = match class {
                            CellClass::Band => {
                                self.band_geometry[self.band_offset[c] as usize + q].weight
                            }
                            _ => self.constant_weight(class),
                        };
                        if w == 0.0 {
                            continue;
                        }
                        let contrib = kernel(c, &origin, q, w);
                        for (e, v) in elem.iter_mut().zip(contrib) {
                            *e += v;
                        }
                    }
                    elem
                })
                .collect()
        })
    }

    fn scatter(&self, elements: &[[f64; 16]]) -> CsrMatrix {
        let mut m = CsrMatrix::grid_pattern(&self.grid);
        for (c, elem) in elements.iter().enumerate() {
            let nodes = self.grid.cell_nodes(c % self.grid.nx(), c / self.grid.nx());
            for a in 0..4 {
                for b in 0..4 {
                    let pos = m
                        .position(nodes[a], nodes[b])
                        .expect("Q1 coupling lies in the 9-point pattern");
                    m.add_at(pos, elem[4 * a + b]);
                }
            }
        }
        m
    }

    pub fn assemble_weighted_mass(&self) -> CsrMatrix {
        let area = self.grid.cell_area();
        let weights = self.rule.weights();
        let phi = &self.basis.values;
        let elems = self.element_matrices(|_, _, q, w| {
            let s = weights[q] * area * w;
            let mut e = [0.0; 16];
            for a in 0..4 {
                for b in 0..4 {
                    e[4 * a + b] = s * (phi[q][a] * phi[q][b]);
                }
            }
            e
        });
        self.scatter(&elems)
    }

    /// `A` is taken as time independent; `t` is accepted for interface stability.
    pub fn assemble_weighted_stiffness(&self, spec: &ProblemSpec, _t: f64) -> CsrMatrix {
        let area = self.grid.cell_area();
        let (hx, hy) = (self.grid.hx(), self.grid.hy());
        let weights = self.rule.weights();
        let basis = &self.basis;
        let mode = spec.modes.diffusion;
        let elems = self.element_matrices(|c, origin, q, w| {
            let x = self.qp_point(origin, q);
            let geo = self.qp_geometry(c, q);
            let a_val = (spec.diffusion)(&self.data_point(mode, &x, geo));
            let s = weights[q] * area * w * a_val;
            let mut e = [0.0; 16];
            for a in 0..4 {
                let (ga_x, ga_y) = (basis.d_xi[q][a] / hx, basis.d_eta[q][a] / hy);
                for b in 0..4 {
                    let (gb_x, gb_y) = (basis.d_xi[q][b] / hx, basis.d_eta[q][b] / hy);
                    e[4 * a + b] = s * (ga_x * gb_x + ga_y * gb_y);
                }
            }
            e
        });
        self.scatter(&elems)
    }

    #[inline]
    fn qp_geometry(&self, c: usize, q: usize) -> Option<&QpGeometry> {
        let off = self.band_offset[c];
        (off != NOT_BAND).then(|| &self.band_geometry[off as usize + q])
    }

    /// Load vector at time `t`.
    pub fn assemble_load(&self, spec: &ProblemSpec, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.node_count()];
        self.assemble_load_into(spec, t, &mut out);
        out
    }

    pub fn assemble_load_into(&self, spec: &ProblemSpec, t: f64, out: &mut [f64]) {
        let grid = self.grid;
        let area = grid.cell_area();
        let weights = self.rule.weights();
        let phi = &self.basis.values;
        let nq = self.rule.len();
        let floor = self.pf.floor();
        let mode = spec.modes.source;
        let cell_loads: Vec<[f64; 4]> = self.install(|| {
            (0..grid.cell_count())
                .into_par_iter()
                .map(|c| {
                    let (ci, cj) = (c % grid.nx(), c / grid.nx());
                    let class = self.classes[c];
                    let mut acc = [0.0; 4];
                    if class == CellClass::Exterior && floor == 0.0 {
                        return acc;
                    }
                    let origin = grid.cell_origin(ci, cj);
                    for q in 0..nq {
                        let x = self.qp_point(&origin, q);
                        let geo = self.qp_geometry(c, q);
                        let f = (spec.source)(t, &self.data_point(mode, &x, geo));
                        let value = match geo {
                            Some(g) => {
                                let mut v = f * g.weight;
                                if g.slope > 0.0 {
                                    let in_band = self.pf.classify_distance(g.distance)
                                        == BandLabel::Band;
                                    v += neumann_extension(spec, in_band, t, &x, &g.foot) * g.slope;
                                }
                                v
                            }
                            None => f * self.constant_weight(class),
                        };
                        let s = weights[q] * value;
                        for a in 0..4 {
                            acc[a] += s * phi[q][a];
                        }
                    }
                    acc.map(|v| v * area)
                })
                .collect()
        });
        out.iter_mut().for_each(|v| *v = 0.0);
        for (c, acc) in cell_loads.iter().enumerate() {
            let nodes = grid.cell_nodes(c % grid.nx(), c / grid.nx());
            for a in 0..4 {
                out[nodes[a]] += acc[a];
            }
        }
    }

    /// Nodal interpolation of the extended initial value.
    pub fn initial_values(&self, spec: &ProblemSpec) -> Result<Vec<f64>> {
        let domain = self.pf.domain();
        (0..self.grid.node_count())
            .map(|k| {
                crate::extension::extend_field(spec, domain, FieldId::Initial, 0.0, &self.grid.node(k))
            })
            .collect()
    }
}

pub fn assemble_weighted_mass(
    grid: &StructuredGrid,
    pf: &PhaseField,
    rule: &QuadratureRule,
) -> Result<CsrMatrix> {
    let sys = FemSystem::new(*grid, pf.clone(), rule.clone(), AssemblyOptions::default())?;
    Ok(sys.assemble_weighted_mass())
}

pub fn assemble_weighted_stiffness(
    grid: &StructuredGrid,
    pf: &PhaseField,
    spec: &ProblemSpec,
    rule: &QuadratureRule,
    t: f64,
) -> Result<CsrMatrix> {
    let sys = FemSystem::new(*grid, pf.clone(), rule.clone(), AssemblyOptions::default())?;
    Ok(sys.assemble_weighted_stiffness(spec, t))
}

pub fn assemble_load(
    grid: &StructuredGrid,
    pf: &PhaseField,
    spec: &ProblemSpec,
    rule: &QuadratureRule,
    t: f64,
) -> Result<Vec<f64>> {
    let sys = FemSystem::new(*grid, pf.clone(), rule.clone(), AssemblyOptions::default())?;
    Ok(sys.assemble_load(spec, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_circle;
    use std::f64::consts::PI;

    fn circle_system(n: usize, eps: f64, workers: usize) -> FemSystem {
        let domain = Arc::new(make_circle(Point::origin(), 0.25).unwrap());
        let pf = PhaseField::new(domain, eps, 1e-8).unwrap();
        FemSystem::new(
            StructuredGrid::unit_square(n).unwrap(),
            pf,
            QuadratureRule::tensor(4),
            AssemblyOptions { workers },
        )
        .unwrap()
    }

    /// A domain far larger than the grid, so every cell is interior.
    fn full_system(n: usize) -> FemSystem {
        let domain = Arc::new(make_circle(Point::origin(), 10.0).unwrap());
        let pf = PhaseField::new(domain, 0.01, 1e-8).unwrap();
        FemSystem::new(
            StructuredGrid::unit_square(n).unwrap(),
            pf,
            QuadratureRule::tensor(2),
            AssemblyOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn unit_weight_element_matrices() {
        let sys = full_system(4);
        assert_eq!(sys.class_counts(), (16, 0, 0));
        let h = 0.25;
        let m = sys.assemble_weighted_mass();
        let k = sys.assemble_weighted_stiffness(&ProblemSpec::zero(), 0.0);
        // the corner node (0,0) belongs to one cell only
        let ref_m = [4.0, 2.0, 1.0, 2.0];
        let ref_k = [4.0, -1.0, -2.0, -1.0];
        let nodes = sys.grid().cell_nodes(0, 0);
        for b in 0..4 {
            approx::assert_abs_diff_eq!(m.get(0, nodes[b]), h * h / 36.0 * ref_m[b], epsilon = 1e-15);
            approx::assert_abs_diff_eq!(k.get(0, nodes[b]), ref_k[b] / 6.0, epsilon = 1e-14);
        }
        let row: f64 = (0..m.dim()).map(|j| m.get(12, j)).sum();
        approx::assert_abs_diff_eq!(row, h * h, epsilon = 1e-15);
    }

    #[test]
    fn stiffness_annihilates_constants_and_scales_with_a() {
        let sys = circle_system(32, 0.125, 1);
        let k1 = sys.assemble_weighted_stiffness(&ProblemSpec::zero(), 0.0);
        let k3 = sys.assemble_weighted_stiffness(&ProblemSpec::zero().with_diffusion(|_| 3.0), 0.0);
        let ones = vec![1.0; k1.dim()];
        let scale = k1.max_abs();
        assert!(k1.mul_vec(&ones).iter().all(|v| v.abs() < 1e-13 * scale));
        for (a, b) in k1.values().iter().zip(k3.values()) {
            approx::assert_relative_eq!(3.0 * a, *b, max_relative = 1e-14);
        }
        assert!(k1.symmetry_defect() == 0.0);
    }

    #[test]
    fn total_mass_approximates_disk_area() {
        let sys = circle_system(256, 1.0 / 32.0, 1);
        let total = sys.assemble_weighted_mass().sum_entries();
        assert!((total - PI / 16.0).abs() < 5e-4, "total mass {total}");
    }

    #[test]
    fn unit_neumann_load_approximates_perimeter() {
        let sys = circle_system(256, 1.0 / 32.0, 1);
        let spec = ProblemSpec::zero().with_neumann(|_, _| 1.0);
        let total: f64 = sys.assemble_load(&spec, 0.0).iter().sum();
        assert!((total - PI / 2.0).abs() < 2e-3, "total load {total}");
    }

    #[test]
    fn unit_source_load_matches_mass_row_sums() {
        let sys = circle_system(64, 1.0 / 16.0, 1);
        let spec = ProblemSpec::zero().with_source(|_, _| 1.0);
        let load = sys.assemble_load(&spec, 0.0);
        let m = sys.assemble_weighted_mass();
        let rows = m.mul_vec(&vec![1.0; m.dim()]);
        for (a, b) in load.iter().zip(&rows) {
            approx::assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn assembly_is_bitwise_independent_of_workers() {
        let spec = crate::extension::example2();
        let a = circle_system(48, 0.125, 1);
        let b = circle_system(48, 0.125, 3);
        assert_eq!(a.assemble_weighted_mass(), b.assemble_weighted_mass());
        assert_eq!(
            a.assemble_weighted_stiffness(&spec, 0.0),
            b.assemble_weighted_stiffness(&spec, 0.0)
        );
        let la = a.assemble_load(&spec, 0.3);
        let lb = b.assemble_load(&spec, 0.3);
        assert!(la.iter().zip(&lb).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn fast_path_cells_match_pointwise_weights() {
        let sys = circle_system(128, 1.0 / 64.0, 1);
        let pf = sys.phase_field();
        let grid = *sys.grid();
        for cj in 0..grid.ny() {
            for ci in 0..grid.nx() {
                let class = sys.cell_class(ci, cj);
                if class == CellClass::Band {
                    continue;
                }
                let expected = if class == CellClass::Interior { 1.0 } else { pf.floor() };
                for &(xi, eta) in sys.rule().points() {
                    let x = grid.cell_origin(ci, cj) + Vector::new(xi * grid.hx(), eta * grid.hy());
                    assert_eq!(pf.assembly_weight(&x), expected);
                    assert_eq!(pf.gradient(&x).1 * 0.0, 0.0);
                }
            }
        }
        let (i, e, b) = sys.class_counts();
        assert!(i > 0 && e > 0 && b > 0);
    }
}
