use crate::geometry::{Point, Rect, Vector};
use crate::{DdmError, Result};

/// Uniform grid of `nx × ny` rectangular cells over `bounds`.
/// Nodes are numbered lexicographically with `x` fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuredGrid {
    bounds: Rect,
    nx: usize,
    ny: usize,
}

impl StructuredGrid {
    pub fn new(bounds: Rect, nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(DdmError::config(format!(
                "grid needs at least 2 cells per axis, got {nx} x {ny}"
            )));
        }
        if !(bounds.width() > 0.0 && bounds.height() > 0.0) {
            return Err(DdmError::config("grid bounds must have positive extent"));
        }
        Ok(StructuredGrid { bounds, nx, ny })
    }

    /// `[-1/2, 1/2]²` with `n × n` cells.
    pub fn unit_square(n: usize) -> Result<Self> {
        StructuredGrid::new(Rect::new(-0.5, 0.5, -0.5, 0.5), n, n)
    }

    pub fn bounds(&self) -> Rect {
        self.bounds
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn hx(&self) -> f64 {
        self.bounds.width() / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.bounds.height() / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    pub fn node_count(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn node(&self, index: usize) -> Point {
        let i = index % (self.nx + 1);
        let j = index / (self.nx + 1);
        Point::new(
            self.bounds.min.x + i as f64 * self.hx(),
            self.bounds.min.y + j as f64 * self.hy(),
        )
    }

    /// Corner nodes of cell `(ci, cj)` in counter-clockwise order starting
    /// at the lower-left corner.
    #[inline]
    pub fn cell_nodes(&self, ci: usize, cj: usize) -> [usize; 4] {
        let n0 = self.node_index(ci, cj);
        let row = self.nx + 1;
        [n0, n0 + 1, n0 + 1 + row, n0 + row]
    }

    #[inline]
    pub fn cell_origin(&self, ci: usize, cj: usize) -> Point {
        Point::new(
            self.bounds.min.x + ci as f64 * self.hx(),
            self.bounds.min.y + cj as f64 * self.hy(),
        )
    }

    pub fn cell_center(&self, ci: usize, cj: usize) -> Point {
        self.cell_origin(ci, cj) + Vector::new(0.5 * self.hx(), 0.5 * self.hy())
    }

    pub fn half_diagonal(&self) -> f64 {
        0.5 * self.hx().hypot(self.hy())
    }

    /// Cell containing `x` and the local coordinates `(ξ, η) ∈ [0, 1]²`.
    /// Points outside the bounds are clamped to the nearest cell.
    pub fn locate(&self, x: &Point) -> ((usize, usize), (f64, f64)) {
        let fx = (x.x - self.bounds.min.x) / self.hx();
        let fy = (x.y - self.bounds.min.y) / self.hy();
        let ci = (fx.floor().max(0.0) as usize).min(self.nx - 1);
        let cj = (fy.floor().max(0.0) as usize).min(self.ny - 1);
        ((ci, cj), (fx - ci as f64, fy - cj as f64))
    }

    /// Bilinear interpolant of nodal values and its gradient at `x`.
    pub fn interpolate(&self, values: &[f64], x: &Point) -> (f64, Vector) {
        let ((ci, cj), (xi, eta)) = self.locate(x);
        let [a, b, c, d] = self.cell_nodes(ci, cj);
        let (ua, ub, uc, ud) = (values[a], values[b], values[c], values[d]);
        let value = ua * (1.0 - xi) * (1.0 - eta)
            + ub * xi * (1.0 - eta)
            + uc * xi * eta
            + ud * (1.0 - xi) * eta;
        let gx = ((ub - ua) * (1.0 - eta) + (uc - ud) * eta) / self.hx();
        let gy = ((ud - ua) * (1.0 - xi) + (uc - ub) * xi) / self.hy();
        (value, Vector::new(gx, gy))
    }

    /// Nodal interpolation of a function.
    pub fn sample(&self, f: impl Fn(&Point) -> f64) -> Vec<f64> {
        (0..self.node_count()).map(|k| f(&self.node(k))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_ordering() {
        let g = StructuredGrid::new(Rect::new(0.0, 2.0, 0.0, 1.0), 4, 2).unwrap();
        assert_eq!(g.node_count(), 15);
        assert_eq!(g.hx(), 0.5);
        assert_eq!(g.hy(), 0.5);
        assert_eq!(g.node(1), Point::new(0.5, 0.0));
        assert_eq!(g.node(5), Point::new(0.0, 0.5));
        assert_eq!(g.cell_nodes(1, 1), [6, 7, 12, 11]);
        assert!(StructuredGrid::unit_square(1).is_err());
    }

    #[test]
    fn bilinear_functions_are_reproduced() {
        let g = StructuredGrid::unit_square(7).unwrap();
        let f = |p: &Point| 1.0 + 2.0 * p.x - 3.0 * p.y + 0.5 * p.x * p.y;
        let u = g.sample(f);
        for p in [Point::new(0.013, -0.31), Point::new(0.49, 0.2), Point::new(-0.5, 0.5)] {
            let (v, grad) = g.interpolate(&u, &p);
            assert!((v - f(&p)).abs() < 1e-13);
            assert!((grad - Vector::new(2.0 + 0.5 * p.y, -3.0 + 0.5 * p.x)).norm() < 1e-12);
        }
    }
}
