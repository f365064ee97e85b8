use std::f64::consts::TAU;

use super::polyline::Polyline;
use super::{Point, Rect, Vector};
use crate::{DdmError, Result};

/// Default number of vertices of the sampled boundary polyline.
pub const DEFAULT_BOUNDARY_VERTICES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    Circle,
    Flower,
    Polyline,
}

#[derive(Debug, Clone)]
enum Shape {
    Circle {
        center: Point,
        radius: f64,
    },
    /// Star-shaped region `r < r0 - amplitude * sin(frequency * θ)` around `center`.
    Flower {
        center: Point,
        r0: f64,
        amplitude: f64,
        frequency: u32,
    },
    Polygon,
}

/// A point on `∂D` together with the outward unit normal there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySample {
    pub point: Point,
    pub normal: Vector,
}

/// Closest-point projection of a query point onto `∂D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Foot point on the boundary.
    pub point: Point,
    /// Outward unit normal of `∂D` at the foot point.
    pub normal: Vector,
    /// Signed distance of the query point (negative inside).
    pub distance: f64,
    /// Gradient of the signed distance at the query point.
    pub gradient: Vector,
    /// Set when the query lies on the medial axis and the foot point was
    /// chosen by tie-break.
    pub ambiguous: bool,
}

impl Projection {
    pub fn sample(&self) -> BoundarySample {
        BoundarySample {
            point: self.point,
            normal: self.normal,
        }
    }
}

/// Physical domain `D` represented through its signed distance function.
///
/// Every shape carries a counter-clockwise boundary polyline. The circle uses
/// closed-form distance and projection; the other shapes measure distance to
/// the polyline and take the sign from their own inside test.
#[derive(Debug, Clone)]
pub struct ImplicitDomain {
    shape: Shape,
    boundary: Polyline,
    scale: f64,
}

pub fn make_circle(center: Point, radius: f64) -> Result<ImplicitDomain> {
    ImplicitDomain::circle(center, radius)
}

pub fn make_flower(r0: f64, amplitude: f64, frequency: u32) -> Result<ImplicitDomain> {
    ImplicitDomain::flower(
        Point::origin(),
        r0,
        amplitude,
        frequency,
        DEFAULT_BOUNDARY_VERTICES,
    )
}

impl ImplicitDomain {
    pub fn circle(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(DdmError::config(format!(
                "circle radius must be positive, got {radius}"
            )));
        }
        let vertices = (0..DEFAULT_BOUNDARY_VERTICES)
            .map(|k| {
                let th = TAU * k as f64 / DEFAULT_BOUNDARY_VERTICES as f64;
                center + Vector::new(th.cos(), th.sin()) * radius
            })
            .collect();
        Ok(ImplicitDomain {
            shape: Shape::Circle { center, radius },
            boundary: Polyline::new(vertices),
            scale: 2.0 * radius,
        })
    }

    pub fn flower(
        center: Point,
        r0: f64,
        amplitude: f64,
        frequency: u32,
        vertices: usize,
    ) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(DdmError::config(format!("flower r0 must be positive, got {r0}")));
        }
        if !(amplitude >= 0.0 && amplitude < r0) {
            return Err(DdmError::config(format!(
                "flower amplitude must satisfy 0 <= amplitude < r0 (got amplitude {amplitude}, r0 {r0})"
            )));
        }
        if frequency == 0 {
            return Err(DdmError::config("flower frequency must be at least 1"));
        }
        if vertices < 16 {
            return Err(DdmError::config(format!(
                "flower boundary needs at least 16 vertices, got {vertices}"
            )));
        }
        let k = frequency as f64;
        let pts = (0..vertices)
            .map(|i| {
                let th = TAU * i as f64 / vertices as f64;
                let r = r0 - amplitude * (k * th).sin();
                center + Vector::new(th.cos(), th.sin()) * r
            })
            .collect();
        Ok(ImplicitDomain {
            shape: Shape::Flower {
                center,
                r0,
                amplitude,
                frequency,
            },
            boundary: Polyline::new(pts),
            scale: 2.0 * (r0 + amplitude),
        })
    }

    /// Domain bounded by a user-supplied closed polygon (either orientation).
    pub fn polyline(points: Vec<Point>) -> Result<Self> {
        if points.len() < 3 {
            return Err(DdmError::config("polyline domain needs at least 3 points"));
        }
        if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(DdmError::config("polyline contains non-finite coordinates"));
        }
        let boundary = Polyline::new(points);
        if boundary.len() < 3 {
            return Err(DdmError::config("polyline domain needs at least 3 distinct points"));
        }
        if !boundary.is_simple() {
            return Err(DdmError::config("polyline boundary self-intersects"));
        }
        let b = boundary.bounds();
        let scale = (b.max - b.min).norm();
        Ok(ImplicitDomain {
            shape: Shape::Polygon,
            boundary,
            scale,
        })
    }

    pub fn kind(&self) -> DomainKind {
        match self.shape {
            Shape::Circle { .. } => DomainKind::Circle,
            Shape::Flower { .. } => DomainKind::Flower,
            Shape::Polygon => DomainKind::Polyline,
        }
    }

    /// Diameter-like length scale used for tolerances.
    pub fn diameter(&self) -> f64 {
        self.scale
    }

    pub fn bounding_box(&self) -> Rect {
        match self.shape {
            Shape::Circle { center, radius } => Rect::new(
                center.x - radius,
                center.x + radius,
                center.y - radius,
                center.y + radius,
            ),
            _ => self.boundary.bounds(),
        }
    }

    /// Closed boundary polyline: the first point is repeated at the end.
    pub fn boundary_points(&self) -> Vec<Point> {
        let mut pts = self.boundary.vertices().to_vec();
        pts.push(pts[0]);
        pts
    }

    /// Boundary vertices with their outward normals.
    pub fn boundary_samples(&self) -> Vec<BoundarySample> {
        match self.shape {
            Shape::Circle { center, .. } => self
                .boundary
                .vertices()
                .iter()
                .map(|p| BoundarySample {
                    point: *p,
                    normal: (p - center).normalize(),
                })
                .collect(),
            _ => self
                .boundary
                .vertices()
                .iter()
                .enumerate()
                .map(|(i, p)| BoundarySample {
                    point: *p,
                    normal: self.boundary.vertex_normal(i),
                })
                .collect(),
        }
    }

    /// Inside test used for the sign of the distance.
    pub fn contains(&self, x: &Point) -> bool {
        match self.shape {
            Shape::Circle { center, radius } => (x - center).norm() < radius,
            Shape::Flower {
                center,
                r0,
                amplitude,
                frequency,
            } => {
                let v = x - center;
                let r_b = r0 - amplitude * (frequency as f64 * v.y.atan2(v.x)).sin();
                v.norm_squared() < r_b * r_b
            }
            Shape::Polygon => self.boundary.contains(x),
        }
    }

    /// `d_D(x)`: negative inside, positive outside, zero on the boundary.
    pub fn signed_distance(&self, x: &Point) -> f64 {
        match self.shape {
            Shape::Circle { center, radius } => (x - center).norm() - radius,
            _ => {
                let hit = self.boundary.nearest(x);
                let d = hit.dist2.sqrt();
                if self.contains(x) {
                    -d
                } else {
                    d
                }
            }
        }
    }

    /// Closest boundary point, normal and signed distance, without the
    /// medial-axis check performed by [`closest_point`](Self::closest_point).
    pub fn project(&self, x: &Point) -> Projection {
        match self.shape {
            Shape::Circle { center, radius } => {
                let v = x - center;
                let r = v.norm();
                let (normal, ambiguous) = if r > 1e-14 * radius {
                    (v / r, false)
                } else {
                    (Vector::new(1.0, 0.0), true)
                };
                Projection {
                    point: center + normal * radius,
                    normal,
                    distance: r - radius,
                    gradient: normal,
                    ambiguous,
                }
            }
            _ => {
                let hit = self.boundary.nearest(x);
                let dist = hit.dist2.sqrt();
                let distance = if self.contains(x) { -dist } else { dist };
                let normal = self.boundary.normal_at(&hit);
                let gradient = if dist > 1e-12 * self.scale {
                    (x - hit.point) / distance
                } else {
                    normal
                };
                Projection {
                    point: hit.point,
                    normal,
                    distance,
                    gradient,
                    ambiguous: false,
                }
            }
        }
    }

    /// Closest-point projection with medial-axis detection. Ties go to the
    /// lowest segment index (lowest polar angle for the circle) and set
    /// [`Projection::ambiguous`].
    pub fn closest_point(&self, x: &Point) -> Projection {
        let mut proj = self.project(x);
        if !matches!(self.shape, Shape::Circle { .. }) {
            let hit = self.boundary.nearest(x);
            proj.ambiguous = self
                .boundary
                .has_competing_minimizer(x, &hit, self.scale);
        }
        proj
    }

    /// Smallest radius of curvature of `∂D`.
    pub fn min_curvature_radius(&self) -> f64 {
        match self.shape {
            Shape::Circle { radius, .. } => radius,
            Shape::Flower {
                r0,
                amplitude,
                frequency,
                ..
            } => {
                let k = frequency as f64;
                let samples = 64 * 1024;
                (0..samples)
                    .map(|i| {
                        let th = TAU * i as f64 / samples as f64;
                        let r = r0 - amplitude * (k * th).sin();
                        let r1 = -amplitude * k * (k * th).cos();
                        let r2 = amplitude * k * k * (k * th).sin();
                        let num = (r * r + r1 * r1).powf(1.5);
                        let den = (r * r + 2.0 * r1 * r1 - r * r2).abs();
                        if den > 0.0 {
                            num / den
                        } else {
                            f64::INFINITY
                        }
                    })
                    .fold(f64::INFINITY, f64::min)
            }
            Shape::Polygon => self.boundary.min_curvature_radius(),
        }
    }

    /// Largest interface thickness for which the normal projection stays
    /// well defined in the band: half the smallest radius of curvature.
    pub fn max_recommended_epsilon(&self) -> f64 {
        0.5 * self.min_curvature_radius()
    }

    /// Number of polyline segments (ties are broken towards lower indices).
    pub fn boundary_vertex_count(&self) -> usize {
        self.boundary.len()
    }
}
