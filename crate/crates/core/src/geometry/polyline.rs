//! Closed boundary polyline with a bounding-volume hierarchy over its segments.

use super::{Point, Rect, Vector};

const LEAF_SIZE: usize = 8;
const NO_CHILD: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Node {
    bounds: Rect,
    lo: u32,
    hi: u32,
    left: u32,
    right: u32,
}

/// Result of a nearest-segment query.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SegmentHit {
    pub segment: usize,
    /// Parameter of the foot point along the segment, in `[0, 1]`.
    pub t: f64,
    pub point: Point,
    pub dist2: f64,
}

/// Counter-clockwise closed polyline. Segment `i` joins vertex `i` to vertex `i + 1 (mod n)`.
#[derive(Debug, Clone)]
pub(crate) struct Polyline {
    vertices: Vec<Point>,
    segment_normals: Vec<Vector>,
    vertex_normals: Vec<Vector>,
    nodes: Vec<Node>,
}

impl Polyline {
    /// Builds the polyline, reorienting to counter-clockwise if needed.
    /// A trailing vertex equal to the first one is dropped.
    pub fn new(mut vertices: Vec<Point>) -> Self {
        if vertices.len() > 1 {
            let first = vertices[0];
            let last = vertices[vertices.len() - 1];
            if (first - last).norm() <= 1e-12 * (1.0 + first.coords.norm()) {
                vertices.pop();
            }
        }
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        let n = vertices.len();
        let segment_normals: Vec<Vector> = (0..n)
            .map(|i| {
                let e = vertices[(i + 1) % n] - vertices[i];
                Vector::new(e.y, -e.x).normalize()
            })
            .collect();
        let vertex_normals = (0..n)
            .map(|i| (segment_normals[(i + n - 1) % n] + segment_normals[i]).normalize())
            .collect();
        let mut poly = Polyline {
            vertices,
            segment_normals,
            vertex_normals,
            nodes: Vec::new(),
        };
        poly.build_tree();
        poly
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertex_normal(&self, i: usize) -> Vector {
        self.vertex_normals[i]
    }

    pub fn segment(&self, i: usize) -> (Point, Point) {
        (self.vertices[i], self.vertices[(i + 1) % self.vertices.len()])
    }

    pub fn bounds(&self) -> Rect {
        self.nodes[0].bounds
    }

    fn build_tree(&mut self) {
        let n = self.vertices.len();
        self.nodes.clear();
        self.build_node(0, n);
    }

    fn build_node(&mut self, lo: usize, hi: usize) -> u32 {
        let mut bounds = Rect {
            min: Point::new(f64::INFINITY, f64::INFINITY),
            max: Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        };
        for i in lo..hi {
            let (a, b) = self.segment(i);
            for p in [a, b] {
                bounds.min.x = bounds.min.x.min(p.x);
                bounds.min.y = bounds.min.y.min(p.y);
                bounds.max.x = bounds.max.x.max(p.x);
                bounds.max.y = bounds.max.y.max(p.y);
            }
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(Node {
            bounds,
            lo: lo as u32,
            hi: hi as u32,
            left: NO_CHILD,
            right: NO_CHILD,
        });
        if hi - lo > LEAF_SIZE {
            let mid = lo + (hi - lo) / 2;
            let left = self.build_node(lo, mid);
            let right = self.build_node(mid, hi);
            self.nodes[id as usize].left = left;
            self.nodes[id as usize].right = right;
        }
        id
    }

    fn project_segment(&self, i: usize, x: &Point) -> SegmentHit {
        let (a, b) = self.segment(i);
        let e = b - a;
        let len2 = e.norm_squared();
        let t = if len2 > 0.0 {
            ((x - a).dot(&e) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let point = a + e * t;
        SegmentHit {
            segment: i,
            t,
            point,
            dist2: (x - point).norm_squared(),
        }
    }

    /// Nearest segment; ties resolve to the lowest segment index.
    pub fn nearest(&self, x: &Point) -> SegmentHit {
        let mut best = SegmentHit {
            segment: usize::MAX,
            t: 0.0,
            point: *x,
            dist2: f64::INFINITY,
        };
        self.visit(x, |d2, best_d2| d2 <= best_d2, &mut best, |poly, i, best| {
            let hit = poly.project_segment(i, x);
            if hit.dist2 < best.dist2 || (hit.dist2 == best.dist2 && i < best.segment) {
                *best = hit;
            }
        });
        best
    }

    /// Whether some segment other than the one holding `best` reaches a
    /// different foot point at (numerically) the same distance.
    pub fn has_competing_minimizer(&self, x: &Point, best: &SegmentHit, scale: f64) -> bool {
        let slack = best.dist2 * 1e-10 + (1e-12 * scale).powi(2);
        let limit = best.dist2 + slack;
        let separation = 1e-9 * scale;
        let mut found = false;
        let mut state = *best;
        self.visit(
            x,
            |d2, _| d2 <= limit,
            &mut state,
            |poly, i, _| {
                if found || i == best.segment {
                    return;
                }
                let hit = poly.project_segment(i, x);
                if hit.dist2 <= limit && (hit.point - best.point).norm() > separation {
                    found = true;
                }
            },
        );
        found
    }

    fn visit<F, P>(&self, x: &Point, keep: P, state: &mut SegmentHit, mut leaf: F)
    where
        P: Fn(f64, f64) -> bool,
        F: FnMut(&Self, usize, &mut SegmentHit),
    {
        let mut stack = [0u32; 64];
        let mut top = 1;
        while top > 0 {
            top -= 1;
            let node = &self.nodes[stack[top] as usize];
            if !keep(node.bounds.distance_squared(x), state.dist2) {
                continue;
            }
            if node.left == NO_CHILD {
                for i in node.lo as usize..node.hi as usize {
                    leaf(self, i, state);
                }
                continue;
            }
            // Push the farther child first so the nearer one is searched first.
            let l = &self.nodes[node.left as usize];
            let r = &self.nodes[node.right as usize];
            let (near, far) = if l.bounds.distance_squared(x) <= r.bounds.distance_squared(x) {
                (node.left, node.right)
            } else {
                (node.right, node.left)
            };
            stack[top] = far;
            stack[top + 1] = near;
            top += 2;
        }
    }

    /// Outward normal at a foot point: vertex normals linearly interpolated along the segment.
    pub fn normal_at(&self, hit: &SegmentHit) -> Vector {
        let n = self.vertices.len();
        let a = self.vertex_normals[hit.segment];
        let b = self.vertex_normals[(hit.segment + 1) % n];
        let v = a * (1.0 - hit.t) + b * hit.t;
        let len = v.norm();
        if len > 0.0 {
            v / len
        } else {
            self.segment_normals[hit.segment]
        }
    }

    /// Even-odd crossing test.
    pub fn contains(&self, x: &Point) -> bool {
        let n = self.vertices.len();
        let mut inside = false;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            if (a.y > x.y) != (b.y > x.y) {
                let xc = a.x + (x.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if x.x < xc {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        for i in 0..n {
            let (a, b) = self.segment(i);
            for j in (i + 1)..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (c, d) = self.segment(j);
                if segments_intersect(a, b, c, d) {
                    return false;
                }
            }
        }
        true
    }

    /// Smallest local radius of curvature estimated from turning angles.
    pub fn min_curvature_radius(&self) -> f64 {
        let n = self.vertices.len();
        let mut min = f64::INFINITY;
        for i in 0..n {
            let prev = self.segment_normals[(i + n - 1) % n];
            let next = self.segment_normals[i];
            let angle = prev.x * next.y - prev.y * next.x;
            let turn = angle.atan2(prev.dot(&next)).abs();
            if turn > 0.0 {
                let (a, b) = self.segment(i);
                let (c, _) = self.segment((i + n - 1) % n);
                let len = 0.5 * ((b - a).norm() + (a - c).norm());
                min = min.min(len / turn);
            }
        }
        min
    }
}

fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| {
            let a = v[i];
            let b = v[(i + 1) % n];
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
        * 0.5
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}
