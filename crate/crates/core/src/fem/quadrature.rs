use crate::{DdmError, Result};

/// Gauss–Legendre nodes and weights on `[0, 1]` (weights sum to one).
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton iteration on P_n from the Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Tensor Gauss rule on the reference cell `[0, 1]²`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    order: usize,
    points: Vec<(f64, f64)>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub const MIN_ORDER: usize = 2;
    pub const MAX_ORDER: usize = 6;

    pub fn new(order: usize) -> Result<Self> {
        if !(Self::MIN_ORDER..=Self::MAX_ORDER).contains(&order) {
            return Err(DdmError::config(format!(
                "quadrature order must be in [{}, {}], got {order}",
                Self::MIN_ORDER,
                Self::MAX_ORDER
            )));
        }
        Ok(Self::tensor(order))
    }

    /// Rule of any positive order, without the configuration range check.
    pub fn tensor(order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        let mut points = Vec::with_capacity(order * order);
        let mut weights = Vec::with_capacity(order * order);
        for j in 0..order {
            for i in 0..order {
                points.push((x[i], x[j]));
                weights.push(w[i] * w[j]);
            }
        }
        QuadratureRule {
            order,
            points,
            weights,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Bilinear shape functions and their reference gradients tabulated at the
/// points of a rule. Corner order: (0,0), (1,0), (1,1), (0,1).
#[derive(Debug, Clone)]
pub struct ReferenceBasis {
    pub values: Vec<[f64; 4]>,
    pub d_xi: Vec<[f64; 4]>,
    pub d_eta: Vec<[f64; 4]>,
}

impl ReferenceBasis {
    pub fn new(rule: &QuadratureRule) -> Self {
        let mut values = Vec::with_capacity(rule.len());
        let mut d_xi = Vec::with_capacity(rule.len());
        let mut d_eta = Vec::with_capacity(rule.len());
        for &(x, y) in rule.points() {
            values.push([(1.0 - x) * (1.0 - y), x * (1.0 - y), x * y, (1.0 - x) * y]);
            d_xi.push([-(1.0 - y), 1.0 - y, y, -y]);
            d_eta.push([-(1.0 - x), -x, x, 1.0 - x]);
        }
        ReferenceBasis { values, d_xi, d_eta }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        for q in 1..=8 {
            let rule = QuadratureRule::tensor(q);
            let s: f64 = rule.weights().iter().sum();
            assert!((s - 1.0).abs() < 1e-14, "q={q}: {s}");
        }
    }

    #[test]
    fn exact_up_to_degree_2q_minus_1() {
        for q in 2..=6 {
            let rule = QuadratureRule::new(q).unwrap();
            let deg = 2 * q - 1;
            for a in 0..=deg {
                for b in [0, deg - a.min(deg)] {
                    let approx: f64 = rule
                        .points()
                        .iter()
                        .zip(rule.weights())
                        .map(|(&(x, y), w)| w * x.powi(a as i32) * y.powi(b as i32))
                        .sum();
                    let exact = 1.0 / ((a + 1) * (b + 1)) as f64;
                    assert!((approx - exact).abs() < 1e-14 * exact.max(1.0), "q={q} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn order_four_integrates_x7_y7() {
        let rule = QuadratureRule::new(4).unwrap();
        let approx: f64 = rule
            .points()
            .iter()
            .zip(rule.weights())
            .map(|(&(x, y), w)| w * x.powi(7) * y.powi(7))
            .sum();
        let exact = 1.0 / 64.0;
        assert!(((approx - exact) / exact).abs() <= 1e-13);
    }

    #[test]
    fn order_range_is_enforced() {
        assert!(QuadratureRule::new(1).is_err());
        assert!(QuadratureRule::new(7).is_err());
    }

    #[test]
    fn basis_partition_of_unity() {
        let basis = ReferenceBasis::new(&QuadratureRule::tensor(3));
        for (v, (dx, dy)) in basis.values.iter().zip(basis.d_xi.iter().zip(&basis.d_eta)) {
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            assert!(dx.iter().sum::<f64>().abs() < 1e-15);
            assert!(dy.iter().sum::<f64>().abs() < 1e-15);
        }
    }
}
