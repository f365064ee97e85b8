use std::sync::Arc;

use super::{ImplicitDomain, Point, Projection, Vector};
use crate::{DdmError, Result};

/// Classification of a point relative to the tubular band `Γ_ε = {|d_D| < ε}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BandLabel {
    /// `d_D ≤ -ε`
    DeepInterior,
    /// `-ε < d_D < ε`
    Band,
    /// `d_D ≥ ε`
    DeepExterior,
}

/// `ω = (1 + tanh(-3 d / ε)) / 2`, evaluated as the equivalent logistic
/// `1 / (1 + exp(6 d / ε))` so the exterior tail keeps full relative precision.
#[inline]
pub fn profile_weight(distance: f64, epsilon: f64) -> f64 {
    1.0 / (1.0 + (6.0 * distance / epsilon).exp())
}

/// `|dω/dd| = (3 / (2ε)) sech²(3 d / ε)`.
#[inline]
pub fn profile_slope(distance: f64, epsilon: f64) -> f64 {
    let a = (3.0 * distance / epsilon).abs();
    let e = (-2.0 * a).exp();
    let sech2 = 4.0 * e / ((1.0 + e) * (1.0 + e));
    1.5 / epsilon * sech2
}

/// Phase field `ω_ε` of a domain, with the lower floor `δ` used only when
/// building system matrices.
#[derive(Debug, Clone)]
pub struct PhaseField {
    domain: Arc<ImplicitDomain>,
    epsilon: f64,
    floor: f64,
}

impl PhaseField {
    pub fn new(domain: Arc<ImplicitDomain>, epsilon: f64, floor: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(DdmError::config(format!(
                "interface thickness must be positive, got {epsilon}"
            )));
        }
        if !(floor >= 0.0 && floor.is_finite()) {
            return Err(DdmError::config(format!(
                "weight floor must be finite and non-negative, got {floor}"
            )));
        }
        Ok(PhaseField {
            domain,
            epsilon,
            floor,
        })
    }

    pub fn domain(&self) -> &ImplicitDomain {
        &self.domain
    }

    pub fn domain_arc(&self) -> &Arc<ImplicitDomain> {
        &self.domain
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn with_floor(&self, floor: f64) -> Result<Self> {
        PhaseField::new(self.domain.clone(), self.epsilon, floor)
    }

    /// Raw weight `ω_ε(x)` in `(0, 1)`, no clamping.
    pub fn weight(&self, x: &Point) -> f64 {
        profile_weight(self.domain.signed_distance(x), self.epsilon)
    }

    pub fn weight_at_distance(&self, d: f64) -> f64 {
        profile_weight(d, self.epsilon)
    }

    /// `max(ω_ε, δ)`, the weight entering mass, stiffness and load assembly.
    pub fn assembly_weight(&self, x: &Point) -> f64 {
        self.assembly_weight_at_distance(self.domain.signed_distance(x))
    }

    pub fn assembly_weight_at_distance(&self, d: f64) -> f64 {
        profile_weight(d, self.epsilon).max(self.floor)
    }

    pub fn gradient_magnitude_at_distance(&self, d: f64) -> f64 {
        profile_slope(d, self.epsilon)
    }

    /// `∇ω_ε(x) = -∇d_D(x) |∇ω_ε(x)|` from the closest-point geometry.
    /// Returns the vector and its magnitude.
    pub fn gradient(&self, x: &Point) -> (Vector, f64) {
        let proj = self.domain.project(x);
        self.gradient_from_projection(&proj)
    }

    pub fn gradient_from_projection(&self, proj: &Projection) -> (Vector, f64) {
        let mag = profile_slope(proj.distance, self.epsilon);
        (-proj.gradient * mag, mag)
    }

    pub fn classify(&self, x: &Point) -> BandLabel {
        self.classify_distance(self.domain.signed_distance(x))
    }

    pub fn classify_distance(&self, d: f64) -> BandLabel {
        if d <= -self.epsilon {
            BandLabel::DeepInterior
        } else if d >= self.epsilon {
            BandLabel::DeepExterior
        } else {
            BandLabel::Band
        }
    }

    /// Signed distance below which `ω_ε` rounds to exactly `1.0` in f64.
    pub fn interior_saturation_distance(&self) -> f64 {
        // 1 / (1 + e^z) == 1 once e^z < 2^-53; one extra unit of z as margin
        -(self.epsilon / 6.0) * (53.0 * std::f64::consts::LN_2 + 1.0)
    }

    /// Signed distance beyond which `max(ω_ε, δ)` equals `δ` exactly.
    /// Infinite when `δ = 0`, `-∞` when `δ ≥ 1`.
    pub fn exterior_saturation_distance(&self) -> f64 {
        if self.floor <= 0.0 {
            f64::INFINITY
        } else if self.floor >= 1.0 {
            f64::NEG_INFINITY
        } else {
            (self.epsilon / 6.0) * ((1.0 / self.floor - 1.0).ln() + 1.0)
        }
    }
}
