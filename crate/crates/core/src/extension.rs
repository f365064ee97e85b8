//! Problem data `(A, f, g, u₀)` and its extension from `D` / `∂D` to the
//! covering rectangle.
//!
//! Neumann data is extended constantly along boundary normals,
//! `g̃(t, p + s n(p)) = g(t, p)`. Interior data is either evaluated from a
//! globally defined expression or frozen at the closest boundary point.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geometry::{
    BandLabel, BoundarySample, ImplicitDomain, PhaseField, Point, Projection, Rect, Vector,
};
use crate::{DdmError, Result};

pub type SpatialField = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
pub type SpaceTimeField = Arc<dyn Fn(f64, &Point) -> f64 + Send + Sync>;
pub type BoundaryField = Arc<dyn Fn(f64, &BoundarySample) -> f64 + Send + Sync>;
pub type GradientField = Arc<dyn Fn(f64, &Point) -> Vector + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtensionMode {
    /// Evaluate the closed-form expression at the query point itself.
    AnalyticGlobal,
    /// Freeze the value at the closest boundary point (outside `D` for
    /// interior data, everywhere for Neumann data).
    ClosestPointConstant,
    /// Neumann data only: closest-point value inside the band `|d| < ε`,
    /// zero elsewhere.
    ZeroOutsideBand,
}

impl fmt::Display for ExtensionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExtensionMode::AnalyticGlobal => "analytic_global",
            ExtensionMode::ClosestPointConstant => "closest_point_constant",
            ExtensionMode::ZeroOutsideBand => "zero_outside_band",
        })
    }
}

/// Interior data fields accepted by [`extend_field`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldId {
    Source,
    Initial,
    Diffusion,
}

impl FromStr for FieldId {
    type Err = DdmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f" | "source" => Ok(FieldId::Source),
            "u0" | "initial" => Ok(FieldId::Initial),
            "A" | "a" | "diffusion" => Ok(FieldId::Diffusion),
            other => Err(DdmError::config(format!("unknown field id '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtensionModes {
    pub source: ExtensionMode,
    pub initial: ExtensionMode,
    pub diffusion: ExtensionMode,
    pub neumann: ExtensionMode,
}

impl Default for ExtensionModes {
    fn default() -> Self {
        ExtensionModes {
            source: ExtensionMode::AnalyticGlobal,
            initial: ExtensionMode::AnalyticGlobal,
            diffusion: ExtensionMode::AnalyticGlobal,
            neumann: ExtensionMode::ClosestPointConstant,
        }
    }
}

/// Exact solution with analytic gradient, for manufactured-solution studies.
#[derive(Clone)]
pub struct ExactSolution {
    pub value: SpaceTimeField,
    pub gradient: GradientField,
}

/// Data of `u_t = ∇·(A∇u) + f` in `D`, `A ∇u·n = g` on `∂D`, `u(0) = u₀`.
#[derive(Clone)]
pub struct ProblemSpec {
    pub id: String,
    pub diffusion: SpatialField,
    /// Ellipticity bound: `κ ≤ A ≤ 1/κ` is required on `D_ε`.
    pub kappa: f64,
    pub source: SpaceTimeField,
    pub neumann: BoundaryField,
    pub initial: SpatialField,
    pub exact: Option<ExactSolution>,
    pub modes: ExtensionModes,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("id", &self.id)
            .field("kappa", &self.kappa)
            .field("has_exact", &self.exact.is_some())
            .field("modes", &self.modes)
            .finish()
    }
}

impl ProblemSpec {
    /// Pure diffusion with `A ≡ 1` and all data zero.
    pub fn zero() -> Self {
        ProblemSpec {
            id: "zero".into(),
            diffusion: Arc::new(|_| 1.0),
            kappa: 0.5,
            source: Arc::new(|_, _| 0.0),
            neumann: Arc::new(|_, _| 0.0),
            initial: Arc::new(|_| 0.0),
            exact: Some(ExactSolution {
                value: Arc::new(|_, _| 0.0),
                gradient: Arc::new(|_, _| Vector::zeros()),
            }),
            modes: ExtensionModes::default(),
        }
    }

    pub fn with_diffusion(mut self, a: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        self.diffusion = Arc::new(a);
        self
    }

    pub fn with_source(mut self, f: impl Fn(f64, &Point) -> f64 + Send + Sync + 'static) -> Self {
        self.source = Arc::new(f);
        self
    }

    pub fn with_neumann(
        mut self,
        g: impl Fn(f64, &BoundarySample) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.neumann = Arc::new(g);
        self
    }

    pub fn with_initial(mut self, u0: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        self.initial = Arc::new(u0);
        self
    }

    pub fn with_exact(mut self, exact: Option<ExactSolution>) -> Self {
        self.exact = exact;
        self
    }

    pub fn with_modes(mut self, modes: ExtensionModes) -> Self {
        self.modes = modes;
        self
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Built-in catalog: `example1`, `example2`, `zero`.
    pub fn builtin(id: &str) -> Result<Self> {
        match id {
            "example1" => Ok(example1()),
            "example2" => Ok(example2()),
            "zero" => Ok(ProblemSpec::zero()),
            other => Err(DdmError::config(format!("unknown problem id '{other}'"))),
        }
    }

    pub fn exact(&self) -> Result<&ExactSolution> {
        self.exact
            .as_ref()
            .ok_or_else(|| DdmError::config(format!("problem '{}' has no exact solution", self.id)))
    }

    /// Checks extension modes, `κ ≤ A ≤ 1/κ` on sampled points of `D_ε ∩ region`,
    /// and, when an exact solution is present, `g = A ∇u·n` on boundary samples.
    pub fn validate(&self, pf: &PhaseField, region: &Rect) -> Result<()> {
        for (name, mode) in [
            ("source", self.modes.source),
            ("initial", self.modes.initial),
            ("diffusion", self.modes.diffusion),
        ] {
            if mode == ExtensionMode::ZeroOutsideBand {
                return Err(DdmError::config(format!(
                    "extension mode {mode} is only valid for Neumann data, not {name}"
                )));
            }
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(DdmError::config(format!(
                "ellipticity bound kappa must lie in (0, 1], got {}",
                self.kappa
            )));
        }
        let domain = pf.domain();
        let n = 64;
        for j in 0..=n {
            for i in 0..=n {
                let x = Point::new(
                    region.min.x + region.width() * i as f64 / n as f64,
                    region.min.y + region.height() * j as f64 / n as f64,
                );
                if domain.signed_distance(&x) >= pf.epsilon() {
                    continue;
                }
                let a = extend_field(self, domain, FieldId::Diffusion, 0.0, &x)?;
                if !(a >= self.kappa && a <= 1.0 / self.kappa) {
                    return Err(DdmError::config(format!(
                        "diffusion coefficient {a} at ({}, {}) violates bounds [{}, {}]",
                        x.x,
                        x.y,
                        self.kappa,
                        1.0 / self.kappa
                    )));
                }
            }
        }
        if let Some(exact) = &self.exact {
            for t in [0.0, 0.25] {
                for s in domain.boundary_samples().iter().step_by(16) {
                    let g = (self.neumann)(t, s);
                    let flux = (self.diffusion)(&s.point) * (exact.gradient)(t, &s.point).dot(&s.normal);
                    if (g - flux).abs() > 1e-10 * (1.0 + flux.abs()) {
                        return Err(DdmError::config(format!(
                            "Neumann data {g} disagrees with exact flux {flux} at ({}, {}), t = {t}",
                            s.point.x, s.point.y
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Extended Neumann data `g̃(t, x)`.
pub fn extend_boundary_data(spec: &ProblemSpec, pf: &PhaseField, t: f64, x: &Point) -> f64 {
    let proj = pf.domain().project(x);
    extend_boundary_from_projection(spec, pf, t, x, &proj)
}

/// Same as [`extend_boundary_data`] with a precomputed projection of `x`.
pub fn extend_boundary_from_projection(
    spec: &ProblemSpec,
    pf: &PhaseField,
    t: f64,
    x: &Point,
    proj: &Projection,
) -> f64 {
    let in_band = pf.classify_distance(proj.distance) == BandLabel::Band;
    neumann_extension(spec, in_band, t, x, &proj.sample())
}

/// Neumann extension at `x` given its foot point and band membership.
pub(crate) fn neumann_extension(
    spec: &ProblemSpec,
    in_band: bool,
    t: f64,
    x: &Point,
    foot: &BoundarySample,
) -> f64 {
    match spec.modes.neumann {
        ExtensionMode::ZeroOutsideBand => {
            if in_band {
                (spec.neumann)(t, foot)
            } else {
                0.0
            }
        }
        ExtensionMode::ClosestPointConstant => (spec.neumann)(t, foot),
        ExtensionMode::AnalyticGlobal => (spec.neumann)(
            t,
            &BoundarySample {
                point: *x,
                normal: foot.normal,
            },
        ),
    }
}

/// Extension of interior data `f`, `u₀` or `A` to the point `x`.
pub fn extend_field(
    spec: &ProblemSpec,
    domain: &ImplicitDomain,
    field: FieldId,
    t: f64,
    x: &Point,
) -> Result<f64> {
    let mode = match field {
        FieldId::Source => spec.modes.source,
        FieldId::Initial => spec.modes.initial,
        FieldId::Diffusion => spec.modes.diffusion,
    };
    let at = match mode {
        ExtensionMode::AnalyticGlobal => *x,
        ExtensionMode::ClosestPointConstant => {
            let proj = domain.project(x);
            if proj.distance < 0.0 {
                *x
            } else {
                proj.point
            }
        }
        ExtensionMode::ZeroOutsideBand => {
            return Err(DdmError::config(format!(
                "extension mode {mode} is not defined for {field:?}"
            )))
        }
    };
    Ok(match field {
        FieldId::Source => (spec.source)(t, &at),
        FieldId::Initial => (spec.initial)(&at),
        FieldId::Diffusion => (spec.diffusion)(&at),
    })
}

/// Manufactured problem with `A ≡ 3` and `u = e^{-π² t}(x² + 2x)(y² - 2y)`.
pub fn example1() -> ProblemSpec {
    let pi2 = PI * PI;
    let value = move |t: f64, p: &Point| {
        (-pi2 * t).exp() * (p.x * p.x + 2.0 * p.x) * (p.y * p.y - 2.0 * p.y)
    };
    let gradient = move |t: f64, p: &Point| {
        let e = (-pi2 * t).exp();
        let (x, y) = (p.x, p.y);
        Vector::new(
            e * (2.0 * x + 2.0) * (y * y - 2.0 * y),
            e * (x * x + 2.0 * x) * (2.0 * y - 2.0),
        )
    };
    ProblemSpec {
        id: "example1".into(),
        diffusion: Arc::new(|_| 3.0),
        kappa: 0.25,
        source: Arc::new(move |t, p| {
            let xx = p.x * p.x + 2.0 * p.x;
            let yy = p.y * p.y - 2.0 * p.y;
            -(-pi2 * t).exp() * (pi2 * xx * yy + 6.0 * xx + 6.0 * yy)
        }),
        neumann: Arc::new(move |t, s| 3.0 * gradient(t, &s.point).dot(&s.normal)),
        initial: Arc::new(move |p| value(0.0, p)),
        exact: Some(ExactSolution {
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }),
        modes: ExtensionModes::default(),
    }
}

/// Manufactured problem with `A = x² + y² + 3` and
/// `u = e^{-π² t}(2x² - 4x)(2y² - 4y)`.
pub fn example2() -> ProblemSpec {
    let pi2 = PI * PI;
    let coeff = |p: &Point| p.x * p.x + p.y * p.y + 3.0;
    let value = move |t: f64, p: &Point| {
        (-pi2 * t).exp() * (2.0 * p.x * p.x - 4.0 * p.x) * (2.0 * p.y * p.y - 4.0 * p.y)
    };
    let gradient = move |t: f64, p: &Point| {
        let e = (-pi2 * t).exp();
        let (x, y) = (p.x, p.y);
        Vector::new(
            e * (4.0 * x - 4.0) * (2.0 * y * y - 4.0 * y),
            e * (2.0 * x * x - 4.0 * x) * (4.0 * y - 4.0),
        )
    };
    ProblemSpec {
        id: "example2".into(),
        diffusion: Arc::new(coeff),
        kappa: 0.25,
        source: Arc::new(move |t, p| {
            let (x, y) = (p.x, p.y);
            let a = coeff(p);
            let xx = 2.0 * x * x - 4.0 * x;
            let yy = 2.0 * y * y - 4.0 * y;
            -(-pi2 * t).exp()
                * (pi2 * xx * yy
                    + (4.0 * a + 2.0 * x * (4.0 * x - 4.0)) * yy
                    + (4.0 * a + 2.0 * y * (4.0 * y - 4.0)) * xx)
        }),
        neumann: Arc::new(move |t, s| coeff(&s.point) * gradient(t, &s.point).dot(&s.normal)),
        initial: Arc::new(move |p| value(0.0, p)),
        exact: Some(ExactSolution {
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }),
        modes: ExtensionModes::default(),
    }
}
