//! Experiment configuration: one TOML file with dotted keys.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize};

use crate::extension::{ExtensionMode, ExtensionModes, ProblemSpec};
use crate::fem::{AssemblyOptions, LinearSolver, Preconditioner, QuadratureRule, SolverOptions, StructuredGrid};
use crate::geometry::{ImplicitDomain, Point, Rect};
use crate::time::TimeGrid;
use crate::{DdmError, Result};

/// Overrides `output.dir` when set.
pub const OUTPUT_DIR_ENV: &str = "DDM_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSection,
    #[serde(default)]
    pub domain: DomainSection,
    #[serde(default)]
    pub grid: GridSection,
    pub time: TimeSection,
    pub sweep: SweepSection,
    #[serde(default)]
    pub assembly: AssemblySection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub extension: ExtensionSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKindName {
    Circle,
    Flower,
    Polygon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub kind: DomainKindName,
    #[serde(default)]
    pub center: [f64; 2],
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_r0")]
    pub r0: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_frequency")]
    pub frequency: u32,
    #[serde(default = "default_vertices")]
    pub vertices: usize,
    #[serde(default)]
    pub points: Vec<[f64; 2]>,
}

fn default_radius() -> f64 {
    0.25
}
fn default_r0() -> f64 {
    0.175
}
fn default_amplitude() -> f64 {
    0.03
}
fn default_frequency() -> u32 {
    4
}
fn default_vertices() -> usize {
    crate::geometry::DEFAULT_BOUNDARY_VERTICES
}

impl Default for DomainSection {
    fn default() -> Self {
        DomainSection {
            kind: DomainKindName::Circle,
            center: [0.0, 0.0],
            radius: default_radius(),
            r0: default_r0(),
            amplitude: default_amplitude(),
            frequency: default_frequency(),
            vertices: default_vertices(),
            points: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// `[x_min, x_max, y_min, y_max]`.
    #[serde(default = "default_bounds")]
    pub bounds: [f64; 4],
    #[serde(default = "default_nx")]
    pub nx: usize,
    #[serde(default)]
    pub ny: Option<usize>,
}

fn default_bounds() -> [f64; 4] {
    [-0.5, 0.5, -0.5, 0.5]
}
fn default_nx() -> usize {
    512
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { bounds: default_bounds(), nx: default_nx(), ny: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(rename = "T")]
    pub final_time: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Numbers or fractions such as `"1/8"`.
    #[serde(deserialize_with = "deserialize_epsilons")]
    pub epsilons: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumberOrFraction {
    Number(f64),
    Text(String),
}

fn deserialize_epsilons<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    Vec::<NumberOrFraction>::deserialize(d)?
        .into_iter()
        .map(|v| match v {
            NumberOrFraction::Number(x) => Ok(x),
            NumberOrFraction::Text(s) => parse_fraction(&s).map_err(serde::de::Error::custom),
        })
        .collect()
}

/// Parses `"0.125"` or `"1/8"`.
pub fn parse_fraction(s: &str) -> std::result::Result<f64, String> {
    let bad = || format!("cannot parse {s:?} as a number or fraction");
    match s.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.trim().parse().map_err(|_| bad())?;
            let d: f64 = d.trim().parse().map_err(|_| bad())?;
            Ok(n / d)
        }
        None => s.trim().parse().map_err(|_| bad()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssemblySection {
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_quadrature")]
    pub quadrature: usize,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Omits wall-clock times from CSV output so reruns are byte-identical.
    #[serde(default)]
    pub bitwise: bool,
}

fn default_delta() -> f64 {
    1e-8
}
fn default_quadrature() -> usize {
    4
}
fn default_workers() -> usize {
    1
}

impl Default for AssemblySection {
    fn default() -> Self {
        AssemblySection {
            delta: default_delta(),
            quadrature: default_quadrature(),
            workers: default_workers(),
            bitwise: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(rename = "type", default = "default_solver")]
    pub kind: LinearSolver,
    #[serde(default = "default_preconditioner")]
    pub preconditioner: Preconditioner,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_solver() -> LinearSolver {
    LinearSolver::Cholesky
}
fn default_preconditioner() -> Preconditioner {
    Preconditioner::Jacobi
}
fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    10_000
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            kind: default_solver(),
            preconditioner: default_preconditioner(),
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtensionSection {
    #[serde(default = "default_interior_mode")]
    pub source: ExtensionMode,
    #[serde(default = "default_interior_mode")]
    pub initial: ExtensionMode,
    #[serde(default = "default_interior_mode")]
    pub diffusion: ExtensionMode,
    #[serde(default = "default_neumann_mode")]
    pub neumann: ExtensionMode,
}

fn default_interior_mode() -> ExtensionMode {
    ExtensionMode::AnalyticGlobal
}
fn default_neumann_mode() -> ExtensionMode {
    ExtensionMode::ClosestPointConstant
}

impl Default for ExtensionSection {
    fn default() -> Self {
        ExtensionSection {
            source: default_interior_mode(),
            initial: default_interior_mode(),
            diffusion: default_interior_mode(),
            neumann: default_neumann_mode(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Vtk,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_output_dir")]
    pub dir: PathBuf,
    /// `csv` writes the sweep table, `vtk` additionally writes final-time fields.
    #[serde(default = "default_formats")]
    pub format: Vec<OutputFormat>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("output")
}
fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv]
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: default_output_dir(), format: default_formats() }
    }
}

/// Shipped configurations, by name.
pub const PRESETS: &[(&str, &str)] = &[
    ("table1-circle", include_str!("../../../../configs/table1-circle.toml")),
    ("table1-flower", include_str!("../../../../configs/table1-flower.toml")),
    ("table2-circle", include_str!("../../../../configs/table2-circle.toml")),
    ("table2-flower", include_str!("../../../../configs/table2-flower.toml")),
    ("quick-table1-circle", include_str!("../../../../configs/quick-table1-circle.toml")),
    ("quick-table1-flower", include_str!("../../../../configs/quick-table1-flower.toml")),
    ("quick-table2-circle", include_str!("../../../../configs/quick-table2-circle.toml")),
    ("quick-table2-flower", include_str!("../../../../configs/quick-table2-flower.toml")),
];

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| DdmError::config(format!("invalid configuration: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| DdmError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn preset(name: &str) -> Result<Self> {
        PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Self::from_toml(text))
            .unwrap_or_else(|| {
                let names: Vec<_> = PRESETS.iter().map(|(n, _)| *n).collect();
                Err(DdmError::config(format!(
                    "unknown preset {name:?}; available: {}",
                    names.join(", ")
                )))
            })
    }

    /// A preset name or a path to a TOML file.
    pub fn load(name_or_path: &str) -> Result<Self> {
        if PRESETS.iter().any(|(n, _)| *n == name_or_path) {
            Self::preset(name_or_path)
        } else {
            Self::from_file(Path::new(name_or_path))
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Output directory after applying the environment override.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output.dir.clone(),
        }
    }

    pub fn writes(&self, format: OutputFormat) -> bool {
        !self.output.format.contains(&OutputFormat::None) && self.output.format.contains(&format)
    }

    pub fn build_domain(&self) -> Result<Arc<ImplicitDomain>> {
        let d = &self.domain;
        let center = Point::new(d.center[0], d.center[1]);
        let domain = match d.kind {
            DomainKindName::Circle => ImplicitDomain::circle(center, d.radius)?,
            DomainKindName::Flower => {
                ImplicitDomain::flower(center, d.r0, d.amplitude, d.frequency, d.vertices)?
            }
            DomainKindName::Polygon => {
                ImplicitDomain::polyline(d.points.iter().map(|p| Point::new(p[0], p[1])).collect())?
            }
        };
        Ok(Arc::new(domain))
    }

    pub fn region(&self) -> Rect {
        let b = self.grid.bounds;
        Rect::new(b[0], b[1], b[2], b[3])
    }

    pub fn build_grid(&self) -> Result<StructuredGrid> {
        StructuredGrid::new(self.region(), self.grid.nx, self.grid.ny.unwrap_or(self.grid.nx))
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.time.final_time, self.time.steps)
    }

    pub fn rule(&self) -> Result<QuadratureRule> {
        QuadratureRule::new(self.assembly.quadrature)
    }

    pub fn assembly_options(&self) -> AssemblyOptions {
        AssemblyOptions { workers: self.assembly.workers }
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            solver: self.solver.kind,
            preconditioner: self.solver.preconditioner,
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
        }
    }

    pub fn problem(&self) -> Result<ProblemSpec> {
        let e = &self.extension;
        Ok(ProblemSpec::builtin(&self.problem.id)?.with_modes(ExtensionModes {
            source: e.source,
            initial: e.initial,
            diffusion: e.diffusion,
            neumann: e.neumann,
        }))
    }

    /// Checks everything that does not require assembling a system. Soft
    /// violations are logged and returned as warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        let grid = self.build_grid()?;
        self.time_grid()?;
        self.rule()?;
        let eps = &self.sweep.epsilons;
        if eps.is_empty() {
            return Err(DdmError::config("sweep.epsilons is empty"));
        }
        if let Some(bad) = eps.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(DdmError::config(format!("epsilon must be positive, got {bad}")));
        }
        for w in eps.windows(2) {
            if ((w[0] / w[1]) - 2.0).abs() > 1e-9 {
                return Err(DdmError::config(format!(
                    "sweep.epsilons must halve at each step, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if !(0.0..1.0).contains(&self.assembly.delta) {
            return Err(DdmError::config(format!("assembly.delta must lie in [0, 1), got {}", self.assembly.delta)));
        }
        if self.solver.tol.is_nan() || self.solver.tol <= 0.0 || self.solver.max_iter == 0 {
            return Err(DdmError::config("solver.tol and solver.max_iter must be positive"));
        }
        let domain = self.build_domain()?;
        let region = self.region();
        let bbox = domain.bounding_box();
        if !(region.contains(&bbox.min) && region.contains(&bbox.max)) {
            return Err(DdmError::config("domain does not fit inside grid.bounds"));
        }
        let h = grid.hx().max(grid.hy());
        let feature = domain.max_recommended_epsilon();
        for &e in eps {
            if e > feature {
                warnings.push(format!(
                    "epsilon {e} exceeds half the minimal boundary curvature radius ({feature:.4})"
                ));
            }
            if h > e / 4.0 {
                warnings.push(format!("grid spacing {h} does not resolve epsilon {e} (h > epsilon/4)"));
            }
        }
        self.problem()?;
        for w in &warnings {
            log::warn!("{w}");
        }
        Ok(warnings)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions() {
        assert_eq!(parse_fraction("1/8").unwrap(), 0.125);
        assert_eq!(parse_fraction(" 0.5 ").unwrap(), 0.5);
        assert!(parse_fraction("a/2").is_err());
    }

    #[test]
    fn presets_parse_and_validate() {
        for (name, _) in PRESETS {
            let cfg = ExperimentConfig::preset(name).unwrap();
            cfg.validate().unwrap();
        }
        let cfg = ExperimentConfig::preset("table1-circle").unwrap();
        assert_eq!(cfg.grid.nx, 512);
        assert_eq!(cfg.sweep.epsilons, vec![0.125, 0.0625, 0.03125, 0.015625]);
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ExperimentConfig::from_toml(
            "problem.id = \"example1\"\ntime.T = 0.5\ntime.steps = 8\nsweep.epsilons = [\"1/8\"]\n",
        )
        .unwrap();
        assert_eq!(cfg.domain.kind, DomainKindName::Circle);
        assert_eq!(cfg.extension.neumann, ExtensionMode::ClosestPointConstant);
        assert_eq!(cfg.solver.kind, LinearSolver::Cholesky);
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_input() {
        let base = "problem.id = \"example1\"\ntime.T = 0.5\ntime.steps = 8\n";
        let dup = format!("{base}sweep.epsilons = [0.125, 0.125]\n");
        assert!(ExperimentConfig::from_toml(&dup).unwrap().validate().is_err());
        let unknown = format!("{base}sweep.epsilons = [0.125]\ngrid.nz = 3\n");
        assert!(ExperimentConfig::from_toml(&unknown).is_err());
        let problem = "problem.id = \"nope\"\ntime.T = 0.5\ntime.steps = 8\nsweep.epsilons = [0.1]\n";
        assert!(ExperimentConfig::from_toml(problem).unwrap().validate().is_err());
    }
}
