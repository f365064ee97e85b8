//! The experiment pipeline: geometry, assembly, time stepping and error norms.

use std::path::PathBuf;
use std::time::Instant;

use super::config::{ExperimentConfig, OutputFormat};
use super::output::{FieldDump, SweepWriter};
use crate::fem::FemSystem;
use crate::geometry::PhaseField;
use crate::norms::{error_integrals, ErrorReport, SweepResult};
use crate::time::{run_transient, TransientSolution};
use crate::{DdmError, Result};

pub struct RunOutcome {
    pub report: ErrorReport,
    pub system: FemSystem,
    pub solution: TransientSolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Omega,
    Solution,
    Exact,
    Error,
}

impl std::str::FromStr for FieldKind {
    type Err = DdmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "omega" => Ok(FieldKind::Omega),
            "solution" => Ok(FieldKind::Solution),
            "exact" => Ok(FieldKind::Exact),
            "error" => Ok(FieldKind::Error),
            _ => Err(DdmError::config(format!(
                "unknown field {s:?}; expected omega, solution, exact or error"
            ))),
        }
    }
}

impl FieldKind {
    pub fn name(self) -> &'static str {
        match self {
            FieldKind::Omega => "omega",
            FieldKind::Solution => "solution",
            FieldKind::Exact => "exact",
            FieldKind::Error => "error",
        }
    }
}

fn build_system(cfg: &ExperimentConfig, epsilon: f64) -> Result<FemSystem> {
    let pf = PhaseField::new(cfg.build_domain()?, epsilon, cfg.assembly.delta)?;
    cfg.problem()?.validate(&pf, &cfg.region())?;
    FemSystem::new(cfg.build_grid()?, pf, cfg.rule()?, cfg.assembly_options())
}

/// Solves to `T` at one `ε` and measures the weighted errors on `D`.
pub fn run_single(cfg: &ExperimentConfig, epsilon: f64) -> Result<RunOutcome> {
    let start = Instant::now();
    let spec = cfg.problem()?;
    let exact = spec.exact()?.clone();
    let system = build_system(cfg, epsilon)?;
    let (interior, exterior, band) = system.class_counts();
    log::info!(
        "eps={epsilon}: {interior} interior, {exterior} exterior, {band} band cells"
    );
    let time = cfg.time_grid()?;
    let solution = run_transient(&system, &spec, time, &cfg.solver_options(), &[])?;
    let errors = error_integrals(&system, solution.final_values(), &exact, time.final_time())?;
    let report = ErrorReport {
        epsilon,
        l2_error: errors.l2(),
        h1_error: errors.h1(),
        quadrature_points: errors.points,
        runtime_s: start.elapsed().as_secs_f64(),
    };
    log::info!(
        "eps={epsilon}: L2 {:.4e}, H1 {:.4e} in {:.1}s",
        report.l2_error,
        report.h1_error,
        report.runtime_s
    );
    Ok(RunOutcome { report, system, solution })
}

/// Runs every `ε` of the sweep in order. With CSV output enabled each row is
/// written as soon as it is known, so a failure leaves the finished rows on disk.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let dir = cfg.output_dir();
    let mut writer = if cfg.writes(OutputFormat::Csv) {
        Some(SweepWriter::create(&dir.join("sweep.csv"), !cfg.assembly.bitwise)?)
    } else {
        None
    };
    let mut sweep = SweepResult::default();
    for (k, &eps) in cfg.sweep.epsilons.iter().enumerate() {
        let outcome = run_single(cfg, eps)?;
        if let Some(w) = writer.as_mut() {
            w.push(&outcome.report)?;
        }
        if cfg.writes(OutputFormat::Vtk) {
            all_fields(&outcome, cfg)?.write_vtk(&dir.join(format!("fields_{k}.vtk")))?;
        }
        sweep.push(outcome.report);
    }
    Ok(sweep)
}

fn nodal(outcome: &RunOutcome, cfg: &ExperimentConfig, kind: FieldKind) -> Result<Vec<f64>> {
    let system = &outcome.system;
    let grid = system.grid();
    let t = cfg.time.final_time;
    Ok(match kind {
        FieldKind::Omega => grid.sample(|x| system.phase_field().weight(x)),
        FieldKind::Solution => outcome.solution.final_values().to_vec(),
        FieldKind::Exact => {
            let spec = cfg.problem()?;
            let exact = spec.exact()?;
            grid.sample(|x| (exact.value)(t, x))
        }
        FieldKind::Error => {
            let exact = nodal(outcome, cfg, FieldKind::Exact)?;
            outcome.solution.final_values().iter().zip(exact).map(|(u, e)| u - e).collect()
        }
    })
}

fn all_fields(outcome: &RunOutcome, cfg: &ExperimentConfig) -> Result<FieldDump> {
    let mut dump = FieldDump::new(*outcome.system.grid());
    for kind in [FieldKind::Solution, FieldKind::Exact, FieldKind::Error, FieldKind::Omega] {
        dump = dump.with(kind.name(), nodal(outcome, cfg, kind)?)?;
    }
    Ok(dump)
}

/// Nodal dump of one field at `T` (or of `ω_ε`, which needs no solve).
pub fn field_dump(cfg: &ExperimentConfig, epsilon: f64, kind: FieldKind) -> Result<FieldDump> {
    if kind == FieldKind::Omega {
        let grid = cfg.build_grid()?;
        let pf = PhaseField::new(cfg.build_domain()?, epsilon, cfg.assembly.delta)?;
        return FieldDump::new(grid).with(kind.name(), grid.sample(|x| pf.weight(x)));
    }
    let outcome = run_single(cfg, epsilon)?;
    FieldDump::new(*outcome.system.grid()).with(kind.name(), nodal(&outcome, cfg, kind)?)
}

/// Writes [`field_dump`] as VTK or CSV, chosen by the file extension.
pub fn dump_field(
    cfg: &ExperimentConfig,
    epsilon: f64,
    kind: FieldKind,
    path: Option<PathBuf>,
) -> Result<PathBuf> {
    let dump = field_dump(cfg, epsilon, kind)?;
    let path = path.unwrap_or_else(|| cfg.output_dir().join(format!("{}.vtk", kind.name())));
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => dump.write_csv(&path)?,
        _ => dump.write_vtk(&path)?,
    }
    Ok(path)
}
