//! Sweep tables (CSV) and nodal field dumps (legacy VTK or CSV).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::fem::StructuredGrid;
use crate::norms::{ErrorReport, SweepResult};
use crate::{DdmError, Result};

pub const SWEEP_HEADER: [&str; 6] = ["epsilon", "l2_error", "l2_rate", "h1_error", "h1_rate", "runtime_s"];

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes sweep rows as they arrive; every row is flushed to disk.
pub struct SweepWriter {
    path: PathBuf,
    writer: csv::Writer<File>,
    previous: Option<ErrorReport>,
    with_runtime: bool,
}

impl SweepWriter {
    pub fn create(path: &Path, with_runtime: bool) -> Result<Self> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| DdmError::io(parent, e))?;
        }
        let file = File::create(path).map_err(|e| DdmError::io(path, e))?;
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(SWEEP_HEADER).map_err(|e| csv_error(path, e))?;
        writer.flush().map_err(|e| DdmError::io(path, e))?;
        Ok(SweepWriter { path: path.to_owned(), writer, previous: None, with_runtime })
    }

    pub fn push(&mut self, report: &ErrorReport) -> Result<()> {
        let rate = |a: f64, b: f64| {
            crate::norms::convergence_rates(&[a, b])[0].map(fmt).unwrap_or_default()
        };
        let (l2_rate, h1_rate) = match &self.previous {
            Some(p) => (rate(p.l2_error, report.l2_error), rate(p.h1_error, report.h1_error)),
            None => (String::new(), String::new()),
        };
        let runtime = if self.with_runtime { fmt(report.runtime_s) } else { String::new() };
        self.writer
            .write_record([fmt(report.epsilon), fmt(report.l2_error), l2_rate, fmt(report.h1_error), h1_rate, runtime])
            .map_err(|e| csv_error(&self.path, e))?;
        self.writer.flush().map_err(|e| DdmError::io(&self.path, e))?;
        self.previous = Some(*report);
        Ok(())
    }
}

fn csv_error(path: &Path, e: csv::Error) -> DdmError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => DdmError::io(path, io),
        other => DdmError::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

pub fn write_sweep_csv(path: &Path, sweep: &SweepResult, with_runtime: bool) -> Result<()> {
    let mut w = SweepWriter::create(path, with_runtime)?;
    for r in &sweep.reports {
        w.push(r)?;
    }
    Ok(())
}

/// Reads a sweep table back; rates are recomputed from the errors.
pub fn read_sweep_csv(path: &Path) -> Result<SweepResult> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut sweep = SweepResult::default();
    let bad = |what: &str| DdmError::config(format!("{}: malformed {what}", path.display()));
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let num = |i: usize| -> Result<f64> {
            record.get(i).ok_or_else(|| bad("row"))?.parse().map_err(|_| bad(SWEEP_HEADER[i]))
        };
        let runtime = match record.get(5) {
            Some("") | None => 0.0,
            Some(s) => s.parse().map_err(|_| bad("runtime_s"))?,
        };
        sweep.push(ErrorReport {
            epsilon: num(0)?,
            l2_error: num(1)?,
            h1_error: num(3)?,
            quadrature_points: 0,
            runtime_s: runtime,
        });
    }
    Ok(sweep)
}

/// Named nodal arrays on a structured grid.
#[derive(Debug, Clone)]
pub struct FieldDump {
    pub grid: StructuredGrid,
    pub arrays: Vec<(String, Vec<f64>)>,
}

impl FieldDump {
    pub fn new(grid: StructuredGrid) -> Self {
        FieldDump { grid, arrays: Vec::new() }
    }

    pub fn with(mut self, name: &str, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.grid.node_count() {
            return Err(DdmError::config(format!(
                "array {name} has {} values, grid has {} nodes",
                values.len(),
                self.grid.node_count()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(DdmError::Breakdown(format!("array {name} contains non-finite values")));
        }
        self.arrays.push((name.to_owned(), values));
        Ok(self)
    }

    pub fn array(&self, name: &str) -> Option<&[f64]> {
        self.arrays.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    /// Legacy ASCII VTK, `STRUCTURED_POINTS` with one `SCALARS` block per array.
    pub fn write_vtk(&self, path: &Path) -> Result<()> {
        let g = &self.grid;
        let b = g.bounds();
        write_with(path, |w| {
            writeln!(w, "# vtk DataFile Version 3.0")?;
            writeln!(w, "diffuse domain field")?;
            writeln!(w, "ASCII")?;
            writeln!(w, "DATASET STRUCTURED_POINTS")?;
            writeln!(w, "DIMENSIONS {} {} 1", g.nx() + 1, g.ny() + 1)?;
            writeln!(w, "ORIGIN {} {} 0", b.min.x, b.min.y)?;
            writeln!(w, "SPACING {} {} 1", g.hx(), g.hy())?;
            writeln!(w, "POINT_DATA {}", g.node_count())?;
            for (name, values) in &self.arrays {
                writeln!(w, "SCALARS {name} double 1")?;
                writeln!(w, "LOOKUP_TABLE default")?;
                for v in values {
                    writeln!(w, "{}", fmt(*v))?;
                }
            }
            Ok(())
        })
    }

    /// Columns `x,y` followed by one column per array (`value` when there is one array).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_with(path, |w| {
            write!(w, "x,y")?;
            if self.arrays.len() == 1 {
                write!(w, ",value")?;
            } else {
                for (name, _) in &self.arrays {
                    write!(w, ",{name}")?;
                }
            }
            writeln!(w)?;
            for k in 0..self.grid.node_count() {
                let x = self.grid.node(k);
                write!(w, "{},{}", fmt(x.x), fmt(x.y))?;
                for (_, values) in &self.arrays {
                    write!(w, ",{}", fmt(values[k]))?;
                }
                writeln!(w)?;
            }
            Ok(())
        })
    }
}

fn write_with(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| DdmError::io(parent, e))?;
    }
    let file = File::create(path).map_err(|e| DdmError::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| DdmError::io(path, e))
}
