//! Per-step diagnostics rows, their CSV form and the conservation summary.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::{AptError, Result};
use crate::integrator::StepRecord;

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRow {
    pub step: usize,
    pub time: f64,
    pub rank_max: usize,
    pub rank_avg: f64,
    /// Zero for explicit steps.
    pub mals_sweeps: usize,
    /// Absent for explicit steps.
    pub mals_residual: Option<f64>,
    pub mass: f64,
    pub momentum: Vec<f64>,
    pub energy: f64,
    pub rel_err_oracle: Option<f64>,
    pub wall_ms: f64,
}

impl DiagnosticsRow {
    pub fn from_record(rec: &StepRecord, rel_err_oracle: Option<f64>) -> Self {
        Self {
            step: rec.step,
            time: rec.time,
            rank_max: rec.rank_max,
            rank_avg: rec.rank_avg,
            mals_sweeps: rec.mals.as_ref().map_or(0, |m| m.sweeps_used),
            mals_residual: rec.mals.as_ref().map(|m| m.final_residual),
            mass: rec.sums.mass,
            momentum: rec.sums.momentum.clone(),
            energy: rec.sums.energy,
            rel_err_oracle,
            wall_ms: rec.wall_ms,
        }
    }
}

/// All rows of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunDiagnostics {
    pub dim: usize,
    pub with_oracle: bool,
    pub rows: Vec<DiagnosticsRow>,
}

pub fn csv_header(dim: usize, with_oracle: bool) -> String {
    let mut cols = vec![
        "step".to_string(),
        "time".into(),
        "rank_max".into(),
        "rank_avg".into(),
        "mals_sweeps".into(),
        "mals_residual".into(),
        "mass".into(),
    ];
    cols.extend((1..=dim).map(|i| format!("momentum_{i}")));
    cols.push("energy".into());
    if with_oracle {
        cols.push("rel_err_oracle".into());
    }
    cols.push("wall_ms".into());
    cols.join(",")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV line without trailing newline; floats use shortest round-trip form.
pub fn csv_row(row: &DiagnosticsRow, with_oracle: bool) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "{},{},{},{},{},{},{}",
        row.step,
        row.time,
        row.rank_max,
        row.rank_avg,
        row.mals_sweeps,
        opt(row.mals_residual),
        row.mass
    );
    for p in &row.momentum {
        let _ = write!(s, ",{p}");
    }
    let _ = write!(s, ",{}", row.energy);
    if with_oracle {
        let _ = write!(s, ",{}", opt(row.rel_err_oracle));
    }
    let _ = write!(s, ",{}", row.wall_ms);
    s
}

impl RunDiagnostics {
    pub fn new(dim: usize, with_oracle: bool) -> Self {
        Self {
            dim,
            with_oracle,
            rows: Vec::new(),
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", csv_header(self.dim, self.with_oracle))?;
        for r in &self.rows {
            writeln!(w, "{}", csv_row(r, self.with_oracle))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| AptError::Parse("empty diagnostics file".into()))?;
        let cols: Vec<&str> = header.split(',').collect();
        let dim = cols.iter().filter(|c| c.starts_with("momentum_")).count();
        let with_oracle = cols.contains(&"rel_err_oracle");
        if header != csv_header(dim, with_oracle) {
            return Err(AptError::Parse(format!("unexpected diagnostics header `{header}`")));
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != cols.len() {
                return Err(AptError::Parse(format!(
                    "row {}: {} fields, expected {}",
                    i + 2,
                    f.len(),
                    cols.len()
                )));
            }
            let bad = |c: usize| AptError::Parse(format!("row {}: bad value `{}` in `{}`", i + 2, f[c], cols[c]));
            let num = |c: usize| f[c].parse::<f64>().map_err(|_| bad(c));
            let int = |c: usize| f[c].parse::<usize>().map_err(|_| bad(c));
            let optional = |c: usize| -> Result<Option<f64>> {
                if f[c].is_empty() {
                    Ok(None)
                } else {
                    num(c).map(Some)
                }
            };
            let mut c = 7;
            let momentum = (0..dim).map(|k| num(c + k)).collect::<Result<Vec<_>>>()?;
            c += dim;
            let energy = num(c)?;
            c += 1;
            let rel_err_oracle = if with_oracle {
                c += 1;
                optional(c - 1)?
            } else {
                None
            };
            rows.push(DiagnosticsRow {
                step: int(0)?,
                time: num(1)?,
                rank_max: int(2)?,
                rank_avg: num(3)?,
                mals_sweeps: int(4)?,
                mals_residual: optional(5)?,
                mass: num(6)?,
                momentum,
                energy,
                rel_err_oracle,
                wall_ms: num(c)?,
            });
        }
        if rows.windows(2).any(|w| w[1].step <= w[0].step) {
            return Err(AptError::Parse(
                "diagnostics rows must be strictly increasing in step".into(),
            ));
        }
        Ok(Self { dim, with_oracle, rows })
    }
}

/// Totals smaller than this fraction of the mass count as zero. The grid is
/// not symmetric about the origin, so a symmetric Maxwellian picks up a tiny
/// momentum from the node at `-pi`.
const ZERO_TOTAL_FRACTION: f64 = 1e-6;

/// Largest deviation of one conserved total from its initial value.
#[derive(Debug, Clone, PartialEq)]
pub struct Drift {
    pub initial: f64,
    pub max_abs: f64,
    /// `max_abs / |initial|`, or `None` when the initial value is zero up to
    /// quadrature noise (below `1e-6` times the initial mass) and only the
    /// absolute drift is meaningful.
    pub max_rel: Option<f64>,
}

impl Drift {
    fn over(values: impl Iterator<Item = f64> + Clone, scale: f64) -> Self {
        let mut it = values.clone();
        let initial = it.next().unwrap_or(0.0);
        let max_abs = values.map(|v| (v - initial).abs()).fold(0.0, f64::max);
        let max_rel = (initial.abs() > ZERO_TOTAL_FRACTION * scale).then(|| max_abs / initial.abs());
        Self {
            initial,
            max_abs,
            max_rel,
        }
    }

    /// Relative drift when defined, absolute otherwise.
    pub fn reported(&self) -> f64 {
        self.max_rel.unwrap_or(self.max_abs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConservationReport {
    pub mass: Drift,
    pub momentum: Vec<Drift>,
    pub energy: Drift,
}

impl ConservationReport {
    /// The largest reported drift across all quantities.
    pub fn worst(&self) -> f64 {
        self.momentum
            .iter()
            .map(Drift::reported)
            .fold(self.mass.reported().max(self.energy.reported()), f64::max)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let line = |s: &mut String, name: &str, d: &Drift| {
            let _ = match d.max_rel {
                Some(r) => writeln!(
                    s,
                    "{name}: initial {:e}, max drift {:e} (relative {:e})",
                    d.initial, d.max_abs, r
                ),
                None => writeln!(
                    s,
                    "{name}: initial {:e}, max drift {:e} (absolute)",
                    d.initial, d.max_abs
                ),
            };
        };
        line(&mut s, "mass", &self.mass);
        for (i, d) in self.momentum.iter().enumerate() {
            line(&mut s, &format!("momentum_{}", i + 1), d);
        }
        line(&mut s, "energy", &self.energy);
        s
    }
}

/// Maximum drift of mass, momentum and energy over a run. Momentum
/// components that start at zero are reported as absolute drift.
pub fn conservation_report(diag: &RunDiagnostics) -> ConservationReport {
    let scale = diag.rows.first().map_or(1.0, |r| r.mass.abs().max(1.0));
    ConservationReport {
        mass: Drift::over(diag.rows.iter().map(|r| r.mass), scale),
        momentum: (0..diag.dim)
            .map(|i| Drift::over(diag.rows.iter().map(move |r| r.momentum[i]), scale))
            .collect(),
        energy: Drift::over(diag.rows.iter().map(|r| r.energy), scale),
    }
}
