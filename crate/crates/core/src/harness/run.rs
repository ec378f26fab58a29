//! Single scenario run with on-disk artifacts.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use super::config::{render, RunConfig};
use super::diagnostics::{
    conservation_report, csv_header, csv_row, ConservationReport, DiagnosticsRow, RunDiagnostics,
};
use super::io::{save_dense, save_tt};
use super::study::total_variation;
use crate::bgk::compute_moments;
use crate::error::{AptError, Result};
use crate::integrator::run_simulation;
use crate::oracle::{DenseModel, DenseStepper};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_POSITIVITY: i32 = 4;
pub const EXIT_IO: i32 = 5;

/// Largest field written as a dense dump.
pub const DENSE_DUMP_MAX_ENTRIES: usize = 10_000_000;

/// Relative growth of the density total variation that triggers the
/// oscillation warning.
pub const TV_WARN_GROWTH: f64 = 0.01;

/// Process exit status for a failed run.
pub fn exit_code(err: &AptError) -> i32 {
    match err {
        AptError::Config { .. }
        | AptError::Parse(_)
        | AptError::InvalidArgument(_)
        | AptError::ModeMismatch { .. }
        | AptError::SizeGuard { .. } => EXIT_CONFIG,
        AptError::NotConverged { .. }
        | AptError::SingularLocal { .. }
        | AptError::Stagnation(_)
        | AptError::Linalg(_) => EXIT_NOT_CONVERGED,
        AptError::Positivity { .. } => EXIT_POSITIVITY,
        AptError::Io(_) => EXIT_IO,
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub diagnostics: RunDiagnostics,
    pub conservation: ConservationReport,
    pub steps: usize,
    pub final_time: f64,
    pub max_oracle_error: Option<f64>,
    pub tv_initial: f64,
    pub tv_max: f64,
    pub oscillation_warning: bool,
    pub wall_s: f64,
}

struct Tracker {
    diag: RunDiagnostics,
    csv: BufWriter<File>,
    tv_initial: Option<f64>,
    tv_max: f64,
    warned: bool,
}

/// Runs one scenario and writes `diagnostics.csv`, `final_field.tt`,
/// `final_field.bin` (when small enough) and `summary.txt` into `out_dir`.
///
/// On a mid-run failure the diagnostics written so far and a summary naming
/// the error are kept and the error is returned.
pub fn run_scenario(cfg: &RunConfig, out_dir: &Path) -> Result<RunReport> {
    let b = &cfg.bgk;
    b.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let clock = Instant::now();
    let f0 = cfg.scenario.initial_field(b)?;
    let model = if cfg.compare_oracle {
        Some(DenseModel::new(b)?)
    } else {
        None
    };
    let f0_dense = model.as_ref().map(|_| f0.round(b.eps_b).to_dense());
    let mut stepper = match (&model, &f0_dense) {
        (Some(m), Some(f)) => Some(DenseStepper::new(m, f)?),
        _ => None,
    };

    let mut csv = BufWriter::new(File::create(out_dir.join("diagnostics.csv"))?);
    writeln!(csv, "{}", csv_header(b.dim, cfg.compare_oracle))?;
    let mut tr = Tracker {
        diag: RunDiagnostics::new(b.dim, cfg.compare_oracle),
        csv,
        tv_initial: None,
        tv_max: 0.0,
        warned: false,
    };

    let outcome = run_simulation(&f0, b, |rec, f| {
        let rel = match stepper.as_mut() {
            Some(st) => {
                while st.current().0 < rec.step {
                    st.advance()?;
                }
                let dense = st.current().2;
                Some(f.to_dense().relative_error(dense)?)
            }
            None => None,
        };
        let row = DiagnosticsRow::from_record(rec, rel);
        writeln!(tr.csv, "{}", csv_row(&row, cfg.compare_oracle))?;
        tr.csv.flush()?;
        tr.diag.rows.push(row);

        let tv = total_variation(&compute_moments(f, b)?.rho);
        let tv0 = *tr.tv_initial.get_or_insert(tv);
        tr.tv_max = tr.tv_max.max(tv);
        if !tr.warned && tv > (1.0 + TV_WARN_GROWTH) * tv0 {
            tr.warned = true;
            log::warn!(
                "density total variation grew from {tv0:e} to {tv:e} by step {}; spurious oscillations likely{}",
                rec.step,
                if b.eps_diss == 0.0 {
                    ", consider enabling dissipation"
                } else {
                    ""
                }
            );
        }
        Ok(())
    });

    let conservation = conservation_report(&tr.diag);
    let oracle_max = tr
        .diag
        .rows
        .iter()
        .filter_map(|r| r.rel_err_oracle)
        .fold(None, |acc: Option<f64>, e| Some(acc.map_or(e, |a| a.max(e))));
    let mut report = RunReport {
        conservation,
        steps: tr.diag.rows.last().map_or(0, |r| r.step),
        final_time: tr.diag.rows.last().map_or(0.0, |r| r.time),
        diagnostics: tr.diag,
        max_oracle_error: oracle_max,
        tv_initial: tr.tv_initial.unwrap_or(0.0),
        tv_max: tr.tv_max,
        oscillation_warning: tr.warned,
        wall_s: 0.0,
    };
    let status = match &outcome {
        Ok(out) => {
            let (n, m) = (b.order(), b.m);
            save_tt(&out_dir.join("final_field.tt"), b.dim, m, &out.final_field)?;
            if m.checked_pow(n as u32).is_some_and(|e| e <= DENSE_DUMP_MAX_ENTRIES) {
                save_dense(&out_dir.join("final_field.bin"), b.dim, m, &out.final_field.to_dense())?;
            }
            "ok".to_string()
        }
        Err(e) => format!("aborted (exit {}): {e}", exit_code(e)),
    };
    report.wall_s = clock.elapsed().as_secs_f64();
    std::fs::write(out_dir.join("summary.txt"), render_summary(cfg, &report, &status))?;
    outcome.map(|_| report)
}

fn render_summary(cfg: &RunConfig, r: &RunReport, status: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "status: {status}");
    let _ = writeln!(s, "steps: {}", r.steps);
    let _ = writeln!(s, "final_time: {}", r.final_time);
    let _ = writeln!(s, "wall_s: {:.3}", r.wall_s);
    let rows = &r.diagnostics.rows;
    if !rows.is_empty() {
        let avg = rows.iter().map(|x| x.rank_avg).sum::<f64>() / rows.len() as f64;
        let max = rows.iter().map(|x| x.rank_max).max().unwrap_or(0);
        let _ = writeln!(s, "rank_avg_over_run: {avg:.3}");
        let _ = writeln!(s, "rank_max_over_run: {max}");
    }
    if let Some(e) = r.max_oracle_error {
        let _ = writeln!(s, "max_rel_err_oracle: {e:e}");
    }
    let _ = writeln!(s, "density_tv_initial: {:e}", r.tv_initial);
    let _ = writeln!(s, "density_tv_max: {:e}", r.tv_max);
    if r.oscillation_warning {
        let _ = writeln!(
            s,
            "warning: density total variation grew by more than {}%; spurious oscillations likely",
            TV_WARN_GROWTH * 100.0
        );
    }
    let _ = writeln!(s, "\n[conservation]");
    s.push_str(&r.conservation.render());
    let _ = writeln!(s, "\n[config]");
    s.push_str(&render(cfg));
    s
}
