//! CSV writing and reading: comma-separated, header row, LF line endings,
//! UTF-8, floats rendered with 17 significant digits so identical runs
//! produce byte-identical files.

use std::fs;
use std::path::Path;

use iterreg::data::{LabeledSample, PointSet};
use iterreg::engine::TrainRecord;
use iterreg::experiment::RateCell;

use crate::config::Failure;

/// 17 significant digits: enough to reproduce any f64 exactly.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the per-iteration path. Every row describes one iterate `f_t`:
/// its empirical risk and norm, plus the step taken from it. When the run
/// used a hold-out rule the validation column is present and a marker row
/// repeating the chosen iterate `t*` is appended after the horizon.
pub fn write_path_csv(
    path: &Path,
    records: &[TrainRecord],
    marker_t: Option<usize>,
) -> Result<(), Failure> {
    let has_validation = records.first().is_some_and(|r| r.validation_risk.is_some());
    let mut out = String::new();
    out.push_str("t,eta_t,empirical_risk,rkhs_norm,subgrad_norm");
    if has_validation {
        out.push_str(",validation_risk");
    }
    out.push('\n');
    let mut push_row = |r: &TrainRecord| {
        out.push_str(&format!(
            "{},{},{},{},{}",
            r.t,
            fmt_float(r.eta),
            fmt_float(r.empirical_risk),
            fmt_float(r.rkhs_norm),
            fmt_float(r.subgradient_norm),
        ));
        if has_validation {
            let v = r.validation_risk.expect("validation column is all-or-none");
            out.push(',');
            out.push_str(&fmt_float(v));
        }
        out.push('\n');
    };
    for r in records {
        push_row(r);
    }
    if let Some(t) = marker_t {
        let marked = records
            .iter()
            .find(|r| r.t == t)
            .ok_or_else(|| Failure::config(format!("marker index {t} not in records")))?;
        push_row(marked);
    }
    fs::write(path, out)
        .map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

/// Writes a drawn sample: feature columns `x0..x{d-1}`, label column `y`.
pub fn write_sample_csv(path: &Path, sample: &LabeledSample) -> Result<(), Failure> {
    let dim = sample.points.dim();
    let mut out = String::new();
    for j in 0..dim {
        out.push_str(&format!("x{j},"));
    }
    out.push_str("y\n");
    for i in 0..sample.len() {
        for v in sample.points.point(i) {
            out.push_str(&fmt_float(*v));
            out.push(',');
        }
        out.push_str(&fmt_float(sample.labels[i]));
        out.push('\n');
    }
    fs::write(path, out)
        .map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

/// Reads a sample in the same layout `write_sample_csv` produces: a header
/// row, then one row per point with the label in the last column.
pub fn read_sample_csv(path: &Path) -> Result<LabeledSample, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r'));
    let header = lines.next().ok_or_else(|| Failure::config("CSV is empty"))?;
    let columns = header.split(',').count();
    if columns < 2 {
        return Err(Failure::config("CSV needs at least one feature column and a label column"));
    }
    let dim = columns - 1;
    let mut coords = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns {
            return Err(Failure::config(format!(
                "CSV row {} has {} fields, expected {columns}",
                lineno + 2,
                fields.len()
            )));
        }
        for (k, field) in fields.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Failure::config(format!("CSV row {}: `{field}` is not a number", lineno + 2))
            })?;
            if k < dim {
                coords.push(v);
            } else {
                labels.push(v);
            }
        }
    }
    let points = PointSet::new(coords, dim)?;
    Ok(LabeledSample::new(points, labels)?)
}

/// Writes sweep cells, one row per `(m, repetition, variant)`.
pub fn write_rates_csv(path: &Path, cells: &[RateCell]) -> Result<(), Failure> {
    let mut out = String::from("m,repetition,variant,excess_risk,stop_t,wall_seconds\n");
    for cell in cells {
        for (variant, excess) in [
            ("last", cell.excess_last),
            ("averaged", cell.excess_averaged),
            ("best", cell.excess_best),
        ] {
            out.push_str(&format!(
                "{},{},{variant},{},{},{}\n",
                cell.m,
                cell.rep,
                fmt_float(excess),
                cell.stop_t,
                fmt_float(cell.wall_seconds),
            ));
        }
    }
    fs::write(path, out)
        .map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}
