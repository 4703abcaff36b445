//! CSV, plot-data and summary writers. Nothing written here depends on
//! timing or thread scheduling, so reruns are byte-identical.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{BirkhoffReport, ConvergenceReport, DriftDecayReport, OperatorCheck, SuiteSummary};
use crate::error::Result;

/// Fixed-format float: 15 significant digits in scientific notation.
pub fn fmt(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.14e}")
    }
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::Writer::from_path(path)?)
}

pub fn write_convergence(report: &ConvergenceReport, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "eps",
        "seed",
        "abs_error",
        "rel_error",
        "energy",
        "l2_norm",
        "linear_residual",
        "stages",
        "identity_ratio",
        "apriori",
        "drift_pairing",
        "status",
    ])?;
    for r in &report.rows {
        w.write_record([
            fmt(r.eps),
            r.seed.to_string(),
            fmt(r.abs_error),
            fmt(r.rel_error),
            fmt(r.energy),
            fmt(r.l2_norm),
            fmt(r.linear_residual),
            r.stages.to_string(),
            fmt(r.identity_ratio),
            if r.apriori_passed { "pass" } else { "fail" }.to_string(),
            r.drift_pairing.map_or_else(|| "nan".to_string(), fmt),
            r.failure.clone().unwrap_or_else(|| "ok".into()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_convergence_summary(report: &ConvergenceReport, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["eps", "median_rel_error", "median_abs_error", "min_rel_error", "max_rel_error", "ok_rows"])?;
    for m in &report.medians {
        w.write_record([
            fmt(m.eps),
            fmt(m.median_rel_error),
            fmt(m.median_abs_error),
            fmt(m.min_rel_error),
            fmt(m.max_rel_error),
            m.ok_rows.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_birkhoff(report: &BirkhoffReport, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["eps", "seed", "average", "target", "rel_error"])?;
    for r in &report.rows {
        w.write_record([fmt(r.eps), r.seed.to_string(), fmt(r.average), fmt(r.target), fmt(r.rel_error)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_drift_decay(report: &DriftDecayReport, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["eps", "seed", "pairing", "status"])?;
    for r in &report.rows {
        w.write_record([
            fmt(r.eps),
            r.seed.to_string(),
            r.drift_pairing.map_or_else(|| "nan".to_string(), fmt),
            r.failure.clone().unwrap_or_else(|| "ok".into()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_operators(checks: &[OperatorCheck], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["check", "value", "bound", "passed"])?;
    for c in checks {
        w.write_record([c.name.to_string(), fmt(c.value), fmt(c.bound), c.passed.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Two-column whitespace-separated data with a `#` header line.
pub fn write_plot(path: &Path, header: &str, points: &[(f64, f64)]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "# {header}")?;
    for (x, y) in points {
        writeln!(f, "{} {}", fmt(*x), fmt(*y))?;
    }
    Ok(())
}

/// `key = value` lines.
pub fn write_key_values(path: &Path, entries: &[(String, String)]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    for (k, v) in entries {
        writeln!(f, "{k} = {v}")?;
    }
    Ok(())
}

/// Log-log data files for the three decay curves.
pub fn emit_plotdata(summary: &SuiteSummary, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    if let Some(c) = &summary.convergence {
        let p = dir.join("convergence.dat");
        let pts: Vec<(f64, f64)> = c.medians.iter().map(|m| (m.eps, m.median_rel_error)).collect();
        write_plot(&p, "eps median_rel_error", &pts)?;
        out.push(p);
    }
    if let Some(b) = &summary.birkhoff {
        let p = dir.join("birkhoff.dat");
        write_plot(&p, "eps median_rel_error", &b.medians)?;
        out.push(p);
    }
    if let Some(d) = &summary.drift_decay {
        let p = dir.join("drift_decay.dat");
        write_plot(&p, "eps median_pairing", &d.medians)?;
        out.push(p);
    }
    Ok(out)
}

pub fn summary_entries(summary: &SuiteSummary) -> Vec<(String, String)> {
    let mut e: Vec<(String, String)> = summary
        .checks
        .iter()
        .map(|c| {
            let status = if c.passed { "pass" } else { "fail" };
            let tag = if c.mandatory { "" } else { " (informational)" };
            (format!("check.{}", c.name), format!("{status}{tag}"))
        })
        .collect();
    e.extend(summary.values.iter().cloned());
    e.push(("suite.passed".into(), summary.passed().to_string()));
    e
}

pub fn write_suite(summary: &SuiteSummary, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    if let Some(c) = &summary.convergence {
        write_convergence(c, &dir.join("convergence.csv"))?;
        write_convergence_summary(c, &dir.join("convergence_summary.csv"))?;
    }
    if let Some(b) = &summary.birkhoff {
        write_birkhoff(b, &dir.join("birkhoff.csv"))?;
    }
    if let Some(d) = &summary.drift_decay {
        write_drift_decay(d, &dir.join("drift_decay.csv"))?;
    }
    write_operators(&summary.operators, &dir.join("operators.csv"))?;
    emit_plotdata(summary, dir)?;
    write_key_values(&dir.join("summary.txt"), &summary_entries(summary))
}
