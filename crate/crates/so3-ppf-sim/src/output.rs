//! Trajectory CSV and summary JSON writers.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a file
//! re-read parses to bit-identical values and identical runs produce
//! byte-identical files.

use crate::experiment::{EnsembleStats, SummaryStats, TrajectoryRecord};
use crate::Result;
use std::io::Write;
use std::path::Path;

pub const CSV_HEADER: &str = "t,dist,xi,E,mu,phi_true,theta_true,psi_true,phi_est,theta_est,psi_est,bhat_x,bhat_y,bhat_z,sigmahat_x,sigmahat_y,sigmahat_z,w_norm";

/// Writes one row per sample under a fixed header.
pub fn write_csv(record: &TrajectoryRecord, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{CSV_HEADER}")?;
    for r in &record.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.t,
            r.dist,
            r.xi,
            r.e,
            r.mu,
            r.euler_true.roll,
            r.euler_true.pitch,
            r.euler_true.yaw,
            r.euler_est.roll,
            r.euler_est.pitch,
            r.euler_est.yaw,
            r.b_hat.x,
            r.b_hat.y,
            r.b_hat.z,
            r.sigma_hat.x,
            r.sigma_hat.y,
            r.sigma_hat.z,
            r.w_norm,
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Flat key/value summary of one run.
pub fn write_summary_json(summary: &SummaryStats, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(summary).expect("summary serializes");
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Ensemble summary with per-run details.
pub fn write_ensemble_json(stats: &EnsembleStats, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(stats).expect("ensemble serializes");
    std::fs::write(path, text + "\n")?;
    Ok(())
}
