//! CSV writers. Floats use Rust's shortest round-trip formatting, so the
//! same results always produce the same bytes.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use super::{stats, Algorithm, RunResult};
use crate::Result;

pub const SAMPLES_HEADER: &str = "sweep_var,sweep_value,algorithm,trial,min_snr_db";
pub const SUMMARY_HEADER: &str = "sweep_var,sweep_value,algorithm,mean_db,p10_db,p50_db,p90_db";
pub const CDF_HEADER: &str = "algorithm,min_snr_db,cdf";

pub fn write_samples<W: Write>(r: &RunResult, mut w: W) -> io::Result<()> {
    writeln!(w, "{SAMPLES_HEADER}")?;
    let var = r.sweep_var.name();
    for s in &r.samples {
        writeln!(w, "{var},{},{},{},{}", s.sweep_value, s.algorithm, s.trial, s.min_snr_db)?;
    }
    Ok(())
}

pub fn write_summary<W: Write>(r: &RunResult, mut w: W) -> io::Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    let var = r.sweep_var.name();
    for row in r.summary() {
        writeln!(
            w,
            "{var},{},{},{},{},{},{}",
            row.sweep_value, row.algorithm, row.mean_db, row.p10_db, row.p50_db, row.p90_db
        )?;
    }
    Ok(())
}

/// Empirical CDF knots per algorithm, pooled over all sweep values.
pub fn write_cdf<W: Write>(r: &RunResult, mut w: W) -> io::Result<()> {
    writeln!(w, "{CDF_HEADER}")?;
    for &a in &r.algorithms {
        let values: Vec<f64> =
            r.samples.iter().filter(|s| s.algorithm == a).map(|s| s.min_snr_db).collect();
        for (x, f) in stats::empirical_cdf(&values) {
            writeln!(w, "{a},{x},{f}")?;
        }
    }
    Ok(())
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    let ext = path.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    path.with_file_name(format!("{stem}_{suffix}{ext}"))
}

/// Files produced by [`write_all`].
#[derive(Debug, Clone, PartialEq)]
pub struct Written {
    pub samples: PathBuf,
    pub summary: PathBuf,
    pub cdf: Option<PathBuf>,
}

/// Writes `<out>` (samples), `<stem>_summary.<ext>` and, if requested,
/// `<stem>_cdf.<ext>`.
pub fn write_all(r: &RunResult, out: &Path, with_cdf: bool) -> Result<Written> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let write = |path: &Path, f: &dyn Fn(&mut Vec<u8>) -> io::Result<()>| -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        fs::write(path, buf)?;
        Ok(())
    };
    let summary = sibling(out, "summary");
    write(out, &|b| write_samples(r, b))?;
    write(&summary, &|b| write_summary(r, b))?;
    let cdf = if with_cdf {
        let p = sibling(out, "cdf");
        write(&p, &|b| write_cdf(r, b))?;
        Some(p)
    } else {
        None
    };
    Ok(Written { samples: out.to_path_buf(), summary, cdf })
}

/// Fraction of an algorithm's samples at or below `x_db`.
pub fn cdf_at(r: &RunResult, sweep_value: f64, algorithm: Algorithm, x_db: f64) -> f64 {
    stats::cdf_at(&r.values(sweep_value, algorithm), x_db)
}
