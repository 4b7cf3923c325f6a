//! Full-reference (MSE, PSNR, SSIM) and no-reference (UIQM) image metrics.

mod ssim;
mod uiqm;
pub mod uiqm_params;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use self::ssim::{gaussian_kernel, ssim, ssim_plane, SsimMode};
pub use self::uiqm::{eme, sobel_magnitude, trimmed_mean, uicm, uiconm, uiqm, uism, UiqmScore};
use crate::error::{Error, Result};
use crate::raster::{write_atomic, ImagePlane};

pub const PEAK: f64 = 255.0;
/// PSNR reported for identical images.
pub const PSNR_CAP_DB: f64 = 100.0;

/// Mean squared error on the 8-bit scale.
pub fn mse(a: &ImagePlane, b: &ImagePlane) -> Result<f64> {
    a.ensure_same_shape(b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| {
            let d = (x - y) * PEAK;
            d * d
        })
        .sum();
    Ok(sum / a.data().len() as f64)
}

/// `10·log10(peak²/mse)`, or [`PSNR_CAP_DB`] when `mse` is zero.
pub fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse <= 0.0 {
        PSNR_CAP_DB
    } else {
        (10.0 * (peak * peak / mse).log10()).min(PSNR_CAP_DB)
    }
}

pub fn psnr(a: &ImagePlane, b: &ImagePlane) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?, PEAK))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mse: f64,
    pub psnr: f64,
    /// Set when `psnr` is the cap standing in for +∞.
    pub psnr_inf: bool,
    pub ssim: f64,
    pub uicm: f64,
    pub uism: f64,
    pub uiconm: f64,
    pub uiqm: f64,
}

/// Full-reference metrics of `test` against `reference`, plus UIQM of `test`.
pub fn evaluate_pair(test: &ImagePlane, reference: &ImagePlane, mode: SsimMode) -> Result<MetricReport> {
    let mse = mse(test, reference)?;
    let q = uiqm(test)?;
    Ok(MetricReport {
        mse,
        psnr: psnr_from_mse(mse, PEAK),
        psnr_inf: mse == 0.0,
        ssim: ssim(test, reference, mode)?,
        uicm: q.uicm,
        uism: q.uism,
        uiconm: q.uiconm,
        uiqm: q.uiqm,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRow {
    pub filename: String,
    #[serde(flatten)]
    pub report: MetricReport,
}

/// Per-image metrics of a test set and their aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub count: usize,
    pub ssim_mode: SsimMode,
    pub rows: Vec<EvaluationRow>,
    /// Arithmetic means of the per-image values.
    pub mean: MetricReport,
    /// PSNR computed once from the mean MSE.
    pub psnr_of_mean_mse: f64,
}

impl Evaluation {
    pub fn from_rows(rows: Vec<EvaluationRow>, ssim_mode: SsimMode) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invariant("nothing to evaluate"));
        }
        let n = rows.len() as f64;
        let avg = |f: fn(&MetricReport) -> f64| rows.iter().map(|r| f(&r.report)).sum::<f64>() / n;
        let mean = MetricReport {
            mse: avg(|r| r.mse),
            psnr: avg(|r| r.psnr),
            psnr_inf: rows.iter().all(|r| r.report.psnr_inf),
            ssim: avg(|r| r.ssim),
            uicm: avg(|r| r.uicm),
            uism: avg(|r| r.uism),
            uiconm: avg(|r| r.uiconm),
            uiqm: avg(|r| r.uiqm),
        };
        Ok(Self {
            count: rows.len(),
            ssim_mode,
            psnr_of_mean_mse: psnr_from_mse(mean.mse, PEAK),
            rows,
            mean,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("filename,mse,psnr,ssim,uicm,uism,uiconm,uiqm\n");
        let line = |name: &str, r: &MetricReport| {
            format!(
                "{name},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                r.mse, r.psnr, r.ssim, r.uicm, r.uism, r.uiconm, r.uiqm
            )
        };
        for row in &self.rows {
            out.push_str(&line(&row.filename, &row.report));
        }
        out.push_str(&line("MEAN", &self.mean));
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("evaluation serializes")
    }

    /// Writes `<stem>.csv` and `<stem>.json` next to each other.
    pub fn write(&self, csv_path: &Path) -> Result<()> {
        write_atomic(csv_path, self.to_csv().as_bytes())?;
        write_atomic(&csv_path.with_extension("json"), self.to_json().as_bytes())
    }
}

/// PNG files directly inside `dir`, sorted by name.
pub fn list_pngs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_png = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if path.is_file() && is_png {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn file_names(paths: &[PathBuf]) -> BTreeSet<String> {
    paths
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect()
}

/// Evaluates every PNG in `test_dir` against the same-named file in
/// `reference_dir`. Any name present on one side only is an error.
pub fn evaluate_dirs(test_dir: &Path, reference_dir: &Path, mode: SsimMode) -> Result<Evaluation> {
    let tests = file_names(&list_pngs(test_dir)?);
    let refs = file_names(&list_pngs(reference_dir)?);
    let unmatched: Vec<String> = tests
        .symmetric_difference(&refs)
        .map(|n| {
            if tests.contains(n) {
                format!("{n} (no reference)")
            } else {
                format!("{n} (no test image)")
            }
        })
        .collect();
    if !unmatched.is_empty() {
        return Err(Error::invariant(format!("unmatched files: {}", unmatched.join(", "))));
    }
    let names: Vec<String> = tests.into_iter().collect();
    let rows = names
        .par_iter()
        .map(|name| {
            let test = ImagePlane::load_png(&test_dir.join(name))?;
            let reference = ImagePlane::load_png(&reference_dir.join(name))?;
            let report = evaluate_pair(&test, &reference, mode)
                .map_err(|e| Error::invariant(format!("{name}: {e}")))?;
            Ok(EvaluationRow {
                filename: name.clone(),
                report,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Evaluation::from_rows(rows, mode)
}
