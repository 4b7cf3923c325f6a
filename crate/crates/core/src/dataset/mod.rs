//! Dataset construction: quality labeling, batch restoration of good-quality
//! frames, and paired/unpaired/test split manifests.
//!
//! Dataset root layout:
//!
//! ```text
//! records.json                 input records (paths relative to the root)
//! sites/<id>/metadata.json     per-site water column and sensor metadata
//! raw/                         source frames
//! restored/                    restored frames + `<name>.provenance.json`
//! manifests/{unpaired_train,paired_train,test}.json
//! exclusions.txt               paths removed after manual review
//! ```

mod pipeline;
mod restore;
mod split;
mod validate;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use self::pipeline::{build_dataset, DatasetConfig, DatasetSummary};
pub use self::restore::{
    restore_batch, restore_from_provenance, restored_path_for, sha256_hex, BatchOptions, BatchOutcome, Provenance, SiteSet,
};
pub use self::split::{build_splits, seeded_shuffle, ManifestHeader, Pair, SplitManifest, UnpairedSet, MANIFEST_FILES, PRNG_NAME};
pub use self::validate::{validate_manifest, Issue, IssueKind, Severity, ValidateConfig, ValidationReport};
use crate::error::{Error, Result};
use crate::imaging::TYPICAL_DISTANCE_M;

/// Native resolution of the source frames.
pub const NATIVE_DIMS: (u32, u32) = (1842, 980);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quality {
    Low,
    Good,
    Restored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    /// Relative to the dataset root.
    pub path: PathBuf,
    pub site_id: String,
    pub dive_depth_m: f64,
    /// Assigned camera–object distance; absent for low-quality frames.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_m: Option<f64>,
    /// Depth readings over the burst the frame belongs to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_series: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality: Option<Quality>,
    /// For restored records, the good-quality frame it was produced from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<PathBuf>,
}

impl ImageRecord {
    pub fn validate(&self) -> Result<()> {
        let name = self.path.display();
        if !(self.dive_depth_m.is_finite() && self.dive_depth_m >= 0.0) {
            return Err(Error::invariant(format!("{name}: dive depth must be >= 0")));
        }
        if let Some(d) = self.distance_m {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::invariant(format!("{name}: distance must be > 0")));
            }
        }
        match self.quality {
            Some(Quality::Good) if self.distance_m.is_none() => {
                Err(Error::invariant(format!("{name}: good-quality record without a distance")))
            }
            Some(Quality::Restored) if self.source.is_none() => {
                Err(Error::invariant(format!("{name}: restored record without a source")))
            }
            _ => Ok(()),
        }
    }

    pub fn distance_warning(&self) -> Option<String> {
        let d = self.distance_m?;
        let (lo, hi) = TYPICAL_DISTANCE_M;
        (d < lo || d > hi).then(|| format!("{}: distance {d} m outside {lo}-{hi} m", self.path.display()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelConfig {
    /// Largest depth change between consecutive readings for a good frame, m.
    pub depth_jitter_max_m: f64,
}

impl Default for LabelConfig {
    fn default() -> Self {
        Self { depth_jitter_max_m: 0.5 }
    }
}

/// Good when the depth series is steady and a distance is assigned; Low
/// otherwise. A pre-assigned quality is returned unchanged.
pub fn label_quality(record: &ImageRecord, config: &LabelConfig) -> Result<Quality> {
    if let Some(q) = record.quality {
        return Ok(q);
    }
    let series = record.depth_series.as_ref().ok_or_else(|| {
        Error::invariant(format!(
            "{}: neither a depth series nor a quality label",
            record.path.display()
        ))
    })?;
    if series.iter().any(|d| !d.is_finite()) {
        return Err(Error::invariant(format!("{}: non-finite depth reading", record.path.display())));
    }
    let steady = series
        .windows(2)
        .all(|w| (w[1] - w[0]).abs() <= config.depth_jitter_max_m);
    let has_distance = record.distance_m.is_some_and(|d| d > 0.0);
    Ok(if steady && has_distance {
        Quality::Good
    } else {
        Quality::Low
    })
}

/// Reads `records.json` (a JSON array of records).
pub fn load_records(path: &Path) -> Result<Vec<ImageRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let records: Vec<ImageRecord> = serde_json::from_reader(std::io::BufReader::new(file))
        .map_err(|e| Error::parse(path.display().to_string(), e))?;
    for r in &records {
        r.validate()?;
    }
    Ok(records)
}

/// Reads an exclusion list: one root-relative path per line, `#` comments.
pub fn load_exclusions(path: &Path) -> Result<BTreeSet<PathBuf>> {
    if !path.exists() {
        return Ok(BTreeSet::new());
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(PathBuf::from)
        .collect())
}
