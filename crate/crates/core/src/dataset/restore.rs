use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ImageRecord, Quality};
use crate::error::{Error, Result};
use crate::imaging::{restore, Medium, RestoreParams, SceneGeometry};
use crate::raster::{write_atomic, ImagePlane};
use crate::site::Site;
use crate::spectral::{ChannelAttenuation, IntegrationBounds, Normalization};

/// Loaded sites keyed by id.
#[derive(Debug, Clone, Default)]
pub struct SiteSet {
    sites: BTreeMap<String, Site>,
}

impl SiteSet {
    pub fn insert(&mut self, site: Site) {
        self.sites.insert(site.id.clone(), site);
    }

    pub fn get(&self, id: &str) -> Option<&Site> {
        self.sites.get(id)
    }

    /// Loads `sites/<id>/metadata.json` for each id; ids that fail to load
    /// are returned with their error instead.
    pub fn load_from_root<'a>(root: &Path, ids: impl IntoIterator<Item = &'a str>) -> (Self, Vec<(String, Error)>) {
        let mut set = Self::default();
        let mut failed = Vec::new();
        for id in ids {
            if set.sites.contains_key(id) {
                continue;
            }
            match Site::load(&root.join("sites").join(id).join("metadata.json")) {
                Ok(mut site) => {
                    site.id = id.to_owned();
                    set.insert(site);
                }
                Err(e) => failed.push((id.to_owned(), e)),
            }
        }
        (set, failed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchOptions {
    pub params: RestoreParams,
    pub bounds: IntegrationBounds,
    pub normalize: Normalization,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self {
            params: RestoreParams::default(),
            bounds: IntegrationBounds::default(),
            normalize: Normalization::WeightedMean,
        }
    }
}

/// Everything needed to redo one restoration exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: PathBuf,
    pub source_sha256: String,
    pub output: PathBuf,
    pub output_sha256: String,
    pub site_id: String,
    pub attenuation: ChannelAttenuation,
    pub geometry: SceneGeometry,
    pub medium: Medium,
    pub params: RestoreParams,
    pub bounds: IntegrationBounds,
    pub normalize: Normalization,
}

impl Provenance {
    pub fn sidecar_path(image: &Path) -> PathBuf {
        image.with_extension("provenance.json")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("provenance serializes")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Default)]
pub struct BatchOutcome {
    /// One restored record per successfully restored good frame, in input order.
    pub restored: Vec<ImageRecord>,
    /// Records that were skipped, with the reason.
    pub failures: Vec<(PathBuf, String)>,
}

/// Where the restored counterpart of `source` goes: the source path with a
/// leading `raw/` swapped for `restored/`.
pub fn restored_path_for(source: &Path) -> PathBuf {
    let rest = source.strip_prefix("raw").unwrap_or(source);
    Path::new("restored").join(rest).with_extension("png")
}

/// Restores every good-quality record under `root`, writing PNGs and
/// provenance sidecars. Runs on the current rayon pool.
pub fn restore_batch(root: &Path, records: &[ImageRecord], sites: &SiteSet, options: &BatchOptions) -> BatchOutcome {
    let results: Vec<(PathBuf, Result<ImageRecord>)> = records
        .par_iter()
        .filter(|r| r.quality == Some(Quality::Good))
        .map(|r| (r.path.clone(), restore_one(root, r, sites, options)))
        .collect();
    let mut outcome = BatchOutcome::default();
    for (path, result) in results {
        match result {
            Ok(rec) => outcome.restored.push(rec),
            Err(e) => {
                log::warn!("skipping {}: {e}", path.display());
                outcome.failures.push((path, e.to_string()));
            }
        }
    }
    outcome
}

fn restore_one(root: &Path, record: &ImageRecord, sites: &SiteSet, options: &BatchOptions) -> Result<ImageRecord> {
    let site = sites
        .get(&record.site_id)
        .ok_or_else(|| Error::invariant(format!("unknown site `{}`", record.site_id)))?;
    let distance = record
        .distance_m
        .ok_or_else(|| Error::invariant("good-quality record without a distance"))?;
    let geometry = SceneGeometry::new(distance, record.dive_depth_m)?;
    if let Some(w) = record.distance_warning() {
        log::warn!("{w}");
    }
    let attenuation = site.channel_attenuation(options.bounds, options.normalize)?;
    let source_path = root.join(&record.path);
    let source_bytes = std::fs::read(&source_path).map_err(|e| Error::io(&source_path, e))?;
    let observed = ImagePlane::load_png(&source_path)?;
    let medium = Medium::from_geometry(&attenuation, &geometry)?;
    let restored = restore(&observed, medium.transmission, medium.airlight, &options.params)?;
    let png = restored.encode_png()?;

    let output = restored_path_for(&record.path);
    let provenance = Provenance {
        source: record.path.clone(),
        source_sha256: sha256_hex(&source_bytes),
        output: output.clone(),
        output_sha256: sha256_hex(&png),
        site_id: record.site_id.clone(),
        attenuation,
        geometry,
        medium,
        params: options.params,
        bounds: options.bounds,
        normalize: options.normalize,
    };
    let out_abs = root.join(&output);
    write_atomic(&out_abs, &png)?;
    write_atomic(&Provenance::sidecar_path(&out_abs), provenance.to_json().as_bytes())?;

    Ok(ImageRecord {
        path: output,
        site_id: record.site_id.clone(),
        dive_depth_m: record.dive_depth_m,
        distance_m: record.distance_m,
        depth_series: None,
        quality: Some(Quality::Restored),
        source: Some(record.path.clone()),
    })
}

/// Re-runs a restoration from its provenance alone, returning PNG bytes.
/// Fails if the source no longer matches the recorded hash.
pub fn restore_from_provenance(root: &Path, provenance: &Provenance) -> Result<Vec<u8>> {
    let source_path = root.join(&provenance.source);
    let bytes = std::fs::read(&source_path).map_err(|e| Error::io(&source_path, e))?;
    if sha256_hex(&bytes) != provenance.source_sha256 {
        return Err(Error::invariant(format!("{} changed since restoration", source_path.display())));
    }
    let observed = ImagePlane::load_png(&source_path)?;
    let m = &provenance.medium;
    restore(&observed, m.transmission, m.airlight, &provenance.params)?.encode_png()
}
