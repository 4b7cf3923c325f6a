//! Per-site water-column metadata and the spectra it references.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::write_atomic;
use crate::spectral::{
    channel_attenuations, synthetic, ChannelAttenuation, ChannelResponses, CurveKind, IntegrationBounds,
    Normalization, SpectralCurve,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponsePaths {
    pub r: PathBuf,
    pub g: PathBuf,
    pub b: PathBuf,
}

/// Contents of a site's `metadata.json`. CSV paths are relative to the
/// directory holding the metadata file unless absolute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site_id: Option<String>,
    pub water_type: String,
    pub max_dive_depth_m: f64,
    pub camera_model: String,
    pub attenuation_csv: PathBuf,
    pub sensor_response_csv: ResponsePaths,
}

/// A site with its spectra loaded and validated.
#[derive(Debug, Clone)]
pub struct Site {
    pub id: String,
    pub metadata: SiteMetadata,
    pub attenuation: SpectralCurve,
    pub responses: ChannelResponses,
}

impl Site {
    /// Reads `metadata.json` and every curve it references.
    pub fn load(metadata_path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(metadata_path).map_err(|e| Error::io(metadata_path, e))?;
        let metadata: SiteMetadata =
            serde_json::from_str(&text).map_err(|e| Error::parse(metadata_path.display().to_string(), e))?;
        if !(metadata.max_dive_depth_m.is_finite() && metadata.max_dive_depth_m >= 0.0) {
            return Err(Error::parse(
                metadata_path.display().to_string(),
                "max_dive_depth_m must be finite and >= 0",
            ));
        }
        let base = metadata_path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let attenuation = SpectralCurve::load_csv(&resolve(&metadata.attenuation_csv), CurveKind::Attenuation)?;
        let paths = &metadata.sensor_response_csv;
        let responses = ChannelResponses {
            r: SpectralCurve::load_csv(&resolve(&paths.r), CurveKind::SensorResponse)?,
            g: SpectralCurve::load_csv(&resolve(&paths.g), CurveKind::SensorResponse)?,
            b: SpectralCurve::load_csv(&resolve(&paths.b), CurveKind::SensorResponse)?,
        };
        let id = metadata.site_id.clone().unwrap_or_else(|| {
            base.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "site".to_owned())
        });
        Ok(Self {
            id,
            metadata,
            attenuation,
            responses,
        })
    }

    pub fn channel_attenuation(&self, bounds: IntegrationBounds, normalize: Normalization) -> Result<ChannelAttenuation> {
        channel_attenuations(&self.attenuation, &self.responses, bounds, normalize)
    }
}

/// Writes a site directory built from the bundled synthetic spectra,
/// returning the path of its `metadata.json`.
pub fn write_synthetic_site(dir: &Path, site_id: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, body) in synthetic::csv_sources() {
        write_atomic(&dir.join(name), body.as_bytes())?;
    }
    let metadata = SiteMetadata {
        site_id: Some(site_id.to_owned()),
        water_type: "synthetic clear reef".to_owned(),
        max_dive_depth_m: 10.0,
        camera_model: "CMV2000 (synthetic response)".to_owned(),
        attenuation_csv: "attenuation.csv".into(),
        sensor_response_csv: ResponsePaths {
            r: "response_r.csv".into(),
            g: "response_g.csv".into(),
            b: "response_b.csv".into(),
        },
    };
    let path = dir.join("metadata.json");
    let json = serde_json::to_string_pretty(&metadata).expect("metadata serializes");
    write_atomic(&path, json.as_bytes())?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_site_loads_and_orders_channels() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_synthetic_site(&dir.path().join("heron"), "heron-01").unwrap();
        let site = Site::load(&path).unwrap();
        assert_eq!(site.id, "heron-01");
        let p = site
            .channel_attenuation(IntegrationBounds::default(), Normalization::WeightedMean)
            .unwrap();
        assert!(p.r > p.g && p.g > p.b);
    }

    #[test]
    fn missing_curve_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_synthetic_site(dir.path(), "x").unwrap();
        std::fs::remove_file(dir.path().join("response_g.csv")).unwrap();
        let err = Site::load(&path).unwrap_err();
        assert_eq!(err.kind(), crate::ErrorKind::Io);
    }

    #[test]
    fn malformed_metadata_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metadata.json");
        std::fs::write(&path, "{\"water_type\": 3}").unwrap();
        assert_eq!(Site::load(&path).unwrap_err().kind(), crate::ErrorKind::Parse);
    }
}
