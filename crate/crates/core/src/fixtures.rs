//! Seeded synthetic scenes and datasets for tests, demos and benchmarks.

use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::dataset::{ImageRecord, Quality};
use crate::error::{Error, Result};
use crate::imaging::{degrade_with_geometry, SceneGeometry};
use crate::raster::{write_atomic, ImagePlane};
use crate::site::{write_synthetic_site, Site};
use crate::spectral::{IntegrationBounds, Normalization};

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn range(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit(rng)
}

/// An in-air-like scene: a colored gradient background with soft blobs and
/// fine texture. Every sample lies in `[floor, 1]`.
pub fn synthetic_scene(width: usize, height: usize, seed: u64, floor: f64) -> Result<ImagePlane> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let corner: Vec<[f64; 3]> = (0..4)
        .map(|_| [range(&mut rng, 0.2, 0.9), range(&mut rng, 0.2, 0.9), range(&mut rng, 0.2, 0.9)])
        .collect();
    let blobs: Vec<(f64, f64, f64, [f64; 3])> = (0..6)
        .map(|_| {
            (
                range(&mut rng, 0.0, width as f64),
                range(&mut rng, 0.0, height as f64),
                range(&mut rng, 0.08, 0.3) * width.min(height) as f64,
                [range(&mut rng, 0.0, 1.0), range(&mut rng, 0.0, 1.0), range(&mut rng, 0.0, 1.0)],
            )
        })
        .collect();
    let noise: Vec<f64> = (0..width * height).map(|_| range(&mut rng, -0.06, 0.06)).collect();
    ImagePlane::from_fn(width, height, |x, y| {
        let u = x as f64 / (width.max(2) - 1) as f64;
        let v = y as f64 / (height.max(2) - 1) as f64;
        let mut px = [0.0; 3];
        for (c, out) in px.iter_mut().enumerate() {
            let top = corner[0][c] * (1.0 - u) + corner[1][c] * u;
            let bottom = corner[2][c] * (1.0 - u) + corner[3][c] * u;
            *out = top * (1.0 - v) + bottom * v;
        }
        for (bx, by, r, color) in &blobs {
            let d2 = ((x as f64 - bx).powi(2) + (y as f64 - by).powi(2)) / (r * r);
            let w = (-d2).exp();
            for c in 0..3 {
                px[c] = px[c] * (1.0 - w) + color[c] * w;
            }
        }
        let n = noise[y * width + x];
        px.map(|p| (p + n).clamp(floor, 1.0))
    })
}

/// Size of the frames written by [`write_toy_dataset`].
pub const TOY_DIMS: (usize, usize) = (48, 32);

/// Writes a small dataset root: one synthetic site, `n` raw frames degraded
/// through the site's water column, and `records.json`. Roughly 60% of the
/// frames are steady with an assigned distance; the rest have depth jumps
/// or no distance.
pub fn write_toy_dataset(root: &Path, n: usize, seed: u64) -> Result<Vec<ImageRecord>> {
    let site_path = write_synthetic_site(&root.join("sites/heron-01"), "heron-01")?;
    let site = Site::load(&site_path)?;
    let p = site.channel_attenuation(IntegrationBounds::default(), Normalization::WeightedMean)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let depth = range(&mut rng, 2.0, 10.0);
        let distance = range(&mut rng, 1.0, 5.0);
        let steady = i % 5 < 3;
        let series: Vec<f64> = (0..6)
            .map(|k| {
                let jump = if !steady && i % 2 == 0 && k >= 3 { 2.0 } else { 0.0 };
                depth + jump + range(&mut rng, -0.1, 0.1)
            })
            .collect();
        let scene = synthetic_scene(TOY_DIMS.0, TOY_DIMS.1, seed.wrapping_mul(1000).wrapping_add(i as u64), 0.06)?;
        let geometry = SceneGeometry::new(distance, depth)?;
        let raw = degrade_with_geometry(&scene, &p, &geometry)?;
        let rel = format!("raw/frame_{i:03}.png");
        raw.save_png(&root.join(&rel))?;
        records.push(ImageRecord {
            path: rel.into(),
            site_id: site.id.clone(),
            dive_depth_m: depth,
            distance_m: (steady || i % 2 == 0).then_some(distance),
            depth_series: Some(series),
            quality: None,
            source: None,
        });
    }
    let json = serde_json::to_string_pretty(&records).map_err(|e| Error::parse("records", e))?;
    write_atomic(&root.join("records.json"), json.as_bytes())?;
    Ok(records)
}

/// Number of records in `records` that label as `quality` under default thresholds.
pub fn count_labeled(records: &[ImageRecord], quality: Quality) -> usize {
    let cfg = crate::dataset::LabelConfig::default();
    records
        .iter()
        .filter(|r| crate::dataset::label_quality(r, &cfg).ok() == Some(quality))
        .count()
}
