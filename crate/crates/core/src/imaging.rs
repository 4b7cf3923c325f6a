//! Underwater image formation and its inverse.
//!
//! Forward: `I = J·t + A·(1 − t)` per channel, with transmission
//! `t = exp(−p·d)` and depth-derived background light `A = exp(−p·φ)`.
//! Inverse: `J = (I − A) / max(t, t0) + A`, followed by range handling and
//! an optional per-channel contrast stretch.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{to_u8, ImagePlane, CHANNELS};
use crate::spectral::ChannelAttenuation;

/// Distances the restoration model was calibrated for, metres.
pub const TYPICAL_DISTANCE_M: (f64, f64) = (1.0, 5.0);

/// Camera–object distance and dive depth for one image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneGeometry {
    pub distance_m: f64,
    pub dive_depth_m: f64,
}

impl SceneGeometry {
    pub fn new(distance_m: f64, dive_depth_m: f64) -> Result<Self> {
        let g = Self {
            distance_m,
            dive_depth_m,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.distance_m.is_finite() && self.distance_m > 0.0) {
            return Err(Error::invariant(format!("distance {} m must be > 0", self.distance_m)));
        }
        if !(self.dive_depth_m.is_finite() && self.dive_depth_m >= 0.0) {
            return Err(Error::invariant(format!("dive depth {} m must be >= 0", self.dive_depth_m)));
        }
        Ok(())
    }

    /// A message when the distance is outside [`TYPICAL_DISTANCE_M`].
    pub fn distance_warning(&self) -> Option<String> {
        let (lo, hi) = TYPICAL_DISTANCE_M;
        (self.distance_m < lo || self.distance_m > hi)
            .then(|| format!("distance {} m outside the typical {lo}-{hi} m range", self.distance_m))
    }

    /// Reads a `{ "distance_m": .., "dive_depth_m": .. }` sidecar.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let g: Self = serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))?;
        g.validate()?;
        Ok(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestoreParams {
    /// Lower bound on the transmission used as divisor.
    pub t0: f64,
    /// Inclusive 8-bit input range inverted without clamping.
    pub keep_range: (u8, u8),
    /// Per-channel min–max stretch to `[0, 1]` after inversion.
    pub rescale: bool,
}

impl Default for RestoreParams {
    fn default() -> Self {
        Self {
            t0: 0.1,
            keep_range: (13, 255),
            rescale: true,
        }
    }
}

impl RestoreParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t0 > 0.0 && self.t0 <= 1.0) {
            return Err(Error::invariant(format!("t0 = {} must lie in (0, 1]", self.t0)));
        }
        let (lo, hi) = self.keep_range;
        if lo >= hi {
            return Err(Error::invariant(format!("keep range {lo}:{hi} needs lo < hi")));
        }
        Ok(())
    }
}

/// Per-channel transmission and background light for one image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Medium {
    pub transmission: [f64; 3],
    pub airlight: [f64; 3],
}

impl Medium {
    pub fn from_geometry(p: &ChannelAttenuation, geometry: &SceneGeometry) -> Result<Self> {
        Ok(Self {
            transmission: transmission(p, geometry.distance_m)?,
            airlight: airlight(p, geometry.dive_depth_m)?,
        })
    }
}

/// `t_c = exp(−p_c·d)`.
pub fn transmission(p: &ChannelAttenuation, distance_m: f64) -> Result<[f64; 3]> {
    p.validate()?;
    if !(distance_m.is_finite() && distance_m > 0.0) {
        return Err(Error::invariant(format!("distance {distance_m} m must be > 0")));
    }
    Ok(p.to_array().map(|pc| (-pc * distance_m).exp()))
}

/// `A_c = exp(−p_c·φ)`.
pub fn airlight(p: &ChannelAttenuation, dive_depth_m: f64) -> Result<[f64; 3]> {
    p.validate()?;
    if !(dive_depth_m.is_finite() && dive_depth_m >= 0.0) {
        return Err(Error::invariant(format!("dive depth {dive_depth_m} m must be >= 0")));
    }
    Ok(p.to_array().map(|pc| (-pc * dive_depth_m).exp()))
}

fn check_medium(t: &[f64; 3], a: &[f64; 3]) -> Result<()> {
    if t.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
        return Err(Error::invariant(format!("transmission {t:?} must lie in (0, 1]")));
    }
    if a.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::invariant(format!("airlight {a:?} must lie in [0, 1]")));
    }
    Ok(())
}

/// Applies the forward model; output clamped to `[0, 1]`.
pub fn degrade(scene: &ImagePlane, t: [f64; 3], a: [f64; 3]) -> Result<ImagePlane> {
    check_medium(&t, &a)?;
    scene.map(|c, j| (j * t[c] + a[c] * (1.0 - t[c])).clamp(0.0, 1.0))
}

/// Scalar inverse for one sample.
#[inline]
pub fn invert_sample(observed: f64, t: f64, a: f64, t0: f64) -> f64 {
    (observed - a) / t.max(t0) + a
}

/// Inverts the forward model.
///
/// Every sample is inverted. Samples whose 8-bit input value lies outside
/// `keep_range` are clamped to `[0, 1]` right after inversion; samples
/// inside it keep their raw value so the stretch below sees the true
/// extremes. With `rescale` on, each channel is then min–max stretched to
/// `[0, 1]` (a flat channel is left as is); the result is finally clamped.
pub fn restore(observed: &ImagePlane, t: [f64; 3], a: [f64; 3], params: &RestoreParams) -> Result<ImagePlane> {
    params.validate()?;
    check_medium(&t, &a)?;
    let (lo, hi) = params.keep_range;
    let inverted = observed.map(|c, v| {
        let j = invert_sample(v, t[c], a[c], params.t0);
        let q = to_u8(v);
        if q < lo || q > hi {
            j.clamp(0.0, 1.0)
        } else {
            j
        }
    })?;
    let stretched = if params.rescale {
        rescale_channels(&inverted)?
    } else {
        inverted
    };
    stretched.map(|_, v| v.clamp(0.0, 1.0))
}

/// Affine per-channel stretch mapping each channel's min to 0 and max to 1.
pub fn rescale_channels(img: &ImagePlane) -> Result<ImagePlane> {
    let mut min = [f64::INFINITY; CHANNELS];
    let mut max = [f64::NEG_INFINITY; CHANNELS];
    for p in img.pixels() {
        for c in 0..CHANNELS {
            min[c] = min[c].min(p[c]);
            max[c] = max[c].max(p[c]);
        }
    }
    img.map(|c, v| {
        let span = max[c] - min[c];
        if span > 0.0 {
            (v - min[c]) / span
        } else {
            v
        }
    })
}

/// Transmission and airlight from geometry, then [`restore`].
pub fn restore_with_geometry(
    observed: &ImagePlane,
    p: &ChannelAttenuation,
    geometry: &SceneGeometry,
    params: &RestoreParams,
) -> Result<(ImagePlane, Medium)> {
    geometry.validate()?;
    if let Some(w) = geometry.distance_warning() {
        log::warn!("{w}");
    }
    let medium = Medium::from_geometry(p, geometry)?;
    let restored = restore(observed, medium.transmission, medium.airlight, params)?;
    Ok((restored, medium))
}

/// Forward model from geometry.
pub fn degrade_with_geometry(scene: &ImagePlane, p: &ChannelAttenuation, geometry: &SceneGeometry) -> Result<ImagePlane> {
    geometry.validate()?;
    let medium = Medium::from_geometry(p, geometry)?;
    degrade(scene, medium.transmission, medium.airlight)
}
