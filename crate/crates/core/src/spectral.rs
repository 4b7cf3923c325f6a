//! Spectral curves and sensor-weighted attenuation integrals.
//!
//! A per-channel total attenuation coefficient is the wavelength-resolved
//! attenuation of the water column weighted by the camera's spectral
//! response for that channel and integrated over the visible band:
//!
//! ```text
//! p_c = ∫_a^b β(λ) S_c(λ) dλ                    (literal)
//! p_c = ∫_a^b β(λ) S_c(λ) dλ / ∫_a^b S_c(λ) dλ  (weighted mean, default)
//! ```
//!
//! Both curves are tabulated, so the integral is a composite trapezoid on
//! the merged sample grid refined to a maximum spacing.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum grid spacing used by [`total_attenuation`].
pub const DEFAULT_MAX_STEP_NM: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveKind {
    /// Unitless spectral response in `[0, 1]`; zero outside its support.
    SensorResponse,
    /// Attenuation in 1/m, non-negative; edge-held outside its support.
    Attenuation,
}

/// A function of wavelength sampled at strictly increasing points.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCurve {
    wavelengths: Vec<f64>,
    values: Vec<f64>,
    kind: CurveKind,
}

impl SpectralCurve {
    /// Builds a curve from `(wavelength_nm, value)` samples.
    ///
    /// Exact duplicate samples are collapsed; anything else that is not
    /// strictly increasing in wavelength is rejected.
    pub fn new(samples: impl IntoIterator<Item = (f64, f64)>, kind: CurveKind) -> Result<Self> {
        let mut wavelengths: Vec<f64> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        for (wl, v) in samples {
            if !wl.is_finite() || !v.is_finite() {
                return Err(Error::invariant(format!("non-finite sample ({wl}, {v})")));
            }
            match kind {
                CurveKind::SensorResponse if !(0.0..=1.0).contains(&v) => {
                    return Err(Error::invariant(format!(
                        "sensor response {v} at {wl} nm outside [0, 1]"
                    )))
                }
                CurveKind::Attenuation if v < 0.0 => {
                    return Err(Error::invariant(format!("negative attenuation {v} at {wl} nm")))
                }
                _ => {}
            }
            if let (Some(&last_wl), Some(&last_v)) = (wavelengths.last(), values.last()) {
                if wl == last_wl && v == last_v {
                    continue;
                }
                if wl <= last_wl {
                    return Err(Error::invariant(format!(
                        "wavelengths not strictly increasing at {wl} nm"
                    )));
                }
            }
            wavelengths.push(wl);
            values.push(v);
        }
        if wavelengths.len() < 2 {
            return Err(Error::invariant("spectral curve has fewer than 2 samples"));
        }
        Ok(Self {
            wavelengths,
            values,
            kind,
        })
    }

    /// Samples `f` on an evenly spaced grid from `start` to `end` inclusive.
    pub fn from_fn(start: f64, end: f64, step: f64, kind: CurveKind, f: impl Fn(f64) -> f64) -> Result<Self> {
        if !(step > 0.0) || !(end > start) {
            return Err(Error::invariant("bad sampling range"));
        }
        let n = ((end - start) / step).round() as usize;
        Self::new(
            (0..=n).map(|i| {
                let wl = start + (end - start) * i as f64 / n as f64;
                (wl, f(wl))
            }),
            kind,
        )
    }

    /// Parses the `wavelength_nm,value` CSV format.
    pub fn parse_csv(text: &str, kind: CurveKind, context: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, header)) if header.trim().trim_start_matches('\u{feff}') == "wavelength_nm,value" => {}
            Some((_, header)) => {
                return Err(Error::parse(
                    context,
                    format!("expected header `wavelength_nm,value`, found `{}`", header.trim()),
                ))
            }
            None => return Err(Error::parse(context, "empty file")),
        }
        let mut samples = Vec::new();
        for (i, line) in lines {
            let mut fields = line.split(',').map(str::trim);
            let (Some(wl), Some(v), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(Error::parse(context, format!("line {}: expected two fields", i + 1)));
            };
            let wl: f64 = wl
                .parse()
                .map_err(|e| Error::parse(context, format!("line {}: {e}", i + 1)))?;
            let v: f64 = v
                .parse()
                .map_err(|e| Error::parse(context, format!("line {}: {e}", i + 1)))?;
            samples.push((wl, v));
        }
        Self::new(samples, kind).map_err(|e| Error::parse(context, e))
    }

    pub fn load_csv(path: &Path, kind: CurveKind) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text, kind, &path.display().to_string())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("wavelength_nm,value\n");
        for (wl, v) in self.samples() {
            out.push_str(&format!("{wl},{v}\n"));
        }
        out
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.wavelengths.iter().copied().zip(self.values.iter().copied())
    }

    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths
    }

    pub fn min_wavelength(&self) -> f64 {
        self.wavelengths[0]
    }

    pub fn max_wavelength(&self) -> f64 {
        self.wavelengths[self.wavelengths.len() - 1]
    }

    /// Linear interpolation, with the out-of-support rule for the curve kind.
    pub fn value_at(&self, wl: f64) -> f64 {
        let last = self.wavelengths.len() - 1;
        if wl < self.wavelengths[0] || wl > self.wavelengths[last] {
            return match self.kind {
                CurveKind::SensorResponse => 0.0,
                CurveKind::Attenuation if wl < self.wavelengths[0] => self.values[0],
                CurveKind::Attenuation => self.values[last],
            };
        }
        // first index with wavelength >= wl
        let hi = self.wavelengths.partition_point(|&w| w < wl);
        if self.wavelengths[hi] == wl {
            return self.values[hi];
        }
        let lo = hi - 1;
        let (x0, x1) = (self.wavelengths[lo], self.wavelengths[hi]);
        let (y0, y1) = (self.values[lo], self.values[hi]);
        let f = (wl - x0) / (x1 - x0);
        y0 + f * (y1 - y0)
    }

    /// Values of the curve at each point of `grid`.
    pub fn resample(&self, grid: &[f64]) -> Result<Vec<f64>> {
        if grid.is_empty() {
            return Err(Error::invariant("empty resampling grid"));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invariant("resampling grid not strictly increasing"));
        }
        Ok(grid.iter().map(|&wl| self.value_at(wl)).collect())
    }

    /// Multiplies every sample by `factor` (must keep the kind's invariants).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.samples().map(|(w, v)| (w, v * factor)), self.kind)
    }
}

/// Per-channel total attenuation coefficients, 1/m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelAttenuation {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl ChannelAttenuation {
    pub fn new(r: f64, g: f64, b: f64) -> Result<Self> {
        let p = Self { r, g, b };
        p.validate()?;
        Ok(p)
    }

    pub fn zero() -> Self {
        Self { r: 0.0, g: 0.0, b: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        for v in self.to_array() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invariant(format!("attenuation coefficient {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }

    pub fn from_array(p: [f64; 3]) -> Result<Self> {
        Self::new(p[0], p[1], p[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationBounds {
    pub a: f64,
    pub b: f64,
}

impl Default for IntegrationBounds {
    fn default() -> Self {
        Self { a: 400.0, b: 750.0 }
    }
}

impl IntegrationBounds {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::invariant(format!("integration bounds {a}..{b} need a < b")));
        }
        Ok(Self { a, b })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Normalization {
    /// Divide by the integrated response: a response-weighted mean of β.
    #[default]
    WeightedMean,
    /// The bare integral of β·S.
    Literal,
}

/// Per-channel sensor responses.
#[derive(Debug, Clone)]
pub struct ChannelResponses {
    pub r: SpectralCurve,
    pub g: SpectralCurve,
    pub b: SpectralCurve,
}

impl ChannelResponses {
    pub fn iter(&self) -> impl Iterator<Item = &SpectralCurve> {
        [&self.r, &self.g, &self.b].into_iter()
    }
}

/// The quadrature grid: `a`, `b`, and every sample wavelength of `curves`
/// strictly inside `(a, b)`, with each interval split evenly so no step
/// exceeds `max_step`.
pub fn integration_grid(curves: &[&SpectralCurve], bounds: IntegrationBounds, max_step: f64) -> Result<Vec<f64>> {
    if !(max_step > 0.0 && max_step.is_finite()) {
        return Err(Error::invariant(format!("quadrature step {max_step} must be positive")));
    }
    let mut knots = vec![bounds.a, bounds.b];
    for c in curves {
        knots.extend(c.wavelengths().iter().copied().filter(|&w| w > bounds.a && w < bounds.b));
    }
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let mut grid = Vec::with_capacity(((bounds.b - bounds.a) / max_step) as usize + knots.len());
    grid.push(knots[0]);
    for w in knots.windows(2) {
        let n = ((w[1] - w[0]) / max_step).ceil().max(1.0) as usize;
        for i in 1..n {
            grid.push(w[0] + (w[1] - w[0]) * i as f64 / n as f64);
        }
        grid.push(w[1]);
    }
    Ok(grid)
}

/// Composite trapezoid rule; summation runs left to right.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .fold(0.0, |acc, v| acc + v)
}

/// Total attenuation coefficient with the default 1 nm grid refinement.
pub fn total_attenuation(
    beta: &SpectralCurve,
    response: &SpectralCurve,
    bounds: IntegrationBounds,
    normalize: Normalization,
) -> Result<f64> {
    total_attenuation_with_step(beta, response, bounds, normalize, DEFAULT_MAX_STEP_NM)
}

pub fn total_attenuation_with_step(
    beta: &SpectralCurve,
    response: &SpectralCurve,
    bounds: IntegrationBounds,
    normalize: Normalization,
    max_step: f64,
) -> Result<f64> {
    if beta.kind() != CurveKind::Attenuation {
        return Err(Error::invariant("beta must be an attenuation curve"));
    }
    if response.kind() != CurveKind::SensorResponse {
        return Err(Error::invariant("response must be a sensor response curve"));
    }
    let grid = integration_grid(&[beta, response], bounds, max_step)?;
    let b = beta.resample(&grid)?;
    let s = response.resample(&grid)?;
    let product: Vec<f64> = b.iter().zip(&s).map(|(b, s)| b * s).collect();
    let weighted = trapezoid(&grid, &product);
    if !weighted.is_finite() {
        return Err(Error::invariant("non-finite attenuation integral"));
    }
    match normalize {
        Normalization::Literal => Ok(weighted),
        Normalization::WeightedMean => {
            let norm = trapezoid(&grid, &s);
            if norm == 0.0 {
                return Err(Error::invariant(format!(
                    "sensor response integrates to zero over {}..{} nm",
                    bounds.a, bounds.b
                )));
            }
            Ok(weighted / norm)
        }
    }
}

/// One [`total_attenuation`] per channel.
pub fn channel_attenuations(
    beta: &SpectralCurve,
    responses: &ChannelResponses,
    bounds: IntegrationBounds,
    normalize: Normalization,
) -> Result<ChannelAttenuation> {
    let r = total_attenuation(beta, &responses.r, bounds, normalize)?;
    let g = total_attenuation(beta, &responses.g, bounds, normalize)?;
    let b = total_attenuation(beta, &responses.b, bounds, normalize)?;
    ChannelAttenuation::new(r, g, b)
}

/// Bundled synthetic spectra shaped like a Bayer-filtered CMV2000 sensor and
/// a clear coral-reef water column. Real site tables replace these when
/// available; they exist for fixtures and defaults.
pub mod synthetic {
    use super::*;

    const RESPONSE_R: &str = include_str!("../data/cmv2000_qe_synthetic_r.csv");
    const RESPONSE_G: &str = include_str!("../data/cmv2000_qe_synthetic_g.csv");
    const RESPONSE_B: &str = include_str!("../data/cmv2000_qe_synthetic_b.csv");
    const REEF_ATTENUATION: &str = include_str!("../data/reef_attenuation_synthetic.csv");

    pub fn cmv2000_responses() -> ChannelResponses {
        let parse = |t| SpectralCurve::parse_csv(t, CurveKind::SensorResponse, "bundled response").unwrap();
        ChannelResponses {
            r: parse(RESPONSE_R),
            g: parse(RESPONSE_G),
            b: parse(RESPONSE_B),
        }
    }

    pub fn reef_attenuation() -> SpectralCurve {
        SpectralCurve::parse_csv(REEF_ATTENUATION, CurveKind::Attenuation, "bundled attenuation").unwrap()
    }

    pub fn csv_sources() -> [(&'static str, &'static str); 4] {
        [
            ("attenuation.csv", REEF_ATTENUATION),
            ("response_r.csv", RESPONSE_R),
            ("response_g.csv", RESPONSE_G),
            ("response_b.csv", RESPONSE_B),
        ]
    }
}
