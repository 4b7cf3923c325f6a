//! Single-scale structural similarity with an 11×11 Gaussian window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::ImagePlane;

pub const WINDOW: usize = 11;
pub const SIGMA: f64 = 1.5;
pub const K1: f64 = 0.01;
pub const K2: f64 = 0.03;
pub const DYNAMIC_RANGE: f64 = 255.0;

/// BT.601 luma weights used by [`SsimMode::Luma`].
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SsimMode {
    /// SSIM of each RGB channel, averaged.
    #[default]
    RgbMean,
    /// SSIM of the luma plane.
    Luma,
}

pub fn c1() -> f64 {
    (K1 * DYNAMIC_RANGE).powi(2)
}

pub fn c2() -> f64 {
    (K2 * DYNAMIC_RANGE).powi(2)
}

/// Normalized 1-D Gaussian taps.
pub fn gaussian_kernel() -> [f64; WINDOW] {
    let half = (WINDOW / 2) as f64;
    let mut k = [0.0; WINDOW];
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - half;
        *v = (-(d * d) / (2.0 * SIGMA * SIGMA)).exp();
    }
    let sum: f64 = k.iter().sum();
    k.map(|v| v / sum)
}

/// Separable valid-mode filtering of a `w × h` plane.
fn filter_valid(plane: &[f64], w: usize, h: usize, k: &[f64; WINDOW]) -> Vec<f64> {
    let ow = w - WINDOW + 1;
    let oh = h - WINDOW + 1;
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        let src = &plane[y * w..(y + 1) * w];
        for x in 0..ow {
            rows[y * ow + x] = src[x..x + WINDOW].iter().zip(k).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..WINDOW).map(|i| rows[(y + i) * ow + x] * k[i]).sum();
        }
    }
    out
}

/// Mean SSIM of two planes on the 0–255 scale.
pub fn ssim_plane(a: &[f64], b: &[f64], w: usize, h: usize) -> Result<f64> {
    if w < WINDOW || h < WINDOW {
        return Err(Error::shape(format!(
            "SSIM needs at least {WINDOW}x{WINDOW} pixels, got {w}x{h}"
        )));
    }
    if a.len() != w * h || b.len() != w * h {
        return Err(Error::shape("plane size does not match dimensions"));
    }
    let k = gaussian_kernel();
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let aa: Vec<f64> = a.iter().map(|x| x * x).collect();
    let bb: Vec<f64> = b.iter().map(|x| x * x).collect();
    let mu_a = filter_valid(a, w, h, &k);
    let mu_b = filter_valid(b, w, h, &k);
    let e_ab = filter_valid(&ab, w, h, &k);
    let e_aa = filter_valid(&aa, w, h, &k);
    let e_bb = filter_valid(&bb, w, h, &k);
    let (c1, c2) = (c1(), c2());
    let mut sum = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let var_a = e_aa[i] - ma * ma;
        let var_b = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        let num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
        let den = (ma * ma + mb * mb + c1) * (var_a + var_b + c2);
        sum += num / den;
    }
    Ok(sum / mu_a.len() as f64)
}

fn scaled_channel(img: &ImagePlane, c: usize) -> Vec<f64> {
    img.channel(c).into_iter().map(|v| v * DYNAMIC_RANGE).collect()
}

fn scaled_luma(img: &ImagePlane) -> Vec<f64> {
    img.pixels()
        .map(|p| DYNAMIC_RANGE * (LUMA_WEIGHTS[0] * p[0] + LUMA_WEIGHTS[1] * p[1] + LUMA_WEIGHTS[2] * p[2]))
        .collect()
}

pub fn ssim(a: &ImagePlane, b: &ImagePlane, mode: SsimMode) -> Result<f64> {
    a.ensure_same_shape(b)?;
    let (w, h) = a.dims();
    match mode {
        SsimMode::RgbMean => {
            let mut total = 0.0;
            for c in 0..3 {
                total += ssim_plane(&scaled_channel(a, c), &scaled_channel(b, c), w, h)?;
            }
            Ok(total / 3.0)
        }
        SsimMode::Luma => ssim_plane(&scaled_luma(a), &scaled_luma(b), w, h),
    }
}
