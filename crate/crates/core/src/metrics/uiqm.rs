//! No-reference underwater quality: colorfulness, sharpness, contrast.

use serde::{Deserialize, Serialize};

use super::uiqm_params::*;
use crate::error::{Error, Result};
use crate::raster::ImagePlane;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UiqmScore {
    pub uicm: f64,
    pub uism: f64,
    pub uiconm: f64,
    pub uiqm: f64,
}

pub fn uiqm(img: &ImagePlane) -> Result<UiqmScore> {
    if img.pixel_count() < 2 || img.width() < 2 || img.height() < 2 {
        return Err(Error::invariant(format!(
            "UIQM needs at least 2x2 pixels, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    let planes: Vec<Vec<f64>> = (0..3)
        .map(|c| img.channel(c).into_iter().map(|v| v * INTENSITY_SCALE).collect())
        .collect();
    let (w, h) = img.dims();
    let uicm = uicm(&planes[0], &planes[1], &planes[2]);
    let uism = uism(&planes, w, h);
    let uiconm = uiconm(&planes, w, h);
    Ok(UiqmScore {
        uicm,
        uism,
        uiconm,
        uiqm: C1_UICM * uicm + C2_UISM * uism + C3_UICONM * uiconm,
    })
}

/// Asymmetric alpha-trimmed mean: drop `ceil(αL·K)` smallest and
/// `floor(αR·K)` largest samples.
pub fn trimmed_mean(values: &[f64], alpha_l: f64, alpha_r: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = sorted.len();
    let lo = (alpha_l * k as f64).ceil() as usize;
    let hi = k - (alpha_r * k as f64).floor() as usize;
    let kept = &sorted[lo.min(hi)..hi];
    if kept.is_empty() {
        return sorted[k / 2];
    }
    kept.iter().sum::<f64>() / kept.len() as f64
}

fn spread(values: &[f64], mu: f64) -> f64 {
    values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / values.len() as f64
}

/// Colorfulness from the opponent channels RG = R − G and YB = (R + G)/2 − B.
pub fn uicm(r: &[f64], g: &[f64], b: &[f64]) -> f64 {
    let rg: Vec<f64> = r.iter().zip(g).map(|(r, g)| r - g).collect();
    let yb: Vec<f64> = r.iter().zip(g).zip(b).map(|((r, g), b)| (r + g) / 2.0 - b).collect();
    let mu_rg = trimmed_mean(&rg, ALPHA_L, ALPHA_R);
    let mu_yb = trimmed_mean(&yb, ALPHA_L, ALPHA_R);
    let s_rg = spread(&rg, mu_rg);
    let s_yb = spread(&yb, mu_yb);
    UICM_MEAN_WEIGHT * (mu_rg * mu_rg + mu_yb * mu_yb).sqrt() + UICM_SPREAD_WEIGHT * (s_rg + s_yb).sqrt()
}

/// Index with symmetric reflection that repeats the edge sample.
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let j = if i < 0 {
        -i - 1
    } else if i >= n {
        2 * n - i - 1
    } else {
        i
    };
    j.clamp(0, n - 1) as usize
}

/// Sobel gradient magnitude scaled so its peak is [`SOBEL_PEAK`].
pub fn sobel_magnitude(plane: &[f64], w: usize, h: usize) -> Vec<f64> {
    let at = |x: isize, y: isize| plane[reflect(y, h) * w + reflect(x, w)];
    let mut mag = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            mag.push(gx.hypot(gy));
        }
    }
    let peak = mag.iter().copied().fold(0.0, f64::max);
    if peak > 0.0 {
        for m in &mut mag {
            *m *= SOBEL_PEAK / peak;
        }
    }
    mag
}

/// Visits non-overlapping `block × block` tiles, dropping partial tiles at
/// the right and bottom edges. Returns the tile count.
fn for_each_block(w: usize, h: usize, block: usize, mut f: impl FnMut(usize, usize)) -> usize {
    let block = block.min(w).min(h);
    let (k1, k2) = (w / block, h / block);
    for by in 0..k2 {
        for bx in 0..k1 {
            f(bx * block, by * block);
        }
    }
    k1 * k2
}

fn block_extremes(planes: &[&[f64]], w: usize, x0: usize, y0: usize, block: usize) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for plane in planes {
        for y in y0..y0 + block {
            for &v in &plane[y * w + x0..y * w + x0 + block] {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    (lo, hi)
}

/// Measure of enhancement: `2/(k1·k2) Σ ln(max/min)` over blocks, with
/// blocks containing a zero extreme contributing nothing.
pub fn eme(plane: &[f64], w: usize, h: usize, block: usize) -> f64 {
    let b = block.min(w).min(h);
    let mut sum = 0.0;
    let n = for_each_block(w, h, block, |x0, y0| {
        let (lo, hi) = block_extremes(&[plane], w, x0, y0, b);
        if lo > 0.0 && hi > 0.0 {
            sum += (hi / lo).ln();
        }
    });
    2.0 * sum / n as f64
}

/// Sharpness: weighted EME of each channel's edge map (edges × intensity).
pub fn uism(planes: &[Vec<f64>], w: usize, h: usize) -> f64 {
    planes
        .iter()
        .zip(UISM_CHANNEL_WEIGHTS)
        .map(|(plane, weight)| {
            let edges = sobel_magnitude(plane, w, h);
            let edge_map: Vec<f64> = edges.iter().zip(plane).map(|(e, v)| e * v).collect();
            weight * eme(&edge_map, w, h, UISM_BLOCK)
        })
        .sum()
}

/// Contrast: `−1/(k1·k2) Σ ρ·ln ρ` with `ρ = (max − min)/(max + min)` taken
/// over each block across all three channels.
pub fn uiconm(planes: &[Vec<f64>], w: usize, h: usize) -> f64 {
    let b = UICONM_BLOCK.min(w).min(h);
    let refs: Vec<&[f64]> = planes.iter().map(Vec::as_slice).collect();
    let mut sum = 0.0;
    let n = for_each_block(w, h, UICONM_BLOCK, |x0, y0| {
        let (lo, hi) = block_extremes(&refs, w, x0, y0, b);
        let (top, bot) = (hi - lo, hi + lo);
        if top > 0.0 && bot > 0.0 {
            let rho = top / bot;
            sum += rho * rho.ln();
        }
    });
    -sum / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textured(w: usize, h: usize) -> ImagePlane {
        ImagePlane::from_fn(w, h, |x, y| {
            let fx = x as f64 / w as f64;
            let fy = y as f64 / h as f64;
            [
                0.1 + 0.6 * fx * fy,
                0.3 + 0.5 * ((x * 7 + y * 3) % 11) as f64 / 11.0,
                0.2 + 0.7 * (1.0 - fy) * ((x / 3 + y / 5) % 2) as f64,
            ]
        })
        .unwrap()
    }

    #[test]
    fn gray_image_has_zero_colorfulness() {
        let img = ImagePlane::from_fn(20, 20, |x, y| [((x + y) % 9) as f64 / 8.0; 3]).unwrap();
        let s = uiqm(&img).unwrap();
        assert_eq!(s.uicm, 0.0);
    }

    #[test]
    fn single_pixel_rejected() {
        let img = ImagePlane::filled(1, 1, [0.5; 3]).unwrap();
        assert!(uiqm(&img).is_err());
    }

    #[test]
    fn trimmed_mean_drops_tails() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        // drops 1 and 10
        assert_eq!(trimmed_mean(&v, 0.1, 0.1), 5.5);
        let mut with_outlier = v.clone();
        with_outlier[9] = 1e9;
        assert_eq!(trimmed_mean(&with_outlier, 0.1, 0.1), 5.5);
    }

    #[test]
    fn flat_image_scores() {
        let gray = uiqm(&ImagePlane::filled(20, 20, [0.4; 3]).unwrap()).unwrap();
        assert_eq!((gray.uicm, gray.uism, gray.uiconm), (0.0, 0.0, 0.0));
        // channels differ, so each block spans 0.4..0.6 across channels
        let tinted = uiqm(&ImagePlane::filled(20, 20, [0.4, 0.5, 0.6]).unwrap()).unwrap();
        assert_eq!(tinted.uism, 0.0);
        let rho: f64 = 0.2 / 1.0;
        assert!((tinted.uiconm + rho * rho.ln()).abs() < 1e-12);
        assert!(tinted.uicm < 0.0);
    }

    #[test]
    fn rotation_changes_little() {
        let img = textured(40, 40);
        let a = uiqm(&img).unwrap().uiqm;
        let b = uiqm(&img.rotate90()).unwrap().uiqm;
        assert!(((a - b) / a).abs() <= 0.01, "{a} vs {b}");
    }

    /// Values frozen from an independent NumPy/SciPy implementation of the
    /// same measure (`scipy.ndimage.sobel`, reflect borders).
    #[test]
    fn matches_reference_oracle() {
        let cases = [
            ((40, 40), [11.289364162472582, 3.464467024347288, 0.2539908185249783, 2.2495105551438357]),
            ((37, 23), [11.349099120919837, 4.076317781459393, 0.2242712142407417, 2.325618108349822]),
        ];
        for ((w, h), [uicm, uism, uiconm, total]) in cases {
            let s = uiqm(&textured(w, h)).unwrap();
            for (got, want) in [(s.uicm, uicm), (s.uism, uism), (s.uiconm, uiconm), (s.uiqm, total)] {
                assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "{w}x{h}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn sobel_of_ramp_is_uniform_inside() {
        let (w, h) = (6, 5);
        let plane: Vec<f64> = (0..w * h).map(|i| (i % w) as f64).collect();
        let m = sobel_magnitude(&plane, w, h);
        for y in 0..h {
            for x in 1..w - 1 {
                assert!((m[y * w + x] - SOBEL_PEAK).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn eme_closed_form() {
        // two 2x2 blocks: ratios 4 and 1 → 2/2 · ln 4
        let plane = vec![1.0, 4.0, 3.0, 3.0, 2.0, 2.0, 3.0, 3.0];
        let v = eme(&plane, 4, 2, 2);
        assert!((v - 4.0f64.ln()).abs() < 1e-15);
    }
}
