//! Three-channel floating-point raster with an 8-bit PNG boundary.

use std::io::Write;
use std::path::Path;

use image::{ImageBuffer, Rgb, RgbImage, Rgba, RgbaImage};

use crate::error::{Error, Result};

pub const CHANNELS: usize = 3;

/// An H×W×3 image of linear intensities, interleaved row-major RGB.
///
/// Values are nominally in `[0, 1]`; intermediate results may leave that
/// range and are brought back by the restoration range handling or by the
/// 8-bit codec. An optional alpha plane read from disk is carried through
/// untouched so it can be written back out.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    width: usize,
    height: usize,
    data: Vec<f64>,
    alpha: Option<Vec<u8>>,
}

impl ImagePlane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::shape(format!("empty image {width}x{height}")));
        }
        if data.len() != width * height * CHANNELS {
            return Err(Error::shape(format!(
                "{width}x{height}x3 image needs {} samples, got {}",
                width * height * CHANNELS,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invariant(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            width,
            height,
            data,
            alpha: None,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Result<Self> {
        let data = (0..width * height).flat_map(|_| rgb).collect();
        Self::new(width, height, data)
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [f64; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * CHANNELS);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn alpha(&self) -> Option<&[u8]> {
        self.alpha.as_deref()
    }

    pub fn with_alpha(mut self, alpha: Option<Vec<u8>>) -> Result<Self> {
        if let Some(a) = &alpha {
            if a.len() != self.pixel_count() {
                return Err(Error::shape("alpha plane size does not match image"));
            }
        }
        self.alpha = alpha;
        Ok(self)
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * CHANNELS + c]
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * CHANNELS;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn pixels(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        self.data.chunks_exact(CHANNELS).map(|p| [p[0], p[1], p[2]])
    }

    /// Samples of one channel in row-major order.
    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.data.iter().skip(c).step_by(CHANNELS).copied().collect()
    }

    pub fn channel_mean(&self, c: usize) -> f64 {
        let sum: f64 = self.data.iter().skip(c).step_by(CHANNELS).sum();
        sum / self.pixel_count() as f64
    }

    /// Applies `f(channel, value)` to every sample, keeping the alpha plane.
    pub fn map(&self, mut f: impl FnMut(usize, f64) -> f64) -> Result<Self> {
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(i, &v)| f(i % CHANNELS, v))
            .collect();
        Self::new(self.width, self.height, data)?.with_alpha(self.alpha.clone())
    }

    pub fn ensure_same_shape(&self, other: &ImagePlane) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::shape(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }

    /// Rotates the image 90° clockwise.
    pub fn rotate90(&self) -> Self {
        let (w, h) = (self.height, self.width);
        let mut data = Vec::with_capacity(self.data.len());
        for y in 0..h {
            for x in 0..w {
                // destination (x, y) comes from source (y, height - 1 - x)
                data.extend_from_slice(&self.pixel(y, self.height - 1 - x));
            }
        }
        Self {
            width: w,
            height: h,
            data,
            alpha: None,
        }
    }

    /// Places `other` to the right of `self`. Heights must match.
    pub fn hconcat(&self, other: &ImagePlane) -> Result<Self> {
        if self.height != other.height {
            return Err(Error::shape("panel halves differ in height"));
        }
        let width = self.width + other.width;
        let mut data = Vec::with_capacity(width * self.height * CHANNELS);
        for y in 0..self.height {
            let a = y * self.width * CHANNELS;
            let b = y * other.width * CHANNELS;
            data.extend_from_slice(&self.data[a..a + self.width * CHANNELS]);
            data.extend_from_slice(&other.data[b..b + other.width * CHANNELS]);
        }
        Self::new(width, self.height, data)
    }

    /// Rounds every sample through the 8-bit codec and back.
    pub fn quantized(&self) -> Self {
        let data = self
            .data
            .iter()
            .map(|&v| f64::from(to_u8(v)) / 255.0)
            .collect();
        Self {
            width: self.width,
            height: self.height,
            data,
            alpha: self.alpha.clone(),
        }
    }

    pub fn from_rgb8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        let data = bytes.iter().map(|&b| f64::from(b) / 255.0).collect();
        Self::new(width, height, data)
    }

    pub fn to_rgb8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| to_u8(v)).collect()
    }

    pub fn load_png(path: &Path) -> Result<Self> {
        let dynamic = image::open(path).map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?;
        let has_alpha = dynamic.color().has_alpha();
        let rgba = dynamic.to_rgba8();
        let (w, h) = (rgba.width() as usize, rgba.height() as usize);
        let mut rgb = Vec::with_capacity(w * h * CHANNELS);
        let mut alpha = Vec::with_capacity(if has_alpha { w * h } else { 0 });
        for p in rgba.pixels() {
            rgb.extend_from_slice(&p.0[..3]);
            if has_alpha {
                alpha.push(p.0[3]);
            }
        }
        Self::from_rgb8(w, h, &rgb)?.with_alpha(has_alpha.then_some(alpha))
    }

    /// Encodes to PNG bytes (RGB8, or RGBA8 when an alpha plane is present).
    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let (w, h) = (self.width as u32, self.height as u32);
        let rgb = self.to_rgb8();
        let mut out = Vec::new();
        let cursor = std::io::Cursor::new(&mut out);
        let encoded = match &self.alpha {
            None => {
                let buf: RgbImage = ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, rgb)
                    .ok_or_else(|| Error::shape("raw buffer size"))?;
                buf.write_to(&mut { cursor }, image::ImageFormat::Png)
            }
            Some(alpha) => {
                let mut rgba = Vec::with_capacity(alpha.len() * 4);
                for (p, &a) in rgb.chunks_exact(3).zip(alpha) {
                    rgba.extend_from_slice(p);
                    rgba.push(a);
                }
                let buf: RgbaImage = ImageBuffer::<Rgba<u8>, _>::from_raw(w, h, rgba)
                    .ok_or_else(|| Error::shape("raw buffer size"))?;
                buf.write_to(&mut { cursor }, image::ImageFormat::Png)
            }
        };
        encoded.map_err(|source| Error::Image {
            path: "<memory>".into(),
            source,
        })?;
        Ok(out)
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.encode_png()?)
    }
}

/// Float intensity to 8-bit, clamped, rounding half up.
pub fn to_u8(v: f64) -> u8 {
    (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// followed by a rename, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
