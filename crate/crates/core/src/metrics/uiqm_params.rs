//! Constants of the Underwater Image Quality Measure.
//!
//! Coefficients are those of the published human-visual-system-inspired
//! measure; block sizes and the Sobel scaling follow the widely distributed
//! Python implementation (`uqim_utils.py`).
//! Keep every UIQM number here; the metric code must not inline any.

/// Weight of the colorfulness term (UICM).
pub const C1_UICM: f64 = 0.0282;
/// Weight of the sharpness term (UISM).
pub const C2_UISM: f64 = 0.2953;
/// Weight of the contrast term (UIConM).
pub const C3_UICONM: f64 = 3.5753;

/// Fraction of smallest samples dropped by the asymmetric trimmed mean.
pub const ALPHA_L: f64 = 0.1;
/// Fraction of largest samples dropped by the asymmetric trimmed mean.
pub const ALPHA_R: f64 = 0.1;

/// UICM = UICM_MEAN_WEIGHT·‖(μ_RG, μ_YB)‖ + UICM_SPREAD_WEIGHT·√(σ²_RG + σ²_YB).
pub const UICM_MEAN_WEIGHT: f64 = -0.0268;
pub const UICM_SPREAD_WEIGHT: f64 = 0.1586;

/// Per-channel weights of the sharpness EME (ITU-R BT.601 luma).
pub const UISM_CHANNEL_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Edge magnitudes are normalized so their maximum equals this value.
pub const SOBEL_PEAK: f64 = 255.0;

/// Square block side for the sharpness EME.
pub const UISM_BLOCK: usize = 10;
/// Square block side for the contrast logAMEE.
pub const UICONM_BLOCK: usize = 10;

/// Intensity scale the measure is defined on.
pub const INTENSITY_SCALE: f64 = 255.0;
