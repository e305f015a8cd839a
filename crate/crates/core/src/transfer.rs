//! Sub-band statistics transfer and the stand-alone deblurring pipeline.
//!
//! Each blurry band is standardized with its own mean and (population)
//! standard deviation, then rescaled and shifted to the matching style band:
//!
//! ```text
//! out = (blurry - μ_b) / max(σ_b, ε) · σ_s + μ_s
//! ```
//!
//! A constant blurry band therefore collapses to the style mean. At the
//! deepest level every band is a single coefficient, so the whole blurry
//! packet is replaced by the style packet.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::packet::{packet_decompose, packet_reconstruct, Subband, WaveletPacket, MAX_LEVEL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubbandStats {
    pub mean: f64,
    /// Population standard deviation (divides by N).
    pub std: f64,
}

/// Mean and population standard deviation of a coefficient slice.
pub fn subband_stats(coeffs: &[f64]) -> Result<SubbandStats> {
    if coeffs.is_empty() {
        return Err(Error::EmptyBand);
    }
    // Shifting by the first coefficient makes constant bands exact: every
    // deviation is 0.0, so the mean is the value itself and std is 0.
    let n = coeffs.len() as f64;
    let shift = coeffs[0];
    let offset = coeffs.iter().map(|c| c - shift).sum::<f64>() / n;
    let var = coeffs
        .iter()
        .map(|c| (c - shift - offset).powi(2))
        .sum::<f64>()
        / n;
    Ok(SubbandStats {
        mean: shift + offset,
        std: var.sqrt(),
    })
}

fn transfer_into(blurry: &[f64], style: &[f64], epsilon: f64, out: &mut [f64]) {
    let b = subband_stats(blurry).expect("packet bands are non-empty");
    let s = subband_stats(style).expect("packet bands are non-empty");
    let gain = s.std / b.std.max(epsilon);
    for (o, &x) in out.iter_mut().zip(blurry) {
        *o = (x - b.mean) * gain + s.mean;
    }
}

/// Transfers the mean and standard deviation of `style` onto `blurry`.
pub fn wst_band(blurry: &Subband, style: &Subband, epsilon: f64) -> Result<Subband> {
    if blurry.shape() != style.shape() {
        return Err(Error::DimensionMismatch {
            left: blurry.shape(),
            right: style.shape(),
        });
    }
    let mut out = vec![0.0; blurry.coeffs().len()];
    transfer_into(blurry.coeffs(), style.coeffs(), epsilon, &mut out);
    Subband::new(blurry.rows(), blurry.cols(), out)
}

/// Band-by-band [`wst_band`] over two packets with the same layout.
pub fn wst_packet(
    blurry: &WaveletPacket,
    style: &WaveletPacket,
    epsilon: f64,
) -> Result<WaveletPacket> {
    if !blurry.same_layout(style) {
        return Err(Error::MalformedPacket(format!(
            "layout mismatch: level {} {}x{} vs level {} {}x{}",
            blurry.level(),
            blurry.source_width(),
            blurry.source_height(),
            style.level(),
            style.source_width(),
            style.source_height()
        )));
    }
    let mut out = WaveletPacket::zeros(blurry.level(), blurry.source_width(), blurry.source_height())?;
    for ((dst, b), s) in out.bands_mut().zip(blurry.bands()).zip(style.bands()) {
        transfer_into(b, s, epsilon, dst);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BinarizeMethod {
    /// Global threshold maximizing between-class variance over a 256-bin
    /// histogram.
    Otsu,
    /// Each pixel is compared against the mean of the `window×window`
    /// neighbourhood (clipped at the border) minus `offset`.
    AdaptiveMean { window: usize, offset: f64 },
}

impl Default for BinarizeMethod {
    fn default() -> Self {
        BinarizeMethod::Otsu
    }
}

const HIST_BINS: usize = 256;

#[inline]
fn hist_bin(v: f64) -> usize {
    (crate::image::clamp_unit(v) * (HIST_BINS - 1) as f64).round() as usize
}

/// Otsu threshold as a histogram bin: pixels whose bin is strictly above it
/// are foreground. A histogram with no positive between-class variance
/// returns its highest occupied bin, so nothing is foreground.
fn otsu_threshold(data: &[f64]) -> usize {
    let mut hist = [0u64; HIST_BINS];
    for &v in data {
        hist[hist_bin(v)] += 1;
    }
    let total = data.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();

    let mut best_t = hist.iter().rposition(|&c| c > 0).unwrap_or(0);
    let mut best_var = 0.0;
    let (mut w0, mut sum0) = (0.0, 0.0);
    for (t, &count) in hist.iter().enumerate() {
        w0 += count as f64;
        sum0 += t as f64 * count as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let diff = sum0 / w0 - (sum_all - sum0) / w1;
        let var = w0 * w1 * diff * diff;
        if var > best_var {
            best_var = var;
            best_t = t;
        }
    }
    best_t
}

fn adaptive_mean(img: &GrayImage, window: usize, offset: f64) -> Vec<f64> {
    let (w, h) = img.dims();
    // Summed-area table with a zero first row and column.
    let stride = w + 1;
    let mut sat = vec![0.0; (w + 1) * (h + 1)];
    for y in 0..h {
        let mut row = 0.0;
        for x in 0..w {
            row += img.get(x, y);
            sat[(y + 1) * stride + x + 1] = sat[y * stride + x + 1] + row;
        }
    }
    let r = window / 2;
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let (y0, y1) = (y.saturating_sub(r), (y + r + 1).min(h));
        for x in 0..w {
            let (x0, x1) = (x.saturating_sub(r), (x + r + 1).min(w));
            let sum = sat[y1 * stride + x1] - sat[y0 * stride + x1] - sat[y1 * stride + x0]
                + sat[y0 * stride + x0];
            let mean = sum / ((y1 - y0) * (x1 - x0)) as f64;
            out.push(if img.get(x, y) > mean - offset { 1.0 } else { 0.0 });
        }
    }
    out
}

/// Maps every pixel to exactly 0.0 or 1.0.
pub fn binarize(img: &GrayImage, method: BinarizeMethod) -> Result<GrayImage> {
    let data = match method {
        BinarizeMethod::Otsu => {
            let t = otsu_threshold(img.data());
            img.data()
                .iter()
                .map(|&v| if hist_bin(v) > t { 1.0 } else { 0.0 })
                .collect()
        }
        BinarizeMethod::AdaptiveMean { window, offset } => {
            if window < 3 || window % 2 == 0 {
                return Err(Error::InvalidWindow(window));
            }
            adaptive_mean(img, window, offset)
        }
    };
    GrayImage::new(img.width(), img.height(), data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StyleMode {
    /// Use the style image as given.
    Sharp,
    /// Binarize the style image before decomposition.
    #[default]
    Binarized,
}

impl fmt::Display for StyleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StyleMode::Sharp => "sharp",
            StyleMode::Binarized => "binarized",
        })
    }
}

impl FromStr for StyleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sharp" => Ok(StyleMode::Sharp),
            "binarized" | "binary" => Ok(StyleMode::Binarized),
            other => Err(Error::InvalidConfig(format!("unknown style mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferConfig {
    pub level: u32,
    /// Floor applied to the blurry band's standard deviation.
    pub epsilon: f64,
    pub style_mode: StyleMode,
    pub binarize: BinarizeMethod,
}

impl Default for TransferConfig {
    fn default() -> Self {
        Self {
            level: 3,
            epsilon: 1e-8,
            style_mode: StyleMode::Binarized,
            binarize: BinarizeMethod::Otsu,
        }
    }
}

impl TransferConfig {
    pub fn with_level(mut self, level: u32) -> Self {
        self.level = level;
        self
    }

    pub fn with_style_mode(mut self, mode: StyleMode) -> Self {
        self.style_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.level == 0 || self.level > MAX_LEVEL {
            return Err(Error::InvalidConfig(format!("level {}", self.level)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!("epsilon {}", self.epsilon)));
        }
        if let BinarizeMethod::AdaptiveMean { window, .. } = self.binarize {
            if window < 3 || window % 2 == 0 {
                return Err(Error::InvalidWindow(window));
            }
        }
        Ok(())
    }

    /// The style image actually fed to the transform under this config.
    pub fn effective_style(&self, style: &GrayImage) -> Result<GrayImage> {
        match self.style_mode {
            StyleMode::Sharp => Ok(style.clone()),
            StyleMode::Binarized => binarize(style, self.binarize),
        }
    }
}

/// Decompose both images, transfer statistics, reconstruct. `style` is used
/// as given and the result is not clamped.
pub fn transfer_reconstruct(
    blurry: &GrayImage,
    style: &GrayImage,
    level: u32,
    epsilon: f64,
) -> Result<GrayImage> {
    if blurry.dims() != style.dims() {
        return Err(Error::DimensionMismatch {
            left: blurry.dims(),
            right: style.dims(),
        });
    }
    let pb = packet_decompose(blurry, level)?;
    let ps = packet_decompose(style, level)?;
    packet_reconstruct(&wst_packet(&pb, &ps, epsilon)?)
}

/// Stand-alone deblurring: optional style binarization, packet statistics
/// transfer, inverse transform, then a single clamp to `[0, 1]`.
pub fn deblur_idwt(blurry: &GrayImage, style: &GrayImage, cfg: &TransferConfig) -> Result<GrayImage> {
    cfg.validate()?;
    let style = cfg.effective_style(style)?;
    Ok(transfer_reconstruct(blurry, &style, cfg.level, cfg.epsilon)?.clamped())
}
