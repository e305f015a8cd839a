//! Grayscale rasters, file I/O and elementary pixel metrics.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageFormat, ImageReader, Luma};

use crate::error::{Error, Result};

/// Row-major grayscale image with nominal intensity range `[0, 1]`.
///
/// Values are not clamped on construction: pipeline stages may push pixels
/// outside the nominal range and only [`save_image`] clamps.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if data.len() != width * height {
            return Err(Error::BufferSize {
                len: data.len(),
                rows: height,
                cols: width,
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    /// `(width, height)`.
    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn clamped(&self) -> Self {
        self.map(clamp_unit)
    }

    fn check_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                left: self.dims(),
                right: other.dims(),
            });
        }
        Ok(())
    }
}

/// Clamps to `[0, 1]`; NaN maps to 0.
#[inline]
pub(crate) fn clamp_unit(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn bits(self) -> u32 {
        match self {
            BitDepth::Eight => 8,
            BitDepth::Sixteen => 16,
        }
    }

    /// Largest code value, `2^bits - 1`.
    pub fn max_code(self) -> f64 {
        match self {
            BitDepth::Eight => 255.0,
            BitDepth::Sixteen => 65535.0,
        }
    }
}

impl TryFrom<u32> for BitDepth {
    type Error = Error;

    fn try_from(bits: u32) -> Result<Self> {
        match bits {
            8 => Ok(BitDepth::Eight),
            16 => Ok(BitDepth::Sixteen),
            other => Err(Error::UnsupportedFormat(format!("bit depth {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageMeta {
    pub source_path: String,
    pub bit_depth: BitDepth,
}

/// Loads a PNG or binary PGM as a normalized grayscale image.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    load_image_with_meta(path).map(|(img, _)| img)
}

/// Like [`load_image`], also reporting the source bit depth.
///
/// Color inputs collapse to Rec.601 luminance.
pub fn load_image_with_meta(path: impl AsRef<Path>) -> Result<(GrayImage, ImageMeta)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Read {
        path: path.to_owned(),
        source,
    })?;
    let reader = ImageReader::new(BufReader::new(file))
        .with_guessed_format()
        .map_err(|source| Error::Read {
            path: path.to_owned(),
            source,
        })?;
    match reader.format() {
        Some(ImageFormat::Png) | Some(ImageFormat::Pnm) => {}
        Some(other) => return Err(Error::UnsupportedFormat(format!("{other:?}"))),
        None => return Err(Error::UnsupportedFormat(path.display().to_string())),
    }
    let decoded = reader.decode().map_err(|e| Error::Codec(e.to_string()))?;
    let (width, height) = (decoded.width() as usize, decoded.height() as usize);
    if width == 0 || height == 0 {
        return Err(Error::EmptyImage);
    }

    let (data, bit_depth) = match decoded {
        DynamicImage::ImageLuma8(buf) => (scale(buf.as_raw(), 255.0), BitDepth::Eight),
        DynamicImage::ImageLumaA8(buf) => (
            buf.pixels().map(|p| p.0[0] as f64 / 255.0).collect(),
            BitDepth::Eight,
        ),
        DynamicImage::ImageLuma16(buf) => (scale(buf.as_raw(), 65535.0), BitDepth::Sixteen),
        DynamicImage::ImageLumaA16(buf) => (
            buf.pixels().map(|p| p.0[0] as f64 / 65535.0).collect(),
            BitDepth::Sixteen,
        ),
        DynamicImage::ImageRgb8(_) | DynamicImage::ImageRgba8(_) => {
            let rgb = decoded.to_rgb8();
            (luminance(rgb.as_raw(), 255.0), BitDepth::Eight)
        }
        other => {
            let rgb = other.to_rgb16();
            (luminance(rgb.as_raw(), 65535.0), BitDepth::Sixteen)
        }
    };

    let img = GrayImage::new(width, height, data)?;
    let meta = ImageMeta {
        source_path: path.display().to_string(),
        bit_depth,
    };
    Ok((img, meta))
}

fn scale<T: Copy + Into<f64>>(raw: &[T], max: f64) -> Vec<f64> {
    raw.iter().map(|&v| v.into() / max).collect()
}

fn luminance<T: Copy + Into<f64>>(rgb: &[T], max: f64) -> Vec<f64> {
    rgb.chunks_exact(3)
        .map(|px| {
            let (r, g, b) = (px[0].into(), px[1].into(), px[2].into());
            clamp_unit((0.299 * r + 0.587 * g + 0.114 * b) / max)
        })
        .collect()
}

fn output_format(path: &Path) -> Result<ImageFormat> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("png") => Ok(ImageFormat::Png),
        Some("pgm") | Some("pnm") => Ok(ImageFormat::Pnm),
        _ => Err(Error::UnsupportedFormat(format!(
            "cannot infer output format from {}",
            path.display()
        ))),
    }
}

/// Clamps to `[0, 1]`, quantizes with `round(v * (2^d - 1))` and writes a
/// grayscale PNG or binary PGM chosen by file extension.
pub fn save_image(img: &GrayImage, path: impl AsRef<Path>, depth: BitDepth) -> Result<()> {
    let path = path.as_ref();
    let format = output_format(path)?;
    let (w, h) = (img.width as u32, img.height as u32);
    let max = depth.max_code();
    let quantize = |v: f64| (clamp_unit(v) * max).round();

    let dynamic = match depth {
        BitDepth::Eight => {
            let raw: Vec<u8> = img.data.iter().map(|&v| quantize(v) as u8).collect();
            DynamicImage::ImageLuma8(
                ImageBuffer::<Luma<u8>, _>::from_raw(w, h, raw).expect("buffer sized from image"),
            )
        }
        BitDepth::Sixteen => {
            let raw: Vec<u16> = img.data.iter().map(|&v| quantize(v) as u16).collect();
            DynamicImage::ImageLuma16(
                ImageBuffer::<Luma<u16>, _>::from_raw(w, h, raw).expect("buffer sized from image"),
            )
        }
    };

    let file = File::create(path).map_err(|source| Error::Write {
        path: path.to_owned(),
        source,
    })?;
    let mut out = BufWriter::new(file);
    dynamic
        .write_to(&mut out, format)
        .map_err(|e| Error::Codec(e.to_string()))?;
    std::io::Write::flush(&mut out).map_err(|source| Error::Write {
        path: path.to_owned(),
        source,
    })
}

/// Mean absolute per-pixel difference.
pub fn l1_distance(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    a.check_same_dims(b)?;
    let sum: f64 = a.data.iter().zip(&b.data).map(|(x, y)| (x - y).abs()).sum();
    Ok(sum / a.data.len() as f64)
}

pub fn mse(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    a.check_same_dims(b)?;
    let sum: f64 = a.data.iter().zip(&b.data).map(|(x, y)| (x - y).powi(2)).sum();
    Ok(sum / a.data.len() as f64)
}

/// Peak signal-to-noise ratio in dB with peak value 1.0.
///
/// Identical images return `f64::INFINITY`.
pub fn psnr(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    let mse = mse(a, b)?;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / mse).log10())
}
