//! Synthetic blur: Gaussian, motion and box kernels drawn from a seeded
//! sampler, applied by 2D correlation with reflect-101 borders.
//!
//! For blur strength `sigma` the base kernel size is `k = 6·sigma − 1`.
//! Gaussian and motion kernels use `k` directly; the box kernel uses
//! `floor(k/2)`, dropped by one when even so it stays center-anchored.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::GrayImage;

pub const SIGMA_MIN: u32 = 3;
pub const SIGMA_MAX: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlurKind {
    Gaussian,
    Motion,
    Average,
}

impl BlurKind {
    pub const ALL: [BlurKind; 3] = [BlurKind::Gaussian, BlurKind::Motion, BlurKind::Average];

    pub fn as_str(self) -> &'static str {
        match self {
            BlurKind::Gaussian => "gaussian",
            BlurKind::Motion => "motion",
            BlurKind::Average => "average",
        }
    }
}

impl fmt::Display for BlurKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BlurKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(BlurKind::Gaussian),
            "motion" => Ok(BlurKind::Motion),
            "average" => Ok(BlurKind::Average),
            other => Err(Error::InvalidBlurSpec(format!("unknown blur kind {other:?}"))),
        }
    }
}

/// A degradation recipe. Text form: `kind:sigma:angle:seed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlurSpec {
    pub kind: BlurKind,
    pub sigma: u32,
    /// Degrees in `[0, 180)`; only used by motion blur.
    pub angle: f64,
    pub seed: u64,
}

impl BlurSpec {
    pub fn new(kind: BlurKind, sigma: u32, angle: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            kind,
            sigma,
            angle,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(SIGMA_MIN..=SIGMA_MAX).contains(&self.sigma) {
            return Err(Error::InvalidBlurSpec(format!(
                "sigma {} outside {SIGMA_MIN}..={SIGMA_MAX}",
                self.sigma
            )));
        }
        if !(0.0..180.0).contains(&self.angle) {
            return Err(Error::InvalidBlurSpec(format!(
                "angle {} outside [0, 180)",
                self.angle
            )));
        }
        Ok(())
    }

    /// Base kernel size `6·sigma − 1`.
    pub fn base_size(&self) -> usize {
        6 * self.sigma as usize - 1
    }

    /// Side length of the kernel this spec builds.
    pub fn kernel_size(&self) -> usize {
        let k = self.base_size();
        match self.kind {
            BlurKind::Gaussian | BlurKind::Motion => k,
            BlurKind::Average => {
                let half = k / 2;
                if half % 2 == 0 {
                    half - 1
                } else {
                    half
                }
            }
        }
    }
}

impl fmt::Display for BlurSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}:{}", self.kind, self.sigma, self.angle, self.seed)
    }
}

impl FromStr for BlurSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let [kind, sigma, angle, seed] = parts[..] else {
            return Err(Error::InvalidBlurSpec(format!(
                "expected kind:sigma:angle:seed, got {s:?}"
            )));
        };
        let bad = |what: &str| Error::InvalidBlurSpec(format!("bad {what} in {s:?}"));
        Self::new(
            kind.parse()?,
            sigma.parse().map_err(|_| bad("sigma"))?,
            angle.parse().map_err(|_| bad("angle"))?,
            seed.parse().map_err(|_| bad("seed"))?,
        )
    }
}

/// Draws a spec: kind uniform over the three kinds, sigma uniform over
/// `sigma_range` (inclusive), angle uniform in `[0, 180)`.
pub fn sample_blur(seed: u64, sigma_range: (u32, u32)) -> Result<BlurSpec> {
    let (lo, hi) = sigma_range;
    if lo > hi || lo < SIGMA_MIN || hi > SIGMA_MAX {
        return Err(Error::InvalidBlurSpec(format!(
            "sigma range {lo}..={hi} outside {SIGMA_MIN}..={SIGMA_MAX}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kind = BlurKind::ALL[rng.random_range(0..BlurKind::ALL.len())];
    let sigma = rng.random_range(lo..=hi);
    let angle = rng.random_range(0.0..180.0);
    BlurSpec::new(kind, sigma, angle, seed)
}

/// Square, odd-sized, non-negative kernel summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    size: usize,
    weights: Vec<f64>,
    // Normalized 1D factor when the kernel is its own outer product.
    separable: Option<Vec<f64>>,
}

impl Kernel2D {
    pub fn from_weights(size: usize, weights: Vec<f64>) -> Result<Self> {
        if size == 0 || size % 2 == 0 || weights.len() != size * size {
            return Err(Error::InvalidBlurSpec(format!(
                "kernel needs odd size and size² weights, got size {size} with {}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidBlurSpec("negative kernel weight".into()));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidBlurSpec("kernel weights sum to zero".into()));
        }
        Ok(Self {
            size,
            weights: weights.into_iter().map(|w| w / sum).collect(),
            separable: None,
        })
    }

    fn separable(taps: Vec<f64>) -> Self {
        let sum: f64 = taps.iter().sum();
        let taps: Vec<f64> = taps.into_iter().map(|t| t / sum).collect();
        let size = taps.len();
        let mut weights = Vec::with_capacity(size * size);
        for &a in &taps {
            for &b in &taps {
                weights.push(a * b);
            }
        }
        Self {
            size,
            weights,
            separable: Some(taps),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.size + col]
    }
}

fn gaussian_taps(size: usize, sigma: f64) -> Vec<f64> {
    let r = (size / 2) as f64;
    (0..size)
        .map(|i| {
            let x = i as f64 - r;
            (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect()
}

/// One-pixel-wide line through the kernel center, sampled once per step of
/// the dominant axis. Rounding is symmetric about zero, so the line is
/// point-symmetric around the center.
fn motion_weights(size: usize, angle_deg: f64) -> Vec<f64> {
    let r = (size / 2) as isize;
    let theta = angle_deg.to_radians();
    let (sin, cos) = theta.sin_cos();
    let mut w = vec![0.0; size * size];
    // Direction in (col, row) is (cos, -sin): rows grow downward, so
    // positive angles tilt the line upward.
    for t in -r..=r {
        let tf = t as f64;
        let (col, row) = if cos.abs() >= sin.abs() {
            (r + t, r + (-tf * sin / cos).round() as isize)
        } else {
            (r + (tf * cos / sin).round() as isize, r - t)
        };
        w[row as usize * size + col as usize] = 1.0;
    }
    w
}

pub fn build_kernel(spec: &BlurSpec) -> Result<Kernel2D> {
    spec.validate()?;
    let size = spec.kernel_size();
    match spec.kind {
        BlurKind::Gaussian => Ok(Kernel2D::separable(gaussian_taps(size, spec.sigma as f64))),
        BlurKind::Average => Ok(Kernel2D::separable(vec![1.0; size])),
        BlurKind::Motion => Kernel2D::from_weights(size, motion_weights(size, spec.angle)),
    }
}

/// Reflect-101 index: `-1 → 1`, `n → n-2`. Requires `i` within one
/// reflection of the range.
#[inline]
fn reflect101(i: isize, n: usize) -> usize {
    let n = n as isize;
    let j = if i < 0 {
        -i
    } else if i >= n {
        2 * n - 2 - i
    } else {
        i
    };
    j as usize
}

fn correlate_rows(src: &[f64], width: usize, height: usize, taps: &[f64]) -> Vec<f64> {
    let r = (taps.len() / 2) as isize;
    let mut out = vec![0.0; src.len()];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        for x in 0..width {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                acc += t * row[reflect101(x as isize + k as isize - r, width)];
            }
            out[y * width + x] = acc;
        }
    }
    out
}

fn correlate_cols(src: &[f64], width: usize, height: usize, taps: &[f64]) -> Vec<f64> {
    let r = (taps.len() / 2) as isize;
    let mut out = vec![0.0; src.len()];
    for (k, t) in taps.iter().enumerate() {
        for y in 0..height {
            let sy = reflect101(y as isize + k as isize - r, height);
            let (dst, from) = (&mut out[y * width..(y + 1) * width], &src[sy * width..(sy + 1) * width]);
            for (d, s) in dst.iter_mut().zip(from) {
                *d += t * s;
            }
        }
    }
    out
}

fn correlate_dense(img: &GrayImage, kernel: &Kernel2D) -> Vec<f64> {
    let (w, h) = img.dims();
    let r = (kernel.size / 2) as isize;
    let src = img.data();
    // Only the non-zero taps matter; motion kernels are mostly empty.
    let taps: Vec<(isize, isize, f64)> = kernel
        .weights
        .iter()
        .enumerate()
        .filter(|(_, &wt)| wt != 0.0)
        .map(|(i, &wt)| ((i / kernel.size) as isize - r, (i % kernel.size) as isize - r, wt))
        .collect();
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for &(dy, dx, wt) in &taps {
                let sy = reflect101(y as isize + dy, h);
                let sx = reflect101(x as isize + dx, w);
                acc += wt * src[sy * w + sx];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// 2D correlation of `img` with `kernel`, reflect-101 at the borders.
pub fn apply_kernel(img: &GrayImage, kernel: &Kernel2D) -> Result<GrayImage> {
    let (w, h) = img.dims();
    if kernel.size > w || kernel.size > h {
        return Err(Error::KernelTooLarge {
            size: kernel.size,
            width: w,
            height: h,
        });
    }
    let data = match &kernel.separable {
        Some(taps) => {
            let rows = correlate_rows(img.data(), w, h, taps);
            correlate_cols(&rows, w, h, taps)
        }
        None => correlate_dense(img, kernel),
    };
    GrayImage::new(w, h, data)
}

/// Builds the kernel for `spec` and applies it.
pub fn apply_blur(img: &GrayImage, spec: &BlurSpec) -> Result<GrayImage> {
    apply_kernel(img, &build_kernel(spec)?)
}
