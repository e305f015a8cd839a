//! Deterministic test imagery: fingerprint-like ridge fields, plane
//! sinusoids and checkerboards.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::image::{clamp_unit, GrayImage};

/// Parameters of a whorl-like ridge field.
///
/// Ridges are level sets of an elliptical distance from `center`, so the
/// pattern has curved ridges of roughly constant spacing, like a fingertip.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeParams {
    /// Ridge spacing in pixels.
    pub period: f64,
    /// Orientation of the ellipse major axis, radians.
    pub angle: f64,
    /// Ratio of minor to major axis scaling.
    pub aspect: f64,
    /// Center as a fraction of width and height.
    pub center: (f64, f64),
    pub phase: f64,
    pub background: f64,
    /// Peak-to-peak ridge amplitude.
    pub contrast: f64,
    /// Half-width of the uniform pixel noise.
    pub noise: f64,
    pub seed: u64,
}

impl RidgeParams {
    /// Draws a plausible parameter set from `seed`.
    pub fn from_seed(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            period: rng.random_range(6.0..10.0),
            angle: rng.random_range(0.0..PI),
            aspect: rng.random_range(0.6..1.0),
            center: (rng.random_range(0.3..0.7), rng.random_range(0.3..0.7)),
            phase: rng.random_range(0.0..2.0 * PI),
            background: rng.random_range(0.45..0.55),
            contrast: rng.random_range(0.4..0.6),
            noise: 0.02,
            seed,
        }
    }
}

pub fn ridge_pattern(width: usize, height: usize, p: &RidgeParams) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed ^ 0x5eed_0f_a11);
    let (cx, cy) = (p.center.0 * width as f64, p.center.1 * height as f64);
    let (sin, cos) = p.angle.sin_cos();
    GrayImage::from_fn(width, height, |x, y| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        let u = dx * cos + dy * sin;
        let v = (-dx * sin + dy * cos) / p.aspect;
        let r = (u * u + v * v).sqrt();
        let ridge = 0.5 * p.contrast * (2.0 * PI * r / p.period + p.phase).sin();
        let noise = if p.noise > 0.0 {
            rng.random_range(-p.noise..p.noise)
        } else {
            0.0
        };
        clamp_unit(p.background + ridge + noise)
    })
    .expect("non-empty dimensions")
}

/// Plane wave `mean + amplitude·sin(2π·(x cosθ + y sinθ)/period)`.
pub fn sinusoid(
    width: usize,
    height: usize,
    period: f64,
    angle: f64,
    mean: f64,
    amplitude: f64,
) -> Result<GrayImage> {
    let (sin, cos) = angle.sin_cos();
    GrayImage::from_fn(width, height, |x, y| {
        let t = x as f64 * cos + y as f64 * sin;
        mean + amplitude * (2.0 * PI * t / period).sin()
    })
}

/// Square checkerboard with cells of `cell` pixels, values `mean ± amplitude`.
pub fn checkerboard(
    width: usize,
    height: usize,
    cell: usize,
    mean: f64,
    amplitude: f64,
) -> Result<GrayImage> {
    let cell = cell.max(1);
    GrayImage::from_fn(width, height, |x, y| {
        if (x / cell + y / cell) % 2 == 0 {
            mean + amplitude
        } else {
            mean - amplitude
        }
    })
}
