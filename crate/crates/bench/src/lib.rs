//! Shared fixtures for the criterion benches.

use wavedeblur_core::synthetic::{ridge_pattern, RidgeParams};
use wavedeblur_core::{apply_blur, BlurKind, BlurSpec, GrayImage};

/// A Gaussian-blurred ridge image and an unrelated sharp ridge image.
pub fn blurry_style_pair(size: usize) -> (GrayImage, GrayImage) {
    let sharp = ridge_pattern(size, size, &RidgeParams::from_seed(1));
    let spec = BlurSpec::new(BlurKind::Gaussian, 3, 0.0, 0).expect("valid spec");
    let blurry = apply_blur(&sharp, &spec).expect("image larger than kernel");
    let style = ridge_pattern(size, size, &RidgeParams::from_seed(2));
    (blurry, style)
}
