//! Wavelet-packet style transfer for image deblurring.
//!
//! A blurry image and a sharp (optionally binarized) style image are both
//! decomposed into a full Haar wavelet packet. Every sub-band of the blurry
//! packet is re-normalized to the mean and standard deviation of the matching
//! style sub-band, and the result is inverted back to the pixel domain.
//!
//! The crate also carries the supporting pieces: grayscale image I/O, blur
//! synthesis, binarization, and the statistics used to compare sub-band
//! profiles across images.

pub mod analysis;
pub mod degrade;
mod error;
pub mod image;
pub mod packet;
pub mod synthetic;
pub mod transfer;

pub use crate::analysis::{
    detail_energy, format_real, level_sweep, sharpness, stats_report, StatsReport, StatsRow, SweepEntry,
    SweepResult,
};
pub use crate::degrade::{apply_blur, build_kernel, sample_blur, BlurKind, BlurSpec, Kernel2D};
pub use crate::error::{Error, Result};
pub use crate::image::{
    l1_distance, load_image, load_image_with_meta, mse, psnr, save_image, BitDepth, GrayImage,
    ImageMeta,
};
pub use crate::packet::{
    haar_analysis_step, haar_synthesis_step, max_level, packet_decompose, packet_reconstruct,
    Filter, PacketPath, Subband, SubbandQuad, WaveletPacket,
};
pub use crate::transfer::{
    binarize, deblur_idwt, subband_stats, transfer_reconstruct, wst_band, wst_packet,
    BinarizeMethod, StyleMode, SubbandStats, TransferConfig,
};
