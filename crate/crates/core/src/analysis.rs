//! Per-band statistics reports, level sweeps and a sharpness score.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{l1_distance, GrayImage};
use crate::packet::{packet_decompose, PacketPath};
use crate::transfer::{subband_stats, transfer_reconstruct, TransferConfig};

/// Formats a real with 17 significant digits, enough to round-trip any f64.
pub fn format_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_owned()
    } else if v > 0.0 {
        "inf".to_owned()
    } else {
        "-inf".to_owned()
    }
}

/// Quotes a CSV field when it contains a separator, quote or line break.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsRow {
    pub label: String,
    pub band_index: usize,
    pub path: PacketPath,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsReport {
    pub level: u32,
    pub rows: Vec<StatsRow>,
}

impl StatsReport {
    pub const HEADER: &'static str = "label,band_index,path,mean,std";

    pub fn rows_for<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a StatsRow> + 'a {
        self.rows.iter().filter(move |r| r.label == label)
    }

    /// Mean of the per-band standard deviations for one image.
    pub fn mean_std(&self, label: &str) -> Option<f64> {
        let stds: Vec<f64> = self.rows_for(label).map(|r| r.std).collect();
        (!stds.is_empty()).then(|| stds.iter().sum::<f64>() / stds.len() as f64)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", Self::HEADER)?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                csv_field(&r.label),
                r.band_index,
                r.path,
                format_real(r.mean),
                format_real(r.std)
            )?;
        }
        Ok(())
    }
}

/// Per-image, per-band mean and standard deviation, rows ordered by input
/// image then canonical band index.
pub fn stats_report(images: &[(String, GrayImage)], level: u32) -> Result<StatsReport> {
    if let Some((_, first)) = images.first() {
        if let Some((_, bad)) = images.iter().find(|(_, img)| img.dims() != first.dims()) {
            return Err(Error::DimensionMismatch {
                left: first.dims(),
                right: bad.dims(),
            });
        }
    }
    let mut rows = Vec::new();
    for (label, img) in images {
        let packet = packet_decompose(img, level)?;
        for (band_index, band) in packet.bands().enumerate() {
            let s = subband_stats(band)?;
            rows.push(StatsRow {
                label: label.clone(),
                band_index,
                path: packet.path(band_index),
                mean: s.mean,
                std: s.std,
            });
        }
    }
    Ok(StatsReport { level, rows })
}

/// Energy of every packet band except the pure approximation band.
pub fn detail_energy(img: &GrayImage, level: u32) -> Result<f64> {
    Ok(packet_decompose(img, level)?.detail_energy())
}

/// Variance of the 4-neighbour Laplacian over interior pixels.
pub fn sharpness(img: &GrayImage) -> Result<f64> {
    let (w, h) = img.dims();
    if w < 3 || h < 3 {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
        });
    }
    let mut responses = Vec::with_capacity((w - 2) * (h - 2));
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let lap = img.get(x - 1, y) + img.get(x + 1, y) + img.get(x, y - 1) + img.get(x, y + 1)
                - 4.0 * img.get(x, y);
            responses.push(lap);
        }
    }
    let n = responses.len() as f64;
    let mean = responses.iter().sum::<f64>() / n;
    Ok(responses.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub level: u32,
    pub output: GrayImage,
    /// Distance to the style image actually used (binarized if configured).
    pub l1_style: f64,
    pub l1_blurry: f64,
    /// Level-1 detail energy of the output.
    pub detail_energy: f64,
    /// Where the output was written, if anywhere.
    pub output_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
}

impl SweepResult {
    pub const HEADER: &'static str = "level,l1_style,l1_blurry,detail_energy,output_path";

    pub fn entry(&self, level: u32) -> Option<&SweepEntry> {
        self.entries.iter().find(|e| e.level == level)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", Self::HEADER)?;
        for e in &self.entries {
            writeln!(
                w,
                "{},{},{},{},{}",
                e.level,
                format_real(e.l1_style),
                format_real(e.l1_blurry),
                format_real(e.detail_energy),
                csv_field(e.output_path.as_deref().unwrap_or(""))
            )?;
        }
        Ok(())
    }
}

/// Runs the deblurring pipeline once per requested level.
pub fn level_sweep(
    blurry: &GrayImage,
    style: &GrayImage,
    cfg: &TransferConfig,
    levels: &[u32],
) -> Result<SweepResult> {
    cfg.validate()?;
    let style = cfg.effective_style(style)?;
    let entries = levels
        .par_iter()
        .map(|&level| {
            let output = transfer_reconstruct(blurry, &style, level, cfg.epsilon)?.clamped();
            Ok(SweepEntry {
                level,
                l1_style: l1_distance(&output, &style)?,
                l1_blurry: l1_distance(&output, blurry)?,
                detail_energy: detail_energy(&output, 1)?,
                output,
                output_path: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { entries })
}
