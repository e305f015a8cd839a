//! Subcommand bodies. Each takes parsed arguments and does its file I/O; the
//! binary only maps results to exit codes and messages.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use wavedeblur_core::{
    apply_blur, binarize, deblur_idwt, l1_distance, level_sweep, load_image, load_image_with_meta,
    packet_decompose, packet_reconstruct, psnr, sample_blur, save_image, sharpness, stats_report,
    BinarizeMethod, BitDepth, BlurSpec, GrayImage, StatsReport, SweepResult, WaveletPacket,
};

use crate::config::RunConfig;

fn create_file(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

/// Forward transform to a WPK1 container, optionally dumping every band as a
/// min-max normalized 8-bit PNG.
pub fn cmd_dwt(
    input: &Path,
    level: u32,
    output: &Path,
    dump_bands: Option<&Path>,
) -> Result<WaveletPacket> {
    let img = load_image(input)?;
    let packet = packet_decompose(&img, level)?;
    packet.write_wpk1(output)?;
    if let Some(dir) = dump_bands {
        dump_band_images(&packet, dir)?;
    }
    Ok(packet)
}

fn dump_band_images(packet: &WaveletPacket, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let digits = (packet.band_count() - 1).to_string().len();
    for i in 0..packet.band_count() {
        let band = packet.band(i);
        let (lo, hi) = band
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let span = hi - lo;
        let normalized = band
            .iter()
            .map(|&v| if span > 0.0 { (v - lo) / span } else { 0.5 })
            .collect();
        let img = GrayImage::new(packet.band_cols(), packet.band_rows(), normalized)?;
        let name = format!("band_{i:0digits$}_{}.png", packet.path(i));
        save_image(&img, dir.join(name), BitDepth::Eight)?;
    }
    Ok(())
}

/// Inverse transform of a WPK1 container; the image is clamped on write.
pub fn cmd_idwt(input: &Path, output: &Path, depth: BitDepth) -> Result<GrayImage> {
    let packet = WaveletPacket::read_wpk1(input)?;
    let img = packet_reconstruct(&packet)?;
    save_image(&img, output, depth)?;
    Ok(img)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageMetrics {
    pub l1: f64,
    pub psnr: f64,
}

impl ImageMetrics {
    fn between(a: &GrayImage, b: &GrayImage) -> Result<Self> {
        Ok(Self {
            l1: l1_distance(a, b)?,
            psnr: psnr(a, b)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeblurReport {
    pub vs_blurry: ImageMetrics,
    pub vs_truth: Option<ImageMetrics>,
    pub sharpness_in: f64,
    pub sharpness_out: f64,
}

impl DeblurReport {
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "l1_blurry      {:.6}", self.vs_blurry.l1)?;
        writeln!(w, "psnr_blurry    {:.3} dB", self.vs_blurry.psnr)?;
        if let Some(t) = &self.vs_truth {
            writeln!(w, "l1_truth       {:.6}", t.l1)?;
            writeln!(w, "psnr_truth     {:.3} dB", t.psnr)?;
        }
        writeln!(w, "sharpness_in   {:.6e}", self.sharpness_in)?;
        writeln!(w, "sharpness_out  {:.6e}", self.sharpness_out)
    }
}

pub fn cmd_deblur(
    blurry: &Path,
    style: &Path,
    output: &Path,
    truth: Option<&Path>,
    cfg: &RunConfig,
) -> Result<DeblurReport> {
    let (blurry_img, meta) = load_image_with_meta(blurry)?;
    let style_img = load_image(style)?;
    let out = deblur_idwt(&blurry_img, &style_img, &cfg.transfer_config())?;
    save_image(&out, output, meta.bit_depth)?;

    let vs_truth = truth
        .map(|p| -> Result<_> { ImageMetrics::between(&out, &load_image(p)?) })
        .transpose()?;
    Ok(DeblurReport {
        vs_blurry: ImageMetrics::between(&out, &blurry_img)?,
        vs_truth,
        sharpness_in: sharpness(&blurry_img)?,
        sharpness_out: sharpness(&out)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlurChoice {
    Spec(BlurSpec),
    /// Draw a spec from the seed.
    Sample { seed: u64 },
}

pub fn cmd_blur(input: &Path, output: &Path, choice: BlurChoice) -> Result<BlurSpec> {
    let (img, meta) = load_image_with_meta(input)?;
    let spec = match choice {
        BlurChoice::Spec(spec) => spec,
        BlurChoice::Sample { seed } => sample_blur(seed, (3, 6))?,
    };
    let out = apply_blur(&img, &spec)?;
    save_image(&out, output, meta.bit_depth)?;
    Ok(spec)
}

pub fn cmd_binarize(input: &Path, output: &Path, method: BinarizeMethod) -> Result<()> {
    let (img, meta) = load_image_with_meta(input)?;
    save_image(&binarize(&img, method)?, output, meta.bit_depth)?;
    Ok(())
}

/// Input for `stats`: `label=path`, or a bare path labelled by its file stem.
pub fn parse_labelled(arg: &str) -> (String, PathBuf) {
    match arg.split_once('=') {
        Some((label, path)) if !label.is_empty() => (label.to_owned(), PathBuf::from(path)),
        _ => {
            let path = PathBuf::from(arg);
            let label = path
                .file_stem()
                .map_or_else(|| arg.to_owned(), |s| s.to_string_lossy().into_owned());
            (label, path)
        }
    }
}

pub fn cmd_stats(inputs: &[(String, PathBuf)], level: u32, output: &Path) -> Result<StatsReport> {
    let images = inputs
        .iter()
        .map(|(label, path)| Ok((label.clone(), load_image(path)?)))
        .collect::<Result<Vec<_>>>()?;
    let report = stats_report(&images, level)?;
    let mut w = create_file(output)?;
    report.write_csv(&mut w)?;
    w.flush()?;
    Ok(report)
}

/// Runs one deblur per level and writes the sweep CSV. With `image_dir`,
/// each level's output is also saved as `level_<L>.png`.
pub fn cmd_sweep(
    blurry: &Path,
    style: &Path,
    levels: &[u32],
    cfg: &RunConfig,
    output: &Path,
    image_dir: Option<&Path>,
) -> Result<SweepResult> {
    let (blurry_img, meta) = load_image_with_meta(blurry)?;
    let style_img = load_image(style)?;
    let mut sweep = level_sweep(&blurry_img, &style_img, &cfg.transfer_config(), levels)?;
    if let Some(dir) = image_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for entry in &mut sweep.entries {
            let path = dir.join(format!("level_{}.png", entry.level));
            save_image(&entry.output, &path, meta.bit_depth)?;
            entry.output_path = Some(path.display().to_string());
        }
    }
    let mut w = create_file(output)?;
    sweep.write_csv(&mut w)?;
    w.flush()?;
    Ok(sweep)
}
