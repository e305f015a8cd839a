//! Manifest-driven batch deblurring.
//!
//! A manifest is a headerless (or `blurry,...`-headed) CSV with rows
//! `blurry,style,output[,blurspec]`. Relative paths resolve against the
//! manifest's directory. `blurspec` is either `kind:sigma:angle:seed`, applied
//! to the blurry input before deblurring, or `auto` to draw one from the run
//! seed and the row index.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use wavedeblur_core::analysis::{csv_field, format_real};
use wavedeblur_core::{
    apply_blur, deblur_idwt, l1_distance, load_image_with_meta, psnr, sample_blur, save_image,
    sharpness, BlurSpec,
};

use crate::config::RunConfig;

pub const SUMMARY_HEADER: &str = "row,status,l1_blurry,psnr,sharpness_in,sharpness_out";

#[derive(Debug, Clone, PartialEq)]
pub enum RowBlur {
    Fixed(BlurSpec),
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub blurry: PathBuf,
    pub style: PathBuf,
    pub output: PathBuf,
    pub blur: Option<RowBlur>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub rows: Vec<ManifestRow>,
}

impl Manifest {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let resolve = |p: &str| {
            let p = Path::new(p);
            if p.is_absolute() {
                p.to_owned()
            } else {
                base.join(p)
            }
        };

        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.context("malformed manifest")?;
            let line = record.position().map_or(i as u64 + 1, |p| p.line());
            if i == 0 && record.get(0).is_some_and(|f| f.eq_ignore_ascii_case("blurry")) {
                continue;
            }
            if record.iter().all(str::is_empty) {
                continue;
            }
            if !(3..=4).contains(&record.len()) {
                bail!("manifest line {line}: expected 3 or 4 fields, found {}", record.len());
            }
            if record.iter().take(3).any(str::is_empty) {
                bail!("manifest line {line}: empty path");
            }
            let blur = match record.get(3).filter(|s| !s.is_empty()) {
                None => None,
                Some("auto") => Some(RowBlur::Auto),
                Some(spec) => Some(RowBlur::Fixed(
                    spec.parse()
                        .with_context(|| format!("manifest line {line}"))?,
                )),
            };
            rows.push(ManifestRow {
                blurry: resolve(&record[0]),
                style: resolve(&record[1]),
                output: resolve(&record[2]),
                blur,
            });
        }
        Ok(Self { rows })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&text, base)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowMetrics {
    pub l1_blurry: f64,
    pub psnr: f64,
    pub sharpness_in: f64,
    pub sharpness_out: f64,
}

#[derive(Debug)]
pub struct RowOutcome {
    pub row: usize,
    pub result: Result<RowMetrics>,
}

#[derive(Debug, Default)]
pub struct BatchSummary {
    pub rows: Vec<RowOutcome>,
}

impl BatchSummary {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.result.is_err()).count()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{SUMMARY_HEADER}")?;
        for r in &self.rows {
            match &r.result {
                Ok(m) => writeln!(
                    w,
                    "{},ok,{},{},{},{}",
                    r.row,
                    format_real(m.l1_blurry),
                    format_real(m.psnr),
                    format_real(m.sharpness_in),
                    format_real(m.sharpness_out)
                )?,
                Err(_) => writeln!(w, "{},{},,,,", r.row, csv_field("failed"))?,
            }
        }
        Ok(())
    }
}

/// Deblurs one manifest row and writes its output image. Metrics compare the
/// output with the (possibly synthetically blurred) input.
pub fn process_row(row: &ManifestRow, index: usize, cfg: &RunConfig) -> Result<RowMetrics> {
    let (input, meta) = load_image_with_meta(&row.blurry)?;
    let blurry = match &row.blur {
        None => input,
        Some(RowBlur::Fixed(spec)) => apply_blur(&input, spec)?,
        Some(RowBlur::Auto) => {
            let spec = sample_blur(cfg.seed.wrapping_add(index as u64), (3, 6))?;
            apply_blur(&input, &spec)?
        }
    };
    let (style, _) = load_image_with_meta(&row.style)?;
    let out = deblur_idwt(&blurry, &style, &cfg.transfer_config())?;
    save_image(&out, &row.output, meta.bit_depth)?;
    Ok(RowMetrics {
        l1_blurry: l1_distance(&out, &blurry)?,
        psnr: psnr(&out, &blurry)?,
        sharpness_in: sharpness(&blurry)?,
        sharpness_out: sharpness(&out)?,
    })
}

/// Processes every row on a pool of `cfg.threads` workers. Results come
/// back in manifest order whatever the scheduling.
pub fn run_batch(manifest: &Manifest, cfg: &RunConfig) -> Result<BatchSummary> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .context("building worker pool")?;
    let rows = pool.install(|| {
        manifest
            .rows
            .par_iter()
            .enumerate()
            .map(|(i, row)| RowOutcome {
                row: i,
                result: process_row(row, i, cfg)
                    .with_context(|| format!("row {i} ({})", row.blurry.display())),
            })
            .collect()
    });
    Ok(BatchSummary { rows })
}
