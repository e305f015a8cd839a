//! Library side of the `wavedeblur` command-line tool.

pub mod batch;
pub mod commands;
pub mod config;

pub use crate::batch::{run_batch, BatchSummary, Manifest, ManifestRow};
pub use crate::commands::{
    cmd_binarize, cmd_blur, cmd_deblur, cmd_dwt, cmd_idwt, cmd_stats, cmd_sweep, BlurChoice,
};
pub use crate::config::{BinarizeKind, RunConfig, RunOverrides};

/// Parses `1-8`, `3`, or `1,3,8` into a level list.
pub fn parse_levels(s: &str) -> anyhow::Result<Vec<u32>> {
    let mut levels = Vec::new();
    for part in s.split(',').map(str::trim) {
        match part.split_once('-') {
            Some((lo, hi)) => {
                let (lo, hi): (u32, u32) = (lo.trim().parse()?, hi.trim().parse()?);
                anyhow::ensure!(lo <= hi, "empty level range {part:?}");
                levels.extend(lo..=hi);
            }
            None => levels.push(part.parse()?),
        }
    }
    Ok(levels)
}
