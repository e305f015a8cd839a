use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use wavedeblur_cli::batch::{run_batch, Manifest};
use wavedeblur_cli::commands::{self, BlurChoice};
use wavedeblur_cli::config::{BinarizeKind, RunConfig, RunOverrides, DEFAULT_WINDOW};
use wavedeblur_cli::parse_levels;
use wavedeblur_core::{BinarizeMethod, BitDepth, BlurKind, BlurSpec, StyleMode};

#[derive(Parser)]
#[command(name = "wavedeblur", version, about = "Wavelet-packet style transfer deblurring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// TOML file with run settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Packet decomposition level.
    #[arg(long)]
    level: Option<u32>,
    /// `sharp` or `binarized`.
    #[arg(long)]
    style_mode: Option<StyleMode>,
    /// Floor on the blurry band standard deviation.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "WAVEDEBLUR_THREADS")]
    threads: Option<usize>,
    /// `otsu` or `adaptive-mean`.
    #[arg(long)]
    binarize_method: Option<BinarizeKind>,
    /// Adaptive-mean window (odd, >= 3).
    #[arg(long)]
    window: Option<usize>,
    /// Adaptive-mean offset subtracted from the local mean.
    #[arg(long, allow_hyphen_values = true)]
    offset: Option<f64>,
}

impl RunArgs {
    fn resolve(self) -> Result<RunConfig> {
        let file = self
            .config
            .as_deref()
            .map(RunOverrides::from_toml_file)
            .transpose()?;
        let flags = RunOverrides {
            level: self.level,
            style_mode: self.style_mode,
            epsilon: self.epsilon,
            seed: self.seed,
            threads: self.threads,
            binarize_method: self.binarize_method,
            window: self.window,
            offset: self.offset,
        };
        RunConfig::resolve(flags, file)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Decompose an image into a WPK1 wavelet-packet container.
    Dwt {
        input: PathBuf,
        #[arg(long, default_value_t = 3)]
        level: u32,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write each band as a normalized PNG into this directory.
        #[arg(long)]
        dump_bands: Option<PathBuf>,
    },
    /// Reconstruct an image from a WPK1 container.
    Idwt {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 8)]
        bit_depth: u32,
    },
    /// Transfer sub-band statistics from a style image and reconstruct.
    Deblur {
        blurry: PathBuf,
        style: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Sharp ground truth to report metrics against.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Apply a synthetic blur.
    Blur {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Full spec `kind:sigma:angle:seed`.
        #[arg(long, conflicts_with_all = ["kind", "sigma", "angle"])]
        spec: Option<BlurSpec>,
        /// `gaussian`, `motion` or `average`; without it the spec is sampled from --seed.
        #[arg(long)]
        kind: Option<BlurKind>,
        #[arg(long, requires = "kind")]
        sigma: Option<u32>,
        #[arg(long, requires = "kind")]
        angle: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Binarize an image.
    Binarize {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = BinarizeKind::Otsu)]
        method: BinarizeKind,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        offset: f64,
    },
    /// Per-band mean/std CSV for one or more images (`label=path` or `path`).
    Stats {
        #[arg(required = true)]
        inputs: Vec<String>,
        #[arg(long, default_value_t = 3)]
        level: u32,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Deblur at several levels and report distances to style and input.
    Sweep {
        blurry: PathBuf,
        style: PathBuf,
        /// Levels as `1-8` or `1,3,8`.
        #[arg(long, default_value = "1-8")]
        levels: String,
        #[arg(short, long)]
        output: PathBuf,
        /// Directory for per-level output images.
        #[arg(long)]
        images: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Process a manifest of `blurry,style,output[,blurspec]` rows.
    Batch {
        manifest: PathBuf,
        #[arg(short, long)]
        summary: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
}

enum Outcome {
    Done,
    Partial(usize),
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Dwt {
            input,
            level,
            output,
            dump_bands,
        } => {
            commands::cmd_dwt(&input, level, &output, dump_bands.as_deref())?;
        }
        Command::Idwt {
            input,
            output,
            bit_depth,
        } => {
            commands::cmd_idwt(&input, &output, BitDepth::try_from(bit_depth)?)?;
        }
        Command::Deblur {
            blurry,
            style,
            output,
            truth,
            run,
        } => {
            let cfg = run.resolve()?;
            let report = commands::cmd_deblur(&blurry, &style, &output, truth.as_deref(), &cfg)?;
            report.write_to(std::io::stdout().lock())?;
        }
        Command::Blur {
            input,
            output,
            spec,
            kind,
            sigma,
            angle,
            seed,
        } => {
            let choice = match (spec, kind) {
                (Some(spec), _) => BlurChoice::Spec(spec),
                (None, Some(kind)) => BlurChoice::Spec(BlurSpec::new(
                    kind,
                    sigma.unwrap_or(3),
                    angle.unwrap_or(0.0),
                    seed,
                )?),
                (None, None) => BlurChoice::Sample { seed },
            };
            let used = commands::cmd_blur(&input, &output, choice)?;
            eprintln!("applied {used}");
        }
        Command::Binarize {
            input,
            output,
            method,
            window,
            offset,
        } => {
            let method = match method {
                BinarizeKind::Otsu => BinarizeMethod::Otsu,
                BinarizeKind::AdaptiveMean => BinarizeMethod::AdaptiveMean { window, offset },
            };
            commands::cmd_binarize(&input, &output, method)?;
        }
        Command::Stats {
            inputs,
            level,
            output,
        } => {
            let labelled: Vec<_> = inputs.iter().map(|s| commands::parse_labelled(s)).collect();
            commands::cmd_stats(&labelled, level, &output)?;
        }
        Command::Sweep {
            blurry,
            style,
            levels,
            output,
            images,
            run,
        } => {
            let cfg = run.resolve()?;
            let levels = parse_levels(&levels).context("parsing --levels")?;
            if levels.is_empty() {
                bail!("no levels requested");
            }
            commands::cmd_sweep(&blurry, &style, &levels, &cfg, &output, images.as_deref())?;
        }
        Command::Batch {
            manifest,
            summary,
            run,
        } => {
            let cfg = run.resolve()?;
            let manifest = Manifest::read(&manifest)?;
            let result = run_batch(&manifest, &cfg)?;
            for row in &result.rows {
                if let Err(e) = &row.result {
                    eprintln!("error: {e:#}");
                }
            }
            let file = std::fs::File::create(&summary)
                .with_context(|| format!("creating {}", summary.display()))?;
            let mut w = std::io::BufWriter::new(file);
            result.write_csv(&mut w)?;
            w.flush()?;
            let failed = result.failures();
            if failed > 0 {
                return Ok(Outcome::Partial(failed));
            }
        }
    }
    Ok(Outcome::Done)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Partial(n)) => {
            eprintln!("{n} row(s) failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
