//! 2D Haar filter bank and full wavelet-packet decomposition.
//!
//! Conventions used throughout:
//!
//! * Orthonormal per-axis filters: low `(1/√2, 1/√2)`, high `(1/√2, -1/√2)`,
//!   applied left-to-right along rows and top-to-bottom along columns.
//! * Band names list the row (horizontal) filter first, then the column
//!   (vertical) filter. For the 2×2 block `[[a, b], [c, d]]`:
//!   `LL = (a+b+c+d)/2`, `LH = (a+b-c-d)/2`, `HL = (a-b+c-d)/2`,
//!   `HH = (a-b-c+d)/2`.
//! * A level-`L` packet splits *every* band at every level, giving `4^L`
//!   bands. Band `i` is the base-4 number whose digits (`LL=0`, `LH=1`,
//!   `HL=2`, `HH=3`) spell its [`PacketPath`], first split most significant.
//!
//! [`WaveletPacket`] stores all bands in one band-major buffer, which is also
//! the coefficient layout of the WPK1 container.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Deepest level representable by a [`PacketPath`] index.
pub const MAX_LEVEL: u32 = 31;

const WPK1_MAGIC: &[u8; 4] = b"WPK1";
const WPK1_HEADER_LEN: usize = 16;

// Buffers at least this long are split across the rayon pool.
const PAR_THRESHOLD: usize = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Filter {
    LL = 0,
    LH = 1,
    HL = 2,
    HH = 3,
}

impl Filter {
    pub const ALL: [Filter; 4] = [Filter::LL, Filter::LH, Filter::HL, Filter::HH];

    pub fn digit(self) -> usize {
        self as usize
    }

    pub fn from_digit(d: usize) -> Option<Self> {
        Self::ALL.get(d).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Filter::LL => "LL",
            Filter::LH => "LH",
            Filter::HL => "HL",
            Filter::HH => "HH",
        }
    }
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sequence of filter choices naming one packet band, first split first.
///
/// Text form joins the steps with `.`, e.g. `LL.HL.HH`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PacketPath(Vec<Filter>);

impl PacketPath {
    pub fn new(steps: Vec<Filter>) -> Result<Self> {
        if steps.is_empty() || steps.len() > MAX_LEVEL as usize {
            return Err(Error::InvalidPath(format!(
                "path length {} outside 1..={MAX_LEVEL}",
                steps.len()
            )));
        }
        Ok(Self(steps))
    }

    /// Decodes a canonical band index at the given level.
    pub fn from_index(index: usize, level: u32) -> Result<Self> {
        if level == 0 || level > MAX_LEVEL {
            return Err(Error::InvalidPath(format!("level {level} outside 1..={MAX_LEVEL}")));
        }
        if index >= band_count(level) {
            return Err(Error::InvalidPath(format!(
                "index {index} out of range for level {level}"
            )));
        }
        let steps = (0..level)
            .rev()
            .map(|shift| Filter::from_digit((index >> (2 * shift)) & 3).expect("two-bit digit"))
            .collect();
        Ok(Self(steps))
    }

    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, f| acc * 4 + f.digit())
    }

    pub fn level(&self) -> u32 {
        self.0.len() as u32
    }

    pub fn steps(&self) -> &[Filter] {
        &self.0
    }
}

impl fmt::Display for PacketPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, step) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            f.write_str(step.as_str())?;
        }
        Ok(())
    }
}

impl FromStr for PacketPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let steps = s
            .split('.')
            .map(|part| match part {
                "LL" => Ok(Filter::LL),
                "LH" => Ok(Filter::LH),
                "HL" => Ok(Filter::HL),
                "HH" => Ok(Filter::HH),
                other => Err(Error::InvalidPath(format!("unknown filter {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(steps)
    }
}

/// A single coefficient array.
#[derive(Debug, Clone, PartialEq)]
pub struct Subband {
    rows: usize,
    cols: usize,
    coeffs: Vec<f64>,
}

impl Subband {
    pub fn new(rows: usize, cols: usize, coeffs: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyBand);
        }
        if coeffs.len() != rows * cols {
            return Err(Error::BufferSize {
                len: coeffs.len(),
                rows,
                cols,
            });
        }
        Ok(Self { rows, cols, coeffs })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// `(rows, cols)`.
    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn into_image(self) -> GrayImage {
        GrayImage::new(self.cols, self.rows, self.coeffs).expect("non-empty band")
    }
}

impl From<&GrayImage> for Subband {
    fn from(img: &GrayImage) -> Self {
        Self {
            rows: img.height(),
            cols: img.width(),
            coeffs: img.data().to_vec(),
        }
    }
}

impl From<GrayImage> for Subband {
    fn from(img: GrayImage) -> Self {
        let (rows, cols) = (img.height(), img.width());
        Self {
            rows,
            cols,
            coeffs: img.into_data(),
        }
    }
}

/// The four outputs of one analysis step.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandQuad {
    pub ll: Subband,
    pub lh: Subband,
    pub hl: Subband,
    pub hh: Subband,
}

/// Splits a `rows×cols` block into four contiguous `(rows/2)×(cols/2)`
/// children laid out LL, LH, HL, HH in `out`.
fn analyze_block(src: &[f64], rows: usize, cols: usize, out: &mut [f64]) {
    let (half_r, half_c) = (rows / 2, cols / 2);
    let n = half_r * half_c;
    let (ll, rest) = out.split_at_mut(n);
    let (lh, rest) = rest.split_at_mut(n);
    let (hl, hh) = rest.split_at_mut(n);
    for i in 0..half_r {
        let top = &src[2 * i * cols..(2 * i + 1) * cols];
        let bot = &src[(2 * i + 1) * cols..(2 * i + 2) * cols];
        let o = i * half_c;
        for j in 0..half_c {
            let (a, b) = (top[2 * j], top[2 * j + 1]);
            let (c, d) = (bot[2 * j], bot[2 * j + 1]);
            let (row_lo_top, row_hi_top) = (a + b, a - b);
            let (row_lo_bot, row_hi_bot) = (c + d, c - d);
            ll[o + j] = 0.5 * (row_lo_top + row_lo_bot);
            lh[o + j] = 0.5 * (row_lo_top - row_lo_bot);
            hl[o + j] = 0.5 * (row_hi_top + row_hi_bot);
            hh[o + j] = 0.5 * (row_hi_top - row_hi_bot);
        }
    }
}

/// Inverse of [`analyze_block`]: `src` holds four `rows×cols` children,
/// `out` receives the `(2·rows)×(2·cols)` parent.
fn synthesize_block(src: &[f64], rows: usize, cols: usize, out: &mut [f64]) {
    let n = rows * cols;
    let (ll, rest) = src.split_at(n);
    let (lh, rest) = rest.split_at(n);
    let (hl, hh) = rest.split_at(n);
    let width = 2 * cols;
    for i in 0..rows {
        let (top, bot) = out[2 * i * width..(2 * i + 2) * width].split_at_mut(width);
        let o = i * cols;
        for j in 0..cols {
            let (s_lo, d_lo) = (ll[o + j] + lh[o + j], ll[o + j] - lh[o + j]);
            let (s_hi, d_hi) = (hl[o + j] + hh[o + j], hl[o + j] - hh[o + j]);
            top[2 * j] = 0.5 * (s_lo + s_hi);
            top[2 * j + 1] = 0.5 * (s_lo - s_hi);
            bot[2 * j] = 0.5 * (d_lo + d_hi);
            bot[2 * j + 1] = 0.5 * (d_lo - d_hi);
        }
    }
}

/// Applies `f` to matching fixed-size blocks of `src` and `dst`, in parallel
/// for large buffers. Blocks are independent, so the result does not depend
/// on scheduling.
fn for_each_block<F>(src: &[f64], dst: &mut [f64], block: usize, f: F)
where
    F: Fn(&[f64], &mut [f64]) + Sync + Send,
{
    if src.len() >= PAR_THRESHOLD && src.len() > block {
        src.par_chunks_exact(block)
            .zip(dst.par_chunks_exact_mut(block))
            .with_min_len((PAR_THRESHOLD / block).max(1))
            .for_each(|(s, d)| f(s, d));
    } else {
        src.chunks_exact(block)
            .zip(dst.chunks_exact_mut(block))
            .for_each(|(s, d)| f(s, d));
    }
}

/// One 2D Haar analysis step with stride 2.
pub fn haar_analysis_step(input: &Subband) -> Result<SubbandQuad> {
    let (rows, cols) = input.shape();
    if rows % 2 != 0 || cols % 2 != 0 {
        return Err(Error::OddDimension { rows, cols });
    }
    let n = (rows / 2) * (cols / 2);
    let mut out = vec![0.0; 4 * n];
    analyze_block(&input.coeffs, rows, cols, &mut out);
    let band = |k: usize| Subband {
        rows: rows / 2,
        cols: cols / 2,
        coeffs: out[k * n..(k + 1) * n].to_vec(),
    };
    Ok(SubbandQuad {
        ll: band(0),
        lh: band(1),
        hl: band(2),
        hh: band(3),
    })
}

/// One 2D Haar synthesis step; exact inverse of [`haar_analysis_step`].
pub fn haar_synthesis_step(
    ll: &Subband,
    lh: &Subband,
    hl: &Subband,
    hh: &Subband,
) -> Result<Subband> {
    for other in [lh, hl, hh] {
        if other.shape() != ll.shape() {
            return Err(Error::DimensionMismatch {
                left: ll.shape(),
                right: other.shape(),
            });
        }
    }
    let (rows, cols) = ll.shape();
    let mut src = Vec::with_capacity(4 * rows * cols);
    for band in [ll, lh, hl, hh] {
        src.extend_from_slice(&band.coeffs);
    }
    let mut out = vec![0.0; 4 * rows * cols];
    synthesize_block(&src, rows, cols, &mut out);
    Ok(Subband {
        rows: 2 * rows,
        cols: 2 * cols,
        coeffs: out,
    })
}

/// Number of bands at `level`, `4^level`.
#[inline]
pub fn band_count(level: u32) -> usize {
    1usize << (2 * level)
}

/// Deepest packet level for a `width×height` image: the number of times
/// both sides can be halved exactly.
pub fn max_level(width: usize, height: usize) -> u32 {
    if width == 0 || height == 0 {
        return 0;
    }
    width.trailing_zeros().min(height.trailing_zeros()).min(MAX_LEVEL)
}

fn check_level(width: usize, height: usize, level: u32) -> Result<()> {
    if level == 0 {
        return Err(Error::ZeroLevel);
    }
    let max = max_level(width, height);
    if level > max {
        return Err(Error::LevelTooHigh {
            level,
            max,
            width,
            height,
        });
    }
    Ok(())
}

/// A full level-`L` Haar wavelet packet.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletPacket {
    level: u32,
    width: usize,
    height: usize,
    coeffs: Vec<f64>,
}

impl WaveletPacket {
    /// Wraps a band-major coefficient buffer.
    pub fn from_coeffs(level: u32, width: usize, height: usize, coeffs: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::MalformedPacket("zero source dimension".into()));
        }
        check_level(width, height, level)
            .map_err(|e| Error::MalformedPacket(e.to_string()))?;
        if coeffs.len() != width * height {
            return Err(Error::MalformedPacket(format!(
                "{} coefficients for a {width}x{height} source",
                coeffs.len()
            )));
        }
        Ok(Self {
            level,
            width,
            height,
            coeffs,
        })
    }

    /// Assembles a packet from bands given in canonical order.
    pub fn from_bands(level: u32, width: usize, height: usize, bands: &[Subband]) -> Result<Self> {
        if level == 0 || level > MAX_LEVEL {
            return Err(Error::MalformedPacket(format!("level {level}")));
        }
        if bands.len() != band_count(level) {
            return Err(Error::MalformedPacket(format!(
                "expected {} bands at level {level}, got {}",
                band_count(level),
                bands.len()
            )));
        }
        let shape = (height >> level, width >> level);
        if let Some(bad) = bands.iter().find(|b| b.shape() != shape) {
            return Err(Error::MalformedPacket(format!(
                "band shape {:?}, expected {shape:?}",
                bad.shape()
            )));
        }
        let coeffs = bands.iter().flat_map(|b| b.coeffs.iter().copied()).collect();
        Self::from_coeffs(level, width, height, coeffs)
    }

    pub fn zeros(level: u32, width: usize, height: usize) -> Result<Self> {
        Self::from_coeffs(level, width, height, vec![0.0; width * height])
    }

    #[inline]
    pub fn level(&self) -> u32 {
        self.level
    }

    #[inline]
    pub fn source_width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn source_height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn band_rows(&self) -> usize {
        self.height >> self.level
    }

    #[inline]
    pub fn band_cols(&self) -> usize {
        self.width >> self.level
    }

    #[inline]
    pub fn band_len(&self) -> usize {
        self.band_rows() * self.band_cols()
    }

    #[inline]
    pub fn band_count(&self) -> usize {
        band_count(self.level)
    }

    pub fn band(&self, index: usize) -> &[f64] {
        let n = self.band_len();
        &self.coeffs[index * n..(index + 1) * n]
    }

    pub fn band_mut(&mut self, index: usize) -> &mut [f64] {
        let n = self.band_len();
        &mut self.coeffs[index * n..(index + 1) * n]
    }

    /// Bands in canonical order.
    pub fn bands(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coeffs.chunks_exact(self.band_len())
    }

    pub fn bands_mut(&mut self) -> std::slice::ChunksExactMut<'_, f64> {
        let n = self.band_len();
        self.coeffs.chunks_exact_mut(n)
    }

    pub fn subband(&self, index: usize) -> Subband {
        Subband {
            rows: self.band_rows(),
            cols: self.band_cols(),
            coeffs: self.band(index).to_vec(),
        }
    }

    pub fn path(&self, index: usize) -> PacketPath {
        PacketPath::from_index(index, self.level).expect("index within packet")
    }

    /// All coefficients, band-major.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    /// Sum of squared coefficients.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// Sum of squared coefficients over every band except `LL…LL`.
    pub fn detail_energy(&self) -> f64 {
        self.coeffs[self.band_len()..].iter().map(|c| c * c).sum()
    }

    pub fn same_layout(&self, other: &Self) -> bool {
        self.level == other.level && self.width == other.width && self.height == other.height
    }

    /// Serializes to the WPK1 container: `"WPK1"`, then little-endian `u32`
    /// source width, source height and level, then every coefficient as a
    /// little-endian `f64`, bands in canonical order.
    pub fn to_wpk1_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(WPK1_HEADER_LEN + 8 * self.coeffs.len());
        out.extend_from_slice(WPK1_MAGIC);
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        out.extend_from_slice(&self.level.to_le_bytes());
        for c in &self.coeffs {
            out.extend_from_slice(&c.to_le_bytes());
        }
        out
    }

    pub fn from_wpk1_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < WPK1_HEADER_LEN {
            return Err(Error::TruncatedContainer {
                expected: WPK1_HEADER_LEN,
                found: bytes.len(),
            });
        }
        let magic: [u8; 4] = bytes[0..4].try_into().expect("4 bytes");
        if &magic != WPK1_MAGIC {
            return Err(Error::BadMagic(magic));
        }
        let field = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"));
        let (width, height, level) = (field(4) as usize, field(8) as usize, field(12));
        if width == 0 || height == 0 {
            return Err(Error::InconsistentContainer(format!(
                "source dimensions {width}x{height}"
            )));
        }
        check_level(width, height, level)
            .map_err(|e| Error::InconsistentContainer(e.to_string()))?;
        let expected = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(8))
            .and_then(|n| n.checked_add(WPK1_HEADER_LEN))
            .ok_or_else(|| Error::InconsistentContainer("size overflow".into()))?;
        if bytes.len() < expected {
            return Err(Error::TruncatedContainer {
                expected,
                found: bytes.len(),
            });
        }
        if bytes.len() > expected {
            return Err(Error::InconsistentContainer(format!(
                "{} trailing bytes",
                bytes.len() - expected
            )));
        }
        let coeffs = bytes[WPK1_HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Self::from_coeffs(level, width, height, coeffs)
    }

    pub fn write_wpk1(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_wpk1_bytes()).map_err(|source| Error::Write {
            path: path.to_owned(),
            source,
        })
    }

    pub fn read_wpk1(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|source| Error::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::from_wpk1_bytes(&bytes)
    }
}

/// Full packet decomposition: every band is split at every level.
pub fn packet_decompose(img: &GrayImage, level: u32) -> Result<WaveletPacket> {
    let (width, height) = img.dims();
    check_level(width, height, level)?;

    let mut src = img.data().to_vec();
    let mut dst = vec![0.0; src.len()];
    let (mut rows, mut cols) = (height, width);
    for _ in 0..level {
        let (r, c) = (rows, cols);
        for_each_block(&src, &mut dst, r * c, |s, d| analyze_block(s, r, c, d));
        std::mem::swap(&mut src, &mut dst);
        rows /= 2;
        cols /= 2;
    }
    Ok(WaveletPacket {
        level,
        width,
        height,
        coeffs: src,
    })
}

/// Inverts [`packet_decompose`]. No clamping is applied.
pub fn packet_reconstruct(packet: &WaveletPacket) -> Result<GrayImage> {
    let (width, height) = (packet.width, packet.height);
    check_level(width, height, packet.level)
        .map_err(|e| Error::MalformedPacket(e.to_string()))?;
    if packet.coeffs.len() != width * height {
        return Err(Error::MalformedPacket(format!(
            "{} coefficients for a {width}x{height} source",
            packet.coeffs.len()
        )));
    }

    let mut src = packet.coeffs.clone();
    let mut dst = vec![0.0; src.len()];
    let (mut rows, mut cols) = (packet.band_rows(), packet.band_cols());
    for _ in 0..packet.level {
        let (r, c) = (rows, cols);
        for_each_block(&src, &mut dst, 4 * r * c, |s, d| synthesize_block(s, r, c, d));
        std::mem::swap(&mut src, &mut dst);
        rows *= 2;
        cols *= 2;
    }
    GrayImage::new(width, height, src)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn band(rows: usize, cols: usize, data: &[f64]) -> Subband {
        Subband::new(rows, cols, data.to_vec()).unwrap()
    }

    fn random_image(w: usize, h: usize, seed: u64) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GrayImage::from_fn(w, h, |_, _| rng.random::<f64>()).unwrap()
    }

    /// Dense stride-2 correlation with the outer-product kernels built from
    /// the per-axis taps, independent of the lifting-style kernel above.
    fn dense_oracle(input: &Subband) -> [Vec<f64>; 4] {
        let lo = [S, S];
        let hi = [S, -S];
        let kernels = [(lo, lo), (lo, hi), (hi, lo), (hi, hi)];
        kernels.map(|(row_f, col_f)| {
            let mut out = Vec::new();
            for i in 0..input.rows() / 2 {
                for j in 0..input.cols() / 2 {
                    let mut acc = 0.0;
                    for (dy, cf) in col_f.iter().enumerate() {
                        for (dx, rf) in row_f.iter().enumerate() {
                            acc += cf * rf * input.coeffs()[(2 * i + dy) * input.cols() + 2 * j + dx];
                        }
                    }
                    out.push(acc);
                }
            }
            out
        })
    }

    #[test]
    fn constant_block_has_only_approximation() {
        let q = haar_analysis_step(&band(2, 2, &[1.0; 4])).unwrap();
        assert_eq!(q.ll.coeffs(), &[2.0]);
        assert_eq!(q.lh.coeffs(), &[0.0]);
        assert_eq!(q.hl.coeffs(), &[0.0]);
        assert_eq!(q.hh.coeffs(), &[0.0]);
    }

    #[test]
    fn ramp_block_values() {
        let q = haar_analysis_step(&band(2, 2, &[1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(q.ll.coeffs(), &[5.0]);
        assert_eq!(q.lh.coeffs(), &[-2.0]);
        assert_eq!(q.hl.coeffs(), &[-1.0]);
        assert_eq!(q.hh.coeffs(), &[0.0]);
    }

    #[test]
    fn analysis_matches_dense_oracle() {
        let inputs = [
            band(2, 2, &[1.0, 2.0, 3.0, 4.0]),
            Subband::from(random_image(8, 6, 3)),
        ];
        for input in &inputs {
            let q = haar_analysis_step(input).unwrap();
            let oracle = dense_oracle(input);
            for (got, want) in [&q.ll, &q.lh, &q.hl, &q.hh].iter().zip(&oracle) {
                for (g, w) in got.coeffs().iter().zip(want) {
                    assert!((g - w).abs() < 1e-12, "{g} vs {w}");
                }
            }
        }
    }

    #[test]
    fn analysis_conserves_energy() {
        let input = Subband::from(random_image(16, 10, 5));
        let q = haar_analysis_step(&input).unwrap();
        let e_in: f64 = input.coeffs().iter().map(|v| v * v).sum();
        let e_out: f64 = [&q.ll, &q.lh, &q.hl, &q.hh]
            .iter()
            .flat_map(|b| b.coeffs())
            .map(|v| v * v)
            .sum();
        assert!(((e_in - e_out) / e_in).abs() < 1e-12);
    }

    #[test]
    fn odd_input_rejected() {
        assert!(matches!(
            haar_analysis_step(&band(3, 2, &[0.0; 6])),
            Err(Error::OddDimension { rows: 3, cols: 2 })
        ));
    }

    #[test]
    fn synthesis_examples() {
        let z = band(1, 1, &[0.0]);
        let flat = haar_synthesis_step(&band(1, 1, &[2.0]), &z, &z, &z).unwrap();
        assert_eq!(flat.shape(), (2, 2));
        assert_eq!(flat.coeffs(), &[1.0; 4]);

        let checker = haar_synthesis_step(&z, &z, &z, &band(1, 1, &[2.0])).unwrap();
        assert_eq!(checker.coeffs(), &[1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn synthesis_rejects_mismatched_bands() {
        let a = Subband::zeros(2, 2).unwrap();
        let b = Subband::zeros(2, 3).unwrap();
        assert!(matches!(
            haar_synthesis_step(&a, &a, &b, &a),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn single_step_round_trip() {
        let input = Subband::from(random_image(8, 8, 11));
        let q = haar_analysis_step(&input).unwrap();
        let back = haar_synthesis_step(&q.ll, &q.lh, &q.hl, &q.hh).unwrap();
        for (a, b) in back.coeffs().iter().zip(input.coeffs()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn band_counts_and_shapes() {
        let p = packet_decompose(&random_image(8, 8, 1), 2).unwrap();
        assert_eq!(p.band_count(), 16);
        assert_eq!((p.band_rows(), p.band_cols()), (2, 2));

        let big = random_image(256, 256, 2);
        let p3 = packet_decompose(&big, 3).unwrap();
        assert_eq!(p3.band_count(), 64);
        assert_eq!(p3.bands().count(), 64);
        assert_eq!((p3.band_rows(), p3.band_cols()), (32, 32));

        let p8 = packet_decompose(&big, 8).unwrap();
        assert_eq!(p8.band_count(), 65_536);
        assert_eq!(p8.band_len(), 1);
        assert_eq!(p8.coeffs().len(), 256 * 256);
    }

    #[test]
    fn level_limits() {
        let img = random_image(256, 256, 4);
        assert!(matches!(packet_decompose(&img, 0), Err(Error::ZeroLevel)));
        assert!(matches!(
            packet_decompose(&img, 9),
            Err(Error::LevelTooHigh { level: 9, max: 8, .. })
        ));
        let odd = random_image(12, 8, 4);
        assert_eq!(max_level(12, 8), 2);
        assert!(packet_decompose(&odd, 2).is_ok());
        assert!(packet_decompose(&odd, 3).is_err());
    }

    #[test]
    fn packet_order_matches_recursive_single_steps() {
        // Oracle: recursive depth-first application of the single-step API.
        fn recurse(b: &Subband, depth: u32, out: &mut Vec<Subband>) {
            if depth == 0 {
                out.push(b.clone());
                return;
            }
            let q = haar_analysis_step(b).unwrap();
            for child in [&q.ll, &q.lh, &q.hl, &q.hh] {
                recurse(child, depth - 1, out);
            }
        }
        let img = random_image(16, 8, 9);
        let mut expected = Vec::new();
        recurse(&Subband::from(&img), 3, &mut expected);
        let p = packet_decompose(&img, 3).unwrap();
        for (i, want) in expected.iter().enumerate() {
            assert_eq!(p.band(i), want.coeffs(), "band {i} ({})", p.path(i));
        }
    }

    #[test]
    fn zero_and_single_approximation_packets() {
        let zero = WaveletPacket::zeros(3, 16, 16).unwrap();
        assert!(packet_reconstruct(&zero).unwrap().data().iter().all(|&v| v == 0.0));

        // Each synthesis level halves a lone approximation coefficient.
        let mut p = WaveletPacket::zeros(3, 8, 8).unwrap();
        p.band_mut(0)[0] = 5.0;
        let img = packet_reconstruct(&p).unwrap();
        assert!(img.data().iter().all(|&v| (v - 5.0 / 8.0).abs() < 1e-15));
    }

    #[test]
    fn from_bands_validates() {
        let bands = vec![Subband::zeros(2, 2).unwrap(); 4];
        assert!(WaveletPacket::from_bands(1, 4, 4, &bands).is_ok());
        assert!(WaveletPacket::from_bands(1, 4, 4, &bands[..3]).is_err());
        assert!(WaveletPacket::from_bands(1, 6, 4, &bands).is_err());
        assert!(WaveletPacket::from_bands(2, 8, 8, &vec![Subband::zeros(2, 2).unwrap(); 16]).is_ok());
    }

    #[test]
    fn path_text_form() {
        let p: PacketPath = "LL.HL.HH".parse().unwrap();
        assert_eq!(p.index(), 0 * 16 + 2 * 4 + 3);
        assert_eq!(p.to_string(), "LL.HL.HH");
        assert!("LL.XX".parse::<PacketPath>().is_err());
        assert!("".parse::<PacketPath>().is_err());
        assert!(PacketPath::from_index(64, 3).is_err());
    }

    #[test]
    fn wpk1_layout_is_exact() {
        let mut p = WaveletPacket::zeros(1, 2, 2).unwrap();
        p.coeffs_mut().copy_from_slice(&[1.0, -2.0, 0.5, 0.0]);
        let bytes = p.to_wpk1_bytes();
        assert_eq!(&bytes[0..4], b"WPK1");
        assert_eq!(&bytes[4..8], &2u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &2u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &1u32.to_le_bytes());
        assert_eq!(&bytes[16..24], &1.0f64.to_le_bytes());
        assert_eq!(&bytes[24..32], &(-2.0f64).to_le_bytes());
        assert_eq!(bytes.len(), 16 + 4 * 8);
        assert_eq!(WaveletPacket::from_wpk1_bytes(&bytes).unwrap(), p);
    }

    #[test]
    fn wpk1_rejects_bad_input() {
        let p = packet_decompose(&random_image(8, 8, 1), 2).unwrap();
        let bytes = p.to_wpk1_bytes();

        let mut bad_magic = bytes.clone();
        bad_magic[3] = b'2';
        assert!(matches!(WaveletPacket::from_wpk1_bytes(&bad_magic), Err(Error::BadMagic(_))));

        assert!(matches!(
            WaveletPacket::from_wpk1_bytes(&bytes[..bytes.len() - 1]),
            Err(Error::TruncatedContainer { .. })
        ));
        assert!(matches!(
            WaveletPacket::from_wpk1_bytes(&bytes[..10]),
            Err(Error::TruncatedContainer { .. })
        ));

        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(
            WaveletPacket::from_wpk1_bytes(&extra),
            Err(Error::InconsistentContainer(_))
        ));

        let mut deep = bytes.clone();
        deep[12..16].copy_from_slice(&4u32.to_le_bytes());
        assert!(matches!(
            WaveletPacket::from_wpk1_bytes(&deep),
            Err(Error::InconsistentContainer(_))
        ));
    }

    fn dyadic_image() -> impl Strategy<Value = (GrayImage, u32)> {
        (1u32..=4, 0u32..=2, 0u32..=2).prop_flat_map(|(level, ex, ey)| {
            let w = (1usize << level) << ex;
            let h = (1usize << level) << ey;
            proptest::collection::vec(-1.0f64..2.0, w * h)
                .prop_map(move |d| (GrayImage::new(w, h, d).unwrap(), level))
        })
    }

    proptest! {
        #[test]
        fn round_trip_and_parseval((img, level) in dyadic_image()) {
            let p = packet_decompose(&img, level).unwrap();
            prop_assert_eq!(p.band_count(), 1 << (2 * level));
            let back = packet_reconstruct(&p).unwrap();
            for (a, b) in back.data().iter().zip(img.data()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
            let e_img: f64 = img.data().iter().map(|v| v * v).sum();
            if e_img > 0.0 {
                prop_assert!(((p.energy() - e_img) / e_img).abs() < 1e-9);
            }
        }

        #[test]
        fn decomposition_is_linear(
            (x, level) in dyadic_image(),
            seed in any::<u64>(),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let y = random_image(x.width(), x.height(), seed);
            let combo = GrayImage::from_fn(x.width(), x.height(), |i, j| a * x.get(i, j) + b * y.get(i, j)).unwrap();
            let pc = packet_decompose(&combo, level).unwrap();
            let px = packet_decompose(&x, level).unwrap();
            let py = packet_decompose(&y, level).unwrap();
            for ((c, u), v) in pc.coeffs().iter().zip(px.coeffs()).zip(py.coeffs()) {
                prop_assert!((c - (a * u + b * v)).abs() < 1e-10);
            }
        }

        #[test]
        fn path_index_bijection(level in 1u32..=8, raw in any::<usize>()) {
            let index = raw % (1usize << (2 * level));
            let path = PacketPath::from_index(index, level).unwrap();
            prop_assert_eq!(path.level(), level);
            prop_assert_eq!(path.index(), index);
            let reparsed: PacketPath = path.to_string().parse().unwrap();
            prop_assert_eq!(reparsed, path);
        }

        #[test]
        fn wpk1_round_trip_is_byte_identical((img, level) in dyadic_image()) {
            let p = packet_decompose(&img, level).unwrap();
            let bytes = p.to_wpk1_bytes();
            let back = WaveletPacket::from_wpk1_bytes(&bytes).unwrap();
            prop_assert_eq!(back.to_wpk1_bytes(), bytes);
        }
    }
}
