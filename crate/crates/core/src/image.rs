//! Grayscale image ingestion: binary PGM decoding, area downsampling and
//! patch normalization.

use std::path::Path;

use crate::descriptor::Descriptor;
use crate::error::{Error, PgmError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    /// Row-major intensities in `[0, 255]`.
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                got: pixels.len(),
            });
        }
        if pixels.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("non-finite pixel"));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&bytes).map_err(|source| Error::Pgm {
        path: path.to_path_buf(),
        source,
    })
}

struct Header<'a> {
    rest: &'a [u8],
}

impl<'a> Header<'a> {
    fn skip_space_and_comments(&mut self) {
        loop {
            match self.rest.first() {
                Some(b) if b.is_ascii_whitespace() => self.rest = &self.rest[1..],
                Some(b'#') => {
                    let end = self
                        .rest
                        .iter()
                        .position(|&b| b == b'\n' || b == b'\r')
                        .unwrap_or(self.rest.len());
                    self.rest = &self.rest[end..];
                }
                _ => return,
            }
        }
    }

    fn number(&mut self, what: &str) -> std::result::Result<usize, PgmError> {
        self.skip_space_and_comments();
        let len = self.rest.iter().take_while(|b| b.is_ascii_digit()).count();
        if len == 0 {
            return Err(PgmError::MalformedHeader(format!("missing {what}")));
        }
        let text = std::str::from_utf8(&self.rest[..len]).expect("ascii digits");
        self.rest = &self.rest[len..];
        text.parse()
            .map_err(|_| PgmError::MalformedHeader(format!("{what} out of range")))
    }
}

/// Decodes a binary (P5) PGM, rescaling intensities to `[0, 255]`.
pub fn parse_pgm(bytes: &[u8]) -> std::result::Result<GrayImage, PgmError> {
    if bytes.is_empty() {
        return Err(PgmError::Empty);
    }
    if bytes.len() < 2 {
        return Err(PgmError::BadMagic(String::from_utf8_lossy(bytes).into_owned()));
    }
    let magic = &bytes[..2];
    match magic {
        b"P5" => {}
        [b'P', b'1'..=b'7'] => {
            return Err(PgmError::Unsupported(String::from_utf8_lossy(magic).into_owned()))
        }
        _ => return Err(PgmError::BadMagic(String::from_utf8_lossy(magic).into_owned())),
    }
    let mut header = Header { rest: &bytes[2..] };
    if !header.rest.first().is_some_and(|b| b.is_ascii_whitespace() || *b == b'#') {
        return Err(PgmError::MalformedHeader("no separator after magic".into()));
    }
    let width = header.number("width")?;
    let height = header.number("height")?;
    let maxval = header.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(PgmError::MalformedHeader("zero dimension".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(PgmError::MalformedHeader(format!("maxval {maxval} not in 1..=65535")));
    }
    match header.rest.first() {
        Some(b) if b.is_ascii_whitespace() => {}
        _ => return Err(PgmError::MalformedHeader("no whitespace before raster".into())),
    }
    let data = &header.rest[1..];
    let bytes_per_px = if maxval < 256 { 1 } else { 2 };
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(bytes_per_px))
        .ok_or_else(|| PgmError::MalformedHeader("dimensions overflow".into()))?;
    if data.len() < expected {
        return Err(PgmError::Truncated {
            expected,
            found: data.len(),
        });
    }
    let scale = 255.0 / maxval as f64;
    let pixels: Vec<f64> = if bytes_per_px == 1 {
        data[..expected]
            .iter()
            .map(|&b| if maxval == 255 { b as f64 } else { (b as f64 * scale).min(255.0) })
            .collect()
    } else {
        data[..expected]
            .chunks_exact(2)
            .map(|c| (u16::from_be_bytes([c[0], c[1]]) as f64 * scale).min(255.0))
            .collect()
    };
    Ok(GrayImage {
        width,
        height,
        pixels,
    })
}

/// Area-average pooling onto an `out_w` x `out_h` grid.
///
/// Output column `ox` averages source columns `[ox*W/out_w, (ox+1)*W/out_w)` using
/// integer floor division; rows likewise.
pub fn downsample(img: &GrayImage, out_w: usize, out_h: usize) -> Result<GrayImage> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::invalid("output dimensions must be positive"));
    }
    if out_w > img.width || out_h > img.height {
        return Err(Error::invalid(format!(
            "cannot downsample {}x{} to larger {out_w}x{out_h}",
            img.width, img.height
        )));
    }
    let bounds = |o: usize, src: usize, out: usize| (o * src / out, (o + 1) * src / out);
    let mut pixels = Vec::with_capacity(out_w * out_h);
    for oy in 0..out_h {
        let (y0, y1) = bounds(oy, img.height, out_h);
        for ox in 0..out_w {
            let (x0, x1) = bounds(ox, img.width, out_w);
            let mut sum = 0.0;
            for y in y0..y1 {
                sum += img.pixels[y * img.width + x0..y * img.width + x1].iter().sum::<f64>();
            }
            pixels.push(sum / ((y1 - y0) * (x1 - x0)) as f64);
        }
    }
    GrayImage::new(out_w, out_h, pixels)
}

/// Standardizes every non-overlapping `patch` x `patch` block by its own mean and
/// population standard deviation. Constant blocks become zeros. Output keeps the
/// image's row-major pixel layout.
pub fn patch_normalize(img: &GrayImage, patch: usize) -> Result<Descriptor> {
    if patch == 0 {
        return Err(Error::invalid("patch size must be positive"));
    }
    if img.width % patch != 0 || img.height % patch != 0 {
        return Err(Error::invalid(format!(
            "{}x{} image is not divisible into {patch}x{patch} patches",
            img.width, img.height
        )));
    }
    let mut out = vec![0.0; img.pixels.len()];
    let n = (patch * patch) as f64;
    for py in (0..img.height).step_by(patch) {
        for px in (0..img.width).step_by(patch) {
            let idx = |dx: usize, dy: usize| (py + dy) * img.width + px + dx;
            let cells = || (0..patch).flat_map(move |dy| (0..patch).map(move |dx| (dx, dy)));
            let mean = cells().map(|(dx, dy)| img.pixels[idx(dx, dy)]).sum::<f64>() / n;
            let var = cells()
                .map(|(dx, dy)| (img.pixels[idx(dx, dy)] - mean).powi(2))
                .sum::<f64>()
                / n;
            let sd = var.sqrt();
            if sd > 0.0 {
                for (dx, dy) in cells() {
                    out[idx(dx, dy)] = (img.pixels[idx(dx, dy)] - mean) / sd;
                }
            }
        }
    }
    Descriptor::dense(out)
}
