//! PGM (netpbm greyscale) reading and writing, plus image dumps that pair an
//! 8-bit preview with the exact `f64` values.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use byteorder::{ByteOrder, LittleEndian};

use crate::dataset::write_atomic;
use crate::error::{Error, Result};
use crate::image::LipImage;

/// Reads a binary (`P5`) or ASCII (`P2`) PGM. Sample values become grey
/// levels verbatim; 16-bit files are rescaled to `[0, 255]`.
pub fn parse_pgm(bytes: &[u8], ceiling: f64) -> Result<LipImage> {
    let mut pos = 0;
    let token = |pos: &mut usize| -> Result<(usize, String)> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(Error::parse(start, "unexpected end of PGM header"));
        }
        Ok((start, String::from_utf8_lossy(&bytes[start..*pos]).into_owned()))
    };
    let (_, magic) = token(&mut pos)?;
    let binary = match magic.as_str() {
        "P5" => true,
        "P2" => false,
        other => return Err(Error::parse(0, format!("unsupported PGM magic `{other}`"))),
    };
    let number = |pos: &mut usize, what: &str| -> Result<usize> {
        let (at, t) = token(pos)?;
        t.parse()
            .map_err(|_| Error::parse(at, format!("invalid {what} `{t}`")))
    };
    let width = number(&mut pos, "width")?;
    let height = number(&mut pos, "height")?;
    let maxval = number(&mut pos, "maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::parse(pos, format!("maxval {maxval} out of range")));
    }
    let n = width * height;
    let scale = if maxval > 255 { 255.0 / maxval as f64 } else { 1.0 };
    let mut values = Vec::with_capacity(n);
    if binary {
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        let sample = if maxval > 255 { 2 } else { 1 };
        let raster = bytes.get(pos..pos + n * sample).ok_or_else(|| {
            Error::parse(bytes.len(), format!("truncated raster: need {} bytes", n * sample))
        })?;
        for chunk in raster.chunks_exact(sample) {
            let v = if sample == 2 {
                u16::from_be_bytes([chunk[0], chunk[1]]) as f64
            } else {
                chunk[0] as f64
            };
            values.push(v * scale);
        }
    } else {
        for _ in 0..n {
            values.push(number(&mut pos, "sample")? as f64 * scale);
        }
    }
    LipImage::new(width, height, ceiling, values)
}

pub fn read_pgm(path: impl AsRef<Path>, ceiling: f64) -> Result<LipImage> {
    let path = path.as_ref();
    parse_pgm(&fs::read(path).map_err(|e| Error::io(path, e))?, ceiling)
}

/// Encodes an 8-bit binary PGM.
pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Display mapping used for every dump: the LIP scale is inverted (0 is
/// white), so a value `v` is shown as `255 - clamp(round(v), 0, 255)`.
pub const DISPLAY_SCALING: &str = "inverted: pgm = 255 - clamp(round(value), 0, 255)";

pub fn display_inverted(values: &[f64]) -> Vec<u8> {
    values
        .iter()
        .map(|&v| {
            let v = if v.is_nan() { 0.0 } else { v.round().clamp(0.0, 255.0) };
            255 - v as u8
        })
        .collect()
}

/// Files written by [`write_dump`].
#[derive(Debug, Clone)]
pub struct DumpFiles {
    pub preview: PathBuf,
    pub values: PathBuf,
    pub metadata: PathBuf,
}

/// Writes `<stem>.pgm` (display preview), `<stem>.f64` (exact little-endian
/// values, row-major) and `<stem>.meta` (flat key-value sidecar).
pub fn write_dump(dir: impl AsRef<Path>, stem: &str, width: usize, height: usize, ceiling: f64, values: &[f64]) -> Result<DumpFiles> {
    if values.len() != width * height {
        return Err(Error::BufferLength {
            expected: width * height,
            got: values.len(),
        });
    }
    let dir = dir.as_ref();
    let files = DumpFiles {
        preview: dir.join(format!("{stem}.pgm")),
        values: dir.join(format!("{stem}.f64")),
        metadata: dir.join(format!("{stem}.meta")),
    };
    write_atomic(&files.preview, &encode_pgm(width, height, &display_inverted(values)))?;
    let mut raw = vec![0u8; 8 * values.len()];
    LittleEndian::write_f64_into(values, &mut raw);
    write_atomic(&files.values, &raw)?;
    let mut meta = String::new();
    let _ = writeln!(meta, "width={width}");
    let _ = writeln!(meta, "height={height}");
    let _ = writeln!(meta, "ceiling={ceiling:?}");
    let _ = writeln!(meta, "values={stem}.f64 (f64 little-endian, row-major)");
    let _ = writeln!(meta, "preview={stem}.pgm");
    let _ = writeln!(meta, "display_scaling={DISPLAY_SCALING}");
    write_atomic(&files.metadata, meta.as_bytes())?;
    Ok(files)
}

/// Reads back the exact values of a dump.
pub fn read_dump_values(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.len() % 8 != 0 {
        return Err(Error::parse(raw.len(), "value file length is not a multiple of 8"));
    }
    let mut values = vec![0.0; raw.len() / 8];
    LittleEndian::read_f64_into(&raw, &mut values);
    Ok(values)
}
