//! Data ingestion and experiment inputs: Fashion-MNIST IDX files, the
//! parametric reference probes, lighting shifts and ground-truth distance maps.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{BigEndian, ByteOrder, LittleEndian};
use flate2::read::GzDecoder;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::asplund;
use crate::error::{Error, Result};
use crate::image::{DistanceMap, LipImage};
use crate::lip::{self, DEFAULT_CEILING};
use crate::morphology::Probe;

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Side of the square window of the reference probes.
pub const REFERENCE_WINDOW: usize = 7;

fn read_maybe_gzip(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..])
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn read_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(BigEndian::read_u32)
        .ok_or_else(|| Error::parse(offset, format!("truncated header: missing {what}")))
}

/// Parses an uncompressed IDX3 image file; pixels are promoted to `f64`.
pub fn parse_idx_images(bytes: &[u8], ceiling: f64) -> Result<Vec<LipImage>> {
    let magic = read_u32(bytes, 0, "magic number")?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::parse(0, format!("bad magic {magic:#010x}, expected {IDX_IMAGES_MAGIC:#010x}")));
    }
    let count = read_u32(bytes, 4, "item count")? as usize;
    let rows = read_u32(bytes, 8, "row count")? as usize;
    let cols = read_u32(bytes, 12, "column count")? as usize;
    if rows == 0 || cols == 0 {
        return Err(Error::parse(8, format!("degenerate image size {rows}x{cols}")));
    }
    let size = rows * cols;
    let expected = 16 + count * size;
    if bytes.len() < expected {
        return Err(Error::parse(
            bytes.len(),
            format!("truncated payload: {count} images of {rows}x{cols} need {expected} bytes"),
        ));
    }
    if bytes.len() > expected {
        return Err(Error::parse(expected, "trailing bytes after the declared payload"));
    }
    bytes[16..]
        .chunks_exact(size)
        .map(|px| LipImage::from_u8(cols, rows, ceiling, px))
        .collect()
}

/// Parses an uncompressed IDX1 label file.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let magic = read_u32(bytes, 0, "magic number")?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::parse(0, format!("bad magic {magic:#010x}, expected {IDX_LABELS_MAGIC:#010x}")));
    }
    let count = read_u32(bytes, 4, "item count")? as usize;
    let payload = &bytes[8..];
    if payload.len() != count {
        return Err(Error::parse(
            8 + payload.len().min(count),
            format!("label payload has {} bytes, header declares {count}", payload.len()),
        ));
    }
    Ok(payload.to_vec())
}

/// Loads an IDX3 image file, gzip-compressed or not.
pub fn load_idx(path: impl AsRef<Path>) -> Result<Vec<LipImage>> {
    let path = path.as_ref();
    parse_idx_images(&read_maybe_gzip(path)?, DEFAULT_CEILING)
}

/// Loads an IDX1 label file, gzip-compressed or not.
pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    parse_idx_labels(&read_maybe_gzip(path.as_ref())?)
}

/// Encodes 8-bit images as an IDX3 payload. Pixels must be integers in `[0, 255]`.
pub fn encode_idx_images(images: &[LipImage]) -> Result<Vec<u8>> {
    let first = images
        .first()
        .ok_or_else(|| Error::InvalidValue("no images to encode".into()))?;
    let (w, h) = (first.width(), first.height());
    let mut out = vec![0u8; 16];
    BigEndian::write_u32(&mut out[0..], IDX_IMAGES_MAGIC);
    BigEndian::write_u32(&mut out[4..], images.len() as u32);
    BigEndian::write_u32(&mut out[8..], h as u32);
    BigEndian::write_u32(&mut out[12..], w as u32);
    for img in images {
        first.same_shape(img)?;
        for &v in img.as_slice() {
            if !(0.0..=255.0).contains(&v) || v.fract() != 0.0 {
                return Err(Error::InvalidValue(format!("{v} is not an 8-bit grey level")));
            }
            out.push(v as u8);
        }
    }
    Ok(out)
}

/// Which Fashion-MNIST split to read from a dataset directory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn stem(self) -> &'static str {
        match self {
            Split::Train => "train-images-idx3-ubyte",
            Split::Test => "t10k-images-idx3-ubyte",
        }
    }
}

/// Finds `train-images-idx3-ubyte[.gz]` or `t10k-images-idx3-ubyte[.gz]` in `dir`.
pub fn split_path(dir: &Path, split: Split) -> Result<PathBuf> {
    let plain = dir.join(split.stem());
    if plain.is_file() {
        return Ok(plain);
    }
    let gz = dir.join(format!("{}.gz", split.stem()));
    if gz.is_file() {
        return Ok(gz);
    }
    Err(Error::io(
        plain,
        std::io::Error::new(std::io::ErrorKind::NotFound, "dataset split not found"),
    ))
}

/// A 7x7 reference probe `b_r(x) = (-β √7 |x|^2) ⊕ c` where non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceProbe {
    pub beta: f64,
    pub c: f64,
    pub ceiling: f64,
    /// `W_{h,r}`: probe heights on the support, zero elsewhere.
    pub heights: Vec<f64>,
    /// `W_{m,r}`: support indicator.
    pub mask: Vec<bool>,
}

impl ReferenceProbe {
    pub fn width(&self) -> usize {
        REFERENCE_WINDOW
    }

    pub fn height(&self) -> usize {
        REFERENCE_WINDOW
    }

    pub fn to_probe(&self) -> Probe {
        Probe::new(REFERENCE_WINDOW, REFERENCE_WINDOW, self.heights.clone(), self.mask.clone())
            .expect("the centre tap is always in the support")
    }

    /// Stable file stem, e.g. `probe_b0.4_c50`.
    pub fn file_stem(&self) -> String {
        format!("probe_b{}_c{}", self.beta, self.c)
    }
}

pub fn make_reference_probe(beta: f64, c: f64, ceiling: f64) -> Result<ReferenceProbe> {
    lip::check_ceiling(ceiling)?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidValue(format!("beta must be positive, got {beta}")));
    }
    if !(0.0..ceiling).contains(&c) {
        return Err(Error::InvalidValue(format!("c must lie in [0, {ceiling}), got {c}")));
    }
    let half = (REFERENCE_WINDOW / 2) as isize;
    let scale = beta * 7f64.sqrt();
    let mut heights = Vec::with_capacity(REFERENCE_WINDOW * REFERENCE_WINDOW);
    let mut mask = Vec::with_capacity(REFERENCE_WINDOW * REFERENCE_WINDOW);
    for dy in -half..=half {
        for dx in -half..=half {
            let r2 = (dx * dx + dy * dy) as f64;
            let h = lip::lip_add(-scale * r2, c, ceiling);
            let inside = h >= 0.0;
            heights.push(if inside { h } else { 0.0 });
            mask.push(inside);
        }
    }
    debug_assert!(mask[mask.len() / 2], "centre height equals c >= 0");
    Ok(ReferenceProbe {
        beta,
        c,
        ceiling,
        heights,
        mask,
    })
}

/// `β ∈ {0.2, 0.4, …, 1.2}`.
pub fn default_beta_grid() -> Vec<f64> {
    (1..=6).map(|i| (i as f64 * 0.2 * 10.0).round() / 10.0).collect()
}

/// `c ∈ {10, 25, …, 250}`.
pub fn default_c_grid() -> Vec<f64> {
    (0..17).map(|i| 10.0 + 15.0 * i as f64).collect()
}

/// Every `(β, c)` combination, β-major.
pub fn reference_probe_grid(betas: &[f64], cs: &[f64], ceiling: f64) -> Result<Vec<ReferenceProbe>> {
    betas
        .iter()
        .flat_map(|&b| cs.iter().map(move |&c| (b, c)))
        .map(|(b, c)| make_reference_probe(b, c, ceiling))
        .collect()
}

/// Lighting change: `f ⊕ k` for `k >= 0` (darker), `f ⊖ |k|` for `k < 0` (brighter).
///
/// Brightened pixels may become negative; they are kept as they are.
pub fn lip_shift_set(images: &[LipImage], k: f64) -> Vec<LipImage> {
    images
        .iter()
        .map(|f| {
            if k >= 0.0 {
                f.lip_add_constant(k)
            } else {
                f.lip_sub_constant(-k)
            }
        })
        .collect()
}

/// Ground-truth maps `Asp_{b_r} f`, via the morphological form.
pub fn build_ground_truth(images: &[LipImage], probe: &Probe) -> Result<Vec<DistanceMap>> {
    images
        .par_iter()
        .map(|f| asplund::asplund_map_morphological(f, probe))
        .collect()
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 over shape and the exact bits of every pixel.
pub fn dataset_hash(images: &[LipImage]) -> String {
    let mut hasher = Sha256::new();
    hasher.update((images.len() as u64).to_le_bytes());
    for img in images {
        hasher.update((img.width() as u64).to_le_bytes());
        hasher.update((img.height() as u64).to_le_bytes());
        for v in img.as_slice() {
            hasher.update(v.to_bits().to_le_bytes());
        }
    }
    hex(&hasher.finalize())
}

/// Header of a ground-truth cache file.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthHeader {
    pub beta: f64,
    pub c: f64,
    pub ceiling: f64,
    pub count: usize,
    pub width: usize,
    pub height: usize,
    pub dataset: String,
}

const CACHE_MAGIC: &str = "LMMGT1";

impl GroundTruthHeader {
    fn to_line(&self) -> String {
        format!(
            "{CACHE_MAGIC} beta={:?} c={:?} ceiling={:?} count={} width={} height={} dataset={}\n",
            self.beta, self.c, self.ceiling, self.count, self.width, self.height, self.dataset
        )
    }

    fn parse(line: &str) -> Result<Self> {
        let mut parts = line.split_whitespace();
        if parts.next() != Some(CACHE_MAGIC) {
            return Err(Error::parse(0, "not a ground-truth cache file"));
        }
        let mut get = |key: &str| -> Result<String> {
            let part = parts
                .next()
                .ok_or_else(|| Error::parse(0, format!("missing `{key}`")))?;
            part.strip_prefix(key)
                .and_then(|s| s.strip_prefix('='))
                .map(str::to_owned)
                .ok_or_else(|| Error::parse(0, format!("expected `{key}=`, got `{part}`")))
        };
        let num = |s: String, key: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::parse(0, format!("bad {key} `{s}`")))
        };
        let int = |s: String, key: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::parse(0, format!("bad {key} `{s}`")))
        };
        Ok(GroundTruthHeader {
            beta: num(get("beta")?, "beta")?,
            c: num(get("c")?, "c")?,
            ceiling: num(get("ceiling")?, "ceiling")?,
            count: int(get("count")?, "count")?,
            width: int(get("width")?, "width")?,
            height: int(get("height")?, "height")?,
            dataset: get("dataset")?,
        })
    }
}

/// Writes `path` atomically: the data goes to a sibling temp file first.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let mut file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    file.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    file.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(file);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Serialises ground-truth maps: one text header line, then little-endian `f64`s.
pub fn encode_ground_truth(header: &GroundTruthHeader, maps: &[DistanceMap]) -> Result<Vec<u8>> {
    if maps.len() != header.count {
        return Err(Error::BufferLength {
            expected: header.count,
            got: maps.len(),
        });
    }
    let mut out = header.to_line().into_bytes();
    for map in maps {
        if map.width() != header.width || map.height() != header.height {
            return Err(Error::ShapeMismatch {
                expected_width: header.width,
                expected_height: header.height,
                width: map.width(),
                height: map.height(),
            });
        }
        let start = out.len();
        out.resize(start + 8 * map.len(), 0);
        LittleEndian::write_f64_into(map.as_slice(), &mut out[start..]);
    }
    Ok(out)
}

pub fn decode_ground_truth(bytes: &[u8]) -> Result<(GroundTruthHeader, Vec<DistanceMap>)> {
    let eol = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::parse(0, "missing header line"))?;
    let line = std::str::from_utf8(&bytes[..eol]).map_err(|_| Error::parse(0, "header is not UTF-8"))?;
    let header = GroundTruthHeader::parse(line)?;
    let payload = &bytes[eol + 1..];
    let per_map = header.width * header.height;
    let expected = 8 * per_map * header.count;
    if payload.len() != expected {
        return Err(Error::parse(
            eol + 1 + payload.len().min(expected),
            format!("payload has {} bytes, header declares {expected}", payload.len()),
        ));
    }
    let maps = payload
        .chunks_exact(8 * per_map.max(1))
        .map(|chunk| {
            let mut values = vec![0.0; per_map];
            LittleEndian::read_f64_into(chunk, &mut values);
            LipImage::new(header.width, header.height, header.ceiling, values)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((header, maps))
}

pub fn write_ground_truth(path: impl AsRef<Path>, header: &GroundTruthHeader, maps: &[DistanceMap]) -> Result<()> {
    write_atomic(path.as_ref(), &encode_ground_truth(header, maps)?)
}

pub fn read_ground_truth(path: impl AsRef<Path>) -> Result<(GroundTruthHeader, Vec<DistanceMap>)> {
    let path = path.as_ref();
    decode_ground_truth(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

/// Ground truth for `images` and `probe`, reusing `path` when it holds maps
/// for the same dataset hash and probe parameters.
pub fn cached_ground_truth(path: impl AsRef<Path>, images: &[LipImage], probe: &ReferenceProbe) -> Result<Vec<DistanceMap>> {
    let path = path.as_ref();
    let first = images
        .first()
        .ok_or_else(|| Error::InvalidValue("no images".into()))?;
    let header = GroundTruthHeader {
        beta: probe.beta,
        c: probe.c,
        ceiling: probe.ceiling,
        count: images.len(),
        width: first.width(),
        height: first.height(),
        dataset: dataset_hash(images),
    };
    if path.is_file() {
        if let Ok((cached, maps)) = read_ground_truth(path) {
            if cached == header {
                return Ok(maps);
            }
            log::info!("{}: stale ground-truth cache, recomputing", path.display());
        }
    }
    let maps = build_ground_truth(images, &probe.to_probe())?;
    write_ground_truth(path, &header, &maps)?;
    Ok(maps)
}

/// Seeded stand-in for Fashion-MNIST: 28x28 8-bit images of smooth textured
/// blobs on a zero background.
pub fn synthetic_dataset(count: usize, seed: u64) -> Vec<LipImage> {
    const SIDE: usize = 28;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let blobs: Vec<(f64, f64, f64, f64, f64)> = (0..rng.gen_range(1..=4))
                .map(|_| {
                    (
                        rng.gen_range(6.0..22.0),
                        rng.gen_range(6.0..22.0),
                        rng.gen_range(2.0..7.0),
                        rng.gen_range(1.5..6.0),
                        rng.gen_range(60.0..300.0),
                    )
                })
                .collect();
            let stripe = rng.gen_range(0.3..1.2);
            let stripe_amp = rng.gen_range(0.0..40.0);
            let mut px = Vec::with_capacity(SIDE * SIDE);
            for y in 0..SIDE {
                for x in 0..SIDE {
                    let (xf, yf) = (x as f64, y as f64);
                    let mut v = 0.0;
                    for &(cx, cy, sx, sy, amp) in &blobs {
                        let q = ((xf - cx) / sx).powi(2) + ((yf - cy) / sy).powi(2);
                        v += amp * (-0.5 * q).exp();
                    }
                    if v > 10.0 {
                        v += stripe_amp * (stripe * (xf + 0.5 * yf)).sin() + rng.gen_range(-8.0..8.0);
                    }
                    px.push(v.round().clamp(0.0, 255.0) as u8);
                }
            }
            LipImage::from_u8(SIDE, SIDE, DEFAULT_CEILING, &px).expect("28x28 buffer")
        })
        .collect()
}
