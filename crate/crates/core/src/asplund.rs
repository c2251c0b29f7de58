//! The LIP-additive Asplund distance and the map of Asplund distances.
//!
//! Three routes compute the same map:
//!
//! - [`asplund_map_definitional`]: the distance between each clipped window
//!   and the probe, pixel by pixel;
//! - [`asplund_map_morphological`]: `δ^⊕_{⊖b̄}(f) ⊖ ε^⊕_b(f)` with the
//!   logarithmic operators;
//! - [`asplund_map_xi_form`]: `xi^-1[δ_{-xi(b̄)} xi(f) - ε_{xi(b)} xi(f)]`,
//!   the production route shared with the trainable layer.
//!
//! Degenerate pixels follow two conventions: the distance is `M` when the
//! dilation reaches `M` or the erosion reaches `-inf`, and `0` when both
//! operands coincide. If both conventions apply, `M` wins.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{DistanceMap, LipImage, Plane};
use crate::lip;
use crate::morphology::{self, Probe};

/// `d(f, g) = c1 ⊖ c2` for a window `f` and probe values `g` on the same support.
///
/// `c1` is the smallest LIP constant lifting `g` above `f`, `c2` the largest
/// one keeping `g` below `f`. Both are read off `xi(f) - xi(g)`.
pub fn asplund_distance(window: &[f64], probe: &[f64], ceiling: f64) -> Result<f64> {
    if window.is_empty() {
        return Err(Error::EmptySupport);
    }
    if window.len() != probe.len() {
        return Err(Error::BufferLength {
            expected: probe.len(),
            got: window.len(),
        });
    }
    let m = ceiling;
    let mut upper = f64::NEG_INFINITY;
    let mut lower = f64::INFINITY;
    for (&f, &g) in window.iter().zip(probe) {
        let d = lip::xi(f, m) - lip::xi(g, m);
        upper = upper.max(d);
        lower = lower.min(d);
    }
    Ok(span_to_distance(upper, lower, m))
}

/// Turns the xi-space spread `upper - lower` into a distance, applying the
/// degenerate conventions.
#[inline]
fn span_to_distance(upper: f64, lower: f64, m: f64) -> f64 {
    if upper == f64::INFINITY || lower == f64::NEG_INFINITY {
        m
    } else if upper == lower {
        0.0
    } else {
        lip::xi_inv(upper - lower, m)
    }
}

fn check_probe(f: &LipImage, b: &Probe) -> Result<()> {
    if !b.is_odd() {
        return Err(Error::EvenWindow {
            width: b.width(),
            height: b.height(),
        });
    }
    let m = f.ceiling();
    if let Some(h) = b
        .heights()
        .iter()
        .zip(b.support())
        .find_map(|(&h, &s)| (s && h >= m).then_some(h))
    {
        return Err(Error::InvalidValue(format!(
            "probe height {h} must lie below the ceiling {m}"
        )));
    }
    // every pixel needs at least one support tap inside the image
    let taps = b.taps();
    let (w, h) = (f.width() as isize, f.height() as isize);
    let covered = (0..h).all(|y| {
        (0..w).all(|x| {
            taps.iter().any(|t| {
                let (sx, sy) = (x + t.dx, y + t.dy);
                sx >= 0 && sy >= 0 && sx < w && sy < h
            })
        })
    });
    if !covered {
        return Err(Error::EmptySupport);
    }
    Ok(())
}

/// Per-pixel Asplund distance between the probe and the image restricted to
/// the probe's (clipped) neighbourhood `x + D_b`.
pub fn asplund_map_definitional(f: &LipImage, b: &Probe) -> Result<DistanceMap> {
    check_probe(f, b)?;
    let (w, h, m) = (f.width(), f.height(), f.ceiling());
    let taps = b.taps();
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w)
        .enumerate()
        .try_for_each(|(y, row)| -> Result<()> {
            let mut window = Vec::with_capacity(taps.len());
            let mut probe = Vec::with_capacity(taps.len());
            for (x, o) in row.iter_mut().enumerate() {
                window.clear();
                probe.clear();
                for t in &taps {
                    let sx = x as isize + t.dx;
                    let sy = y as isize + t.dy;
                    if sx < 0 || sy < 0 || sx >= w as isize || sy >= h as isize {
                        continue;
                    }
                    window.push(f.get(sx as usize, sy as usize));
                    probe.push(t.height);
                }
                *o = asplund_distance(&window, &probe, m)?;
            }
            Ok(())
        })?;
    LipImage::new(w, h, m, out)
}

/// `Asp_b f = δ^⊕_{⊖b̄}(f) ⊖ ε^⊕_b(f)`.
pub fn asplund_map_morphological(f: &LipImage, b: &Probe) -> Result<DistanceMap> {
    check_probe(f, b)?;
    let m = f.ceiling();
    let neg_reflected = b.reflect().map_heights(|v| lip::lip_negate(v, m));
    let dil = morphology::log_dilate(f, &neg_reflected)?;
    let ero = morphology::log_erode(f, b)?;
    let out = dil
        .as_slice()
        .iter()
        .zip(ero.as_slice())
        .map(|(&d, &e)| {
            if d >= m || e == f64::NEG_INFINITY {
                m
            } else if d == e {
                0.0
            } else {
                lip::lip_sub(d, e, m)
            }
        })
        .collect();
    LipImage::new(f.width(), f.height(), m, out)
}

/// `Asp_b f = xi^-1[δ_{-xi(b̄)} xi(f) - ε_{xi(b)} xi(f)]`.
pub fn asplund_map_xi_form(f: &LipImage, b: &Probe) -> Result<DistanceMap> {
    check_probe(f, b)?;
    let m = f.ceiling();
    let xf = f.to_xi();
    let xb = b.map_heights(|v| lip::xi(v, m));
    let dil = morphology::dilate(&xf, &xb.reflect().map_heights(|v| -v));
    let ero = morphology::erode(&xf, &xb);
    let out = dil
        .as_slice()
        .iter()
        .zip(ero.as_slice())
        .map(|(&d, &e)| span_to_distance(d, e, m))
        .collect();
    LipImage::new(f.width(), f.height(), m, out)
}

/// The production map of Asplund distances.
pub fn asplund_map(f: &LipImage, b: &Probe) -> Result<DistanceMap> {
    asplund_map_xi_form(f, b)
}

/// Asplund-style map with ordinary (non-LIP) addition:
/// `max(f - b) - min(f - b)` over each clipped window, in grey levels.
///
/// It is invariant to ordinary offsets but not to LIP-addition of a constant,
/// which makes it the control for lighting-invariance experiments.
pub fn classical_asplund_map(f: &LipImage, b: &Probe) -> Result<Plane> {
    if !b.is_odd() {
        return Err(Error::EvenWindow {
            width: b.width(),
            height: b.height(),
        });
    }
    let raw = Plane::new(f.width(), f.height(), f.as_slice().to_vec())?;
    let dil = morphology::dilate(&raw, &b.reflect().map_heights(|v| -v));
    let ero = morphology::erode(&raw, b);
    Plane::new(
        f.width(),
        f.height(),
        dil.as_slice()
            .iter()
            .zip(ero.as_slice())
            .map(|(d, e)| d - e)
            .collect(),
    )
}
