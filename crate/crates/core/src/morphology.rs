//! Grayscale dilation and erosion with non-flat structuring functions, in
//! both the classical (additive) and the logarithmic (LIP) setting.
//!
//! Windows are clipped at the image border: samples falling outside the image
//! contribute the identity of the lattice operation (`-inf` for a supremum,
//! `+inf` for an infimum).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{LipImage, Plane};
use crate::lip;

/// A structuring function on a finite `width x height` window.
///
/// Heights outside `support` are conceptually `-inf` and are never read.
/// The origin sits at `(width / 2, height / 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    width: usize,
    height: usize,
    heights: Vec<f64>,
    support: Vec<bool>,
}

/// One active sample of a probe: offset from the origin and its height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub dx: isize,
    pub dy: isize,
    pub height: f64,
}

impl Probe {
    pub fn new(width: usize, height: usize, heights: Vec<f64>, support: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidValue(format!(
                "empty probe window {width}x{height}"
            )));
        }
        let n = width * height;
        if heights.len() != n {
            return Err(Error::BufferLength {
                expected: n,
                got: heights.len(),
            });
        }
        if support.len() != n {
            return Err(Error::BufferLength {
                expected: n,
                got: support.len(),
            });
        }
        if !support.iter().any(|&s| s) {
            return Err(Error::EmptySupport);
        }
        if let Some((h, _)) = heights
            .iter()
            .zip(&support)
            .find(|(h, &s)| s && !h.is_finite())
        {
            return Err(Error::InvalidValue(format!(
                "probe height {h} on support must be finite"
            )));
        }
        Ok(Probe {
            width,
            height,
            heights,
            support,
        })
    }

    /// A probe whose support is the whole window.
    pub fn full(width: usize, height: usize, heights: Vec<f64>) -> Result<Self> {
        Probe::new(width, height, heights, vec![true; width * height])
    }

    /// A flat probe of constant height over the whole window.
    pub fn flat(width: usize, height: usize, value: f64) -> Result<Self> {
        Probe::full(width, height, vec![value; width * height])
    }

    /// A 1x1 probe.
    pub fn single(value: f64) -> Self {
        Probe {
            width: 1,
            height: 1,
            heights: vec![value],
            support: vec![true],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn support(&self) -> &[bool] {
        &self.support
    }

    pub fn origin(&self) -> (usize, usize) {
        (self.width / 2, self.height / 2)
    }

    pub fn is_odd(&self) -> bool {
        self.width % 2 == 1 && self.height % 2 == 1
    }

    /// Height at window index `(i, j)`, `-inf` off the support.
    pub fn value_at(&self, i: usize, j: usize) -> f64 {
        let k = j * self.width + i;
        if self.support[k] {
            self.heights[k]
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Active samples in row-major window order.
    pub fn taps(&self) -> Vec<Tap> {
        let (ox, oy) = self.origin();
        let mut taps = Vec::new();
        for j in 0..self.height {
            for i in 0..self.width {
                let k = j * self.width + i;
                if self.support[k] {
                    taps.push(Tap {
                        dx: i as isize - ox as isize,
                        dy: j as isize - oy as isize,
                        height: self.heights[k],
                    });
                }
            }
        }
        taps
    }

    /// Applies `f` to the heights on the support.
    pub fn map_heights(&self, f: impl Fn(f64) -> f64) -> Probe {
        Probe {
            width: self.width,
            height: self.height,
            heights: self
                .heights
                .iter()
                .zip(&self.support)
                .map(|(&h, &s)| if s { f(h) } else { h })
                .collect(),
            support: self.support.clone(),
        }
    }

    /// `b̄(x) = b(-x)`: window index `i` maps to `size - 1 - i` on each axis.
    pub fn reflect(&self) -> Probe {
        let n = self.heights.len();
        Probe {
            width: self.width,
            height: self.height,
            heights: (0..n).rev().map(|k| self.heights[k]).collect(),
            support: (0..n).rev().map(|k| self.support[k]).collect(),
        }
    }

    fn check_below_ceiling(&self, m: f64) -> Result<()> {
        match self
            .heights
            .iter()
            .zip(&self.support)
            .find(|(&h, &s)| s && h >= m)
        {
            Some((h, _)) => Err(Error::InvalidValue(format!(
                "probe height {h} must lie below the ceiling {m}"
            ))),
            None => Ok(()),
        }
    }
}

#[inline]
fn shifted(x: usize, d: isize, limit: usize) -> Option<usize> {
    let v = x as isize + d;
    (v >= 0 && (v as usize) < limit).then_some(v as usize)
}

fn sweep(f: &Plane, taps: &[Tap], sign: isize, init: f64, pick: fn(f64, f64) -> f64) -> Plane {
    let (w, h) = (f.width(), f.height());
    let mut out = vec![init; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            let mut acc = init;
            for t in taps {
                let (Some(sx), Some(sy)) = (shifted(x, sign * t.dx, w), shifted(y, sign * t.dy, h))
                else {
                    continue;
                };
                let v = f.get(sx, sy);
                let v = if sign < 0 { v + t.height } else { v - t.height };
                acc = pick(acc, v);
            }
            *o = acc;
        }
    });
    Plane::new(w, h, out).expect("shape preserved")
}

/// `δ_b(f)(x) = max { f(x - h) + b(h) }`.
pub fn dilate(f: &Plane, b: &Probe) -> Plane {
    sweep(f, &b.taps(), -1, f64::NEG_INFINITY, f64::max)
}

/// `ε_b(f)(x) = min { f(x + h) - b(h) }`.
pub fn erode(f: &Plane, b: &Probe) -> Plane {
    sweep(f, &b.taps(), 1, f64::INFINITY, f64::min)
}

fn xi_probe(b: &Probe, m: f64) -> Result<Probe> {
    b.check_below_ceiling(m)?;
    Ok(b.map_heights(|h| lip::xi(h, m)))
}

/// Logarithmic dilation, evaluated as `xi^-1(δ_{xi(b)}(xi(f)))`.
pub fn log_dilate(f: &LipImage, b: &Probe) -> Result<LipImage> {
    let m = f.ceiling();
    dilate(&f.to_xi(), &xi_probe(b, m)?).to_lip(m)
}

/// Logarithmic erosion, evaluated as `xi^-1(ε_{xi(b)}(xi(f)))`.
pub fn log_erode(f: &LipImage, b: &Probe) -> Result<LipImage> {
    let m = f.ceiling();
    erode(&f.to_xi(), &xi_probe(b, m)?).to_lip(m)
}

/// Logarithmic opening: erosion followed by dilation.
pub fn log_open(f: &LipImage, b: &Probe) -> Result<LipImage> {
    log_dilate(&log_erode(f, b)?, b)
}

/// Logarithmic closing: dilation followed by erosion.
pub fn log_close(f: &LipImage, b: &Probe) -> Result<LipImage> {
    log_erode(&log_dilate(f, b)?, b)
}
