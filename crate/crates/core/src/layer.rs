//! The trainable map-of-Asplund-distances layer.
//!
//! A probe is parameterised by two kernels over an `A x B` window: heights
//! `W_h` (grey levels, below `M`) and mask logits `W_m`. The soft mask
//! `V = sigmoid(W_m)` blends the xi-space heights with a finite bottom value
//! `⊥ = -xi(M - 1)`:
//!
//! ```text
//! b_dil = -xi(refl W_h) * refl V + ⊥ * (1 - refl V)
//! b_ero =  xi(W_h) * V          + ⊥ * (1 - V)
//! ĝ     = xi^-1[ δ_{b_dil}(xi f) - ε_{b_ero}(xi f) ]
//! ```
//!
//! The forward pass records, for every output pixel, which window tap won the
//! dilation maximum and the erosion minimum. Ties go to the lowest tap index.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{LipImage, Plane};
use crate::lip;
use crate::morphology::Probe;

/// Gap below which two competing taps are counted as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Elementwise logistic sigmoid.
pub fn soft_mask(logits: &[f64]) -> Vec<f64> {
    logits.iter().map(|&v| sigmoid(v)).collect()
}

#[inline]
pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Learnable parameters of a probe.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelPair {
    width: usize,
    height: usize,
    /// `W_h`, row-major.
    pub heights: Vec<f64>,
    /// `W_m`, row-major.
    pub mask_logits: Vec<f64>,
}

impl KernelPair {
    /// All-zero kernels.
    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        KernelPair::new(width, height, vec![0.0; width * height], vec![0.0; width * height])
    }

    pub fn new(width: usize, height: usize, heights: Vec<f64>, mask_logits: Vec<f64>) -> Result<Self> {
        if width % 2 == 0 || height % 2 == 0 {
            return Err(Error::EvenWindow { width, height });
        }
        let n = width * height;
        for len in [heights.len(), mask_logits.len()] {
            if len != n {
                return Err(Error::BufferLength {
                    expected: n,
                    got: len,
                });
            }
        }
        if heights.iter().chain(&mask_logits).any(|v| !v.is_finite()) {
            return Err(Error::InvalidValue("kernel entries must be finite".into()));
        }
        Ok(KernelPair {
            width,
            height,
            heights,
            mask_logits,
        })
    }

    /// Kernels whose hard-mask limit is `probe`: heights copied on the
    /// support (zero elsewhere) and logits set to `±logit`.
    pub fn from_probe(probe: &Probe, logit: f64) -> Result<Self> {
        let heights = probe
            .heights()
            .iter()
            .zip(probe.support())
            .map(|(&h, &s)| if s { h } else { 0.0 })
            .collect();
        let mask_logits = probe
            .support()
            .iter()
            .map(|&s| if s { logit } else { -logit })
            .collect();
        KernelPair::new(probe.width(), probe.height(), heights, mask_logits)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.heights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heights.is_empty()
    }

    pub fn soft_mask(&self) -> Vec<f64> {
        soft_mask(&self.mask_logits)
    }

    /// Thresholds the mask logits at zero.
    pub fn to_probe(&self) -> Result<Probe> {
        Probe::new(
            self.width,
            self.height,
            self.heights.clone(),
            self.mask_logits.iter().map(|&v| v > 0.0).collect(),
        )
    }

    /// Keeps every height strictly below the ceiling. Returns how many entries moved.
    pub fn clamp_heights(&mut self, ceiling: f64) -> usize {
        let cap = ceiling - 1e-6;
        let mut moved = 0;
        for h in &mut self.heights {
            if *h > cap {
                *h = cap;
                moved += 1;
            }
        }
        moved
    }

    fn check_heights(&self, ceiling: f64) -> Result<()> {
        match self.heights.iter().find(|&&h| h >= ceiling) {
            Some(h) => Err(Error::InvalidValue(format!(
                "height kernel entry {h} must lie below the ceiling {ceiling}"
            ))),
            None => Ok(()),
        }
    }
}

/// Gradients with respect to both kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub heights: Vec<f64>,
    pub mask_logits: Vec<f64>,
}

impl Gradients {
    pub fn zeros(len: usize) -> Self {
        Gradients {
            heights: vec![0.0; len],
            mask_logits: vec![0.0; len],
        }
    }

    pub fn accumulate(&mut self, other: &Gradients) {
        for (a, b) in self.heights.iter_mut().zip(&other.heights) {
            *a += b;
        }
        for (a, b) in self.mask_logits.iter_mut().zip(&other.mask_logits) {
            *a += b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for v in self.heights.iter_mut().chain(self.mask_logits.iter_mut()) {
            *v *= factor;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.heights.iter().chain(&self.mask_logits).all(|&v| v == 0.0)
    }
}

/// `b̃_dil` and `b̃_ero` over the full window, in xi-space.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveProbes {
    pub width: usize,
    pub height: usize,
    pub dilation: Vec<f64>,
    pub erosion: Vec<f64>,
}

pub fn effective_probes(kernels: &KernelPair, bottom: f64, ceiling: f64) -> EffectiveProbes {
    let n = kernels.len();
    let v = kernels.soft_mask();
    let xh: Vec<f64> = kernels.heights.iter().map(|&h| lip::xi(h, ceiling)).collect();
    let erosion = (0..n).map(|k| xh[k] * v[k] + bottom * (1.0 - v[k])).collect();
    let dilation = (0..n)
        .map(|k| {
            let r = n - 1 - k;
            -xh[r] * v[r] + bottom * (1.0 - v[r])
        })
        .collect();
    EffectiveProbes {
        width: kernels.width(),
        height: kernels.height(),
        dilation,
        erosion,
    }
}

/// Routing state recorded by a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    width: usize,
    height: usize,
    window: (usize, usize),
    /// `δ - ε` per pixel, in xi-space.
    u: Vec<f64>,
    dilation_tap: Vec<u32>,
    erosion_tap: Vec<u32>,
    /// Smallest gap between the winning tap and the runner-up, over all pixels and both sweeps.
    pub min_gap: f64,
    /// Pixel sweeps (dilation or erosion) whose winner was tied within [`TIE_TOLERANCE`].
    pub ties: usize,
    /// Pixels whose output fell below zero.
    pub negative_outputs: usize,
    /// Input pixels clamped from `M` to `M - 1`.
    pub clamped_inputs: usize,
}

impl ForwardCache {
    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn dilation_taps(&self) -> &[u32] {
        &self.dilation_tap
    }

    pub fn erosion_taps(&self) -> &[u32] {
        &self.erosion_tap
    }
}

#[derive(Clone, Copy)]
struct PixelRoute {
    u: f64,
    dil: u32,
    ero: u32,
    gap: f64,
    ties: u8,
}

fn route_pixel(s: &Plane, probes: &EffectiveProbes, x: usize, y: usize) -> PixelRoute {
    let (w, h) = (s.width() as isize, s.height() as isize);
    let (a, b) = (probes.width, probes.height);
    let (ox, oy) = ((a / 2) as isize, (b / 2) as isize);
    let (x, y) = (x as isize, y as isize);

    let (mut d_best, mut d_second, mut d_idx) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0u32);
    let (mut e_best, mut e_second, mut e_idx) = (f64::INFINITY, f64::INFINITY, 0u32);
    for j in 0..b {
        let dy = j as isize - oy;
        for i in 0..a {
            let dx = i as isize - ox;
            let k = j * a + i;
            let (sx, sy) = (x - dx, y - dy);
            if sx >= 0 && sy >= 0 && sx < w && sy < h {
                let v = s.get(sx as usize, sy as usize) + probes.dilation[k];
                if v > d_best {
                    d_second = d_best;
                    d_best = v;
                    d_idx = k as u32;
                } else if v > d_second {
                    d_second = v;
                }
            }
            let (sx, sy) = (x + dx, y + dy);
            if sx >= 0 && sy >= 0 && sx < w && sy < h {
                let v = s.get(sx as usize, sy as usize) - probes.erosion[k];
                if v < e_best {
                    e_second = e_best;
                    e_best = v;
                    e_idx = k as u32;
                } else if v < e_second {
                    e_second = v;
                }
            }
        }
    }
    let d_gap = d_best - d_second;
    let e_gap = e_second - e_best;
    PixelRoute {
        u: d_best - e_best,
        dil: d_idx,
        ero: e_idx,
        gap: d_gap.min(e_gap),
        ties: u8::from(d_gap <= TIE_TOLERANCE) + u8::from(e_gap <= TIE_TOLERANCE),
    }
}

/// The map-of-Asplund-distances layer.
#[derive(Debug, Clone)]
pub struct AsplundLayer {
    kernels: KernelPair,
    ceiling: f64,
    bottom: f64,
    cache: Option<ForwardCache>,
}

impl AsplundLayer {
    /// A layer with all-zero kernels.
    pub fn new(width: usize, height: usize, ceiling: f64) -> Result<Self> {
        AsplundLayer::with_kernels(KernelPair::zeros(width, height)?, ceiling)
    }

    pub fn with_kernels(kernels: KernelPair, ceiling: f64) -> Result<Self> {
        lip::check_ceiling(ceiling)?;
        if ceiling <= 1.0 {
            return Err(Error::InvalidCeiling(ceiling));
        }
        kernels.check_heights(ceiling)?;
        Ok(AsplundLayer {
            kernels,
            ceiling,
            bottom: -lip::xi(ceiling - 1.0, ceiling),
            cache: None,
        })
    }

    pub fn kernels(&self) -> &KernelPair {
        &self.kernels
    }

    /// Mutable access to the kernels; invalidates any pending forward cache.
    pub fn kernels_mut(&mut self) -> &mut KernelPair {
        self.cache = None;
        &mut self.kernels
    }

    pub fn ceiling(&self) -> f64 {
        self.ceiling
    }

    /// `⊥ = -xi(M - 1)`.
    pub fn bottom(&self) -> f64 {
        self.bottom
    }

    pub fn effective_probes(&self) -> EffectiveProbes {
        effective_probes(&self.kernels, self.bottom, self.ceiling)
    }

    /// Forward pass with precomputed effective probes; leaves `self` untouched.
    pub fn forward_with(&self, probes: &EffectiveProbes, f: &LipImage) -> Result<(LipImage, ForwardCache)> {
        lip::same_ceiling(self.ceiling, f.ceiling())?;
        let m = self.ceiling;
        let (s, clamped_inputs) = f.to_xi_clamped();
        if clamped_inputs > 0 {
            log::warn!("{clamped_inputs} input pixel(s) at the ceiling clamped to M - 1");
        }
        let (w, h) = (f.width(), f.height());
        let mut routes = vec![
            PixelRoute {
                u: 0.0,
                dil: 0,
                ero: 0,
                gap: 0.0,
                ties: 0
            };
            w * h
        ];
        routes.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
            for (x, r) in row.iter_mut().enumerate() {
                *r = route_pixel(&s, probes, x, y);
            }
        });

        let mut out = Vec::with_capacity(w * h);
        let mut cache = ForwardCache {
            width: w,
            height: h,
            window: (probes.width, probes.height),
            u: Vec::with_capacity(w * h),
            dilation_tap: Vec::with_capacity(w * h),
            erosion_tap: Vec::with_capacity(w * h),
            min_gap: f64::INFINITY,
            ties: 0,
            negative_outputs: 0,
            clamped_inputs,
        };
        for r in &routes {
            let g = lip::xi_inv(r.u, m);
            if r.u < 0.0 {
                cache.negative_outputs += 1;
            }
            out.push(g);
            cache.u.push(r.u);
            cache.dilation_tap.push(r.dil);
            cache.erosion_tap.push(r.ero);
            cache.min_gap = cache.min_gap.min(r.gap);
            cache.ties += usize::from(r.ties);
        }
        if !out.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("non-finite layer output".into()));
        }
        Ok((LipImage::new(w, h, m, out)?, cache))
    }

    /// Forward pass recording routing state for the next [`AsplundLayer::backward`].
    pub fn forward(&mut self, f: &LipImage) -> Result<LipImage> {
        let probes = self.effective_probes();
        let (g, cache) = self.forward_with(&probes, f)?;
        self.cache = Some(cache);
        Ok(g)
    }

    /// Consumes the cache of the last [`AsplundLayer::forward`].
    pub fn backward(&mut self, upstream: &Plane) -> Result<Gradients> {
        let cache = self.cache.take().ok_or(Error::MissingForwardCache)?;
        self.backward_with(&cache, upstream)
    }

    /// Parameter gradients given `dL/dĝ` and a cache produced with the current kernels.
    pub fn backward_with(&self, cache: &ForwardCache, upstream: &Plane) -> Result<Gradients> {
        if upstream.width() != cache.width || upstream.height() != cache.height {
            return Err(Error::ShapeMismatch {
                expected_width: cache.width,
                expected_height: cache.height,
                width: upstream.width(),
                height: upstream.height(),
            });
        }
        let n = self.kernels.len();
        if cache.window != (self.kernels.width(), self.kernels.height()) {
            return Err(Error::MissingForwardCache);
        }
        let m = self.ceiling;

        // dL/db̃ per tap: ĝ = xi^-1(δ - ε), dδ/db̃_dil = 1 and -dε/db̃_ero = 1.
        let mut dil = vec![0.0; n];
        let mut ero = vec![0.0; n];
        for (p, &up) in upstream.as_slice().iter().enumerate() {
            if up == 0.0 {
                continue;
            }
            let g = up * lip::xi_inv_derivative(cache.u[p], m);
            dil[cache.dilation_tap[p] as usize] += g;
            ero[cache.erosion_tap[p] as usize] += g;
        }

        let v = self.kernels.soft_mask();
        let mut grads = Gradients::zeros(n);
        for j in 0..n {
            let wh = self.kernels.heights[j];
            let xh = lip::xi(wh, m);
            let dxh = lip::xi_derivative(wh, m);
            let dv = v[j] * (1.0 - v[j]);
            // erosion tap j reads parameter j
            let ge = ero[j];
            // dilation tap n-1-j reads the reflected parameter j
            let gd = dil[n - 1 - j];
            grads.heights[j] = ge * dxh * v[j] - gd * dxh * v[j];
            grads.mask_logits[j] = ge * dv * (xh - self.bottom) + gd * dv * (-xh - self.bottom);
        }
        Ok(grads)
    }
}

/// `W <- W - alpha * dL/dW` on both kernels.
pub fn sgd_update(kernels: &mut KernelPair, grads: &Gradients, alpha: f64) {
    for (w, g) in kernels.heights.iter_mut().zip(&grads.heights) {
        *w -= alpha * g;
    }
    for (w, g) in kernels.mask_logits.iter_mut().zip(&grads.mask_logits) {
        *w -= alpha * g;
    }
}
