//! Independent oracles and random instance generators shared by the
//! integration tests. Nothing here calls into the production LIP or
//! morphology code paths; every formula is re-derived from the definitions.
#![allow(dead_code)]

use lmm_core::{AsplundLayer, KernelPair, LipImage, Plane, Probe};
use rand::Rng;

pub const M: f64 = 256.0;

pub fn add(a: f64, b: f64) -> f64 {
    a + b - a * b / M
}

pub fn sub(a: f64, b: f64) -> f64 {
    (a - b) / (1.0 - b / M)
}

pub fn phi(a: f64) -> f64 {
    -M * (1.0 - a / M).ln()
}

pub fn phi_inv(u: f64) -> f64 {
    M * (1.0 - (-u / M).exp())
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

// ---------------------------------------------------------------------------
// random instances

pub fn random_image(rng: &mut impl Rng, width: usize, height: usize, hi: f64) -> LipImage {
    let px = (0..width * height).map(|_| rng.gen_range(0.0..hi)).collect();
    LipImage::new(width, height, M, px).unwrap()
}

pub fn random_odd(rng: &mut impl Rng, max: usize) -> usize {
    2 * rng.gen_range(0..=(max - 1) / 2) + 1
}

/// Odd-sized probe with heights in `[lo, hi)` and a random support that
/// always contains the origin, so no clipped window is empty.
pub fn random_probe(rng: &mut impl Rng, max_side: usize, lo: f64, hi: f64, full: bool) -> Probe {
    let (a, b) = (random_odd(rng, max_side), random_odd(rng, max_side));
    let heights: Vec<f64> = (0..a * b).map(|_| rng.gen_range(lo..hi)).collect();
    let mut support: Vec<bool> = (0..a * b).map(|_| full || rng.gen_bool(0.7)).collect();
    support[(b / 2) * a + a / 2] = true;
    Probe::new(a, b, heights, support).unwrap()
}

// ---------------------------------------------------------------------------
// direct log-dilation / log-erosion

/// `max_h f(x - h) ⊕ b(h)` over support taps landing inside the image.
pub fn direct_log_dilate(f: &LipImage, b: &Probe) -> Vec<f64> {
    let (w, h) = (f.width() as isize, f.height() as isize);
    let (ox, oy) = ((b.width() / 2) as isize, (b.height() / 2) as isize);
    let mut out = Vec::with_capacity(f.len());
    for y in 0..h {
        for x in 0..w {
            let mut best = f64::NEG_INFINITY;
            for j in 0..b.height() {
                for i in 0..b.width() {
                    let k = j * b.width() + i;
                    if !b.support()[k] {
                        continue;
                    }
                    let (sx, sy) = (x - (i as isize - ox), y - (j as isize - oy));
                    if sx < 0 || sy < 0 || sx >= w || sy >= h {
                        continue;
                    }
                    let v = f.get(sx as usize, sy as usize);
                    let term = if v == M { M } else { add(v, b.heights()[k]) };
                    best = best.max(term);
                }
            }
            out.push(best);
        }
    }
    out
}

/// `min_h f(x + h) ⊖ b(h)`; taps outside the support or the image contribute `M`.
pub fn direct_log_erode(f: &LipImage, b: &Probe) -> Vec<f64> {
    let (w, h) = (f.width() as isize, f.height() as isize);
    let (ox, oy) = ((b.width() / 2) as isize, (b.height() / 2) as isize);
    let mut out = Vec::with_capacity(f.len());
    for y in 0..h {
        for x in 0..w {
            let mut best = M;
            for j in 0..b.height() {
                for i in 0..b.width() {
                    let k = j * b.width() + i;
                    if !b.support()[k] {
                        continue;
                    }
                    let (sx, sy) = (x + (i as isize - ox), y + (j as isize - oy));
                    if sx < 0 || sy < 0 || sx >= w || sy >= h {
                        continue;
                    }
                    let v = f.get(sx as usize, sy as usize);
                    let term = if v == M { M } else { sub(v, b.heights()[k]) };
                    best = best.min(term);
                }
            }
            out.push(best);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Asplund distance by search

const GRID_STEPS: usize = 1 << 20;
const BISECTION_TOL: f64 = 1e-10;

fn search_bound() -> f64 {
    phi(M - 1.0)
}

fn grid_point(i: usize) -> f64 {
    let b = search_bound();
    -b + 2.0 * b * i as f64 / GRID_STEPS as f64
}

/// Smallest grid index where a monotone (false..true) predicate holds.
fn first_true(pred: impl Fn(f64) -> bool) -> Option<usize> {
    if !pred(grid_point(GRID_STEPS)) {
        return None;
    }
    let (mut lo, mut hi) = (0usize, GRID_STEPS);
    if pred(grid_point(0)) {
        return Some(0);
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if pred(grid_point(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

fn bisect(pred: impl Fn(f64) -> bool, mut lo: f64, mut hi: f64) -> f64 {
    // invariant: pred(lo) false, pred(hi) true
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `c1 ⊖ c2` where `c1 = inf{c : f <= c ⊕ g}` and `c2 = sup{c : c ⊕ g <= f}`,
/// both located by a grid search on `t = phi(c)` refined by bisection.
pub fn oracle_distance(window: &[f64], probe: &[f64]) -> f64 {
    let above = |t: f64| {
        let c = phi_inv(t);
        window.iter().zip(probe).all(|(&f, &g)| f <= add(c, g))
    };
    let below = |t: f64| {
        let c = phi_inv(t);
        window.iter().zip(probe).all(|(&f, &g)| add(c, g) <= f)
    };
    let i1 = first_true(above).expect("window is reachable within the search range");
    let t1 = if i1 == 0 {
        grid_point(0)
    } else {
        bisect(above, grid_point(i1 - 1), grid_point(i1))
    };
    // `below` is true..false; search its negation
    let not_below = |t: f64| !below(t);
    let t2 = match first_true(not_below) {
        Some(0) => panic!("probe lies above the window at the bottom of the search range"),
        Some(i) => bisect(not_below, grid_point(i - 1), grid_point(i)),
        None => grid_point(GRID_STEPS),
    };
    phi_inv((t1 - t2).max(0.0))
}

/// Pixelwise oracle map: the window `f(x + h)` is paired with `b(h)` over the
/// support clipped to the image.
pub fn oracle_map(f: &LipImage, b: &Probe) -> Vec<f64> {
    let (w, h) = (f.width() as isize, f.height() as isize);
    let (ox, oy) = ((b.width() / 2) as isize, (b.height() / 2) as isize);
    let mut out = Vec::with_capacity(f.len());
    for y in 0..h {
        for x in 0..w {
            let mut win = Vec::new();
            let mut prb = Vec::new();
            for j in 0..b.height() {
                for i in 0..b.width() {
                    let k = j * b.width() + i;
                    let (sx, sy) = (x + i as isize - ox, y + j as isize - oy);
                    if b.support()[k] && sx >= 0 && sy >= 0 && sx < w && sy < h {
                        win.push(f.get(sx as usize, sy as usize));
                        prb.push(b.heights()[k]);
                    }
                }
            }
            out.push(oracle_distance(&win, &prb));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// probe error by dense grid

/// Inner objective of the probe error at LIP shift `k`.
pub fn shift_objective(heights: &[f64], reference: &[f64], mask: &[bool], k: f64) -> f64 {
    heights
        .iter()
        .zip(reference)
        .zip(mask)
        .filter(|(_, &s)| s)
        .map(|((&w, &r), _)| (r - add(w, k)).powi(2))
        .sum()
}

/// Minimising `k` found on a 1e6-point grid over `phi(k)`, then refined by
/// ternary search inside the bracketing grid cell.
pub fn oracle_shift(heights: &[f64], reference: &[f64], mask: &[bool]) -> f64 {
    const POINTS: usize = 1_000_000;
    let bound = search_bound();
    let at = |i: usize| -bound + 2.0 * bound * i as f64 / (POINTS - 1) as f64;
    let obj = |t: f64| shift_objective(heights, reference, mask, phi_inv(t));
    let best = (0..POINTS)
        .min_by(|&a, &b| obj(at(a)).total_cmp(&obj(at(b))))
        .unwrap();
    let mut lo = at(best.saturating_sub(1));
    let mut hi = at((best + 1).min(POINTS - 1));
    while hi - lo > 1e-12 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if obj(m1) <= obj(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    phi_inv(0.5 * (lo + hi))
}

// ---------------------------------------------------------------------------
// finite differences

pub const FD_STEP: f64 = 1e-5;
pub const TIE_GAP: f64 = 1e-6;

/// `MSE(t, p) - MSE(t, q)` summed as `(p - q)(p + q - 2t)` so the
/// difference of two large, nearly equal losses keeps its precision.
fn mse_difference(t: &[f64], p: &[f64], q: &[f64]) -> f64 {
    t.iter()
        .zip(p.iter().zip(q))
        .map(|(&t, (&p, &q))| (p - q) * (p + q - 2.0 * t))
        .sum::<f64>()
        / t.len() as f64
}

pub enum FdOutcome {
    /// Relative errors `|a - n| / max(|a|, |n|)` in vector 2-norm, heights then mask logits.
    Checked { heights: f64, mask_logits: f64 },
    /// Two window taps tie within [`TIE_GAP`] at the base point.
    Tie,
    /// A perturbation changed the max/min routing, so the loss is not
    /// differentiable over the stencil.
    RoutingFlip,
}

fn output_and_routes(kernels: &KernelPair, f: &LipImage) -> (Vec<f64>, Vec<u32>, Vec<u32>, f64) {
    let layer = AsplundLayer::with_kernels(kernels.clone(), M).unwrap();
    let (g, cache) = layer.forward_with(&layer.effective_probes(), f).unwrap();
    (
        g.into_vec(),
        cache.dilation_taps().to_vec(),
        cache.erosion_taps().to_vec(),
        cache.min_gap,
    )
}

fn rel_err(a: &[f64], n: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(n).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nn = n.iter().map(|x| x * x).sum::<f64>().sqrt();
    let denom = na.max(nn);
    if denom == 0.0 {
        0.0
    } else {
        diff / denom
    }
}

/// Compares the analytic MSE gradients with central differences.
pub fn finite_difference_check(kernels: &KernelPair, f: &LipImage, target: &[f64]) -> FdOutcome {
    let (_, dil, ero, gap) = output_and_routes(kernels, f);
    if gap < TIE_GAP {
        return FdOutcome::Tie;
    }
    let mut layer = AsplundLayer::with_kernels(kernels.clone(), M).unwrap();
    let g = layer.forward(f).unwrap();
    let up: Vec<f64> = g
        .as_slice()
        .iter()
        .zip(target)
        .map(|(p, t)| 2.0 * (p - t) / target.len() as f64)
        .collect();
    let up = Plane::new(f.width(), f.height(), up).unwrap();
    let analytic = layer.backward(&up).unwrap();

    let mut numeric = [vec![0.0; kernels.len()], vec![0.0; kernels.len()]];
    for (which, grid) in numeric.iter_mut().enumerate() {
        for (k, slot) in grid.iter_mut().enumerate() {
            let mut plus = kernels.clone();
            let mut minus = kernels.clone();
            if which == 0 {
                plus.heights[k] += FD_STEP;
                minus.heights[k] -= FD_STEP;
            } else {
                plus.mask_logits[k] += FD_STEP;
                minus.mask_logits[k] -= FD_STEP;
            }
            let (gp, dp, ep, _) = output_and_routes(&plus, f);
            let (gm, dm, em, _) = output_and_routes(&minus, f);
            if dp != dil || dm != dil || ep != ero || em != ero {
                return FdOutcome::RoutingFlip;
            }
            *slot = mse_difference(target, &gp, &gm) / (2.0 * FD_STEP);
        }
    }
    FdOutcome::Checked {
        heights: rel_err(&analytic.heights, &numeric[0]),
        mask_logits: rel_err(&analytic.mask_logits, &numeric[1]),
    }
}
