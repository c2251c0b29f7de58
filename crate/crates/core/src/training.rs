//! Losses, optimisers, the training loop, evaluation across lighting-shifted
//! test sets, and the probe-recovery error.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{DistanceMap, LipImage, Plane};
use crate::layer::{self, AsplundLayer, Gradients, KernelPair};
use crate::lip;

/// Loss or validation metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Mse,
    LipMse,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Mse, Metric::LipMse];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mse => "MSE",
            Metric::LipMse => "LIPMSE",
        }
    }

    pub fn value(self, target: &[f64], prediction: &[f64], ceiling: f64) -> Result<f64> {
        match self {
            Metric::Mse => mse(target, prediction),
            Metric::LipMse => lipmse(target, prediction, ceiling),
        }
    }

    /// `dL/dprediction`.
    pub fn gradient(self, target: &[f64], prediction: &[f64], ceiling: f64) -> Result<Vec<f64>> {
        check_len(target, prediction)?;
        let p = target.len() as f64;
        let m = ceiling;
        Ok(match self {
            Metric::Mse => target
                .iter()
                .zip(prediction)
                .map(|(&g, &h)| 2.0 * (h - g) / p)
                .collect(),
            Metric::LipMse => target
                .iter()
                .zip(prediction)
                .map(|(&g, &h)| {
                    let (g, h) = (clamp_below(g, m), clamp_below(h, m));
                    2.0 * m * m * ((m - g) / (m - h)).ln() / ((m - h) * p)
                })
                .collect(),
        })
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mse" => Ok(Metric::Mse),
            "lipmse" => Ok(Metric::LipMse),
            other => Err(Error::InvalidValue(format!("unknown loss `{other}`"))),
        }
    }
}

fn check_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::BufferLength {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::InvalidValue("empty image".into()));
    }
    Ok(())
}

/// Largest value LIPMSE accepts; anything at or above `M` is pulled down to it.
const LIPMSE_MARGIN: f64 = 1e-9;

#[inline]
fn clamp_below(v: f64, m: f64) -> f64 {
    v.min(m - LIPMSE_MARGIN)
}

/// Mean squared pixel difference.
pub fn mse(target: &[f64], prediction: &[f64]) -> Result<f64> {
    check_len(target, prediction)?;
    let sum: f64 = target
        .iter()
        .zip(prediction)
        .map(|(g, h)| (g - h) * (g - h))
        .sum();
    Ok(sum / target.len() as f64)
}

/// `(M^2 / P) sum ln((M - g) / (M - ĝ))^2`.
///
/// Pixels at or above `M` are clamped to `M - 1e-9` first.
pub fn lipmse(target: &[f64], prediction: &[f64], ceiling: f64) -> Result<f64> {
    check_len(target, prediction)?;
    let m = ceiling;
    let sum: f64 = target
        .iter()
        .zip(prediction)
        .map(|(&g, &h)| {
            let r = ((m - clamp_below(g, m)) / (m - clamp_below(h, m))).ln();
            r * r
        })
        .sum();
    let value = m * m * sum / target.len() as f64;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Numeric(format!("LIPMSE evaluated to {value}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
    Sgd,
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub optimizer: Optimizer,
    pub loss: Metric,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 15,
            learning_rate: 0.5,
            batch_size: 20,
            optimizer: Optimizer::adam(),
            loss: Metric::Mse,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidValue("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidValue("batch size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidValue(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Adam over both kernels, with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: i32,
    first: Gradients,
    second: Gradients,
}

impl Adam {
    pub fn new(len: usize, learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Adam {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            step: 0,
            first: Gradients::zeros(len),
            second: Gradients::zeros(len),
        }
    }

    pub fn step(&mut self, kernels: &mut KernelPair, grads: &Gradients) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        let (lr, b1, b2, eps) = (self.learning_rate, self.beta1, self.beta2, self.epsilon);
        let update = |params: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for i in 0..params.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        };
        update(
            &mut kernels.heights,
            &grads.heights,
            &mut self.first.heights,
            &mut self.second.heights,
        );
        update(
            &mut kernels.mask_logits,
            &grads.mask_logits,
            &mut self.first.mask_logits,
            &mut self.second.mask_logits,
        );
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchRecord {
    pub epoch: usize,
    pub batch: usize,
    pub loss: f64,
}

/// Everything recorded while training.
#[derive(Debug, Clone, Default)]
pub struct TrainRun {
    pub batches: Vec<BatchRecord>,
    /// Mean batch loss per epoch.
    pub epoch_losses: Vec<f64>,
    /// Pixel sweeps whose winning tap was tied with the runner-up.
    pub ties: usize,
    /// Total pixel sweeps (two per output pixel per forward).
    pub sweeps: usize,
    pub negative_outputs: usize,
    pub clamped_heights: usize,
}

impl TrainRun {
    pub fn tie_fraction(&self) -> f64 {
        if self.sweeps == 0 {
            0.0
        } else {
            self.ties as f64 / self.sweeps as f64
        }
    }

    /// `epoch,batch,loss` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,batch,loss\n");
        for r in &self.batches {
            let _ = writeln!(out, "{},{},{:e}", r.epoch, r.batch, r.loss);
        }
        out
    }
}

struct ItemResult {
    loss: f64,
    grads: Gradients,
    ties: usize,
    sweeps: usize,
    negative: usize,
}

/// Fits the layer's kernels so that its output matches `targets`.
///
/// Deterministic for a given seed: the data order is shuffled by a seeded
/// ChaCha generator and per-item gradients are reduced in batch order.
pub fn train(
    layer: &mut AsplundLayer,
    inputs: &[LipImage],
    targets: &[DistanceMap],
    config: &TrainConfig,
) -> Result<TrainRun> {
    config.validate()?;
    if inputs.is_empty() {
        return Err(Error::InvalidValue("empty training set".into()));
    }
    if inputs.len() != targets.len() {
        return Err(Error::BufferLength {
            expected: inputs.len(),
            got: targets.len(),
        });
    }
    for (f, g) in inputs.iter().zip(targets) {
        f.same_shape(g)?;
    }

    let m = layer.ceiling();
    let n_params = layer.kernels().len();
    let mut adam = match config.optimizer {
        Optimizer::Adam {
            beta1,
            beta2,
            epsilon,
        } => Some(Adam::new(n_params, config.learning_rate, beta1, beta2, epsilon)),
        Optimizer::Sgd => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut run = TrainRun::default();

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_sum = 0.0;
        let mut epoch_batches = 0;
        for (batch, idx) in order.chunks(config.batch_size).enumerate() {
            let probes = layer.effective_probes();
            let frozen = &*layer;
            let items: Vec<ItemResult> = idx
                .par_iter()
                .map(|&i| -> Result<ItemResult> {
                    let (pred, cache) = frozen.forward_with(&probes, &inputs[i])?;
                    let target = targets[i].as_slice();
                    let loss = config.loss.value(target, pred.as_slice(), m)?;
                    let up = config.loss.gradient(target, pred.as_slice(), m)?;
                    let up = Plane::new(pred.width(), pred.height(), up)?;
                    let grads = frozen.backward_with(&cache, &up)?;
                    Ok(ItemResult {
                        loss,
                        grads,
                        ties: cache.ties,
                        sweeps: 2 * pred.len(),
                        negative: cache.negative_outputs,
                    })
                })
                .collect::<Result<_>>()?;

            let mut grads = Gradients::zeros(n_params);
            let mut loss = 0.0;
            for item in &items {
                grads.accumulate(&item.grads);
                loss += item.loss;
                run.ties += item.ties;
                run.sweeps += item.sweeps;
                run.negative_outputs += item.negative;
            }
            let scale = 1.0 / items.len() as f64;
            grads.scale(scale);
            loss *= scale;

            let grads_finite = grads
                .heights
                .iter()
                .chain(&grads.mask_logits)
                .all(|v| v.is_finite());
            if !loss.is_finite() || !grads_finite {
                return Err(Error::Numeric(format!(
                    "non-finite loss or gradient at epoch {epoch}, batch {batch} \
                     (learning rate {})",
                    config.learning_rate
                )));
            }

            let kernels = layer.kernels_mut();
            match adam.as_mut() {
                Some(adam) => adam.step(kernels, &grads),
                None => layer::sgd_update(kernels, &grads, config.learning_rate),
            }
            let moved = kernels.clamp_heights(m);
            if moved > 0 {
                log::warn!("{moved} height(s) clamped below the ceiling at epoch {epoch}, batch {batch}");
                run.clamped_heights += moved;
            }

            run.batches.push(BatchRecord { epoch, batch, loss });
            epoch_sum += loss;
            epoch_batches += 1;
        }
        let mean = epoch_sum / epoch_batches as f64;
        log::info!("epoch {epoch}: mean loss {mean:e}");
        run.epoch_losses.push(mean);
    }
    Ok(run)
}

/// One named test set: the images fed to the predictor.
#[derive(Debug, Clone)]
pub struct TestSet {
    pub name: String,
    pub images: Vec<LipImage>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub metric: Metric,
    pub average: f64,
    /// Population standard deviation over images.
    pub std_dev: f64,
    /// `|average - average of the first set|`; `None` for the first set.
    pub abs_avg_diff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SetReport {
    pub name: String,
    pub metrics: Vec<MetricSummary>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub sets: Vec<SetReport>,
}

impl EvalReport {
    /// Largest absolute average difference over all sets and metrics.
    pub fn max_abs_avg_diff(&self) -> f64 {
        self.sets
            .iter()
            .flat_map(|s| s.metrics.iter())
            .filter_map(|m| m.abs_avg_diff)
            .fold(0.0, f64::max)
    }

    pub fn get(&self, set: usize, metric: Metric) -> Option<&MetricSummary> {
        self.sets.get(set)?.metrics.iter().find(|m| m.metric == metric)
    }

    /// `test_set,metric,average,std_dev,abs_avg_diff` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("test_set,metric,average,std_dev,abs_avg_diff\n");
        for set in &self.sets {
            for m in &set.metrics {
                let diff = m.abs_avg_diff.map(|d| format!("{d:e}")).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{},{},{:e},{:e},{}",
                    set.name, m.metric, m.average, m.std_dev, diff
                );
            }
        }
        out
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Scores `predict` on every test set against the same ground truth.
///
/// All sets are compared with `ground_truth`, which is computed on the
/// original (unshifted) images.
pub fn evaluate<P>(predict: P, test_sets: &[TestSet], ground_truth: &[DistanceMap], metrics: &[Metric]) -> Result<EvalReport>
where
    P: Fn(&LipImage) -> Result<Vec<f64>> + Sync,
{
    let mut report = EvalReport::default();
    for set in test_sets {
        if set.images.len() != ground_truth.len() || set.images.is_empty() {
            return Err(Error::BufferLength {
                expected: ground_truth.len(),
                got: set.images.len(),
            });
        }
        let scores: Vec<Vec<f64>> = set
            .images
            .par_iter()
            .zip(ground_truth.par_iter())
            .map(|(f, g)| -> Result<Vec<f64>> {
                let pred = predict(f)?;
                metrics
                    .iter()
                    .map(|metric| metric.value(g.as_slice(), &pred, g.ceiling()))
                    .collect()
            })
            .collect::<Result<_>>()?;
        let summaries = metrics
            .iter()
            .enumerate()
            .map(|(k, &metric)| {
                let column: Vec<f64> = scores.iter().map(|s| s[k]).collect();
                let (average, std_dev) = mean_std(&column);
                MetricSummary {
                    metric,
                    average,
                    std_dev,
                    abs_avg_diff: report
                        .sets
                        .first()
                        .map(|first: &SetReport| (average - first.metrics[k].average).abs()),
                }
            })
            .collect();
        report.sets.push(SetReport {
            name: set.name.clone(),
            metrics: summaries,
        });
    }
    Ok(report)
}

/// [`evaluate`] with the layer's forward pass as predictor.
pub fn evaluate_layer(layer: &AsplundLayer, test_sets: &[TestSet], ground_truth: &[DistanceMap]) -> Result<EvalReport> {
    let probes = layer.effective_probes();
    evaluate(
        |f| Ok(layer.forward_with(&probes, f)?.0.into_vec()),
        test_sets,
        ground_truth,
        &Metric::ALL,
    )
}

/// Probe-recovery error of learned kernels against a reference probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeError {
    /// Height error after the best LIP shift of the learned heights.
    pub e_pr: f64,
    /// MSE between the soft mask and the binary reference mask.
    pub mask_mse: f64,
    /// The minimising LIP constant `k`.
    pub shift: f64,
}

const GOLDEN_TOLERANCE: f64 = 1e-10;

/// Minimises a unimodal function on `[lo, hi]` by golden-section search.
pub fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
        if c >= d {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `E_pr = (1/(A B)) [min_k sum_{x in D} (W_hr - (W_h ⊕ k))^2 + sum_{x not in D} W_h^2]`
/// together with the soft-mask MSE.
///
/// The inner minimum is searched over `t = xi(k)` in `[-xi(M-1), xi(M-1)]`.
pub fn probe_error(
    heights: &[f64],
    mask_logits: &[f64],
    reference_heights: &[f64],
    reference_mask: &[bool],
    ceiling: f64,
) -> Result<ProbeError> {
    let n = reference_heights.len();
    for len in [heights.len(), mask_logits.len(), reference_mask.len()] {
        if len != n {
            return Err(Error::BufferLength { expected: n, got: len });
        }
    }
    if !reference_mask.iter().any(|&s| s) {
        return Err(Error::EmptySupport);
    }
    let m = ceiling;
    let on: Vec<(f64, f64)> = (0..n)
        .filter(|&i| reference_mask[i])
        .map(|i| (lip::xi(heights[i], m), reference_heights[i]))
        .collect();
    let inner = |t: f64| -> f64 {
        on.iter()
            .map(|&(xh, r)| {
                let d = r - lip::xi_inv(xh + t, m);
                d * d
            })
            .sum()
    };
    let bound = lip::xi(m - 1.0, m);
    let t = golden_section_min(inner, -bound, bound, GOLDEN_TOLERANCE);
    let off: f64 = (0..n)
        .filter(|&i| !reference_mask[i])
        .map(|i| heights[i] * heights[i])
        .sum();
    let e_pr = (inner(t) + off) / n as f64;
    let mask_mse = mask_logits
        .iter()
        .zip(reference_mask)
        .map(|(&w, &s)| {
            let d = layer::sigmoid(w) - if s { 1.0 } else { 0.0 };
            d * d
        })
        .sum::<f64>()
        / n as f64;
    Ok(ProbeError {
        e_pr,
        mask_mse,
        shift: lip::xi_inv(t, m),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const M: f64 = 256.0;

    #[test]
    fn mse_examples() {
        let g = [1.0, 2.0, 3.0];
        assert_eq!(mse(&g, &g).unwrap(), 0.0);
        assert_eq!(mse(&[0.0; 4], &[1.0; 4]).unwrap(), 1.0);
        assert!(mse(&g, &[1.0]).is_err());
    }

    #[test]
    fn lipmse_examples() {
        let g = [10.0, 128.0, 250.0];
        assert_eq!(lipmse(&g, &g, M).unwrap(), 0.0);
        let v = lipmse(&[128.0], &[0.0], M).unwrap();
        let expect = 256.0 * 256.0 * 2f64.ln().powi(2);
        assert!((v - expect).abs() < 1e-9 * expect);
        assert!((v - 31_486.968_72).abs() < 1e-4);
        // pixels at the ceiling are clamped, never NaN
        assert!(lipmse(&[M], &[0.0], M).unwrap().is_finite());
    }

    #[test]
    fn lipmse_equals_xi_space_mse() {
        let g = [0.0, 12.0, 99.0, 254.0, -30.0];
        let h = [5.0, 40.0, 80.0, 200.0, 3.0];
        let direct = lipmse(&g, &h, M).unwrap();
        let via_xi = g
            .iter()
            .zip(&h)
            .map(|(&a, &b)| (lip::xi(a, M) - lip::xi(b, M)).powi(2))
            .sum::<f64>()
            / g.len() as f64;
        assert!((direct - via_xi).abs() < 1e-9 * via_xi);
    }

    #[test]
    fn metric_gradients_match_finite_differences() {
        let g = [3.0, 70.0, 180.0];
        let h = [10.0, 60.0, 200.0];
        for metric in Metric::ALL {
            let grad = metric.gradient(&g, &h, M).unwrap();
            for i in 0..3 {
                let mut hp = h;
                let mut hm = h;
                hp[i] += 1e-5;
                hm[i] -= 1e-5;
                let fd = (metric.value(&g, &hp, M).unwrap() - metric.value(&g, &hm, M).unwrap()) / 2e-5;
                assert!((fd - grad[i]).abs() <= 1e-5 * fd.abs().max(1.0), "{metric} {i}");
            }
        }
    }

    #[test]
    fn adam_with_zero_gradients_is_a_no_op() {
        let mut kp = KernelPair::new(3, 3, vec![4.0; 9], vec![-1.0; 9]).unwrap();
        let before = kp.clone();
        let mut adam = Adam::new(9, 0.5, 0.9, 0.999, 1e-8);
        for _ in 0..5 {
            adam.step(&mut kp, &Gradients::zeros(9));
        }
        assert_eq!(kp, before);
    }

    #[test]
    fn adam_first_step_has_learning_rate_magnitude() {
        let mut kp = KernelPair::new(1, 1, vec![4.0], vec![0.0]).unwrap();
        let mut adam = Adam::new(1, 0.5, 0.9, 0.999, 1e-8);
        let g = Gradients {
            heights: vec![3.0],
            mask_logits: vec![-0.01],
        };
        adam.step(&mut kp, &g);
        assert!((kp.heights[0] - 3.5).abs() < 1e-6);
        assert!((kp.mask_logits[0] - 0.5).abs() < 1e-5);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!("LIPMSE".parse::<Metric>().unwrap(), Metric::LipMse);
        assert!("l1".parse::<Metric>().is_err());
    }

    #[test]
    fn probe_error_is_zero_for_exact_and_shifted_heights() {
        let reference = [0.0, 20.0, 0.0, 30.0, 50.0, 30.0, 0.0, 20.0, 0.0];
        let mask = [false, true, false, true, true, true, false, true, false];
        let logits = [-30.0, 30.0, -30.0, 30.0, 30.0, 30.0, -30.0, 30.0, -30.0];
        let e = probe_error(&reference, &logits, &reference, &mask, M).unwrap();
        assert!(e.e_pr < 1e-12);
        assert!(e.shift.abs() < 1e-6);
        assert!(e.mask_mse < 1e-20);

        let shifted: Vec<f64> = reference
            .iter()
            .zip(&mask)
            .map(|(&h, &s)| if s { lip::lip_sub(h, 17.0, M) } else { 0.0 })
            .collect();
        let e = probe_error(&shifted, &logits, &reference, &mask, M).unwrap();
        assert!(e.e_pr < 1e-12, "{}", e.e_pr);
        assert!((e.shift - 17.0).abs() < 1e-6);
    }

    #[test]
    fn probe_error_counts_off_support_heights() {
        let reference = [5.0, 0.0];
        let mask = [true, false];
        let e = probe_error(&[5.0, 3.0], &[0.0, 0.0], &reference, &mask, M).unwrap();
        assert!((e.e_pr - 9.0 / 2.0).abs() < 1e-9);
        assert!((e.mask_mse - 0.25).abs() < 1e-12);
        assert!(matches!(
            probe_error(&[1.0], &[0.0], &[1.0], &[false], M),
            Err(Error::EmptySupport)
        ));
    }

    #[test]
    fn eval_report_csv_layout() {
        let report = EvalReport {
            sets: vec![SetReport {
                name: "initial".into(),
                metrics: vec![MetricSummary {
                    metric: Metric::Mse,
                    average: 0.5,
                    std_dev: 0.25,
                    abs_avg_diff: None,
                }],
            }],
        };
        assert_eq!(
            report.to_csv(),
            "test_set,metric,average,std_dev,abs_avg_diff\ninitial,MSE,5e-1,2.5e-1,\n"
        );
    }
}
