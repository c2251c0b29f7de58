mod common;

use common::M;
use lmm_core::asplund::{asplund_map, asplund_map_definitional, classical_asplund_map};
use lmm_core::lip;
use lmm_core::morphology::{log_dilate, log_erode, log_open};
use lmm_core::{AsplundLayer, KernelPair, LipImage, Probe};
use proptest::prelude::*;

fn grey() -> impl Strategy<Value = f64> {
    -400.0..255.0f64
}

fn image(max_side: usize) -> impl Strategy<Value = LipImage> {
    (1..=max_side, 1..=max_side).prop_flat_map(|(w, h)| {
        prop::collection::vec(0.0..255.0f64, w * h).prop_map(move |px| LipImage::new(w, h, M, px).unwrap())
    })
}

fn odd_probe() -> impl Strategy<Value = Probe> {
    (0..3usize, 0..3usize).prop_flat_map(|(a, b)| {
        let (a, b) = (2 * a + 1, 2 * b + 1);
        (
            prop::collection::vec(0.0..200.0f64, a * b),
            prop::collection::vec(any::<bool>(), a * b),
        )
            .prop_map(move |(heights, mut support)| {
                support[(b / 2) * a + a / 2] = true;
                Probe::new(a, b, heights, support).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn lip_addition_is_a_group(a in grey(), b in grey(), c in grey()) {
        let add = |x, y| lip::lip_add(x, y, M);
        prop_assert!(common::rel_close(add(add(a, b), c), add(a, add(b, c)), 1e-9));
        prop_assert!(common::rel_close(add(a, b), add(b, a), 1e-12));
        prop_assert!(common::rel_close(add(a, lip::lip_negate(a, M)), 0.0, 1e-9));
    }

    #[test]
    fn lip_results_stay_below_ceiling(a in grey(), b in grey(), lam in -4.0..4.0f64) {
        prop_assert!(lip::lip_add(a, b, M) < M);
        prop_assert!(lip::lip_scalar_mul(lam, a, M) < M);
        prop_assert!(lip::lip_sub(a, b, M) < M);
    }

    #[test]
    fn xi_is_increasing(a in grey(), b in grey()) {
        prop_assume!(a < b);
        prop_assert!(lip::xi(a, M) < lip::xi(b, M));
    }

    #[test]
    fn asplund_map_ignores_lighting(f in image(10), b in odd_probe(), k in -150.0..150.0f64) {
        let shifted = if k >= 0.0 { f.lip_add_constant(k) } else { f.lip_sub_constant(-k) };
        let g0 = asplund_map(&f, &b).unwrap();
        let g1 = asplund_map(&shifted, &b).unwrap();
        for (x, y) in g0.as_slice().iter().zip(g1.as_slice()) {
            prop_assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn asplund_map_ignores_probe_shift(f in image(10), b in odd_probe(), k in -100.0..50.0f64) {
        let lifted = b.map_heights(|h| lip::lip_add(h, k, M));
        let g0 = asplund_map(&f, &b).unwrap();
        let g1 = asplund_map(&f, &lifted).unwrap();
        for (x, y) in g0.as_slice().iter().zip(g1.as_slice()) {
            prop_assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn asplund_map_lies_in_image_range(f in image(10), b in odd_probe()) {
        for &v in asplund_map_definitional(&f, &b).unwrap().as_slice() {
            prop_assert!((0.0..M).contains(&v));
        }
    }

    #[test]
    fn morphology_is_monotone(f in image(8), b in odd_probe(), lift in 0.0..50.0f64) {
        let g = LipImage::new(
            f.width(), f.height(), M,
            f.as_slice().iter().map(|&v| (v + lift).min(255.0)).collect(),
        ).unwrap();
        let (df, dg) = (log_dilate(&f, &b).unwrap(), log_dilate(&g, &b).unwrap());
        let (ef, eg) = (log_erode(&f, &b).unwrap(), log_erode(&g, &b).unwrap());
        for i in 0..f.len() {
            prop_assert!(df.as_slice()[i] <= dg.as_slice()[i] + 1e-9);
            prop_assert!(ef.as_slice()[i] <= eg.as_slice()[i] + 1e-9);
        }
    }

    #[test]
    fn opening_is_anti_extensive(f in image(8), b in odd_probe()) {
        let o = log_open(&f, &b).unwrap();
        for (x, y) in o.as_slice().iter().zip(f.as_slice()) {
            prop_assert!(*x <= y + 1e-9 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn hard_mask_layer_reproduces_the_map(f in image(10), b in odd_probe()) {
        // off-support taps never win when heights stay small and the image is bounded
        let small = b.map_heights(|h| h / 10.0);
        let layer = AsplundLayer::with_kernels(KernelPair::from_probe(&small, 40.0).unwrap(), M).unwrap();
        let f = LipImage::new(f.width(), f.height(), M, f.as_slice().iter().map(|v| v * 200.0 / 255.0).collect()).unwrap();
        let (g, _) = layer.forward_with(&layer.effective_probes(), &f).unwrap();
        let truth = asplund_map(&f, &small).unwrap();
        for (x, y) in g.as_slice().iter().zip(truth.as_slice()) {
            prop_assert!((x - y).abs() <= 1e-6, "{x} vs {y}");
        }
    }
}

#[test]
fn classical_control_reacts_to_lighting() {
    let f = LipImage::new(4, 1, M, vec![10.0, 80.0, 150.0, 30.0]).unwrap();
    let b = Probe::full(3, 1, vec![5.0, 20.0, 5.0]).unwrap();
    let g0 = classical_asplund_map(&f, &b).unwrap();
    let g1 = classical_asplund_map(&f.lip_add_constant(100.0), &b).unwrap();
    let moved = g0
        .as_slice()
        .iter()
        .zip(g1.as_slice())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    assert!(moved > 1.0, "classical map should change under LIP shifts, moved {moved}");
}
