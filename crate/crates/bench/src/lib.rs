//! Shared fixtures for the benchmarks.

use lmm_core::dataset::{make_reference_probe, synthetic_dataset, ReferenceProbe};
use lmm_core::{LipImage, DEFAULT_CEILING};

pub fn images(count: usize) -> Vec<LipImage> {
    synthetic_dataset(count, 42)
}

pub fn reference() -> ReferenceProbe {
    make_reference_probe(0.6, 100.0, DEFAULT_CEILING).expect("valid grid point")
}
