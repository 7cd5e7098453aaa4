//! Shared fixtures for the benchmark targets.

use cassi_core::*;

/// Deterministic pseudo-random mask without pulling an RNG into the fixture.
pub fn hashed_mask(h: usize, w: usize, l: usize) -> TransmittanceTensor {
    let cube = SpectralCube::from_fn(h, w, l, |m, n, b| {
        let mut state = (m * 73_856_093) ^ (n * 19_349_663) ^ (b * 83_492_791) ^ 0x9E37_79B9;
        state = state.wrapping_mul(0x85EB_CA6B) ^ (state >> 13);
        ((state % 1000) as f64) / 999.0
    });
    TransmittanceTensor::new(cube).expect("values in [0,1]")
}

pub fn benchmark_system(h: usize, w: usize, l: usize, shear: usize) -> SystemModel {
    SystemModel::build(hashed_mask(h, w, l), shear)
}

pub fn benchmark_scene(h: usize, w: usize, l: usize) -> SpectralCube {
    synth::gaussian_blob_scene(h, w, l, 1234)
}
