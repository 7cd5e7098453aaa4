//! Seeded synthetic scenes, masks, and spectral responses: desk-scale
//! stand-ins for laboratory datasets and physical coded apertures.
//!
//! The piecewise scene is built from well-separated rectangles so its exact
//! isotropic TV value is known in closed form, which gives the TV machinery
//! an analytic oracle.

use crate::cassi::TransmittanceTensor;
use crate::error::{Error, Result};
use crate::rgb::SpectralResponse;
use crate::tensor::SpectralCube;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Scene families understood by the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneKind {
    /// Piecewise-constant rectangles on a flat background; analytic TV.
    Piecewise,
    /// Smooth sum of Gaussian bumps.
    GaussianBlobs,
    /// Horizontal ramp with per-band scaling.
    Ramp,
}

impl std::str::FromStr for SceneKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "piecewise" => Ok(SceneKind::Piecewise),
            "gaussian-blobs" | "blobs" => Ok(SceneKind::GaussianBlobs),
            "ramp" => Ok(SceneKind::Ramp),
            other => Err(Error::InvalidParameter(format!(
                "unknown scene kind '{other}'"
            ))),
        }
    }
}

/// Generates a scene of the requested family.
pub fn generate_scene(kind: SceneKind, h: usize, w: usize, l: usize, seed: u64) -> SpectralCube {
    match kind {
        SceneKind::Piecewise => piecewise_scene(h, w, l, seed).0,
        SceneKind::GaussianBlobs => gaussian_blob_scene(h, w, l, seed),
        SceneKind::Ramp => ramp_scene(h, w, l),
    }
}

struct Rect {
    r0: usize,
    r1: usize,
    c0: usize,
    c1: usize,
}

impl Rect {
    fn separated_from(&self, other: &Rect, gap: usize) -> bool {
        self.r1 + gap <= other.r0
            || other.r1 + gap <= self.r0
            || self.c1 + gap <= other.c0
            || other.c1 + gap <= self.c0
    }
}

/// Piecewise-constant scene: a flat per-band background plus rectangles
/// with per-band jump amplitudes. Rectangles keep a 2-pixel margin from the
/// border and from each other, so each contributes
/// v·(2·width + 2·height − 2) + √2·v to the isotropic TV of its band (the
/// lone corner pixel carries both difference components). The exact total is
/// returned alongside the cube.
pub fn piecewise_scene(h: usize, w: usize, l: usize, seed: u64) -> (SpectralCube, f64) {
    assert!(h >= 8 && w >= 8, "piecewise scene needs at least 8x8 pixels");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut cube = SpectralCube::zeros(h, w, l);
    let mut background = Vec::with_capacity(l);
    for band in 0..l {
        let level = 0.15 + 0.1 * ((band as f64 + 1.0) * 0.8).sin().abs();
        background.push(level);
        cube.band_mut(band).fill(level);
    }

    let target = ((h * w) / 450).clamp(2, 8);
    let mut rects: Vec<Rect> = Vec::new();
    let mut attempts = 0;
    while rects.len() < target && attempts < 400 {
        attempts += 1;
        let max_h = (h / 3).max(3);
        let max_w = (w / 3).max(3);
        let rh = rng.gen_range(3..=max_h);
        let rw = rng.gen_range(3..=max_w);
        if h < rh + 4 || w < rw + 4 {
            continue;
        }
        let r0 = rng.gen_range(2..=h - rh - 2);
        let c0 = rng.gen_range(2..=w - rw - 2);
        let rect = Rect {
            r0,
            r1: r0 + rh,
            c0,
            c1: c0 + rw,
        };
        if rects.iter().all(|r| r.separated_from(&rect, 2)) {
            rects.push(rect);
        }
    }

    let mut analytic_tv = 0.0;
    for rect in &rects {
        let amp = rng.gen_range(0.15..0.6);
        let phase = rng.gen_range(0.0..std::f64::consts::PI);
        for band in 0..l {
            let v = amp * (0.4 + 0.6 * ((band as f64 * 0.9 + phase).sin() * 0.5 + 0.5));
            let plane = cube.band_mut(band);
            for m in rect.r0..rect.r1 {
                for n in rect.c0..rect.c1 {
                    plane[m * w + n] += v;
                }
            }
            let width = (rect.c1 - rect.c0) as f64;
            let height = (rect.r1 - rect.r0) as f64;
            analytic_tv += v * (2.0 * width + 2.0 * height - 2.0) + std::f64::consts::SQRT_2 * v;
        }
    }
    let _ = background;
    (cube, analytic_tv)
}

/// Smooth scene: sum of seeded Gaussian bumps with per-band amplitude
/// modulation.
pub fn gaussian_blob_scene(h: usize, w: usize, l: usize, seed: u64) -> SpectralCube {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blobs = ((h * w) / 350).clamp(3, 10);
    let mut centers = Vec::with_capacity(blobs);
    for _ in 0..blobs {
        let cm = rng.gen_range(0.0..h as f64);
        let cn = rng.gen_range(0.0..w as f64);
        let sigma = rng.gen_range(0.08..0.25) * h.min(w) as f64;
        let amp = rng.gen_range(0.3..0.9);
        let phase = rng.gen_range(0.0..std::f64::consts::PI);
        centers.push((cm, cn, sigma, amp, phase));
    }
    SpectralCube::from_fn(h, w, l, |m, n, band| {
        let mut v = 0.1;
        for &(cm, cn, sigma, amp, phase) in &centers {
            let d2 = (m as f64 - cm).powi(2) + (n as f64 - cn).powi(2);
            let spectral = 0.5 + 0.5 * (band as f64 * 0.7 + phase).sin();
            v += amp * spectral * (-d2 / (2.0 * sigma * sigma)).exp();
        }
        v
    })
}

/// Deterministic horizontal ramp scaled per band.
pub fn ramp_scene(h: usize, w: usize, l: usize) -> SpectralCube {
    SpectralCube::from_fn(h, w, l, |_, n, band| {
        let ramp = n as f64 / (w.max(2) - 1) as f64;
        ramp * (0.5 + 0.5 * (band + 1) as f64 / l as f64)
    })
}

/// Binary Bernoulli(density) coded aperture, one plane replicated across all
/// bands.
pub fn bernoulli_mask(
    h: usize,
    w: usize,
    l: usize,
    density: f64,
    seed: u64,
) -> Result<TransmittanceTensor> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "mask density must lie in (0, 1], got {density}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plane: Vec<f64> = (0..h * w)
        .map(|_| if rng.gen::<f64>() < density { 1.0 } else { 0.0 })
        .collect();
    let mut data = Vec::with_capacity(h * w * l);
    for _ in 0..l {
        data.extend_from_slice(&plane);
    }
    TransmittanceTensor::new(SpectralCube::from_vec(h, w, l, data)?)
}

/// Triangular three-channel response: channels peak at the first, middle,
/// and last band and overlap smoothly.
pub fn synthetic_rgb_response(bands: usize) -> SpectralResponse {
    assert!(bands >= 2, "response needs at least two bands");
    let centers = [0.0, (bands - 1) as f64 / 2.0, (bands - 1) as f64];
    let width = ((bands - 1) as f64 / 2.0).max(1.0);
    let mut data = Vec::with_capacity(3 * bands);
    for &c in &centers {
        for band in 0..bands {
            let d = (band as f64 - c).abs() / width;
            data.push((1.0 - d).max(0.0) + 0.02);
        }
    }
    SpectralResponse::new(3, bands, data).expect("triangular response is valid")
}

/// Flat panchromatic response.
pub fn panchromatic_response(bands: usize) -> SpectralResponse {
    SpectralResponse::new(1, bands, vec![1.0 / bands as f64; bands])
        .expect("flat response is valid")
}
