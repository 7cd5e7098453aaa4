//! Shared oracles for the integration suites: explicit sensing matrices,
//! a dense pseudo-inverse route, and an independent dual-projection TV
//! denoiser. Everything here deliberately avoids the operator-form code
//! paths it is used to check.

#![allow(dead_code)]

use cassi_core::*;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_cube(rng: &mut ChaCha8Rng, h: usize, w: usize, l: usize) -> SpectralCube {
    SpectralCube::from_fn(h, w, l, |_, _, _| rng.gen_range(-1.0..1.0))
}

pub fn random_nonneg_cube(rng: &mut ChaCha8Rng, h: usize, w: usize, l: usize) -> SpectralCube {
    SpectralCube::from_fn(h, w, l, |_, _, _| rng.gen_range(0.0..1.0))
}

pub fn random_mask(rng: &mut ChaCha8Rng, h: usize, w: usize, l: usize) -> TransmittanceTensor {
    TransmittanceTensor::new(SpectralCube::from_fn(h, w, l, |_, _, _| rng.gen_range(0.0..1.0)))
        .unwrap()
}

pub fn random_plane(rng: &mut ChaCha8Rng, h: usize, w: usize) -> PlaneMatrix {
    PlaneMatrix::from_vec(h, w, (0..h * w).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Random dual field obeying the feasibility invariants: zero on the
/// Neumann boundary, per-pixel norm at most 1.
pub fn random_feasible_field(
    rng: &mut ChaCha8Rng,
    h: usize,
    w: usize,
    l: usize,
) -> DualGradientField {
    let mut p = DualGradientField::zeros(h, w, l);
    let sz = h * w * l;
    for band in 0..l {
        for m in 0..h {
            for n in 0..w {
                let idx = (band * h + m) * w + n;
                let scale = rng.gen_range(0.0..1.0);
                let angle = rng.gen_range(0.0..std::f64::consts::TAU);
                let v0 = if m + 1 < h { scale * angle.cos() } else { 0.0 };
                let v1 = if n + 1 < w { scale * angle.sin() } else { 0.0 };
                p.as_mut_slice()[idx] = v0;
                p.as_mut_slice()[sz + idx] = v1;
            }
        }
    }
    p
}

/// Explicit sensing matrix Φ ∈ R^{H·Wm × H·W·L}; rows index detector pixels
/// (m-major, then detector column), columns follow the cube flattening.
pub fn materialize_phi(model: &SystemModel) -> DMatrix<f64> {
    let (h, w, l) = model.dims();
    let s = model.shear_step();
    let wide = model.measurement_width();
    let t = model.transmittance().cube();
    let mut phi = DMatrix::zeros(h * wide, h * w * l);
    for band in 0..l {
        for m in 0..h {
            for n in 0..w {
                let row = m * wide + n + s * band;
                let col = (band * h + m) * w + n;
                phi[(row, col)] = t.get(m, n, band);
            }
        }
    }
    phi
}

/// Explicit RGB operator Φ_r = A ⊗ I_{HW}.
pub fn materialize_phi_r(a: &SpectralResponse, h: usize, w: usize) -> DMatrix<f64> {
    let hw = h * w;
    let mut phi = DMatrix::zeros(a.channels() * hw, a.bands() * hw);
    for c in 0..a.channels() {
        for band in 0..a.bands() {
            let weight = a.get(c, band);
            if weight == 0.0 {
                continue;
            }
            for p in 0..hw {
                phi[(c * hw + p, band * hw + p)] = weight;
            }
        }
    }
    phi
}

pub fn cube_to_dvector(x: &SpectralCube) -> DVector<f64> {
    DVector::from_column_slice(x.as_slice())
}

pub fn plane_to_dvector(y: &PlaneMatrix) -> DVector<f64> {
    DVector::from_column_slice(y.as_slice())
}

pub fn dvector_to_cube(v: &DVector<f64>, h: usize, w: usize, l: usize) -> SpectralCube {
    SpectralCube::from_vec(h, w, l, v.iter().cloned().collect()).unwrap()
}

pub fn rel_err(got: &SpectralCube, want: &SpectralCube) -> f64 {
    let num = got.sub(want).unwrap().norm();
    let den = want.norm().max(1e-300);
    num / den
}

/// Independent dual-projection TV denoiser (per-band 2-D): solves
/// argmin_x ½‖x − z‖² + lambda·TV(x) by projecting z/lambda onto the
/// divergence ball with the classical semi-implicit update, then forming
/// x = z + lambda·div p. Plain nested loops; shares no code with the
/// production fixed-point path.
pub fn chambolle_tv_denoise(z: &SpectralCube, lambda: f64, tau: f64, iters: usize) -> SpectralCube {
    let (h, w, l) = z.dims();
    let mut out = SpectralCube::zeros(h, w, l);
    for band in 0..l {
        let g = z.band(band);
        let mut p0 = vec![0.0; h * w];
        let mut p1 = vec![0.0; h * w];
        let mut div = vec![0.0; h * w];
        let mut work = vec![0.0; h * w];
        for _ in 0..iters {
            for m in 0..h {
                for n in 0..w {
                    let i = m * w + n;
                    let mut d = p0[i] + p1[i];
                    if m > 0 {
                        d -= p0[i - w];
                    }
                    if n > 0 {
                        d -= p1[i - 1];
                    }
                    div[i] = d;
                    work[i] = d + g[i] / lambda;
                }
            }
            for m in 0..h {
                for n in 0..w {
                    let i = m * w + n;
                    let gm = if m + 1 < h { work[i + w] - work[i] } else { 0.0 };
                    let gn = if n + 1 < w { work[i + 1] - work[i] } else { 0.0 };
                    let denom = 1.0 + tau * (gm * gm + gn * gn).sqrt();
                    p0[i] = (p0[i] + tau * gm) / denom;
                    p1[i] = (p1[i] + tau * gn) / denom;
                }
            }
        }
        // Final divergence of the converged dual variable.
        for m in 0..h {
            for n in 0..w {
                let i = m * w + n;
                let mut d = p0[i] + p1[i];
                if m > 0 {
                    d -= p0[i - w];
                }
                if n > 0 {
                    d -= p1[i - 1];
                }
                div[i] = d;
            }
        }
        let dst = out.band_mut(band);
        for i in 0..h * w {
            dst[i] = g[i] + lambda * div[i];
        }
    }
    out
}
