//! Brute-force and cross-implementation oracles for the quality metrics.

mod common;

use cassi_core::metrics::{per_band_psnr, psnr, sam, ssim};
use cassi_core::*;
use common::*;

#[test]
fn psnr_matches_direct_scalar_computation() {
    let mut r = rng(801);
    for _ in 0..10 {
        let x = random_nonneg_cube(&mut r, 4, 4, 2);
        let reference = random_nonneg_cube(&mut r, 4, 4, 2);
        let peak = 1.3;
        let got = psnr(&x, &reference, peak).unwrap();

        let (h, w, l) = x.dims();
        let mut acc = 0.0;
        for band in 0..l {
            let mut mse = 0.0;
            for m in 0..h {
                for n in 0..w {
                    let d = x.get(m, n, band) - reference.get(m, n, band);
                    mse += d * d;
                }
            }
            mse /= (h * w) as f64;
            acc += 10.0 * (peak * peak / mse).log10();
        }
        let want = acc / l as f64;
        assert!((got - want).abs() <= 1e-10);
        let bands = per_band_psnr(&x, &reference, peak).unwrap();
        assert_eq!(bands.len(), l);
    }
}

/// Direct (non-separable) SSIM with explicit 2-D Gaussian windows; written
/// independently of the production separable-filter path.
fn ssim_direct(x: &SpectralCube, reference: &SpectralCube, peak: f64) -> f64 {
    let (h, w, l) = x.dims();
    let win = 11usize;
    let half = win / 2;
    let sigma = 1.5;
    let mut weights = vec![0.0; win * win];
    let mut sum = 0.0;
    for i in 0..win {
        for j in 0..win {
            let di = i as f64 - half as f64;
            let dj = j as f64 - half as f64;
            let v = (-(di * di + dj * dj) / (2.0 * sigma * sigma)).exp();
            weights[i * win + j] = v;
            sum += v;
        }
    }
    for v in &mut weights {
        *v /= sum;
    }
    let c1 = (0.01 * peak) * (0.01 * peak);
    let c2 = (0.03 * peak) * (0.03 * peak);

    let mut band_acc = 0.0;
    for band in 0..l {
        let a = x.band(band);
        let b = reference.band(band);
        let mut acc = 0.0;
        let mut count = 0;
        for m in half..h - half {
            for n in half..w - half {
                let (mut mu_a, mut mu_b) = (0.0, 0.0);
                let (mut aa, mut bb, mut ab) = (0.0, 0.0, 0.0);
                for i in 0..win {
                    for j in 0..win {
                        let wgt = weights[i * win + j];
                        let va = a[(m + i - half) * w + n + j - half];
                        let vb = b[(m + i - half) * w + n + j - half];
                        mu_a += wgt * va;
                        mu_b += wgt * vb;
                        aa += wgt * va * va;
                        bb += wgt * vb * vb;
                        ab += wgt * va * vb;
                    }
                }
                let var_a = aa - mu_a * mu_a;
                let var_b = bb - mu_b * mu_b;
                let cov = ab - mu_a * mu_b;
                acc += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2))
                    / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
                count += 1;
            }
        }
        band_acc += acc / count as f64;
    }
    band_acc / l as f64
}

#[test]
fn ssim_matches_independent_direct_implementation() {
    let mut r = rng(802);
    for trial in 0..5 {
        let x = random_nonneg_cube(&mut r, 16, 18, 2);
        let reference = random_nonneg_cube(&mut r, 16, 18, 2);
        let peak = 1.0;
        let got = ssim(&x, &reference, peak).unwrap();
        let want = ssim_direct(&x, &reference, peak);
        assert!(
            (got - want).abs() <= 1e-6,
            "trial {trial}: {got} vs {want}"
        );
    }
}

#[test]
fn sam_matches_direct_per_pixel_loop() {
    let mut r = rng(803);
    let x = random_nonneg_cube(&mut r, 5, 5, 3);
    let reference = random_nonneg_cube(&mut r, 5, 5, 3);
    let (got, excluded) = sam(&x, &reference).unwrap();
    assert_eq!(excluded, 0);

    let (h, w, l) = x.dims();
    let mut acc = 0.0;
    for m in 0..h {
        for n in 0..w {
            let mut dot = 0.0;
            let mut na = 0.0;
            let mut nb = 0.0;
            for band in 0..l {
                dot += x.get(m, n, band) * reference.get(m, n, band);
                na += x.get(m, n, band).powi(2);
                nb += reference.get(m, n, band).powi(2);
            }
            acc += (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0).acos();
        }
    }
    let want = acc / (h * w) as f64 * 180.0 / std::f64::consts::PI;
    assert!((got - want).abs() <= 1e-10);
}

#[test]
fn psnr_degrades_monotonically_with_noise() {
    let mut r = rng(804);
    let reference = synth::gaussian_blob_scene(16, 16, 2, 55);
    let sigmas = [0.01, 0.05, 0.2];
    let mut values = Vec::new();
    for &sigma in &sigmas {
        let mut acc = 0.0;
        for _ in 0..5 {
            let noisy = reference
                .add(&random_cube(&mut r, 16, 16, 2).scale(sigma))
                .unwrap();
            acc += psnr(&noisy, &reference, reference.max_value()).unwrap();
        }
        values.push(acc / 5.0);
    }
    assert!(
        values[0] > values[1] && values[1] > values[2],
        "PSNR not monotone over noise: {values:?}"
    );
}

#[test]
fn evaluate_bundles_the_three_metrics() {
    let reference = synth::gaussian_blob_scene(16, 16, 3, 56);
    let report = evaluate(&reference, &reference, PeakConvention::ReferenceMax).unwrap();
    assert_eq!(report.psnr_db, metrics::PSNR_CEILING_DB);
    assert!((report.ssim - 1.0).abs() <= 1e-12);
    assert!(report.sam_degrees.abs() <= 1e-5);
    assert_eq!(report.per_band_psnr.len(), 3);
    assert_eq!(report.sam_excluded_pixels, 0);
}
