//! Reconstruction quality metrics: PSNR (per band, then averaged), SSIM
//! with an 11×11 Gaussian window, and the spectral angle mapper in degrees.

use crate::error::{Error, Result};
use crate::tensor::SpectralCube;

/// PSNR value reported for numerically identical inputs.
pub const PSNR_CEILING_DB: f64 = 99.0;

/// Which peak value the PSNR/SSIM constants are relative to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PeakConvention {
    /// Maximum of the reference cube (the convention of the usual evaluation
    /// scripts).
    #[default]
    ReferenceMax,
    /// Fixed peak of 1.0.
    Unit,
}

impl PeakConvention {
    pub fn peak_for(self, reference: &SpectralCube) -> f64 {
        match self {
            PeakConvention::ReferenceMax => reference.max_value(),
            PeakConvention::Unit => 1.0,
        }
    }
}

/// Bundle of the three quality numbers plus the per-band PSNR breakdown.
#[derive(Debug, Clone)]
pub struct MetricReport {
    pub psnr_db: f64,
    pub ssim: f64,
    pub sam_degrees: f64,
    pub per_band_psnr: Vec<f64>,
    /// Pixels excluded from SAM because either spectrum was identically
    /// zero.
    pub sam_excluded_pixels: usize,
}

fn check_dims(x: &SpectralCube, reference: &SpectralCube, context: &'static str) -> Result<()> {
    if !x.same_dims(reference) {
        return Err(Error::dims(
            context,
            format!("{:?}", reference.dims()),
            format!("{:?}", x.dims()),
        ));
    }
    Ok(())
}

/// Per-band PSNR values 10·log₁₀(peak²/MSE_l), capped at
/// [`PSNR_CEILING_DB`].
pub fn per_band_psnr(x: &SpectralCube, reference: &SpectralCube, peak: f64) -> Result<Vec<f64>> {
    check_dims(x, reference, "psnr")?;
    if peak <= 0.0 || !peak.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "peak must be finite and > 0, got {peak}"
        )));
    }
    let (h, w, l) = x.dims();
    let pixels = (h * w) as f64;
    let mut out = Vec::with_capacity(l);
    for band in 0..l {
        let mse: f64 = x
            .band(band)
            .iter()
            .zip(reference.band(band))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / pixels;
        let value = if mse == 0.0 {
            PSNR_CEILING_DB
        } else {
            (10.0 * (peak * peak / mse).log10()).min(PSNR_CEILING_DB)
        };
        out.push(value);
    }
    Ok(out)
}

/// Mean of the per-band PSNR values.
pub fn psnr(x: &SpectralCube, reference: &SpectralCube, peak: f64) -> Result<f64> {
    let bands = per_band_psnr(x, reference, peak)?;
    Ok(bands.iter().sum::<f64>() / bands.len() as f64)
}

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let center = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - center;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *v;
    }
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// Mean SSIM per band with an 11×11 Gaussian window (σ = 1.5, K1 = 0.01,
/// K2 = 0.03), evaluated on fully interior windows and averaged over bands.
pub fn ssim(x: &SpectralCube, reference: &SpectralCube, peak: f64) -> Result<f64> {
    check_dims(x, reference, "ssim")?;
    let (h, w, l) = x.dims();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::InvalidParameter(format!(
            "ssim needs images at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {h}x{w}"
        )));
    }
    if peak <= 0.0 || !peak.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "peak must be finite and > 0, got {peak}"
        )));
    }
    let c1 = (SSIM_K1 * peak) * (SSIM_K1 * peak);
    let c2 = (SSIM_K2 * peak) * (SSIM_K2 * peak);
    let win = gaussian_window();
    let half = SSIM_WINDOW / 2;

    // Separable weighted moments: filter rows, then columns.
    let filter = |plane: &[f64]| -> Vec<f64> {
        let mut rows = vec![0.0; h * w];
        for m in 0..h {
            for n in half..w - half {
                let mut acc = 0.0;
                for (k, &wk) in win.iter().enumerate() {
                    acc += wk * plane[m * w + n + k - half];
                }
                rows[m * w + n] = acc;
            }
        }
        let mut out = vec![0.0; h * w];
        for m in half..h - half {
            for n in half..w - half {
                let mut acc = 0.0;
                for (k, &wk) in win.iter().enumerate() {
                    acc += wk * rows[(m + k - half) * w + n];
                }
                out[m * w + n] = acc;
            }
        }
        out
    };

    let mut band_means = Vec::with_capacity(l);
    for band in 0..l {
        let a = x.band(band);
        let b = reference.band(band);
        let sq_a: Vec<f64> = a.iter().map(|v| v * v).collect();
        let sq_b: Vec<f64> = b.iter().map(|v| v * v).collect();
        let ab: Vec<f64> = a.iter().zip(b).map(|(p, q)| p * q).collect();
        let mu_a = filter(a);
        let mu_b = filter(b);
        let m_aa = filter(&sq_a);
        let m_bb = filter(&sq_b);
        let m_ab = filter(&ab);

        let mut acc = 0.0;
        let mut count = 0usize;
        for m in half..h - half {
            for n in half..w - half {
                let i = m * w + n;
                let va = m_aa[i] - mu_a[i] * mu_a[i];
                let vb = m_bb[i] - mu_b[i] * mu_b[i];
                let cov = m_ab[i] - mu_a[i] * mu_b[i];
                let num = (2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2);
                let den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2);
                acc += num / den;
                count += 1;
            }
        }
        band_means.push(acc / count as f64);
    }
    Ok(band_means.iter().sum::<f64>() / l as f64)
}

/// Mean spectral angle in degrees over pixels whose spectra are both
/// nonzero; returns the count of excluded pixels alongside.
pub fn sam(x: &SpectralCube, reference: &SpectralCube) -> Result<(f64, usize)> {
    check_dims(x, reference, "sam")?;
    let (h, w, l) = x.dims();
    let mut acc = 0.0;
    let mut valid = 0usize;
    let mut excluded = 0usize;
    for m in 0..h {
        for n in 0..w {
            let mut dot = 0.0;
            let mut na = 0.0;
            let mut nb = 0.0;
            for band in 0..l {
                let a = x.get(m, n, band);
                let b = reference.get(m, n, band);
                dot += a * b;
                na += a * a;
                nb += b * b;
            }
            if na == 0.0 || nb == 0.0 {
                excluded += 1;
                continue;
            }
            let cos = (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0);
            acc += cos.acos();
            valid += 1;
        }
    }
    if valid == 0 {
        return Err(Error::InvalidParameter(
            "sam: no pixel has a nonzero spectrum in both cubes".into(),
        ));
    }
    Ok((acc / valid as f64 * 180.0 / std::f64::consts::PI, excluded))
}

/// Computes the full report with the chosen peak convention.
pub fn evaluate(
    x: &SpectralCube,
    reference: &SpectralCube,
    peak: PeakConvention,
) -> Result<MetricReport> {
    let peak_value = peak.peak_for(reference);
    let per_band = per_band_psnr(x, reference, peak_value)?;
    let psnr_db = per_band.iter().sum::<f64>() / per_band.len() as f64;
    let ssim_value = ssim(x, reference, peak_value)?;
    let (sam_degrees, sam_excluded_pixels) = sam(x, reference)?;
    Ok(MetricReport {
        psnr_db,
        ssim: ssim_value,
        sam_degrees,
        per_band_psnr: per_band,
        sam_excluded_pixels,
    })
}
