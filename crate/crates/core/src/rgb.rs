//! RGB/panchromatic branch: spectral response projection, Bayer mosaic
//! simulation, bilinear demosaicking, and the dual-camera minimum-norm
//! backward solve.
//!
//! The stacked system [Φ; Φ_r] is inverted through the auxiliary operator
//! F = Φ_r (I − Φ†Φ) Φ_rᵀ, applied matrix-free inside a conjugate-gradient
//! least-squares loop; F itself is never materialized.

use crate::cassi::{CassiMeasurement, SystemModel};
use crate::error::{Error, Result};
use crate::tensor::SpectralCube;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// C×L spectral response matrix A (3 rows for RGB, 1 for panchromatic);
/// nonnegative with at least one positive entry per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResponse {
    channels: usize,
    bands: usize,
    data: Vec<f64>, // row-major C×L
}

impl SpectralResponse {
    pub fn new(channels: usize, bands: usize, data: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidParameter(format!(
                "spectral response must have 1 or 3 rows, got {channels}"
            )));
        }
        if bands == 0 || data.len() != channels * bands {
            return Err(Error::dims(
                "SpectralResponse::new",
                format!("{} values", channels * bands),
                format!("{}", data.len()),
            ));
        }
        if !data.iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(Error::InvalidParameter(
                "spectral response entries must be finite and >= 0".into(),
            ));
        }
        for c in 0..channels {
            if data[c * bands..(c + 1) * bands].iter().all(|&v| v == 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "spectral response row {c} has no positive entry"
                )));
            }
        }
        Ok(Self {
            channels,
            bands,
            data,
        })
    }

    /// Parses a plain-text CSV body with C rows × L comma-separated columns.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|cell| {
                    cell.trim().parse::<f64>().map_err(|_| {
                        Error::InvalidParameter(format!(
                            "response CSV line {}: cannot parse '{}'",
                            lineno + 1,
                            cell.trim()
                        ))
                    })
                })
                .collect::<Result<_>>()?;
            if let Some(first) = rows.first() {
                if row.len() != first.len() {
                    return Err(Error::InvalidParameter(format!(
                        "response CSV line {}: expected {} columns, got {}",
                        lineno + 1,
                        first.len(),
                        row.len()
                    )));
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::InvalidParameter("response CSV is empty".into()));
        }
        let channels = rows.len();
        let bands = rows[0].len();
        Self::new(channels, bands, rows.into_iter().flatten().collect())
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    #[inline]
    pub fn get(&self, channel: usize, band: usize) -> f64 {
        self.data[channel * self.bands + band]
    }

    pub fn row(&self, channel: usize) -> &[f64] {
        &self.data[channel * self.bands..(channel + 1) * self.bands]
    }
}

/// H×W×C image stored as C contiguous row-major planes (channel-major, the
/// same vectorization order the stacked operator assumes).
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    h: usize,
    w: usize,
    c: usize,
    data: Vec<f64>,
}

impl RgbImage {
    pub fn zeros(h: usize, w: usize, c: usize) -> Self {
        assert!(c == 1 || c == 3, "channel count must be 1 or 3");
        Self {
            h,
            w,
            c,
            data: vec![0.0; h * w * c],
        }
    }

    pub fn from_vec(h: usize, w: usize, c: usize, data: Vec<f64>) -> Result<Self> {
        if c != 1 && c != 3 {
            return Err(Error::InvalidParameter(format!(
                "channel count must be 1 or 3, got {c}"
            )));
        }
        if data.len() != h * w * c {
            return Err(Error::dims(
                "RgbImage::from_vec",
                format!("{} values", h * w * c),
                format!("{}", data.len()),
            ));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("RgbImage::from_vec"));
        }
        Ok(Self { h, w, c, data })
    }

    pub(crate) fn from_parts(h: usize, w: usize, c: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), h * w * c);
        Self { h, w, c, data }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.h, self.w, self.c)
    }

    pub fn channels(&self) -> usize {
        self.c
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize, channel: usize) -> f64 {
        self.data[(channel * self.h + m) * self.w + n]
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let hw = self.h * self.w;
        &self.data[c * hw..(c + 1) * hw]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let hw = self.h * self.w;
        &mut self.data[c * hw..(c + 1) * hw]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// 2×2 color filter array layouts; the letter order reads row-major across
/// the cell, e.g. RGGB places R at (0,0), G at (0,1) and (1,0), B at (1,1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BayerPattern {
    Rggb,
    Bggr,
    Grbg,
    Gbrg,
}

impl BayerPattern {
    /// Channel index (0 = R, 1 = G, 2 = B) sampled at pixel (m, n).
    pub fn channel_at(self, m: usize, n: usize) -> usize {
        let cell = [m % 2, n % 2];
        let layout: [usize; 4] = match self {
            BayerPattern::Rggb => [0, 1, 1, 2],
            BayerPattern::Bggr => [2, 1, 1, 0],
            BayerPattern::Grbg => [1, 0, 2, 1],
            BayerPattern::Gbrg => [1, 2, 0, 1],
        };
        layout[cell[0] * 2 + cell[1]]
    }

    /// (row parity, column parity) of the red sites.
    fn red_parity(self) -> (usize, usize) {
        match self {
            BayerPattern::Rggb => (0, 0),
            BayerPattern::Bggr => (1, 1),
            BayerPattern::Grbg => (0, 1),
            BayerPattern::Gbrg => (1, 0),
        }
    }

    /// (row parity, column parity) of the blue sites.
    fn blue_parity(self) -> (usize, usize) {
        let (r, c) = self.red_parity();
        (1 - r, 1 - c)
    }
}

impl std::str::FromStr for BayerPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rggb" => Ok(BayerPattern::Rggb),
            "bggr" => Ok(BayerPattern::Bggr),
            "grbg" => Ok(BayerPattern::Grbg),
            "gbrg" => Ok(BayerPattern::Gbrg),
            other => Err(Error::InvalidParameter(format!(
                "unknown Bayer pattern '{other}'"
            ))),
        }
    }
}

fn check_bands(a: &SpectralResponse, x: &SpectralCube, context: &'static str) -> Result<()> {
    if a.bands() != x.bands() {
        return Err(Error::dims(
            context,
            format!("{} bands", a.bands()),
            format!("{}", x.bands()),
        ));
    }
    Ok(())
}

/// Spectral projection (Y_r)_(3) = A X_(3): per-pixel mixing of the bands
/// through the response rows. Noise-free and linear.
pub fn rgb_forward(a: &SpectralResponse, x: &SpectralCube) -> Result<RgbImage> {
    check_bands(a, x, "rgb_forward")?;
    let (h, w, l) = x.dims();
    let mut out = RgbImage::zeros(h, w, a.channels());
    for c in 0..a.channels() {
        let plane = out.channel_mut(c);
        for band in 0..l {
            let weight = a.get(c, band);
            if weight == 0.0 {
                continue;
            }
            for (o, v) in plane.iter_mut().zip(x.band(band)) {
                *o += weight * v;
            }
        }
    }
    Ok(out)
}

/// Adjoint of [`rgb_forward`]: lifts channel planes back to a cube through
/// Aᵀ.
pub fn rgb_adjoint(a: &SpectralResponse, img: &RgbImage) -> Result<SpectralCube> {
    if img.channels() != a.channels() {
        return Err(Error::dims(
            "rgb_adjoint",
            format!("{} channels", a.channels()),
            format!("{}", img.channels()),
        ));
    }
    let (h, w, _) = img.dims();
    let mut out = SpectralCube::zeros(h, w, a.bands());
    for band in 0..a.bands() {
        let plane = out.band_mut(band);
        for c in 0..a.channels() {
            let weight = a.get(c, band);
            if weight == 0.0 {
                continue;
            }
            for (o, v) in plane.iter_mut().zip(img.channel(c)) {
                *o += weight * v;
            }
        }
    }
    Ok(out)
}

/// Spectral projection plus i.i.d. Gaussian noise, deterministic per seed.
/// The mosaic-free acquisition model of a panchromatic (or ideal
/// full-resolution RGB) camera.
pub fn rgb_simulate(
    a: &SpectralResponse,
    x: &SpectralCube,
    noise_sigma: f64,
    seed: u64,
) -> Result<RgbImage> {
    if noise_sigma < 0.0 || !noise_sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "noise sigma must be finite and >= 0, got {noise_sigma}"
        )));
    }
    let mut img = rgb_forward(a, x)?;
    if noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise_sigma).expect("valid sigma");
        for v in img.as_mut_slice() {
            *v += normal.sample(&mut rng);
        }
    }
    Ok(img)
}

/// Pre-demosaic Bayer raw: per-pixel selection of the CFA-dictated channel
/// from the spectral projection, plus i.i.d. Gaussian noise (deterministic
/// per seed). Requires even dimensions and a 3-channel response.
pub fn mosaic_simulate(
    a: &SpectralResponse,
    x: &SpectralCube,
    pattern: BayerPattern,
    noise_sigma: f64,
    seed: u64,
) -> Result<RgbImage> {
    if a.channels() != 3 {
        return Err(Error::InvalidParameter(
            "mosaic simulation needs a 3-channel response".into(),
        ));
    }
    let (h, w, _) = x.dims();
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "Bayer mosaic needs even dimensions, got {h}x{w}"
        )));
    }
    if noise_sigma < 0.0 || !noise_sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "noise sigma must be finite and >= 0, got {noise_sigma}"
        )));
    }
    let full = rgb_forward(a, x)?;
    let mut raw = RgbImage::zeros(h, w, 1);
    {
        let plane = raw.channel_mut(0);
        for m in 0..h {
            for n in 0..w {
                plane[m * w + n] = full.get(m, n, pattern.channel_at(m, n));
            }
        }
    }
    if noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise_sigma).expect("valid sigma");
        for v in raw.as_mut_slice() {
            *v += normal.sample(&mut rng);
        }
    }
    Ok(raw)
}

/// Averages the raw values at the given neighbour offsets, skipping
/// out-of-bounds sites.
fn neighbour_mean(
    raw: &[f64],
    h: usize,
    w: usize,
    m: usize,
    n: usize,
    offsets: &[(isize, isize)],
) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for &(dm, dn) in offsets {
        let mm = m as isize + dm;
        let nn = n as isize + dn;
        if mm >= 0 && (mm as usize) < h && nn >= 0 && (nn as usize) < w {
            sum += raw[mm as usize * w + nn as usize];
            count += 1;
        }
    }
    sum / count as f64
}

const CROSS: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
const DIAG: [(isize, isize); 4] = [(-1, -1), (-1, 1), (1, -1), (1, 1)];
const HORIZ: [(isize, isize); 2] = [(0, -1), (0, 1)];
const VERT: [(isize, isize); 2] = [(-1, 0), (1, 0)];

/// Bilinear demosaic of a Bayer raw frame into a full 3-channel image.
/// Sampled sites keep their measured value exactly; missing sites average
/// the in-bounds neighbours of the matching channel.
pub fn demosaic_bilinear(raw: &RgbImage, pattern: BayerPattern) -> Result<RgbImage> {
    let (h, w, c) = raw.dims();
    if c != 1 {
        return Err(Error::InvalidParameter(
            "demosaic expects a single-channel raw frame".into(),
        ));
    }
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "Bayer demosaic needs even dimensions, got {h}x{w}"
        )));
    }
    let plane = raw.channel(0);
    let mut out = RgbImage::zeros(h, w, 3);

    for (channel, parity) in [(0usize, pattern.red_parity()), (2, pattern.blue_parity())] {
        let dst = out.channel_mut(channel);
        let (pr, pc) = parity;
        for m in 0..h {
            for n in 0..w {
                let row_off = m % 2 != pr;
                let col_off = n % 2 != pc;
                dst[m * w + n] = match (row_off, col_off) {
                    (false, false) => plane[m * w + n],
                    (false, true) => neighbour_mean(plane, h, w, m, n, &HORIZ),
                    (true, false) => neighbour_mean(plane, h, w, m, n, &VERT),
                    (true, true) => neighbour_mean(plane, h, w, m, n, &DIAG),
                };
            }
        }
    }

    // Green occupies the complementary checkerboard.
    let (pr, pc) = pattern.red_parity();
    let green_parity = (pr + pc) % 2;
    let dst = out.channel_mut(1);
    for m in 0..h {
        for n in 0..w {
            if (m + n) % 2 != green_parity {
                dst[m * w + n] = plane[m * w + n];
            } else {
                dst[m * w + n] = neighbour_mean(plane, h, w, m, n, &CROSS);
            }
        }
    }
    Ok(out)
}

/// Options for the inner conjugate-gradient solve of the dual-camera
/// backward model.
#[derive(Debug, Clone, Copy)]
pub struct CgOptions {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iters: 500,
        }
    }
}

/// Diagnostics of one conjugate-gradient run.
#[derive(Debug, Clone)]
pub struct CgReport {
    pub converged: bool,
    pub iterations: usize,
    /// ‖b − A xₖ‖ per iteration, starting from ‖b‖; nonincreasing.
    pub residual_norms: Vec<f64>,
}

/// Conjugate-gradient least squares on min ‖A x − b‖ for a symmetric PSD
/// operator A. Started from zero it converges to the minimum-norm solution;
/// the recorded residual norms are monotone nonincreasing.
pub(crate) fn cgls<F>(apply: F, b: &[f64], opts: &CgOptions) -> (Vec<f64>, CgReport)
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let b_norm = norm(b);
    let mut residual_norms = vec![b_norm];
    if b_norm == 0.0 {
        return (
            x,
            CgReport {
                converged: true,
                iterations: 0,
                residual_norms,
            },
        );
    }
    let mut s = apply(&r);
    let s0_norm = norm(&s);
    let mut p = s.clone();
    let mut gamma = dot(&s, &s);
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..opts.max_iters {
        if gamma == 0.0 {
            converged = true;
            break;
        }
        let q = apply(&p);
        let qq = dot(&q, &q);
        if qq == 0.0 {
            converged = true;
            break;
        }
        let alpha = gamma / qq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        iterations += 1;
        residual_norms.push(norm(&r));
        s = apply(&r);
        let gamma_new = dot(&s, &s);
        let beta = gamma_new / gamma;
        for i in 0..n {
            p[i] = s[i] + beta * p[i];
        }
        gamma = gamma_new;
        // The LS gradient ‖Aᵀ(b − Ax)‖ is the meaningful stop for possibly
        // inconsistent right-hand sides.
        if gamma.sqrt() <= opts.tol * s0_norm || residual_norms.last().unwrap() <= &(opts.tol * b_norm)
        {
            converged = true;
            break;
        }
    }
    (
        x,
        CgReport {
            converged,
            iterations,
            residual_norms,
        },
    )
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Plain conjugate gradients for a symmetric positive-definite operator,
/// optionally warm-started. Used by the stacked-fidelity ADMM data step
/// where the ρI shift guarantees definiteness.
pub(crate) fn cg_spd<F>(apply: F, b: &[f64], x0: Option<&[f64]>, opts: &CgOptions) -> (Vec<f64>, CgReport)
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let mut x = x0.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; n]);
    let ax = apply(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let b_norm = norm(b).max(f64::MIN_POSITIVE);
    let mut residual_norms = vec![norm(&r)];
    let mut p = r.clone();
    let mut rs = dot(&r, &r);
    let mut converged = rs.sqrt() <= opts.tol * b_norm;
    let mut iterations = 0;

    while !converged && iterations < opts.max_iters {
        let q = apply(&p);
        let pq = dot(&p, &q);
        if pq <= 0.0 {
            break;
        }
        let alpha = rs / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        iterations += 1;
        let rs_new = dot(&r, &r);
        residual_norms.push(rs_new.sqrt());
        if rs_new.sqrt() <= opts.tol * b_norm {
            converged = true;
            break;
        }
        let beta = rs_new / rs;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs = rs_new;
    }
    (
        x,
        CgReport {
            converged,
            iterations,
            residual_norms,
        },
    )
}

/// Minimum-norm least-squares solve of the stacked dual-camera system
///
///   x = Φ†y + (I − Φ†Φ) Φ_rᵀ F†(y_r − Φ_r Φ† y),
///
/// with the inner F-system solved matrix-free by conjugate gradients.
/// `rgb = None` drops the correction term and reduces exactly to the
/// SD-CASSI backward model.
pub fn dual_backward(
    model: &SystemModel,
    rgb: Option<(&SpectralResponse, &RgbImage)>,
    y: &CassiMeasurement,
    opts: &CgOptions,
) -> Result<(SpectralCube, CgReport)> {
    if opts.tol <= 0.0 || !opts.tol.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "cg tolerance must be finite and > 0, got {}",
            opts.tol
        )));
    }
    let x0 = model.backward(y)?;
    let (a, y_r) = match rgb {
        Some(pair) => pair,
        None => {
            return Ok((
                x0,
                CgReport {
                    converged: true,
                    iterations: 0,
                    residual_norms: vec![0.0],
                },
            ))
        }
    };
    let (h, w, _) = model.dims();
    if y_r.dims() != (h, w, a.channels()) {
        return Err(Error::dims(
            "dual_backward rgb image",
            format!("{:?}", (h, w, a.channels())),
            format!("{:?}", y_r.dims()),
        ));
    }
    check_bands(a, &x0, "dual_backward")?;

    // Projection onto null(Φ): v ↦ v − Φ†Φ v.
    let null_project = |v: &SpectralCube| -> Result<SpectralCube> {
        let back = model.backward(&model.forward(v)?)?;
        v.sub(&back)
    };

    let predicted = rgb_forward(a, &x0)?;
    let rhs: Vec<f64> = y_r
        .as_slice()
        .iter()
        .zip(predicted.as_slice())
        .map(|(a, b)| a - b)
        .collect();

    let apply_f = |r: &[f64]| -> Vec<f64> {
        let img = RgbImage::from_parts(h, w, a.channels(), r.to_vec());
        let lifted = rgb_adjoint(a, &img).expect("validated dims");
        let projected = null_project(&lifted).expect("validated dims");
        rgb_forward(a, &projected).expect("validated dims").into_vec()
    };

    let (r_hat, report) = cgls(apply_f, &rhs, opts);
    let img = RgbImage::from_parts(h, w, a.channels(), r_hat);
    let correction = null_project(&rgb_adjoint(a, &img)?)?;
    Ok((x0.add(&correction)?, report))
}

impl RgbImage {
    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_response() -> SpectralResponse {
        SpectralResponse::new(1, 4, vec![1.0; 4]).unwrap()
    }

    #[test]
    fn flat_projection_of_constant_cube() {
        let a = flat_response();
        let x = SpectralCube::from_fn(2, 2, 4, |_, _, _| 0.5);
        let img = rgb_forward(&a, &x).unwrap();
        assert!(img.as_slice().iter().all(|&v| (v - 2.0).abs() < 1e-15));
    }

    #[test]
    fn projection_of_zero_is_zero() {
        let a = SpectralResponse::new(3, 2, vec![1.0, 0.0, 0.5, 0.5, 0.0, 1.0]).unwrap();
        let img = rgb_forward(&a, &SpectralCube::zeros(2, 2, 2)).unwrap();
        assert!(img.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn csv_parsing_roundtrip() {
        let a = SpectralResponse::from_csv_str("1.0, 0.5, 0.0\n0.0, 1.0, 0.0\n0.0, 0.5, 1.0\n")
            .unwrap();
        assert_eq!(a.channels(), 3);
        assert_eq!(a.bands(), 3);
        assert_eq!(a.get(0, 1), 0.5);
        assert!(SpectralResponse::from_csv_str("1.0, -2.0\n").is_err());
        assert!(SpectralResponse::from_csv_str("").is_err());
    }

    #[test]
    fn bayer_layouts() {
        assert_eq!(BayerPattern::Rggb.channel_at(0, 0), 0);
        assert_eq!(BayerPattern::Rggb.channel_at(0, 1), 1);
        assert_eq!(BayerPattern::Rggb.channel_at(1, 0), 1);
        assert_eq!(BayerPattern::Rggb.channel_at(1, 1), 2);
        assert_eq!(BayerPattern::Bggr.channel_at(0, 0), 2);
        assert_eq!(BayerPattern::Grbg.channel_at(0, 1), 0);
    }

    #[test]
    fn mosaic_selects_pattern_channels() {
        let a = SpectralResponse::new(3, 3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0])
            .unwrap();
        let x = SpectralCube::from_fn(2, 2, 3, |_, _, b| (b + 1) as f64);
        let raw = mosaic_simulate(&a, &x, BayerPattern::Rggb, 0.0, 0).unwrap();
        // R projection = 1, G = 2, B = 3 everywhere.
        assert_eq!(raw.get(0, 0, 0), 1.0);
        assert_eq!(raw.get(0, 1, 0), 2.0);
        assert_eq!(raw.get(1, 0, 0), 2.0);
        assert_eq!(raw.get(1, 1, 0), 3.0);
    }

    #[test]
    fn mosaic_rejects_odd_dims() {
        let a = SpectralResponse::new(3, 2, vec![1.0, 0.0, 0.5, 0.5, 0.0, 1.0]).unwrap();
        let x = SpectralCube::zeros(3, 2, 2);
        assert!(mosaic_simulate(&a, &x, BayerPattern::Rggb, 0.0, 0).is_err());
    }

    #[test]
    fn mosaic_is_deterministic() {
        let a = SpectralResponse::new(3, 2, vec![1.0, 0.0, 0.5, 0.5, 0.0, 1.0]).unwrap();
        let x = SpectralCube::from_fn(4, 4, 2, |m, n, b| (m * n + b) as f64);
        let r1 = mosaic_simulate(&a, &x, BayerPattern::Rggb, 0.1, 9).unwrap();
        let r2 = mosaic_simulate(&a, &x, BayerPattern::Rggb, 0.1, 9).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn demosaic_constant_raw_is_constant() {
        let raw = RgbImage::from_vec(4, 4, 1, vec![2.5; 16]).unwrap();
        let rgb = demosaic_bilinear(&raw, BayerPattern::Rggb).unwrap();
        assert!(rgb.as_slice().iter().all(|&v| (v - 2.5).abs() < 1e-15));
    }

    #[test]
    fn demosaic_preserves_sampled_sites() {
        let raw = RgbImage::from_vec(4, 4, 1, (0..16).map(|i| i as f64).collect()).unwrap();
        let rgb = demosaic_bilinear(&raw, BayerPattern::Rggb).unwrap();
        for m in 0..4 {
            for n in 0..4 {
                let c = BayerPattern::Rggb.channel_at(m, n);
                assert_eq!(rgb.get(m, n, c), raw.get(m, n, 0));
            }
        }
    }

    #[test]
    fn demosaic_roundtrip_constant_channels_is_exact() {
        // Scene whose projection has spatially constant channels.
        let a = SpectralResponse::new(3, 3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0])
            .unwrap();
        let x = SpectralCube::from_fn(6, 6, 3, |_, _, b| (b + 1) as f64 * 0.25);
        let raw = mosaic_simulate(&a, &x, BayerPattern::Gbrg, 0.0, 0).unwrap();
        let rgb = demosaic_bilinear(&raw, BayerPattern::Gbrg).unwrap();
        let expected = rgb_forward(&a, &x).unwrap();
        for (got, want) in rgb.as_slice().iter().zip(expected.as_slice()) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn demosaic_is_exact_on_interior_of_affine_image() {
        let (h, w) = (8, 8);
        let affine = |m: usize, n: usize| 1.0 + 0.5 * m as f64 + 0.25 * n as f64;
        let mut raw = RgbImage::zeros(h, w, 1);
        for m in 0..h {
            for n in 0..w {
                raw.channel_mut(0)[m * w + n] = affine(m, n);
            }
        }
        let rgb = demosaic_bilinear(&raw, BayerPattern::Rggb).unwrap();
        for c in 0..3 {
            for m in 1..h - 1 {
                for n in 1..w - 1 {
                    assert!(
                        (rgb.get(m, n, c) - affine(m, n)).abs() < 1e-12,
                        "channel {c} at ({m},{n})"
                    );
                }
            }
        }
    }
}
