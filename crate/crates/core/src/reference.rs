//! Adaptive reference-image generation from the RGB branch and the low-rank
//! subspace update applied between reconstruction stages.
//!
//! The initial reference lifts the RGB frame to L bands (linear channel
//! interpolation, or response pseudo-inverse when the response is known),
//! then scales each band by the energy-match solution β of
//! argmin_β ‖y − Φ·blkdiag({x_{r,l}})·β‖². Between stages the reference is
//! refreshed by projecting the current estimate's spectral unfolding onto
//! the right-singular subspace of the RGB unfolding.

use crate::cassi::{CassiMeasurement, SystemModel};
use crate::error::{Error, Result};
use crate::linalg::{solve_dense, symmetric_eigen};
use crate::rgb::{rgb_adjoint, RgbImage, SpectralResponse};
use crate::tensor::SpectralCube;
use crate::tv::{dual_field, DualGradientField};

/// Orthonormal spatial basis spanned by the RGB channel images: the right
/// singular vectors of the C×HW unfolding, stored as `rank` columns of
/// length HW.
#[derive(Debug, Clone)]
pub struct SpatialBasis {
    hw: usize,
    columns: Vec<Vec<f64>>,
}

impl SpatialBasis {
    /// Economy SVD of the C×HW unfolding via the C×C Gram; singular
    /// directions below `RANK_TOL` of the largest are dropped.
    pub fn from_rgb(y_r: &RgbImage) -> Result<Self> {
        const RANK_TOL: f64 = 1e-12;
        let (h, w, c) = y_r.dims();
        let hw = h * w;
        let mut gram = vec![0.0; c * c];
        for i in 0..c {
            for j in i..c {
                let dot: f64 = y_r
                    .channel(i)
                    .iter()
                    .zip(y_r.channel(j))
                    .map(|(a, b)| a * b)
                    .sum();
                gram[i * c + j] = dot;
                gram[j * c + i] = dot;
            }
        }
        let (vals, vecs) = symmetric_eigen(gram, c);
        let max_val = vals.first().copied().unwrap_or(0.0).max(0.0);
        if max_val == 0.0 {
            return Err(Error::InvalidParameter(
                "RGB image is identically zero; no spatial basis exists".into(),
            ));
        }
        let mut columns = Vec::new();
        for (k, &val) in vals.iter().enumerate() {
            if val <= RANK_TOL * max_val {
                break;
            }
            let sigma = val.sqrt();
            let u = &vecs[k * c..(k + 1) * c];
            let mut col = vec![0.0; hw];
            for (ci, &weight) in u.iter().enumerate() {
                if weight == 0.0 {
                    continue;
                }
                for (o, v) in col.iter_mut().zip(y_r.channel(ci)) {
                    *o += weight * v;
                }
            }
            for v in &mut col {
                *v /= sigma;
            }
            columns.push(col);
        }
        Ok(Self { hw, columns })
    }

    pub fn rank(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.columns[k]
    }

    /// Largest deviation of VᵀV from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let r = self.columns.len();
        let mut defect: f64 = 0.0;
        for i in 0..r {
            for j in 0..r {
                let dot: f64 = self.columns[i]
                    .iter()
                    .zip(&self.columns[j])
                    .map(|(a, b)| a * b)
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((dot - target).abs());
            }
        }
        defect
    }

    /// Projects every band of the cube onto span(V): X_(3) V Vᵀ.
    pub fn project(&self, x: &SpectralCube) -> Result<SpectralCube> {
        let (h, w, l) = x.dims();
        if h * w != self.hw {
            return Err(Error::dims(
                "SpatialBasis::project",
                format!("{} pixels", self.hw),
                format!("{}", h * w),
            ));
        }
        let mut out = SpectralCube::zeros(h, w, l);
        for band in 0..l {
            let src = x.band(band);
            let dst = out.band_mut(band);
            for col in &self.columns {
                let coeff: f64 = src.iter().zip(col).map(|(a, b)| a * b).sum();
                for (o, v) in dst.iter_mut().zip(col) {
                    *o += coeff * v;
                }
            }
        }
        Ok(out)
    }
}

/// Reference image, its dual field, and the spatial basis used by the
/// between-stage subspace refresh. `p_ref = dual_field(x_ref)` holds by
/// construction at all times.
#[derive(Debug, Clone)]
pub struct ReferenceBundle {
    x_ref: SpectralCube,
    p_ref: DualGradientField,
    basis: Option<SpatialBasis>,
}

impl ReferenceBundle {
    pub fn from_cube(x_ref: SpectralCube) -> Self {
        let p_ref = dual_field(&x_ref);
        Self {
            x_ref,
            p_ref,
            basis: None,
        }
    }

    pub fn x_ref(&self) -> &SpectralCube {
        &self.x_ref
    }

    pub fn p_ref(&self) -> &DualGradientField {
        &self.p_ref
    }

    pub fn basis(&self) -> Option<&SpatialBasis> {
        self.basis.as_ref()
    }
}

/// Lifts an RGB/panchromatic frame to L bands by linear interpolation of the
/// channel values across wavelength. A single channel replicates; three
/// channels sit at band nodes {1, ⌈L/2⌉, L} (1-based) in channel order, and
/// every band is a convex combination of the two bracketing channels.
pub fn interpolate_rgb_to_cube(y_r: &RgbImage, bands: usize) -> SpectralCube {
    assert!(bands >= 1, "band count must be at least 1");
    let (h, w, c) = y_r.dims();
    if c == 1 {
        let mut data = Vec::with_capacity(h * w * bands);
        for _ in 0..bands {
            data.extend_from_slice(y_r.channel(0));
        }
        return SpectralCube::from_parts(h, w, bands, data);
    }
    // 0-based interpolation nodes for the three channels.
    let nodes = [0.0, (bands.div_ceil(2) - 1) as f64, (bands - 1) as f64];
    let mut out = SpectralCube::zeros(h, w, bands);
    for band in 0..bands {
        let pos = band as f64;
        // Locate the bracketing node pair; clamp outside the node range.
        let (left, right, t) = if pos <= nodes[0] {
            (0, 0, 0.0)
        } else if pos >= nodes[2] {
            (2, 2, 0.0)
        } else if pos <= nodes[1] {
            let span = nodes[1] - nodes[0];
            (0, 1, if span > 0.0 { (pos - nodes[0]) / span } else { 0.0 })
        } else {
            let span = nodes[2] - nodes[1];
            (1, 2, if span > 0.0 { (pos - nodes[1]) / span } else { 0.0 })
        };
        let dst = out.band_mut(band);
        let a = y_r.channel(left);
        let b = y_r.channel(right);
        for i in 0..h * w {
            dst[i] = (1.0 - t) * a[i] + t * b[i];
        }
    }
    out
}

/// Response-based lift X_(3) = A† (Y_r)_(3): the minimum-norm spectra
/// reproducing the observed channels. Alternative to interpolation when the
/// response is known.
pub fn lift_with_response(a: &SpectralResponse, y_r: &RgbImage) -> Result<SpectralCube> {
    let c = a.channels();
    if y_r.channels() != c {
        return Err(Error::dims(
            "lift_with_response",
            format!("{c} channels"),
            format!("{}", y_r.channels()),
        ));
    }
    // A† = Aᵀ (A Aᵀ)⁻¹ for full row rank A.
    let l = a.bands();
    let mut gram = vec![0.0; c * c];
    for i in 0..c {
        for j in 0..c {
            gram[i * c + j] = (0..l).map(|k| a.get(i, k) * a.get(j, k)).sum();
        }
    }
    // Solve (A Aᵀ) W = Y_r channel-wise, then lift by Aᵀ.
    let (h, w, _) = y_r.dims();
    let hw = h * w;
    let mut weights = vec![vec![0.0; hw]; c];
    for pix in 0..hw {
        let rhs: Vec<f64> = (0..c).map(|ci| y_r.channel(ci)[pix]).collect();
        let sol = solve_dense(gram.clone(), rhs, c, "lift_with_response")?;
        for (channel_weights, v) in weights.iter_mut().zip(sol) {
            channel_weights[pix] = v;
        }
    }
    let mut out = SpectralCube::zeros(h, w, l);
    for band in 0..l {
        let dst = out.band_mut(band);
        for (ci, channel_weights) in weights.iter().enumerate() {
            let coeff_row = a.get(ci, band);
            if coeff_row == 0.0 {
                continue;
            }
            for (o, v) in dst.iter_mut().zip(channel_weights) {
                *o += coeff_row * v;
            }
        }
    }
    Ok(out)
}

/// Least-squares band scales β for the energy-match problem. Column l of
/// Φ_B is the forward projection of band l of `x_r` alone; the L×L normal
/// system is materialized and solved densely.
pub fn estimate_beta(
    model: &SystemModel,
    y: &CassiMeasurement,
    x_r: &SpectralCube,
) -> Result<Vec<f64>> {
    let (h, w, l) = model.dims();
    if x_r.dims() != (h, w, l) {
        return Err(Error::dims(
            "estimate_beta",
            format!("{:?}", (h, w, l)),
            format!("{:?}", x_r.dims()),
        ));
    }
    let expected = (h, model.measurement_width());
    if y.dims() != expected {
        return Err(Error::dims(
            "estimate_beta",
            format!("{:?}", expected),
            format!("{:?}", y.dims()),
        ));
    }
    // Φ_B columns as full measurement planes.
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(l);
    for band in 0..l {
        let mut single = SpectralCube::zeros(h, w, l);
        single.band_mut(band).copy_from_slice(x_r.band(band));
        columns.push(model.forward(&single)?.plane().as_slice().to_vec());
    }
    let mut normal = vec![0.0; l * l];
    let mut rhs = vec![0.0; l];
    for i in 0..l {
        for j in i..l {
            // Bands overlap on the detector only within s·(L−1) columns, but
            // the straightforward dot product is cheap at these sizes.
            let dot: f64 = columns[i]
                .iter()
                .zip(&columns[j])
                .map(|(a, b)| a * b)
                .sum();
            normal[i * l + j] = dot;
            normal[j * l + i] = dot;
        }
        rhs[i] = columns[i]
            .iter()
            .zip(y.plane().as_slice())
            .map(|(a, b)| a * b)
            .sum();
    }
    solve_dense(normal, rhs, l, "estimate_beta").map_err(|e| match e {
        Error::Singular { detail, .. } => Error::Singular {
            context: "estimate_beta",
            detail: format!(
                "energy-match normal matrix is rank deficient ({detail}); \
                 provide a reference with nonzero content in every band or regularize"
            ),
        },
        other => other,
    })
}

/// Scales band l of `x_r` by β_l.
pub fn apply_band_scales(x_r: &SpectralCube, beta: &[f64]) -> Result<SpectralCube> {
    let (_, _, l) = x_r.dims();
    if beta.len() != l {
        return Err(Error::dims(
            "apply_band_scales",
            format!("{l} scales"),
            format!("{}", beta.len()),
        ));
    }
    let mut out = x_r.clone();
    for (band, &scale) in beta.iter().enumerate() {
        for v in out.band_mut(band) {
            *v *= scale;
        }
    }
    Ok(out)
}

/// How the RGB frame is lifted to L bands before energy matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LiftMode {
    /// Linear interpolation of channel values across wavelength.
    #[default]
    Interpolate,
    /// Minimum-norm lift through the known spectral response.
    ResponsePinv,
}

/// Generates the initial reference bundle: lift, energy-match scaling, dual
/// field, and the spatial basis for later subspace refreshes.
pub fn generate_reference(
    model: &SystemModel,
    y: &CassiMeasurement,
    y_r: &RgbImage,
    response: Option<&SpectralResponse>,
    lift: LiftMode,
) -> Result<ReferenceBundle> {
    let (_, _, l) = model.dims();
    let x_r = match (lift, response) {
        (LiftMode::ResponsePinv, Some(a)) => lift_with_response(a, y_r)?,
        (LiftMode::ResponsePinv, None) => {
            return Err(Error::InvalidParameter(
                "response pseudo-inverse lift requires a spectral response".into(),
            ))
        }
        (LiftMode::Interpolate, _) => interpolate_rgb_to_cube(y_r, l),
    };
    let beta = estimate_beta(model, y, &x_r)?;
    let x_ref = apply_band_scales(&x_r, &beta)?;
    let p_ref = dual_field(&x_ref);
    let basis = SpatialBasis::from_rgb(y_r)?;
    Ok(ReferenceBundle {
        x_ref,
        p_ref,
        basis: Some(basis),
    })
}

/// Subspace refresh: replaces the reference by the projection of the current
/// estimate onto the RGB spatial basis and recomputes the dual field.
pub fn lrds_update(bundle: &ReferenceBundle, x_current: &SpectralCube) -> Result<ReferenceBundle> {
    let basis = bundle.basis.as_ref().ok_or_else(|| {
        Error::InvalidParameter("reference bundle has no spatial basis for the subspace update".into())
    })?;
    let x_ref = basis.project(x_current)?;
    let p_ref = dual_field(&x_ref);
    Ok(ReferenceBundle {
        x_ref,
        p_ref,
        basis: bundle.basis.clone(),
    })
}

// Keeps the adjoint lift reachable for panchromatic sanity checks in tests.
#[allow(unused)]
pub(crate) fn adjoint_lift(a: &SpectralResponse, y_r: &RgbImage) -> Result<SpectralCube> {
    rgb_adjoint(a, y_r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panchromatic_interpolation_replicates() {
        let img = RgbImage::from_vec(2, 2, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let cube = interpolate_rgb_to_cube(&img, 3);
        for band in 0..3 {
            assert_eq!(cube.band(band), img.channel(0));
        }
    }

    #[test]
    fn rgb_interpolation_hits_channels_at_nodes() {
        let mut img = RgbImage::zeros(2, 2, 3);
        for c in 0..3 {
            img.channel_mut(c).fill((c + 1) as f64);
        }
        let cube = interpolate_rgb_to_cube(&img, 3);
        for band in 0..3 {
            assert!(cube.band(band).iter().all(|&v| v == (band + 1) as f64));
        }
    }

    #[test]
    fn interpolation_is_a_convex_combination() {
        let mut img = RgbImage::zeros(3, 3, 3);
        for c in 0..3 {
            for (i, v) in img.channel_mut(c).iter_mut().enumerate() {
                *v = (c * 10 + i) as f64;
            }
        }
        let cube = interpolate_rgb_to_cube(&img, 7);
        for band in 0..7 {
            for pix in 0..9 {
                let vals: Vec<f64> = (0..3).map(|c| img.channel(c)[pix]).collect();
                let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let v = cube.band(band)[pix];
                assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn band_scales_apply_per_band() {
        let x = SpectralCube::from_fn(1, 2, 2, |_, n, _| (n + 1) as f64);
        let scaled = apply_band_scales(&x, &[2.0, 10.0]).unwrap();
        assert_eq!(scaled.band(0), &[2.0, 4.0]);
        assert_eq!(scaled.band(1), &[10.0, 20.0]);
        assert!(apply_band_scales(&x, &[1.0]).is_err());
    }

    #[test]
    fn basis_is_orthonormal_and_projection_idempotent() {
        let mut img = RgbImage::zeros(3, 3, 3);
        for c in 0..3 {
            for (i, v) in img.channel_mut(c).iter_mut().enumerate() {
                *v = ((i + 1) * (c + 2)) as f64 + if c == 1 { 0.5 * i as f64 } else { 0.0 };
            }
        }
        let basis = SpatialBasis::from_rgb(&img).unwrap();
        assert!(basis.orthonormality_defect() <= 1e-10);

        let x = SpectralCube::from_fn(3, 3, 4, |m, n, b| ((m * 3 + n) as f64).sin() + b as f64);
        let once = basis.project(&x).unwrap();
        let twice = basis.project(&once).unwrap();
        let diff = once.sub(&twice).unwrap().norm();
        assert!(diff <= 1e-10 * once.norm().max(1.0));
        assert!(once.norm() <= x.norm() + 1e-12);
    }

    #[test]
    fn lrds_requires_basis() {
        let bundle = ReferenceBundle::from_cube(SpectralCube::zeros(2, 2, 2));
        assert!(lrds_update(&bundle, &SpectralCube::zeros(2, 2, 2)).is_err());
    }
}
