//! SD-CASSI discrete forward model and its closed-form backward model.
//!
//! The sensing operator Φ is never materialized: the forward pass shears the
//! masked cube and sums bands, the backward pass exploits the diagonal Gram
//! matrix ΦΦᵀ = diag(λ) whose plane form Λ is accumulated in O(HWL) as
//! Λ = Σ_l f_ST(T ⊙ T)_{:,:,l}.

use crate::error::{Error, Result};
use crate::tensor::{safe_divide_plane, shear_transform, PlaneMatrix, ShearedCube, SpectralCube};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Equivalent discrete system transmittance (coded aperture × split ratio ×
/// detector response), entries in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct TransmittanceTensor(SpectralCube);

impl TransmittanceTensor {
    pub fn new(cube: SpectralCube) -> Result<Self> {
        if !cube.as_slice().iter().all(|&v| (0.0..=1.0).contains(&v)) {
            return Err(Error::InvalidParameter(
                "transmittance entries must lie in [0, 1]".into(),
            ));
        }
        Ok(Self(cube))
    }

    pub fn cube(&self) -> &SpectralCube {
        &self.0
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.0.dims()
    }
}

/// One SD-CASSI detector frame, H×(W+s(L−1)).
#[derive(Debug, Clone, PartialEq)]
pub struct CassiMeasurement(pub PlaneMatrix);

impl CassiMeasurement {
    pub fn plane(&self) -> &PlaneMatrix {
        &self.0
    }

    pub fn dims(&self) -> (usize, usize) {
        self.0.dims()
    }
}

/// Immutable bundle of transmittance, shear step, and the precomputed Gram
/// diagonal Λ; the object every solver consumes.
#[derive(Debug, Clone)]
pub struct SystemModel {
    t: TransmittanceTensor,
    shear: usize,
    lambda: PlaneMatrix,
    /// f_ST(T), kept for the two-stage backward route.
    sheared_t: ShearedCube,
    dims: (usize, usize, usize),
}

impl SystemModel {
    /// Builds the model and accumulates Λ = Σ_l f_ST(T ⊙ T)_{:,:,l} without
    /// materializing the shear.
    pub fn build(t: TransmittanceTensor, shear: usize) -> Self {
        let (h, w, l) = t.dims();
        let wide = w + shear * (l - 1);
        let mut lambda = PlaneMatrix::zeros(h, wide);
        for band in 0..l {
            let offset = shear * band;
            let plane = t.cube().band(band);
            let out = lambda.as_mut_slice();
            for m in 0..h {
                for n in 0..w {
                    let v = plane[m * w + n];
                    out[m * wide + offset + n] += v * v;
                }
            }
        }
        let sheared_t = shear_transform(t.cube(), shear);
        Self {
            t,
            shear,
            lambda,
            sheared_t,
            dims: (h, w, l),
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn shear_step(&self) -> usize {
        self.shear
    }

    pub fn transmittance(&self) -> &TransmittanceTensor {
        &self.t
    }

    pub fn lambda(&self) -> &PlaneMatrix {
        &self.lambda
    }

    /// Width of the detector plane, W + s(L−1).
    pub fn measurement_width(&self) -> usize {
        self.dims.1 + self.shear * (self.dims.2 - 1)
    }

    fn check_cube(&self, x: &SpectralCube, context: &'static str) -> Result<()> {
        if x.dims() != self.dims {
            return Err(Error::dims(
                context,
                format!("{:?}", self.dims),
                format!("{:?}", x.dims()),
            ));
        }
        Ok(())
    }

    fn check_measurement(&self, y: &CassiMeasurement, context: &'static str) -> Result<()> {
        let expected = (self.dims.0, self.measurement_width());
        if y.dims() != expected {
            return Err(Error::dims(
                context,
                format!("{:?}", expected),
                format!("{:?}", y.dims()),
            ));
        }
        Ok(())
    }

    /// Forward model Y = Σ_l f_ST(X ⊙ T)_{:,:,l}; deterministic, noise-free.
    pub fn forward(&self, x: &SpectralCube) -> Result<CassiMeasurement> {
        self.check_cube(x, "SystemModel::forward")?;
        let (h, w, l) = self.dims;
        let wide = self.measurement_width();
        let mut y = PlaneMatrix::zeros(h, wide);
        for band in 0..l {
            let offset = self.shear * band;
            let xb = x.band(band);
            let tb = self.t.cube().band(band);
            let out = y.as_mut_slice();
            for m in 0..h {
                let xrow = &xb[m * w..(m + 1) * w];
                let trow = &tb[m * w..(m + 1) * w];
                let orow = &mut out[m * wide + offset..m * wide + offset + w];
                for n in 0..w {
                    orow[n] += xrow[n] * trow[n];
                }
            }
        }
        Ok(CassiMeasurement(y))
    }

    /// Adjoint Φᵀy = T ⊙ f_ST†(y ↑_L), implemented as per-band window crops.
    pub fn adjoint(&self, y: &CassiMeasurement) -> Result<SpectralCube> {
        self.check_measurement(y, "SystemModel::adjoint")?;
        Ok(self.crop_scale(y.plane()))
    }

    /// Minimum-norm least-squares estimate Φ†y = T ⊙ f_ST†((Y ⊘ Λ) ↑_L).
    pub fn backward(&self, y: &CassiMeasurement) -> Result<SpectralCube> {
        self.check_measurement(y, "SystemModel::backward")?;
        let scaled = safe_divide_plane(y.plane(), &self.lambda)?;
        Ok(self.crop_scale(&scaled))
    }

    /// T ⊙ f_ST†(plane ↑_L) without materializing the band repeat.
    pub(crate) fn crop_scale(&self, plane: &PlaneMatrix) -> SpectralCube {
        let (h, w, l) = self.dims;
        let wide = plane.width();
        let mut out = SpectralCube::zeros(h, w, l);
        for band in 0..l {
            let offset = self.shear * band;
            let tb = self.t.cube().band(band);
            let ob = out.band_mut(band);
            let src = plane.as_slice();
            for m in 0..h {
                let srow = &src[m * wide + offset..m * wide + offset + w];
                let trow = &tb[m * w..(m + 1) * w];
                let orow = &mut ob[m * w..(m + 1) * w];
                for n in 0..w {
                    orow[n] = trow[n] * srow[n];
                }
            }
        }
        out
    }

    /// Two-stage backward model X̂ = f_ST†(T′ ⊙ (Y ⊘ Λ) ↑_L) with the shifted
    /// transmittance T′ = f_ST(T). Mathematically identical to [`backward`]
    /// but the Hadamard product runs on the full sheared width; kept as the
    /// reference route for the equivalence check and the runtime comparison.
    pub fn two_stage_backward(&self, y: &CassiMeasurement) -> Result<SpectralCube> {
        self.check_measurement(y, "SystemModel::two_stage_backward")?;
        let (h, w, l) = self.dims;
        let wide = self.measurement_width();
        let scaled = safe_divide_plane(y.plane(), &self.lambda)?;
        let mut wide_band = vec![0.0; h * wide];
        let mut out = SpectralCube::zeros(h, w, l);
        for band in 0..l {
            let tp = self.sheared_t.band(band);
            let sp = scaled.as_slice();
            for (o, (a, b)) in wide_band.iter_mut().zip(tp.iter().zip(sp)) {
                *o = a * b;
            }
            let offset = self.shear * band;
            let ob = out.band_mut(band);
            for m in 0..h {
                ob[m * w..(m + 1) * w]
                    .copy_from_slice(&wide_band[m * wide + offset..m * wide + offset + w]);
            }
        }
        Ok(out)
    }

    /// Forward model plus i.i.d. Gaussian detector noise, deterministic per
    /// seed.
    pub fn simulate(
        &self,
        x: &SpectralCube,
        noise_sigma: f64,
        seed: u64,
    ) -> Result<CassiMeasurement> {
        if noise_sigma < 0.0 || !noise_sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise sigma must be finite and >= 0, got {noise_sigma}"
            )));
        }
        let mut y = self.forward(x)?;
        if noise_sigma > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let normal = Normal::new(0.0, noise_sigma).expect("valid sigma");
            for v in y.0.as_mut_slice() {
                *v += normal.sample(&mut rng);
            }
        }
        Ok(y)
    }
}
