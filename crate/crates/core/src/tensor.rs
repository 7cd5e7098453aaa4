//! Dense 3-D tensor arithmetic, the shear transformation pair, and safe
//! element-wise division.
//!
//! Index convention: mathematical indices are 1-based `(m, n, l)` with
//! `m ∈ 1..=H` (row), `n ∈ 1..=W` (column), `l ∈ 1..=L` (band); storage is
//! 0-based. A cube is stored as `L` contiguous row-major `H×W` planes, so the
//! flat offset of `(m, n, l)` (0-based) is `(l·H + m)·W + n`. Flattening a
//! cube in this layout equals vectorizing its mode-3 unfolding (columns,
//! then rows, then bands), which the measurement-operator identities rely on.

use crate::error::{Error, Result};

/// H×W×L spectral cube. Holds scenes, reconstructions, and every ADMM
/// iterate; entries are finite `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCube {
    h: usize,
    w: usize,
    l: usize,
    data: Vec<f64>,
}

impl SpectralCube {
    pub fn zeros(h: usize, w: usize, l: usize) -> Self {
        assert!(h > 0 && w > 0 && l > 0, "cube dims must be positive");
        Self {
            h,
            w,
            l,
            data: vec![0.0; h * w * l],
        }
    }

    /// Builds a cube from band-major data, validating length and finiteness.
    pub fn from_vec(h: usize, w: usize, l: usize, data: Vec<f64>) -> Result<Self> {
        if h == 0 || w == 0 || l == 0 {
            return Err(Error::InvalidParameter(format!(
                "cube dims must be positive, got {h}x{w}x{l}"
            )));
        }
        if data.len() != h * w * l {
            return Err(Error::dims(
                "SpectralCube::from_vec",
                format!("{} values", h * w * l),
                format!("{}", data.len()),
            ));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("SpectralCube::from_vec"));
        }
        Ok(Self { h, w, l, data })
    }

    /// Internal constructor for values produced by arithmetic on finite
    /// inputs; skips the finiteness scan.
    pub(crate) fn from_parts(h: usize, w: usize, l: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), h * w * l);
        Self { h, w, l, data }
    }

    pub fn from_fn(h: usize, w: usize, l: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(h * w * l);
        for band in 0..l {
            for m in 0..h {
                for n in 0..w {
                    data.push(f(m, n, band));
                }
            }
        }
        Self { h, w, l, data }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.h, self.w, self.l)
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn bands(&self) -> usize {
        self.l
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize, band: usize) -> f64 {
        self.data[(band * self.h + m) * self.w + n]
    }

    #[inline]
    pub fn set(&mut self, m: usize, n: usize, band: usize, v: f64) {
        self.data[(band * self.h + m) * self.w + n] = v;
    }

    /// Contiguous row-major H×W plane of one band.
    pub fn band(&self, band: usize) -> &[f64] {
        let hw = self.h * self.w;
        &self.data[band * hw..(band + 1) * hw]
    }

    pub fn band_mut(&mut self, band: usize) -> &mut [f64] {
        let hw = self.h * self.w;
        &mut self.data[band * hw..(band + 1) * hw]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn same_dims(&self, other: &Self) -> bool {
        self.dims() == other.dims()
    }

    fn check_same_dims(&self, other: &Self, context: &'static str) -> Result<()> {
        if !self.same_dims(other) {
            return Err(Error::dims(
                context,
                format!("{:?}", self.dims()),
                format!("{:?}", other.dims()),
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_dims(other, "SpectralCube::add")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self::from_parts(self.h, self.w, self.l, data))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_dims(other, "SpectralCube::sub")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self::from_parts(self.h, self.w, self.l, data))
    }

    pub fn scale(&self, s: f64) -> Self {
        let data = self.data.iter().map(|a| a * s).collect();
        Self::from_parts(self.h, self.w, self.l, data)
    }

    /// Hadamard product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same_dims(other, "SpectralCube::mul")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .collect();
        Ok(Self::from_parts(self.h, self.w, self.l, data))
    }

    pub fn dot(&self, other: &Self) -> Result<f64> {
        self.check_same_dims(other, "SpectralCube::dot")?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// H×W' real matrix; holds measurements Y, the Gram diagonal Λ, and other
/// plane-shaped quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneMatrix {
    h: usize,
    w: usize,
    data: Vec<f64>,
}

impl PlaneMatrix {
    pub fn zeros(h: usize, w: usize) -> Self {
        assert!(h > 0 && w > 0, "plane dims must be positive");
        Self {
            h,
            w,
            data: vec![0.0; h * w],
        }
    }

    pub fn from_vec(h: usize, w: usize, data: Vec<f64>) -> Result<Self> {
        if h == 0 || w == 0 {
            return Err(Error::InvalidParameter(format!(
                "plane dims must be positive, got {h}x{w}"
            )));
        }
        if data.len() != h * w {
            return Err(Error::dims(
                "PlaneMatrix::from_vec",
                format!("{} values", h * w),
                format!("{}", data.len()),
            ));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("PlaneMatrix::from_vec"));
        }
        Ok(Self { h, w, data })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.h, self.w)
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.w
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.data[m * self.w + n]
    }

    #[inline]
    pub fn set(&mut self, m: usize, n: usize, v: f64) {
        self.data[m * self.w + n] = v;
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.data[m * self.w..(m + 1) * self.w]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Output of the shear transformation: band `l` (1-based) occupies columns
/// `s(l−1)+1 ..= s(l−1)+W` of an H×(W+s(L−1)) plane and is zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct ShearedCube {
    h: usize,
    base_w: usize,
    l: usize,
    shear: usize,
    data: Vec<f64>,
}

impl ShearedCube {
    pub fn zeros(h: usize, base_w: usize, l: usize, shear: usize) -> Self {
        let width = base_w + shear * (l - 1);
        Self {
            h,
            base_w,
            l,
            shear,
            data: vec![0.0; h * width * l],
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.h, self.width(), self.l)
    }

    pub fn base_width(&self) -> usize {
        self.base_w
    }

    /// Sheared width W + s(L−1).
    pub fn width(&self) -> usize {
        self.base_w + self.shear * (self.l - 1)
    }

    pub fn shear_step(&self) -> usize {
        self.shear
    }

    pub fn bands(&self) -> usize {
        self.l
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize, band: usize) -> f64 {
        let width = self.width();
        self.data[(band * self.h + m) * width + n]
    }

    pub fn band(&self, band: usize) -> &[f64] {
        let plane = self.h * self.width();
        &self.data[band * plane..(band + 1) * plane]
    }

    pub fn band_mut(&mut self, band: usize) -> &mut [f64] {
        let plane = self.h * self.width();
        &mut self.data[band * plane..(band + 1) * plane]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Hadamard product of two sheared cubes with identical geometry.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.h != other.h || self.base_w != other.base_w || self.l != other.l || self.shear != other.shear {
            return Err(Error::dims(
                "ShearedCube::mul",
                format!("{:?} shear {}", self.dims(), self.shear),
                format!("{:?} shear {}", other.dims(), other.shear),
            ));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .collect();
        Ok(Self {
            h: self.h,
            base_w: self.base_w,
            l: self.l,
            shear: self.shear,
            data,
        })
    }
}

/// Shear transformation `f_ST`: places band `l` (0-based) at column offset
/// `s·l` of an H×(W+s(L−1)) plane. Pure placement; no arithmetic.
pub fn shear_transform(x: &SpectralCube, shear: usize) -> ShearedCube {
    let (h, w, l) = x.dims();
    let mut out = ShearedCube::zeros(h, w, l, shear);
    let width = out.width();
    for band in 0..l {
        let offset = shear * band;
        let src = x.band(band);
        let dst = out.band_mut(band);
        for m in 0..h {
            let src_row = &src[m * w..(m + 1) * w];
            let dst_row = &mut dst[m * width + offset..m * width + offset + w];
            dst_row.copy_from_slice(src_row);
        }
    }
    out
}

/// Pseudo-inverse of the shear: crops band `l` back to columns
/// `s·l .. s·l+W` (0-based). `shear` must match the cube's construction step
/// so the declared base width is recovered.
pub fn inverse_shear(x: &ShearedCube, shear: usize) -> Result<SpectralCube> {
    if shear != x.shear_step() {
        return Err(Error::dims(
            "inverse_shear",
            format!("shear step {}", x.shear_step()),
            format!("{shear}"),
        ));
    }
    let (h, width, l) = x.dims();
    let w = x.base_width();
    debug_assert_eq!(width, w + shear * (l - 1));
    let mut out = SpectralCube::zeros(h, w, l);
    for band in 0..l {
        let offset = shear * band;
        let src = x.band(band);
        let dst = out.band_mut(band);
        for m in 0..h {
            let src_row = &src[m * width + offset..m * width + offset + w];
            dst[m * w..(m + 1) * w].copy_from_slice(src_row);
        }
    }
    Ok(out)
}

pub(crate) fn safe_divide_slices(num: &[f64], den: &[f64], out: &mut [f64]) {
    for ((o, a), b) in out.iter_mut().zip(num).zip(den) {
        *o = if *b != 0.0 { a / b } else { 0.0 };
    }
}

/// Element-wise division that yields exactly zero wherever the denominator
/// is zero.
pub fn safe_divide(num: &SpectralCube, den: &SpectralCube) -> Result<SpectralCube> {
    if !num.same_dims(den) {
        return Err(Error::dims(
            "safe_divide",
            format!("{:?}", num.dims()),
            format!("{:?}", den.dims()),
        ));
    }
    let mut out = SpectralCube::zeros(num.h, num.w, num.l);
    safe_divide_slices(num.as_slice(), den.as_slice(), out.as_mut_slice());
    Ok(out)
}

/// Plane-shaped counterpart of [`safe_divide`].
pub fn safe_divide_plane(num: &PlaneMatrix, den: &PlaneMatrix) -> Result<PlaneMatrix> {
    if num.dims() != den.dims() {
        return Err(Error::dims(
            "safe_divide_plane",
            format!("{:?}", num.dims()),
            format!("{:?}", den.dims()),
        ));
    }
    let mut out = PlaneMatrix::zeros(num.h, num.w);
    safe_divide_slices(num.as_slice(), den.as_slice(), out.as_mut_slice());
    Ok(out)
}

/// L-times repeat of a plane along the band dimension.
pub fn repeat_along_bands(y: &PlaneMatrix, bands: usize) -> SpectralCube {
    assert!(bands >= 1, "band count must be at least 1");
    let (h, w) = y.dims();
    let mut data = Vec::with_capacity(h * w * bands);
    for _ in 0..bands {
        data.extend_from_slice(y.as_slice());
    }
    SpectralCube::from_parts(h, w, bands, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube_1x2x2() -> SpectralCube {
        // band 1 = [[1,2]], band 2 = [[3,4]]
        SpectralCube::from_vec(1, 2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    #[test]
    fn zero_shear_is_identity() {
        let x = cube_1x2x2();
        let sheared = shear_transform(&x, 0);
        assert_eq!(sheared.dims(), (1, 2, 2));
        assert_eq!(sheared.as_slice(), x.as_slice());
    }

    #[test]
    fn shear_places_bands_at_offsets() {
        let x = cube_1x2x2();
        let sheared = shear_transform(&x, 1);
        assert_eq!(sheared.dims(), (1, 3, 2));
        assert_eq!(sheared.band(0), &[1.0, 2.0, 0.0]);
        assert_eq!(sheared.band(1), &[0.0, 3.0, 4.0]);
    }

    #[test]
    fn inverse_shear_crops_back() {
        let x = cube_1x2x2();
        let recovered = inverse_shear(&shear_transform(&x, 1), 1).unwrap();
        assert_eq!(recovered, x);
    }

    #[test]
    fn inverse_shear_rejects_wrong_step() {
        let x = cube_1x2x2();
        let sheared = shear_transform(&x, 1);
        assert!(inverse_shear(&sheared, 2).is_err());
    }

    #[test]
    fn safe_divide_ordinary_and_zero() {
        let num = SpectralCube::from_vec(1, 2, 1, vec![2.0, 4.0]).unwrap();
        let den = SpectralCube::from_vec(1, 2, 1, vec![1.0, 2.0]).unwrap();
        assert_eq!(safe_divide(&num, &den).unwrap().as_slice(), &[2.0, 2.0]);

        let num = SpectralCube::from_vec(1, 2, 1, vec![5.0, 3.0]).unwrap();
        let den = SpectralCube::from_vec(1, 2, 1, vec![0.0, 1.0]).unwrap();
        assert_eq!(safe_divide(&num, &den).unwrap().as_slice(), &[0.0, 3.0]);
    }

    #[test]
    fn safe_divide_rejects_shape_mismatch() {
        let a = SpectralCube::zeros(1, 2, 1);
        let b = SpectralCube::zeros(2, 1, 1);
        assert!(safe_divide(&a, &b).is_err());
    }

    #[test]
    fn repeat_along_bands_replicates() {
        let y = PlaneMatrix::from_vec(1, 1, vec![7.5]).unwrap();
        let one = repeat_along_bands(&y, 1);
        assert_eq!(one.as_slice(), &[7.5]);

        let three = repeat_along_bands(&y, 3);
        assert_eq!(three.as_slice(), &[7.5, 7.5, 7.5]);

        // sum over bands equals L·y
        let sum: f64 = (0..3).map(|b| three.get(0, 0, b)).sum();
        assert_eq!(sum, 3.0 * 7.5);
    }

    #[test]
    fn from_vec_rejects_non_finite() {
        assert!(SpectralCube::from_vec(1, 1, 1, vec![f64::NAN]).is_err());
        assert!(PlaneMatrix::from_vec(1, 1, vec![f64::INFINITY]).is_err());
    }
}
