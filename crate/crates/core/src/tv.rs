//! Discrete total-variation machinery: forward-difference gradients under
//! Neumann boundary conditions, the matching divergence, the normalized dual
//! field whose negative divergence is a TV subgradient, and the TV / TVDS
//! functional values.
//!
//! Component 0 differences along rows (m), component 1 along columns (n);
//! the gradient is zero on the last row / last column, and the divergence
//! treats out-of-range neighbours as zero. With those conventions
//! ⟨∇x, p⟩ = −⟨x, div p⟩ for every field whose boundary entries are zero.

use crate::error::{Error, Result};
use crate::tensor::SpectralCube;

/// 2×H×W×L field indexed (direction, m, n, l). Direction 0 is the row
/// difference, direction 1 the column difference. Fields produced by
/// [`dual_field`] and by the fixed-point updates additionally satisfy the
/// per-pixel norm bound ‖p_{:,m,n,l}‖ ≤ 1 and vanish on the Neumann
/// boundary (last row for direction 0, last column for direction 1).
#[derive(Debug, Clone, PartialEq)]
pub struct DualGradientField {
    h: usize,
    w: usize,
    l: usize,
    data: Vec<f64>, // two cube-layout blocks, direction-major
}

impl DualGradientField {
    pub fn zeros(h: usize, w: usize, l: usize) -> Self {
        Self {
            h,
            w,
            l,
            data: vec![0.0; 2 * h * w * l],
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.h, self.w, self.l)
    }

    /// Cube-layout slice of one direction component.
    pub fn component(&self, d: usize) -> &[f64] {
        let n = self.h * self.w * self.l;
        &self.data[d * n..(d + 1) * n]
    }

    pub fn component_mut(&mut self, d: usize) -> &mut [f64] {
        let n = self.h * self.w * self.l;
        &mut self.data[d * n..(d + 1) * n]
    }

    pub fn components_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        let n = self.h * self.w * self.l;
        self.data.split_at_mut(n)
    }

    #[inline]
    pub fn get(&self, d: usize, m: usize, n: usize, band: usize) -> f64 {
        let sz = self.h * self.w * self.l;
        self.data[d * sz + (band * self.h + m) * self.w + n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Largest per-pixel Euclidean norm over the field.
    pub fn max_pointwise_norm(&self) -> f64 {
        let n = self.h * self.w * self.l;
        let (a, b) = self.data.split_at(n);
        a.iter()
            .zip(b)
            .map(|(x, y)| x.hypot(*y))
            .fold(0.0, f64::max)
    }

    /// Checks the dual-feasibility invariants: norm bound and zero Neumann
    /// boundary entries.
    pub fn is_feasible(&self) -> bool {
        if self.max_pointwise_norm() > 1.0 + 1e-12 {
            return false;
        }
        let (h, w, l) = (self.h, self.w, self.l);
        for band in 0..l {
            for n in 0..w {
                if self.get(0, h - 1, n, band) != 0.0 {
                    return false;
                }
            }
            for m in 0..h {
                if self.get(1, m, w - 1, band) != 0.0 {
                    return false;
                }
            }
        }
        true
    }
}

/// Forward-difference spatial gradient; zero on the last row (direction 0)
/// and last column (direction 1).
pub fn gradient(x: &SpectralCube) -> DualGradientField {
    let (h, w, l) = x.dims();
    let mut g = DualGradientField::zeros(h, w, l);
    gradient_into(x, &mut g);
    g
}

pub(crate) fn gradient_into(x: &SpectralCube, g: &mut DualGradientField) {
    let (h, w, l) = x.dims();
    debug_assert_eq!(g.dims(), (h, w, l));
    let (g0, g1) = g.components_mut();
    for band in 0..l {
        let xb = x.band(band);
        let base = band * h * w;
        for m in 0..h {
            let row = m * w;
            for n in 0..w {
                let v = xb[row + n];
                g0[base + row + n] = if m + 1 < h { xb[row + w + n] - v } else { 0.0 };
                g1[base + row + n] = if n + 1 < w { xb[row + n + 1] - v } else { 0.0 };
            }
        }
    }
}

/// Discrete divergence (div p)_{m,n} = p0_{m,n} − p0_{m−1,n} + p1_{m,n} −
/// p1_{m,n−1}, out-of-range terms zero.
pub fn divergence(p: &DualGradientField) -> SpectralCube {
    let (h, w, l) = p.dims();
    let mut out = SpectralCube::zeros(h, w, l);
    divergence_into(p, &mut out);
    out
}

pub(crate) fn divergence_into(p: &DualGradientField, out: &mut SpectralCube) {
    let (h, w, l) = p.dims();
    debug_assert_eq!(out.dims(), (h, w, l));
    let sz = h * w * l;
    let p0 = &p.as_slice()[..sz];
    let p1 = &p.as_slice()[sz..];
    let o = out.as_mut_slice();
    for band in 0..l {
        let base = band * h * w;
        for m in 0..h {
            let row = base + m * w;
            for n in 0..w {
                let mut v = p0[row + n] + p1[row + n];
                if m > 0 {
                    v -= p0[row - w + n];
                }
                if n > 0 {
                    v -= p1[row + n - 1];
                }
                o[row + n] = v;
            }
        }
    }
}

/// Per-pixel normalized gradient: ∇x / ‖∇x‖ where the norm is nonzero, the
/// zero vector elsewhere. Its negative divergence is a subgradient of the TV
/// functional at `x`.
pub fn dual_field(x: &SpectralCube) -> DualGradientField {
    let mut g = gradient(x);
    let (g0, g1) = g.components_mut();
    for (a, b) in g0.iter_mut().zip(g1.iter_mut()) {
        let norm = a.hypot(*b);
        if norm != 0.0 {
            *a /= norm;
            *b /= norm;
        }
    }
    g
}

/// Isotropic 3-D TV value: Σ_{m,n,l} ‖(∇x)_{:,m,n,l}‖.
pub fn tv_value(x: &SpectralCube) -> f64 {
    let g = gradient(x);
    let sz = x.len();
    let g0 = &g.as_slice()[..sz];
    let g1 = &g.as_slice()[sz..];
    g0.iter().zip(g1).map(|(a, b)| a.hypot(*b)).sum()
}

/// TVDS regularizer value f_TV(x) − ⟨g, x⟩. With g = −div(P^ref) this is
/// the subgradient-similarity term; g = 0 recovers plain TV.
pub fn tvds_value(x: &SpectralCube, g: &SpectralCube) -> Result<f64> {
    if !x.same_dims(g) {
        return Err(Error::dims(
            "tvds_value",
            format!("{:?}", x.dims()),
            format!("{:?}", g.dims()),
        ));
    }
    Ok(tv_value(x) - x.dot(g)?)
}
