//! Compressive spectral imaging toolkit for dual-camera CASSI systems:
//! discrete forward/backward models of the single-dispersion branch,
//! TV-subgradient-guided image fusion, a staged ADMM reconstruction driver
//! with adaptive reference generation, and the usual quality metrics.
//!
//! The crate is organized around the solver pipeline:
//!
//! - [`tensor`]: dense cube/plane types, the shear transformation pair, and
//!   safe element-wise division;
//! - [`cassi`]: the SD-CASSI system model with its diagonal-Gram backward
//!   form;
//! - [`rgb`]: the RGB/panchromatic branch and the stacked dual-camera solve;
//! - [`tv`] and [`fusion`]: TV subgradient machinery and the fixed-point
//!   fusion solver;
//! - [`reference`] and [`admm`]: reference generation/refresh and the staged
//!   reconstruction loop;
//! - [`metrics`] and [`synth`]: evaluation and reproducible synthetic data.

pub mod admm;
pub mod cassi;
pub mod error;
pub mod fusion;
mod linalg;
pub mod metrics;
pub mod reference;
pub mod rgb;
pub mod synth;
pub mod tensor;
pub mod tv;

pub use admm::{
    reconstruct, reconstruct_with, AdmmParams, Fidelity, IterationRecord, Reconstruction,
    ReconstructOptions, ReferenceSource, UpdateOrder,
};
pub use cassi::{CassiMeasurement, SystemModel, TransmittanceTensor};
pub use error::{Error, Result};
pub use fusion::{fuse, FusionOutput, FusionParams};
pub use metrics::{evaluate, MetricReport, PeakConvention};
pub use reference::{
    estimate_beta, generate_reference, interpolate_rgb_to_cube, lrds_update, LiftMode,
    ReferenceBundle,
};
pub use rgb::{
    demosaic_bilinear, dual_backward, mosaic_simulate, rgb_forward, rgb_simulate, BayerPattern,
    CgOptions, CgReport, RgbImage, SpectralResponse,
};
pub use tensor::{
    inverse_shear, repeat_along_bands, safe_divide, safe_divide_plane, shear_transform,
    PlaneMatrix, ShearedCube, SpectralCube,
};
pub use tv::{divergence, dual_field, gradient, tv_value, tvds_value, DualGradientField};
