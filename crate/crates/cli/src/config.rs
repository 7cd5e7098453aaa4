//! Declarative run configuration: a TOML file mirroring the solver
//! parameters, overridable by command-line flags. Every default matches the
//! published cross-dataset configuration.

use crate::error::{CliError, Result};
use cassi_core::{AdmmParams, BayerPattern, CgOptions, LiftMode, PeakConvention, UpdateOrder};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub shear: Option<usize>,
    pub noise_sigma: Option<f64>,
    pub rgb_noise_sigma: Option<f64>,
    pub seed: Option<u64>,
    pub bayer: Option<String>,
    pub mode: Option<String>,
    pub peak: Option<String>,
    #[serde(default)]
    pub admm: AdmmSection,
    #[serde(default)]
    pub cg: CgSection,
    #[serde(default)]
    pub reference: ReferenceSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmmSection {
    pub rho: Option<f64>,
    pub mu: Option<f64>,
    pub tau: Option<f64>,
    pub stage_scale: Option<f64>,
    pub inner_iters: Option<usize>,
    pub iters_per_stage: Option<usize>,
    pub num_stages: Option<usize>,
    pub ref_update_interval: Option<usize>,
    pub order: Option<String>,
    pub warm_start_dual: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CgSection {
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub strict: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    pub lift: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(CliError::io(format!("reading config {}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn load_opt(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(Self::default()),
        }
    }
}

/// Reconstruction flavor selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    TvOnly,
    Tvds,
    TvdsStar,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "tv-only" | "tvonly" => Ok(Mode::TvOnly),
            "tvds" => Ok(Mode::Tvds),
            "tvds-star" | "tvds*" => Ok(Mode::TvdsStar),
            other => Err(CliError::Validation(format!(
                "unknown mode '{other}' (expected tv-only, tvds, or tvds-star)"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::TvOnly => "tv-only",
            Mode::Tvds => "tvds",
            Mode::TvdsStar => "tvds-star",
        }
    }

    pub fn needs_rgb(self) -> bool {
        !matches!(self, Mode::TvOnly)
    }
}

pub fn parse_order(s: &str) -> Result<UpdateOrder> {
    match s.to_ascii_lowercase().replace('_', "-").as_str() {
        "as-printed" | "zux" => Ok(UpdateOrder::ZThenUThenX),
        "conventional" | "xzu" => Ok(UpdateOrder::XThenZThenU),
        other => Err(CliError::Validation(format!(
            "unknown update order '{other}' (expected as-printed or conventional)"
        ))),
    }
}

pub fn parse_lift(s: &str) -> Result<LiftMode> {
    match s.to_ascii_lowercase().replace('_', "-").as_str() {
        "interpolate" | "interp" => Ok(LiftMode::Interpolate),
        "response-pinv" | "pinv" => Ok(LiftMode::ResponsePinv),
        other => Err(CliError::Validation(format!(
            "unknown lift mode '{other}' (expected interpolate or response-pinv)"
        ))),
    }
}

pub fn parse_peak(s: &str) -> Result<PeakConvention> {
    match s.to_ascii_lowercase().replace('_', "-").as_str() {
        "ref-max" | "reference-max" => Ok(PeakConvention::ReferenceMax),
        "one" | "unit" => Ok(PeakConvention::Unit),
        other => Err(CliError::Validation(format!(
            "unknown peak convention '{other}' (expected ref-max or one)"
        ))),
    }
}

pub fn parse_bayer(s: &str) -> Result<BayerPattern> {
    s.parse::<BayerPattern>().map_err(Into::into)
}

/// Solver parameters alongside inner-CG settings, fully resolved from
/// defaults, config file, and flags (in that precedence order).
#[derive(Debug, Clone)]
pub struct SolverSettings {
    pub admm: AdmmParams,
    pub cg: CgOptions,
    pub strict: bool,
    pub lift: LiftMode,
}

impl SolverSettings {
    pub fn resolve(
        file: &FileConfig,
        order_flag: Option<&str>,
        overrides: &AdmmOverrides,
    ) -> Result<Self> {
        let mut admm = AdmmParams::default();
        let section = &file.admm;
        if let Some(v) = section.rho {
            admm.rho = v;
        }
        if let Some(v) = section.mu {
            admm.mu = v;
        }
        if let Some(v) = section.tau {
            admm.tau = v;
        }
        if let Some(v) = section.stage_scale {
            admm.stage_scale = v;
        }
        if let Some(v) = section.inner_iters {
            admm.inner_iters = v;
        }
        if let Some(v) = section.iters_per_stage {
            admm.iters_per_stage = v;
        }
        if let Some(v) = section.num_stages {
            admm.num_stages = v;
        }
        if let Some(v) = section.ref_update_interval {
            admm.ref_update_interval = v;
        }
        if let Some(order) = &section.order {
            admm.order = parse_order(order)?;
        }
        if let Some(v) = section.warm_start_dual {
            admm.warm_start_dual = v;
        }

        overrides.apply(&mut admm);
        if let Some(order) = order_flag {
            admm.order = parse_order(order)?;
        }

        let mut cg = CgOptions::default();
        if let Some(v) = file.cg.tol {
            cg.tol = v;
        }
        if let Some(v) = file.cg.max_iters {
            cg.max_iters = v;
        }
        let strict = file.cg.strict.unwrap_or(false);
        let lift = match &file.reference.lift {
            Some(s) => parse_lift(s)?,
            None => LiftMode::Interpolate,
        };
        Ok(Self {
            admm,
            cg,
            strict,
            lift,
        })
    }
}

/// Per-flag ADMM overrides shared by the reconstruct subcommand.
#[derive(Debug, Clone, Default)]
pub struct AdmmOverrides {
    pub rho: Option<f64>,
    pub mu: Option<f64>,
    pub tau: Option<f64>,
    pub inner_iters: Option<usize>,
    pub iters_per_stage: Option<usize>,
    pub num_stages: Option<usize>,
    pub ref_update_interval: Option<usize>,
}

impl AdmmOverrides {
    fn apply(&self, admm: &mut AdmmParams) {
        if let Some(v) = self.rho {
            admm.rho = v;
        }
        if let Some(v) = self.mu {
            admm.mu = v;
        }
        if let Some(v) = self.tau {
            admm.tau = v;
        }
        if let Some(v) = self.inner_iters {
            admm.inner_iters = v;
        }
        if let Some(v) = self.iters_per_stage {
            admm.iters_per_stage = v;
        }
        if let Some(v) = self.num_stages {
            admm.num_stages = v;
        }
        if let Some(v) = self.ref_update_interval {
            admm.ref_update_interval = v;
        }
    }
}

/// JSON snapshot of the resolved solver parameters for the manifest.
pub fn admm_to_json(admm: &AdmmParams) -> serde_json::Value {
    serde_json::json!({
        "rho": admm.rho,
        "mu": admm.mu,
        "tau": admm.tau,
        "stage_scale": admm.stage_scale,
        "inner_iters": admm.inner_iters,
        "iters_per_stage": admm.iters_per_stage,
        "num_stages": admm.num_stages,
        "ref_update_interval": admm.ref_update_interval,
        "order": match admm.order {
            UpdateOrder::ZThenUThenX => "as-printed",
            UpdateOrder::XThenZThenU => "conventional",
        },
        "warm_start_dual": admm.warm_start_dual,
    })
}
