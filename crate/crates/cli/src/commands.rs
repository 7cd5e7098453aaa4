//! Implementations of the pipeline subcommands.

use crate::config::{
    admm_to_json, parse_bayer, parse_peak, AdmmOverrides, FileConfig, Mode, SolverSettings,
};
use crate::error::{CliError, Result};
use crate::format;
use crate::manifest::{hash_file, Manifest, MANIFEST_NAME};
use cassi_core::*;
use std::fs;
use std::path::{Path, PathBuf};

pub struct SimulateArgs {
    pub scene: PathBuf,
    pub mask: PathBuf,
    pub response: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub shear: Option<usize>,
    pub noise_sigma: Option<f64>,
    pub rgb_noise_sigma: Option<f64>,
    pub bayer: Option<String>,
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(CliError::io(format!("creating {}", dir.display())))
}

fn load_mask(path: &Path) -> Result<TransmittanceTensor> {
    let cube = format::read_cube(path)?;
    TransmittanceTensor::new(cube)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn load_response(path: &Path) -> Result<SpectralResponse> {
    let text = fs::read_to_string(path)
        .map_err(CliError::io(format!("reading response {}", path.display())))?;
    SpectralResponse::from_csv_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    let file_cfg = FileConfig::load_opt(args.config.as_deref())?;
    let shear = args.shear.or(file_cfg.shear).unwrap_or(1);
    let noise_sigma = args.noise_sigma.or(file_cfg.noise_sigma).unwrap_or(0.0);
    let rgb_noise_sigma = args
        .rgb_noise_sigma
        .or(file_cfg.rgb_noise_sigma)
        .unwrap_or(0.0);
    let seed = args.seed.or(file_cfg.seed).unwrap_or(0);
    let bayer_name = args
        .bayer
        .or(file_cfg.bayer.clone())
        .unwrap_or_else(|| "rggb".into());
    let bayer = parse_bayer(&bayer_name)?;

    let scene = format::read_cube(&args.scene)?;
    let mask = load_mask(&args.mask)?;
    if scene.dims() != mask.dims() {
        return Err(CliError::Validation(format!(
            "scene dims {:?} do not match mask dims {:?}",
            scene.dims(),
            mask.dims()
        )));
    }
    let response = args.response.as_deref().map(load_response).transpose()?;
    if let Some(a) = &response {
        if a.bands() != scene.bands() {
            return Err(CliError::Validation(format!(
                "response has {} bands but the scene has {}",
                a.bands(),
                scene.bands()
            )));
        }
    }

    let model = SystemModel::build(mask, shear);
    let measurement = model.simulate(&scene, noise_sigma, seed)?;

    ensure_dir(&args.out_dir)?;
    let measurement_path = args.out_dir.join("measurement.hsc");
    format::write_plane(&measurement_path, measurement.plane())?;
    let truth_path = args.out_dir.join("truth.hsc");
    format::write_cube(&truth_path, &scene)?;

    let rgb_path = match &response {
        Some(a) => {
            let image = if a.channels() == 3 {
                let raw = mosaic_simulate(a, &scene, bayer, rgb_noise_sigma, seed.wrapping_add(1))?;
                demosaic_bilinear(&raw, bayer)?
            } else {
                // Panchromatic branch: direct projection plus seeded noise.
                rgb::rgb_simulate(a, &scene, rgb_noise_sigma, seed.wrapping_add(1))?
            };
            let path = args.out_dir.join("rgb.hsc");
            format::write_rgb(&path, &image)?;
            Some(path)
        }
        None => None,
    };

    let mut manifest = Manifest::new(
        "simulate",
        Some(seed),
        serde_json::json!({
            "shear": shear,
            "noise_sigma": noise_sigma,
            "rgb_noise_sigma": rgb_noise_sigma,
            "bayer": bayer_name,
            "measurement_width": model.measurement_width(),
        }),
    );
    manifest.add_input("scene", &args.scene)?;
    manifest.add_input("mask", &args.mask)?;
    if let Some(resp) = &args.response {
        manifest.add_input("response", resp)?;
    }
    manifest.add_output("measurement", &measurement_path)?;
    manifest.add_output("truth", &truth_path)?;
    if let Some(path) = &rgb_path {
        manifest.add_output("rgb", path)?;
    }
    let truth_sha = manifest.outputs["truth"].sha256.clone();
    manifest.lineage.insert("scene_sha256".into(), truth_sha);
    manifest.save(&args.out_dir.join(MANIFEST_NAME))?;

    println!(
        "simulated {}x{} measurement (shear {shear}, sigma {noise_sigma}) -> {}",
        measurement.dims().0,
        measurement.dims().1,
        args.out_dir.display()
    );
    Ok(())
}

pub struct ReconstructArgs {
    pub measurement: PathBuf,
    pub mask: PathBuf,
    pub rgb: Option<PathBuf>,
    pub response: Option<PathBuf>,
    pub mode: Option<String>,
    pub config: Option<PathBuf>,
    pub shear: Option<usize>,
    pub order: Option<String>,
    pub lift: Option<String>,
    pub overrides: AdmmOverrides,
    pub cg_tol: Option<f64>,
    pub cg_max_iters: Option<usize>,
    pub strict: bool,
    pub out_dir: PathBuf,
}

/// Derives the shear step from the measurement/mask geometry when possible.
fn resolve_shear(
    flag_or_config: Option<usize>,
    measurement_width: usize,
    w: usize,
    l: usize,
) -> Result<usize> {
    let derived = if l > 1 {
        let extra = measurement_width
            .checked_sub(w)
            .ok_or_else(|| {
                CliError::Validation(format!(
                    "measurement width {measurement_width} is narrower than the mask width {w}"
                ))
            })?;
        if extra % (l - 1) != 0 {
            return Err(CliError::Validation(format!(
                "measurement width {measurement_width} is inconsistent with {w}+s({l}-1)"
            )));
        }
        Some(extra / (l - 1))
    } else if measurement_width == w {
        None // any shear is geometrically consistent when L = 1
    } else {
        return Err(CliError::Validation(format!(
            "single-band measurement must have width {w}, got {measurement_width}"
        )));
    };
    match (flag_or_config, derived) {
        (Some(s), Some(d)) if s != d => Err(CliError::Validation(format!(
            "declared shear {s} contradicts the geometry-derived shear {d}"
        ))),
        (Some(s), _) => Ok(s),
        (None, Some(d)) => Ok(d),
        (None, None) => Ok(0),
    }
}

pub fn reconstruct(args: ReconstructArgs) -> Result<()> {
    let file_cfg = FileConfig::load_opt(args.config.as_deref())?;
    let mode_name = args
        .mode
        .clone()
        .or_else(|| file_cfg.mode.clone())
        .unwrap_or_else(|| "tvds".into());
    let mode = Mode::parse(&mode_name)?;
    let mut settings = SolverSettings::resolve(&file_cfg, args.order.as_deref(), &args.overrides)?;
    if let Some(v) = args.cg_tol {
        settings.cg.tol = v;
    }
    if let Some(v) = args.cg_max_iters {
        settings.cg.max_iters = v;
    }
    if let Some(lift) = &args.lift {
        settings.lift = crate::config::parse_lift(lift)?;
    }
    let strict = args.strict || settings.strict;

    let measurement_plane = format::read_plane(&args.measurement)?;
    let mask = load_mask(&args.mask)?;
    let (_, w, l) = mask.dims();
    let shear = resolve_shear(
        args.shear.or(file_cfg.shear),
        measurement_plane.width(),
        w,
        l,
    )?;

    if mode.needs_rgb() && args.rgb.is_none() {
        return Err(CliError::Validation(format!(
            "mode {} requires --rgb",
            mode.as_str()
        )));
    }
    if mode == Mode::TvdsStar && args.response.is_none() {
        return Err(CliError::Validation(
            "mode tvds-star requires --response for the stacked fidelity term".into(),
        ));
    }
    let rgb_image = args
        .rgb
        .as_deref()
        .filter(|_| mode.needs_rgb())
        .map(format::read_rgb)
        .transpose()?;
    let response = args.response.as_deref().map(load_response).transpose()?;

    let model = SystemModel::build(mask, shear);
    let y = CassiMeasurement(measurement_plane);

    let reference = match (&rgb_image, mode) {
        (_, Mode::TvOnly) => ReferenceSource::TvOnly,
        (Some(rgb), _) => ReferenceSource::RgbAdaptive {
            rgb,
            response: response.as_ref(),
            lift: settings.lift,
        },
        (None, _) => unreachable!("validated above"),
    };
    let fidelity = match mode {
        Mode::TvdsStar => Fidelity::DualCamera {
            response: response.as_ref().expect("validated above"),
            rgb: rgb_image.as_ref().expect("validated above"),
            cg: settings.cg,
        },
        _ => Fidelity::Cassi,
    };

    let opts = ReconstructOptions {
        reference,
        fidelity,
        x_init: None,
    };
    let result = cassi_core::reconstruct(&model, &y, &settings.admm, &opts)?;

    ensure_dir(&args.out_dir)?;
    let recon_path = args.out_dir.join("recon.hsc");
    format::write_cube(&recon_path, &result.x)?;

    let log_path = args.out_dir.join("iterations.csv");
    let mut log = String::from("stage,iteration,primal_residual,relative_primal,data_term,merit\n");
    for r in &result.records {
        log.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.stage, r.iteration, r.primal_residual, r.relative_primal, r.data_term, r.merit
        ));
    }
    fs::write(&log_path, log).map_err(CliError::io(format!("writing {}", log_path.display())))?;

    let mut preview_paths = Vec::new();
    for band in 0..result.x.bands() {
        let path = args.out_dir.join(format!("band_{band:02}.pgm"));
        format::write_band_pgm(&path, &result.x, band)?;
        preview_paths.push(path);
    }

    let mut manifest = Manifest::new(
        "reconstruct",
        None,
        serde_json::json!({
            "mode": mode.as_str(),
            "shear": shear,
            "strict": strict,
            "cg_tol": settings.cg.tol,
            "cg_max_iters": settings.cg.max_iters,
            "lift": match settings.lift {
                LiftMode::Interpolate => "interpolate",
                LiftMode::ResponsePinv => "response-pinv",
            },
            "admm": admm_to_json(&settings.admm),
        }),
    );
    manifest.add_input("measurement", &args.measurement)?;
    manifest.add_input("mask", &args.mask)?;
    if let Some(rgb) = &args.rgb {
        if mode.needs_rgb() {
            manifest.add_input("rgb", rgb)?;
        }
    }
    if let Some(resp) = &args.response {
        manifest.add_input("response", resp)?;
    }
    manifest.add_output("recon", &recon_path)?;
    manifest.add_output("iterations", &log_path)?;
    // Propagate the ground-truth hash for the evaluation lineage check.
    if let Some(upstream) = Manifest::load_sibling(&args.measurement) {
        if let Some(sha) = upstream.lineage.get("scene_sha256") {
            manifest
                .lineage
                .insert("scene_sha256".into(), sha.clone());
        }
    }
    manifest.save(&args.out_dir.join(MANIFEST_NAME))?;

    if result.stability_warning {
        eprintln!("warning: a stage ran with mu*tau >= 1/8, outside the convergence guarantee");
    }
    if result.cg_failures > 0 {
        let msg = format!(
            "{} inner CG solve(s) stopped at the iteration cap",
            result.cg_failures
        );
        if strict {
            return Err(CliError::Numerical(msg));
        }
        eprintln!("warning: {msg}");
    }
    println!(
        "reconstructed {:?} in {} iterations (final relative primal residual {:.3e}) -> {}",
        result.x.dims(),
        result.records.len(),
        result.final_relative_primal(),
        args.out_dir.display()
    );
    Ok(())
}

pub struct EvaluateArgs {
    pub recon: PathBuf,
    pub truth: PathBuf,
    pub peak: Option<String>,
    pub config: Option<PathBuf>,
    pub force: bool,
    pub out_dir: PathBuf,
}

pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    let file_cfg = FileConfig::load_opt(args.config.as_deref())?;
    let recon = format::read_cube(&args.recon)?;
    let truth = format::read_cube(&args.truth)?;
    if recon.dims() != truth.dims() {
        return Err(CliError::Validation(format!(
            "reconstruction dims {:?} do not match truth dims {:?}",
            recon.dims(),
            truth.dims()
        )));
    }

    // Lineage: the reconstruction manifest carries the hash of the scene the
    // measurement was simulated from.
    if let Some(manifest) = Manifest::load_sibling(&args.recon) {
        if let Some(expected) = manifest.lineage.get("scene_sha256") {
            let actual = hash_file(&args.truth)?;
            if &actual != expected && !args.force {
                return Err(CliError::Validation(format!(
                    "lineage mismatch: {} is not the scene this reconstruction came from \
                     (expected sha256 {expected}, got {actual}); pass --force to evaluate anyway",
                    args.truth.display()
                )));
            }
        }
    }

    let peak = match args.peak.as_deref().or(file_cfg.peak.as_deref()) {
        Some(s) => parse_peak(s)?,
        None => PeakConvention::ReferenceMax,
    };
    let report = cassi_core::evaluate(&recon, &truth, peak)?;

    ensure_dir(&args.out_dir)?;
    let scene_name = args
        .recon
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scene".into());

    let csv_path = args.out_dir.join("metrics.csv");
    let mut csv = String::from("scene,psnr_db,ssim,sam_degrees\n");
    csv.push_str(&format!(
        "{},{},{},{}\n",
        scene_name, report.psnr_db, report.ssim, report.sam_degrees
    ));
    csv.push_str(&format!(
        "Avg,{},{},{}\n",
        report.psnr_db, report.ssim, report.sam_degrees
    ));
    fs::write(&csv_path, &csv).map_err(CliError::io(format!("writing {}", csv_path.display())))?;

    let txt_path = args.out_dir.join("metrics.txt");
    let mut txt = String::new();
    txt.push_str(&format!("scene:         {scene_name}\n"));
    txt.push_str(&format!(
        "peak:          {}\n",
        match peak {
            PeakConvention::ReferenceMax => "reference max",
            PeakConvention::Unit => "1.0",
        }
    ));
    txt.push_str(&format!("psnr_db:       {:.4}\n", report.psnr_db));
    txt.push_str(&format!("ssim:          {:.6}\n", report.ssim));
    txt.push_str(&format!("sam_degrees:   {:.4}\n", report.sam_degrees));
    txt.push_str(&format!(
        "sam_excluded:  {} pixel(s) with zero spectrum\n",
        report.sam_excluded_pixels
    ));
    txt.push_str("per-band psnr:\n");
    for (band, value) in report.per_band_psnr.iter().enumerate() {
        txt.push_str(&format!("  band {band:2}: {value:.4} dB\n"));
    }
    fs::write(&txt_path, &txt).map_err(CliError::io(format!("writing {}", txt_path.display())))?;

    let mut manifest = Manifest::new(
        "evaluate",
        None,
        serde_json::json!({
            "peak": match peak {
                PeakConvention::ReferenceMax => "ref-max",
                PeakConvention::Unit => "one",
            },
            "forced": args.force,
        }),
    );
    manifest.add_input("recon", &args.recon)?;
    manifest.add_input("truth", &args.truth)?;
    manifest.add_output("metrics_csv", &csv_path)?;
    manifest.add_output("metrics_txt", &txt_path)?;
    manifest.save(&args.out_dir.join(MANIFEST_NAME))?;

    println!(
        "psnr {:.2} dB, ssim {:.4}, sam {:.3} deg -> {}",
        report.psnr_db,
        report.ssim,
        report.sam_degrees,
        args.out_dir.display()
    );
    Ok(())
}

pub struct GenSceneArgs {
    pub kind: String,
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    pub seed: u64,
    pub out: PathBuf,
}

pub fn genscene(args: GenSceneArgs) -> Result<()> {
    let kind: synth::SceneKind = args
        .kind
        .parse()
        .map_err(|e: cassi_core::Error| CliError::Validation(e.to_string()))?;
    let scene = synth::generate_scene(kind, args.height, args.width, args.bands, args.seed);
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    format::write_cube(&args.out, &scene)?;
    let mut manifest = Manifest::new(
        "genscene",
        Some(args.seed),
        serde_json::json!({
            "kind": args.kind,
            "height": args.height,
            "width": args.width,
            "bands": args.bands,
        }),
    );
    manifest.add_output("scene", &args.out)?;
    manifest.save(&sidecar_manifest_path(&args.out))?;
    println!(
        "wrote {}x{}x{} {} scene -> {}",
        args.height,
        args.width,
        args.bands,
        args.kind,
        args.out.display()
    );
    Ok(())
}

pub struct GenMaskArgs {
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    pub density: f64,
    pub seed: u64,
    pub out: PathBuf,
}

pub fn genmask(args: GenMaskArgs) -> Result<()> {
    let mask = synth::bernoulli_mask(args.height, args.width, args.bands, args.density, args.seed)?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    format::write_cube(&args.out, mask.cube())?;
    let mut manifest = Manifest::new(
        "genmask",
        Some(args.seed),
        serde_json::json!({
            "height": args.height,
            "width": args.width,
            "bands": args.bands,
            "density": args.density,
        }),
    );
    manifest.add_output("mask", &args.out)?;
    manifest.save(&sidecar_manifest_path(&args.out))?;
    println!(
        "wrote Bernoulli({}) mask {}x{}x{} -> {}",
        args.density,
        args.height,
        args.width,
        args.bands,
        args.out.display()
    );
    Ok(())
}

fn sidecar_manifest_path(artifact: &Path) -> PathBuf {
    let mut name = artifact
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "artifact".into());
    name.push_str(".manifest.json");
    artifact.with_file_name(name)
}

pub struct ConvertArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    pub to_f32: bool,
}

pub fn convert(args: ConvertArgs) -> Result<()> {
    let ext = |p: &Path| {
        p.extension()
            .map(|e| e.to_string_lossy().to_ascii_lowercase())
            .unwrap_or_default()
    };
    let (in_ext, out_ext) = (ext(&args.input), ext(&args.output));
    let raw = match in_ext.as_str() {
        "hsc" => format::read_raw(&args.input)?,
        "npy" => format::read_npy(&args.input)?,
        other => {
            return Err(CliError::Validation(format!(
                "unsupported input extension '.{other}' (expected .hsc or .npy)"
            )))
        }
    };
    let dtype = if args.to_f32 {
        format::Dtype::F32
    } else {
        raw.dtype
    };
    match out_ext.as_str() {
        "hsc" => format::write_raw(&args.output, raw.h, raw.w, raw.l, &raw.data, dtype)?,
        "npy" => format::write_npy(&args.output, raw.h, raw.w, raw.l, &raw.data, dtype)?,
        other => {
            return Err(CliError::Validation(format!(
                "unsupported output extension '.{other}' (expected .hsc or .npy)"
            )))
        }
    }
    println!(
        "converted {} ({}x{}x{}) -> {}",
        args.input.display(),
        raw.h,
        raw.w,
        raw.l,
        args.output.display()
    );
    Ok(())
}
