//! Acceptance criterion 10: the simulate → reconstruct → evaluate pipeline
//! with a fixed seed produces byte-identical artifacts across two runs.

use std::fs;
use std::path::Path;
use std::process::Command;

fn run(args: &[&str], dir: &Path) {
    let out = Command::new(env!("CARGO_BIN_EXE_cassi"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn");
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
}

fn run_pipeline(dir: &Path, tag: &str) -> Vec<(String, Vec<u8>)> {
    let sim = format!("sim_{tag}");
    let rec = format!("rec_{tag}");
    let eval = format!("eval_{tag}");
    run(
        &[
            "simulate", "--scene", "scene.hsc", "--mask", "mask.hsc", "--response", "resp.csv",
            "--shear", "1", "--noise-sigma", "0.01", "--rgb-noise-sigma", "0.005", "--seed",
            "42", "--out-dir", &sim,
        ],
        dir,
    );
    run(
        &[
            "reconstruct", "--measurement", &format!("{sim}/measurement.hsc"), "--mask",
            "mask.hsc", "--rgb", &format!("{sim}/rgb.hsc"), "--response", "resp.csv", "--mode",
            "tvds", "--num-stages", "3", "--out-dir", &rec,
        ],
        dir,
    );
    run(
        &[
            "evaluate", "--recon", &format!("{rec}/recon.hsc"), "--truth",
            &format!("{sim}/truth.hsc"), "--out-dir", &eval,
        ],
        dir,
    );

    let mut artifacts = Vec::new();
    for (dirname, file) in [
        (&sim, "measurement.hsc"),
        (&sim, "rgb.hsc"),
        (&sim, "truth.hsc"),
        (&rec, "recon.hsc"),
        (&rec, "iterations.csv"),
        (&rec, "band_00.pgm"),
        (&eval, "metrics.csv"),
        (&eval, "metrics.txt"),
    ] {
        let path = dir.join(dirname).join(file);
        artifacts.push((
            format!("{dirname}/{file}"),
            fs::read(&path).unwrap_or_else(|_| panic!("missing artifact {}", path.display())),
        ));
    }
    artifacts
}

#[test]
fn acceptance_10_pipeline_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    run(
        &[
            "genscene", "--kind", "piecewise", "--height", "32", "--width", "32", "--bands", "4",
            "--seed", "7", "--out", "scene.hsc",
        ],
        dir,
    );
    run(
        &[
            "genmask", "--height", "32", "--width", "32", "--bands", "4", "--density", "0.5",
            "--seed", "8", "--out", "mask.hsc",
        ],
        dir,
    );
    fs::write(
        dir.join("resp.csv"),
        "1.0,0.7,0.2,0.05\n0.2,0.9,0.9,0.2\n0.05,0.2,0.7,1.0\n",
    )
    .unwrap();

    let first = run_pipeline(dir, "a");
    let second = run_pipeline(dir, "b");
    assert_eq!(first.len(), second.len());
    for ((name_a, bytes_a), (name_b, bytes_b)) in first.iter().zip(&second) {
        assert_eq!(
            name_a.replace("_a", ""),
            name_b.replace("_b", ""),
            "artifact lists diverged"
        );
        assert_eq!(
            bytes_a, bytes_b,
            "artifact {name_a} differs between identical runs"
        );
    }
    println!(
        "acceptance 10 determinism: PASS ({} artifacts byte-identical across two runs)",
        first.len()
    );
}
