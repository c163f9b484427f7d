//! The end-to-end run: decompose -> features -> regress -> hilbert ->
//! plotdata, driven by one config file, with a manifest that makes the run
//! self-verifying.
//!
//! The manifest records the resolved config, the applied seed, the crate
//! version, each stage's outcome, and a SHA-256 per emitted file. It holds
//! no clock readings, so identical runs produce identical manifests. The
//! first failing stage aborts the run; stages already finished stay
//! `completed` in the manifest, later ones stay `skipped`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use modescale::report::read_decomposition;
use modescale::{Error, Result};

use crate::commands::{
    cmd_decompose, cmd_features, cmd_hilbert, cmd_regress, load_prepared_column, sidecar_path,
    write_plotdata, DecomposeOptions,
};
use crate::config::PipelineConfig;

pub const MANIFEST_FILE: &str = "manifest.json";

const STAGES: [&str; 5] = ["decompose", "features", "regress", "hilbert", "plotdata"];

/// Record of one pipeline run.
#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    /// Version of the tool that produced the run.
    pub version: String,
    /// Base seed applied to the run.
    pub seed: u64,
    /// Resolved configuration, defaults included.
    pub config: BTreeMap<String, String>,
    /// Stage name -> completed | failed | skipped.
    pub stages: BTreeMap<String, String>,
    /// Emitted file name -> SHA-256 of its bytes.
    pub files: BTreeMap<String, String>,
}

fn sha256_hex(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn tag_stage(stage: &str, e: Error) -> Error {
    match e {
        Error::Invalid(m) => Error::Invalid(format!("stage {stage}: {m}")),
        Error::Numerical(m) => Error::Numerical(format!("stage {stage}: {m}")),
        Error::Io(m) => Error::Io(format!("stage {stage}: {m}")),
    }
}

fn write_manifest(manifest: &Manifest, dir: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Runs the full pipeline. Returns the run directory on success; on a stage
/// failure the manifest is still written before the error propagates.
pub fn cmd_pipeline(config_path: &Path, global_out: &Path, global_seed: u64) -> Result<PathBuf> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| Error::Io(format!("{}: {e}", config_path.display())))?;
    let config = PipelineConfig::parse(&text, global_seed)?;
    let run_dir = config
        .output_dir
        .clone()
        .unwrap_or_else(|| global_out.to_path_buf());
    std::fs::create_dir_all(&run_dir)
        .map_err(|e| Error::Io(format!("{}: {e}", run_dir.display())))?;

    let mut manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        config: config.echo(),
        stages: STAGES
            .iter()
            .map(|s| (s.to_string(), "skipped".to_string()))
            .collect(),
        files: BTreeMap::new(),
    };

    let result = run_stages(&config, &run_dir, &mut manifest);
    write_manifest(&manifest, &run_dir)?;
    result?;
    Ok(run_dir)
}

fn run_stages(config: &PipelineConfig, run_dir: &Path, manifest: &mut Manifest) -> Result<()> {
    let options = DecomposeOptions {
        method: config.method,
        sift: config.sift,
        noise_std: config.noise_std,
        ensemble_size: config.ensemble_size,
        transform: config.transform,
    };

    let run_stage = |manifest: &mut Manifest,
                     stage: &str,
                     enabled: bool,
                     body: &dyn Fn() -> Result<Vec<PathBuf>>|
     -> Result<()> {
        if !enabled {
            log::info!("stage {stage}: skipped");
            return Ok(());
        }
        log::info!("stage {stage}: running");
        match body() {
            Ok(files) => {
                for file in files {
                    let name = file
                        .file_name()
                        .and_then(|s| s.to_str())
                        .map(|s| s.to_string())
                        .ok_or_else(|| {
                            Error::invalid(format!("{}: unusable file name", file.display()))
                        })?;
                    manifest.files.insert(name, sha256_hex(&file)?);
                }
                manifest
                    .stages
                    .insert(stage.to_string(), "completed".to_string());
                Ok(())
            }
            Err(e) => {
                manifest
                    .stages
                    .insert(stage.to_string(), "failed".to_string());
                Err(tag_stage(stage, e))
            }
        }
    };

    run_stage(manifest, "decompose", true, &|| {
        cmd_decompose(
            &config.input_file,
            &config.date_column,
            &config.columns,
            config.deflator.as_deref(),
            &options,
            config.seed,
            run_dir,
        )
    })?;

    run_stage(manifest, "features", config.emit.features, &|| {
        let mut files = Vec::new();
        for column in &config.columns {
            let csv = run_dir.join(format!("{column}.csv"));
            files.extend(cmd_features(&csv, config.horizon_rule, run_dir)?);
        }
        Ok(files)
    })?;

    run_stage(manifest, "regress", config.emit.regression, &|| {
        let spec = config
            .regression
            .as_ref()
            .expect("emit.regression implies a regression spec");
        cmd_regress(run_dir, spec, config.transform, run_dir)
    })?;

    run_stage(manifest, "hilbert", config.emit.hilbert, &|| {
        let mut files = Vec::new();
        for column in &config.columns {
            let csv = run_dir.join(format!("{column}.csv"));
            files.extend(cmd_hilbert(&csv, run_dir)?);
        }
        Ok(files)
    })?;

    run_stage(manifest, "plotdata", config.emit.plotdata, &|| {
        let mut files = Vec::new();
        for column in &config.columns {
            let series = load_prepared_column(
                &config.input_file,
                &config.date_column,
                column,
                config.deflator.as_deref(),
                config.transform,
            )?;
            let csv = run_dir.join(format!("{column}.csv"));
            let d = read_decomposition(&csv, sidecar_path(&csv))?;
            files.extend(write_plotdata(&series, &d, &config.sift, run_dir)?);
        }
        Ok(files)
    })?;

    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use modescale::series::write_csv;
    use modescale::synth;

    fn write_inputs(dir: &Path) -> (PathBuf, PathBuf) {
        let a = synth::series("BP", synth::trended_two_tone(96));
        let b = synth::series(
            "SPI",
            synth::two_tone(96).iter().map(|v| v + 50.0).collect(),
        );
        let panel = dir.join("panel.csv");
        write_csv(&[&a, &b], &panel).unwrap();
        let config = dir.join("run.conf");
        let body = format!(
            "input.file = {}\n\
             input.columns = SPI,BP\n\
             seed = 9\n\
             sift.max_imfs = 3\n\
             eemd.ensemble_size = 6\n\
             regression.dependent = SPI\n\
             regression.regressors = BP\n\
             output.dir = {}\n\
             emit.hilbert = true\n\
             emit.plotdata = true\n",
            panel.display(),
            dir.join("run").display(),
        );
        std::fs::write(&config, body).unwrap();
        (panel, config)
    }

    #[test]
    fn pipeline_emits_all_stages_and_manifest_matches_files() {
        let dir = tempfile::tempdir().unwrap();
        let (_, config) = write_inputs(dir.path());
        let run_dir = cmd_pipeline(&config, dir.path(), 42).unwrap();

        let manifest: Manifest =
            serde_json::from_str(&std::fs::read_to_string(run_dir.join(MANIFEST_FILE)).unwrap())
                .unwrap();
        assert_eq!(manifest.seed, 9);
        for stage in STAGES {
            assert_eq!(manifest.stages[stage], "completed", "{stage}");
        }
        for name in [
            "SPI.csv",
            "SPI.json",
            "BP.csv",
            "BP.json",
            "SPI_features.csv",
            "regression.json",
            "regression.csv",
            "BP_hilbert.csv",
            "SPI_envelope.csv",
            "BP_modes.csv",
        ] {
            assert!(manifest.files.contains_key(name), "{name} missing");
        }
        for (name, recorded) in &manifest.files {
            let actual = sha256_hex(&run_dir.join(name)).unwrap();
            assert_eq!(&actual, recorded, "hash mismatch for {name}");
        }
    }

    #[test]
    fn rerun_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let (_, config) = write_inputs(dir.path());
        let run_dir = cmd_pipeline(&config, dir.path(), 42).unwrap();
        let first: BTreeMap<String, Vec<u8>> = std::fs::read_dir(&run_dir)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (
                    e.file_name().to_string_lossy().to_string(),
                    std::fs::read(e.path()).unwrap(),
                )
            })
            .collect();
        cmd_pipeline(&config, dir.path(), 42).unwrap();
        for (name, bytes) in &first {
            let again = std::fs::read(run_dir.join(name)).unwrap();
            assert_eq!(&again, bytes, "{name} changed across reruns");
        }
    }

    #[test]
    fn failing_stage_leaves_manifest_with_statuses() {
        let dir = tempfile::tempdir().unwrap();
        let (panel, _) = write_inputs(dir.path());
        let config = dir.path().join("bad.conf");
        // Regression names a column that was never decomposed.
        let body = format!(
            "input.file = {}\n\
             input.columns = SPI,BP\n\
             sift.max_imfs = 3\n\
             eemd.ensemble_size = 4\n\
             regression.dependent = SPI\n\
             regression.regressors = gold\n\
             output.dir = {}\n",
            panel.display(),
            dir.path().join("bad_run").display(),
        );
        std::fs::write(&config, body).unwrap();
        let err = cmd_pipeline(&config, dir.path(), 42).unwrap_err();
        assert!(err.to_string().contains("stage regress"), "{err}");

        let manifest: Manifest = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("bad_run").join(MANIFEST_FILE)).unwrap(),
        )
        .unwrap();
        assert_eq!(manifest.stages["decompose"], "completed");
        assert_eq!(manifest.stages["features"], "completed");
        assert_eq!(manifest.stages["regress"], "failed");
        assert_eq!(manifest.stages["hilbert"], "skipped");
        assert_eq!(manifest.stages["plotdata"], "skipped");
        assert!(manifest.files.contains_key("SPI.csv"));
    }
}
