use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Class, DatasetIndex, Entry, Split};
use crate::error::{Error, Result};
use crate::imgprep::{load_gray, GrayImage};
use crate::npy;
use crate::phc::{condition, global_ph, phc_stack, prepare_image, PhcConfig, WorkerPool};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportMode {
    /// `(W, n, n)` PHC tensor.
    #[default]
    Local,
    /// `(n, n)` persistence image of the whole image.
    Global,
    /// `(N, N, 1)` grayscale scaled to [0, 1], with pixels outside the
    /// conditioned mask set to 1.
    Image,
}

impl ExportMode {
    pub fn name(self) -> &'static str {
        match self {
            ExportMode::Local => "local",
            ExportMode::Global => "global",
            ExportMode::Image => "image",
        }
    }
}

impl std::str::FromStr for ExportMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local" => Ok(ExportMode::Local),
            "global" => Ok(ExportMode::Global),
            "image" => Ok(ExportMode::Image),
            _ => Err(Error::Config(format!(
                "unknown mode '{s}' (expected local, global or image)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportConfig {
    pub mode: ExportMode,
    pub seed: u64,
    /// 0 means one worker per core.
    pub workers: usize,
    pub phc: PhcConfig,
}

impl Default for ExportConfig {
    fn default() -> Self {
        ExportConfig {
            mode: ExportMode::Local,
            seed: 0,
            workers: 0,
            phc: PhcConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub source: PathBuf,
    pub source_sha256: String,
    pub class: Class,
    pub augmentation: crate::imgprep::Dihedral,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
    /// Relative to the export directory.
    pub output: PathBuf,
    pub shape: Vec<usize>,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportManifest {
    pub version: String,
    pub mode: ExportMode,
    /// Everything except the worker count, which does not affect outputs.
    pub config: ExportConfig,
    pub entries: Vec<ManifestEntry>,
}

impl ExportManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportFailure {
    pub source: PathBuf,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExportReport {
    pub manifest: ExportManifest,
    /// Entries whose existing output already matched its recorded checksum.
    pub reused: usize,
    pub failures: Vec<ExportFailure>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// The array written for one image: its shape and row-major values.
pub fn output_array(img: &GrayImage, cfg: &ExportConfig) -> Result<(Vec<usize>, Vec<f32>)> {
    let img = prepare_image(img, &cfg.phc)?;
    match cfg.mode {
        ExportMode::Local => {
            let t = phc_stack(&img, &cfg.phc)?;
            Ok((t.shape().to_vec(), t.data().to_vec()))
        }
        ExportMode::Global => {
            let grid = global_ph(&img, &cfg.phc)?;
            Ok((vec![grid.n(), grid.n()], grid.to_f32()))
        }
        ExportMode::Image => {
            let mask = condition(&img, &cfg.phc);
            let data = img
                .data()
                .iter()
                .zip(mask.data())
                .map(|(&v, &on)| if on { f32::from(v) / 255.0 } else { 1.0 })
                .collect();
            Ok((vec![img.height(), img.width(), 1], data))
        }
    }
}

fn process(
    entry: &Entry,
    cfg: &ExportConfig,
    outdir: &Path,
    previous: Option<&ManifestEntry>,
) -> Result<(ManifestEntry, bool)> {
    let source_bytes = fs::read(&entry.path).map_err(|e| Error::io(&entry.path, e))?;
    let source_sha256 = sha256_hex(&source_bytes);
    let output = PathBuf::from(entry.class.name()).join(format!("{}.npy", entry.stem()));
    let target = outdir.join(&output);

    if let Some(prev) = previous {
        if prev.source_sha256 == source_sha256 && prev.output == output {
            if let Ok(existing) = fs::read(&target) {
                if sha256_hex(&existing) == prev.sha256 {
                    let mut reused = prev.clone();
                    reused.split = entry.split;
                    return Ok((reused, true));
                }
            }
        }
    }

    let img = load_gray(&entry.path)?.transform(entry.augmentation);
    let (shape, data) = output_array(&img, cfg)?;
    let bytes = npy::to_bytes(&shape, &data)?;
    let dir = target.parent().unwrap_or(outdir);
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    // write-then-rename so an interrupted run never leaves a truncated array
    let partial = target.with_extension("npy.partial");
    fs::write(&partial, &bytes).map_err(|e| Error::io(&partial, e))?;
    fs::rename(&partial, &target).map_err(|e| Error::io(&target, e))?;
    Ok((
        ManifestEntry {
            source: entry.path.clone(),
            source_sha256,
            class: entry.class,
            augmentation: entry.augmentation,
            split: entry.split,
            output,
            shape,
            sha256: sha256_hex(&bytes),
        },
        false,
    ))
}

/// Runs the pipeline over every entry and writes one `.npy` per entry plus
/// `manifest.json`. Outputs recorded in an existing manifest with the same
/// configuration are kept when both the source and the output still match
/// their checksums. Per-file failures are collected, not fatal; the manifest
/// lists only the successful entries.
pub fn export(index: &DatasetIndex, cfg: &ExportConfig, outdir: &Path) -> Result<ExportReport> {
    cfg.phc.validate()?;
    fs::create_dir_all(outdir).map_err(|e| Error::io(outdir, e))?;
    let recorded = ExportConfig {
        workers: 0,
        ..cfg.clone()
    };

    let manifest_path = outdir.join(MANIFEST_NAME);
    let previous: HashMap<(PathBuf, String), ManifestEntry> = match ExportManifest::load(&manifest_path) {
        Ok(m) if m.config == recorded && m.version == env!("CARGO_PKG_VERSION") => m
            .entries
            .into_iter()
            .map(|e| ((e.source.clone(), e.augmentation.tag().to_string()), e))
            .collect(),
        Ok(_) => {
            info!("existing manifest was written with a different configuration; recomputing");
            HashMap::new()
        }
        Err(_) => HashMap::new(),
    };

    let pool = WorkerPool::new(cfg.workers)?;
    let results: Vec<Result<(ManifestEntry, bool)>> = pool.install(|| {
        index
            .entries
            .par_iter()
            .map(|entry| {
                let key = (entry.path.clone(), entry.augmentation.tag().to_string());
                process(entry, cfg, outdir, previous.get(&key))
            })
            .collect()
    });

    let mut entries = Vec::new();
    let mut failures = Vec::new();
    let mut reused = 0;
    for (entry, result) in index.entries.iter().zip(results) {
        match result {
            Ok((m, was_reused)) => {
                reused += usize::from(was_reused);
                entries.push(m);
            }
            Err(e) => {
                warn!("{}: {e}", entry.path.display());
                failures.push(ExportFailure {
                    source: entry.path.clone(),
                    message: e.to_string(),
                });
            }
        }
    }

    let manifest = ExportManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        mode: cfg.mode,
        config: recorded,
        entries,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    let partial = outdir.join("manifest.json.partial");
    fs::write(&partial, text).map_err(|e| Error::io(&partial, e))?;
    fs::rename(&partial, &manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(ExportReport {
        manifest,
        reused,
        failures,
    })
}

/// Checks every output listed in the manifest against its checksum and its
/// recorded shape. Returns the entries that fail.
pub fn verify_manifest(outdir: &Path) -> Result<Vec<PathBuf>> {
    let manifest = ExportManifest::load(&outdir.join(MANIFEST_NAME))?;
    let mut bad = Vec::new();
    for entry in &manifest.entries {
        let ok = fs::read(outdir.join(&entry.output))
            .ok()
            .filter(|bytes| sha256_hex(bytes) == entry.sha256)
            .and_then(|bytes| npy::read_f32(&bytes).ok())
            .is_some_and(|(shape, _)| shape == entry.shape);
        if !ok {
            bad.push(entry.output.clone());
        }
    }
    Ok(bad)
}
