//! Resolution of the run configuration: built-in defaults, then an optional
//! TOML file, then whichever flags were given on the command line.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use phc_core::complex::FiltrationKind;
use phc_core::dataset::{ExportConfig, ExportMode};

#[derive(Debug, Clone, Default, Args)]
pub struct PipelineArgs {
    /// TOML file with run settings; flags given explicitly take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// height, alpha or lowerstar.
    #[arg(long)]
    pub filtration: Option<FiltrationKind>,
    /// Window side in pixels.
    #[arg(long)]
    pub window: Option<usize>,
    /// Distance between neighbouring window origins.
    #[arg(long)]
    pub stride: Option<usize>,
    /// Pixels darker than this are foreground.
    #[arg(long)]
    pub threshold: Option<u8>,
    /// Persistence image cells per axis.
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    pub workers: Option<usize>,
}

pub fn load_file(path: &Path) -> Result<ExportConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

impl PipelineArgs {
    pub fn resolve(&self, mode: Option<ExportMode>) -> Result<ExportConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_file(path)?,
            None => ExportConfig::default(),
        };
        if let Some(v) = mode {
            cfg.mode = v;
        }
        if let Some(v) = self.filtration {
            cfg.phc.filtration = v;
        }
        if let Some(v) = self.window {
            cfg.phc.window = v;
        }
        if let Some(v) = self.stride {
            cfg.phc.stride = v;
        }
        if let Some(v) = self.threshold {
            cfg.phc.threshold = v;
        }
        if let Some(v) = self.resolution {
            cfg.phc.resolution = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        cfg.phc.validate()?;
        Ok(cfg)
    }
}

/// Prints the resolved configuration to stderr as TOML.
pub fn echo(cfg: &ExportConfig) -> Result<()> {
    eprintln!("# resolved configuration\n{}", toml::to_string(cfg)?);
    Ok(())
}
