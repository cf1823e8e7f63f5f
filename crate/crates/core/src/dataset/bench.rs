use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DatasetIndex;
use crate::complex::FiltrationKind;
use crate::error::{Error, Result};
use crate::imgprep::{load_gray, GrayImage};
use crate::phc::{global_ph, phc_stack, prepare_image, PhcConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchMode {
    Local,
    Global,
}

impl BenchMode {
    pub fn name(self) -> &'static str {
        match self {
            BenchMode::Local => "local",
            BenchMode::Global => "global",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub filtration: FiltrationKind,
    pub mode: BenchMode,
    pub images: usize,
    pub mean_seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn mean(&self, filtration: FiltrationKind, mode: BenchMode) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.filtration == filtration && r.mode == mode)
            .map(|r| r.mean_seconds)
    }

    /// One row per filtration, local and global means side by side.
    pub fn to_table(&self) -> String {
        let mut out = format!("{:<12} {:>12} {:>12}\n", "filtration", "local (s)", "global (s)");
        let mut filtrations: Vec<FiltrationKind> = self.rows.iter().map(|r| r.filtration).collect();
        filtrations.dedup();
        for f in filtrations {
            let cell = |mode| self.mean(f, mode).map_or("-".to_string(), |s| format!("{s:.4}"));
            let _ = writeln!(
                out,
                "{:<12} {:>12} {:>12}",
                f.name(),
                cell(BenchMode::Local),
                cell(BenchMode::Global)
            );
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("filtration,mode,images,mean_seconds\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                r.filtration.name(),
                r.mode.name(),
                r.images,
                r.mean_seconds
            );
        }
        out
    }
}

/// Mean wall-clock time per image for each (filtration, mode), counting
/// preprocessing, persistence and vectorization. Images run one at a time so
/// that the means are per-image latencies.
pub fn bench_images(
    images: &[GrayImage],
    base: &PhcConfig,
    filtrations: &[FiltrationKind],
    modes: &[BenchMode],
) -> Result<BenchReport> {
    if images.is_empty() {
        return Err(Error::Dataset("nothing to benchmark".into()));
    }
    let mut rows = Vec::new();
    for &filtration in filtrations {
        let cfg = PhcConfig {
            filtration,
            ..base.clone()
        };
        for &mode in modes {
            let mut total = 0.0;
            for img in images {
                let start = Instant::now();
                let img = prepare_image(img, &cfg)?;
                match mode {
                    BenchMode::Local => drop(phc_stack(&img, &cfg)?),
                    BenchMode::Global => drop(global_ph(&img, &cfg)?),
                }
                total += start.elapsed().as_secs_f64();
            }
            log::info!(
                "{} {}: {:.4} s/image",
                filtration.name(),
                mode.name(),
                total / images.len() as f64
            );
            rows.push(BenchRow {
                filtration,
                mode,
                images: images.len(),
                mean_seconds: total / images.len() as f64,
            });
        }
    }
    Ok(BenchReport { rows })
}

/// Benchmarks a seeded sample of `sample_size` distinct images from the
/// index. Decoding is not timed.
pub fn bench(
    index: &DatasetIndex,
    sample_size: usize,
    seed: u64,
    base: &PhcConfig,
    filtrations: &[FiltrationKind],
    modes: &[BenchMode],
) -> Result<BenchReport> {
    let mut paths: Vec<_> = index.entries.iter().map(|e| e.path.clone()).collect();
    paths.sort();
    paths.dedup();
    if paths.len() < sample_size {
        return Err(Error::Dataset(format!(
            "benchmark needs {sample_size} images, index has {}",
            paths.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks = index::sample(&mut rng, paths.len(), sample_size).into_vec();
    picks.sort_unstable();
    let images = picks
        .into_iter()
        .map(|i| load_gray(&paths[i]))
        .collect::<Result<Vec<_>>>()?;
    bench_images(&images, base, filtrations, modes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{synthetic_slide, SlideParams};

    #[test]
    fn report_has_six_cells() {
        let params = SlideParams {
            side: 64,
            ..SlideParams::default()
        };
        let images = vec![synthetic_slide(params, 1)];
        let report = bench_images(
            &images,
            &PhcConfig::default(),
            &FiltrationKind::ALL,
            &[BenchMode::Local, BenchMode::Global],
        )
        .unwrap();
        assert_eq!(report.rows.len(), 6);
        assert_eq!(report.to_csv().lines().count(), 7);
        assert_eq!(report.to_table().lines().count(), 4);
    }
}
