//! Labelled slide directories: ingestion, class balancing, splitting, batch
//! export and timing.

mod bench;
mod export;

pub use bench::{bench, bench_images, BenchMode, BenchReport, BenchRow};
pub use export::{
    export, output_array, sha256_hex, verify_manifest, ExportConfig, ExportFailure, ExportManifest, ExportMode,
    ExportReport, ManifestEntry, MANIFEST_NAME,
};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::warn;
use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgprep::Dihedral;

pub const DEFAULT_TARGET_PER_CLASS: usize = 381;
pub const DEFAULT_RATIOS: (f64, f64, f64) = (0.70, 0.10, 0.20);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Class {
    NonTumor,
    NecroticTumor,
    ViableTumor,
}

impl Class {
    pub const ALL: [Class; 3] = [Class::NonTumor, Class::NecroticTumor, Class::ViableTumor];

    pub fn name(self) -> &'static str {
        match self {
            Class::NonTumor => "non-tumor",
            Class::NecroticTumor => "necrotic-tumor",
            Class::ViableTumor => "viable-tumor",
        }
    }

    /// Recognizes folder names case- and punctuation-insensitively, e.g.
    /// `Non-Tumor`, `necrotic_tumor`, `Viable Tumor`. `Non-Viable-Tumor` is
    /// the necrotic class.
    pub fn from_folder_name(name: &str) -> Option<Class> {
        let key: String = name
            .chars()
            .filter(char::is_ascii_alphanumeric)
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match key.as_str() {
            "nontumor" | "nontumour" | "normal" => Some(Class::NonTumor),
            "necrotictumor" | "necrotictumour" | "necrotic" | "nonviabletumor" | "nonviabletumour" => {
                Some(Class::NecroticTumor)
            }
            "viabletumor" | "viabletumour" | "viable" => Some(Class::ViableTumor),
            _ => None,
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Class {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Class::from_folder_name(s).ok_or_else(|| Error::Dataset(format!("unknown class '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub path: PathBuf,
    pub class: Class,
    pub augmentation: Dihedral,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

impl Entry {
    /// Output stem unique within a dataset: class, path relative to the
    /// class folder with separators flattened, and the augmentation tag.
    pub fn stem(&self) -> String {
        let file = self
            .path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let parent = self
            .path
            .parent()
            .and_then(|p| p.file_name())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let ext = self
            .path
            .extension()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let base = if ext.is_empty() { file } else { format!("{file}.{ext}") };
        let base = if Class::from_folder_name(&parent).is_some() || parent.is_empty() {
            base
        } else {
            format!("{parent}__{base}")
        };
        let clean: String = base
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        format!("{}__{}__{}", self.class.name(), clean, self.augmentation.tag())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetIndex {
    pub entries: Vec<Entry>,
    /// Seed of the last randomized operation applied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl DatasetIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn class_counts(&self) -> BTreeMap<Class, usize> {
        let mut counts = BTreeMap::new();
        for e in &self.entries {
            *counts.entry(e.class).or_insert(0) += 1;
        }
        counts
    }

    pub fn split_counts(&self) -> BTreeMap<Split, usize> {
        let mut counts = BTreeMap::new();
        for e in &self.entries {
            if let Some(s) = e.split {
                *counts.entry(s).or_insert(0) += 1;
            }
        }
        counts
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

fn is_image_file(path: &Path) -> bool {
    let ext = path
        .extension()
        .map(|e| e.to_string_lossy().to_ascii_lowercase())
        .unwrap_or_default();
    matches!(ext.as_str(), "png" | "jpg" | "jpeg")
}

fn sorted_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|entry| entry.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<Vec<_>>>()?;
    paths.sort();
    Ok(paths)
}

fn collect_images(dir: &Path, class: Class, out: &mut Vec<Entry>) -> Result<()> {
    for path in sorted_dir(dir)? {
        if path.is_dir() {
            collect_images(&path, class, out)?;
        } else if is_image_file(&path) {
            out.push(Entry {
                path,
                class,
                augmentation: Dihedral::Identity,
                split: None,
            });
        } else {
            warn!("skipping non-image file {}", path.display());
        }
    }
    Ok(())
}

/// Indexes a directory with one subfolder per class. Subfolders are searched
/// recursively; entries are in sorted path order.
pub fn ingest(dir: &Path) -> Result<DatasetIndex> {
    let mut entries = Vec::new();
    for path in sorted_dir(dir)? {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        if !path.is_dir() {
            warn!("skipping {} outside any class folder", path.display());
            continue;
        }
        match Class::from_folder_name(&name) {
            Some(class) => collect_images(&path, class, &mut entries)?,
            None => warn!("skipping folder {} with unknown class name", path.display()),
        }
    }
    if entries.is_empty() {
        return Err(Error::Dataset(format!("no images found under {}", dir.display())));
    }
    let index = DatasetIndex { entries, seed: None };
    for (class, count) in index.class_counts() {
        log::info!("{class}: {count} images");
    }
    Ok(index)
}

/// Brings every class to `target` entries. Larger classes are subsampled
/// without replacement; smaller ones gain dihedral copies of their images,
/// drawn without replacement from the (image, transform) pairs not already
/// present.
pub fn balance(index: &DatasetIndex, target: usize, seed: u64) -> Result<DatasetIndex> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    let mut by_class: BTreeMap<Class, Vec<&Entry>> = BTreeMap::new();
    for e in &index.entries {
        by_class.entry(e.class).or_default().push(e);
    }
    for class in Class::ALL {
        let members = by_class.remove(&class).unwrap_or_default();
        if members.is_empty() {
            return Err(Error::Dataset(format!("class {class} is empty")));
        }
        if members.len() >= target {
            let mut keep = index::sample(&mut rng, members.len(), target).into_vec();
            keep.sort_unstable();
            entries.extend(keep.into_iter().map(|i| members[i].clone()));
            continue;
        }
        let originals: BTreeSet<&Path> = members.iter().map(|e| e.path.as_path()).collect();
        if originals.len() * Dihedral::ALL.len() < target {
            return Err(Error::Dataset(format!(
                "class {class} has {} images; 8 transforms each cannot reach {target}",
                originals.len()
            )));
        }
        let present: BTreeSet<(&Path, Dihedral)> = members.iter().map(|e| (e.path.as_path(), e.augmentation)).collect();
        let candidates: Vec<(&Path, Dihedral)> = originals
            .iter()
            .flat_map(|&p| Dihedral::ALL.iter().map(move |&d| (p, d)))
            .filter(|pair| !present.contains(pair))
            .collect();
        let needed = target - members.len();
        let mut picks = index::sample(&mut rng, candidates.len(), needed).into_vec();
        picks.sort_unstable();
        entries.extend(members.iter().map(|&e| e.clone()));
        entries.extend(picks.into_iter().map(|i| Entry {
            path: candidates[i].0.to_path_buf(),
            class,
            augmentation: candidates[i].1,
            split: None,
        }));
    }
    Ok(DatasetIndex {
        entries,
        seed: Some(seed),
    })
}

/// Stratified split: per class, `floor(n * val)` and `floor(n * test)`
/// entries go to validation and test, the rest to train. Classes with fewer
/// than 3 entries go entirely to train.
pub fn split(index: &DatasetIndex, ratios: (f64, f64, f64), seed: u64) -> Result<DatasetIndex> {
    let (train, val, test) = ratios;
    if [train, val, test].iter().any(|r| !(0.0..=1.0).contains(r)) || (train + val + test - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "split ratios must be in [0, 1] and sum to 1, got {train}/{val}/{test}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = index.clone();
    out.seed = Some(seed);
    for class in Class::ALL {
        let mut members: Vec<usize> = (0..out.entries.len())
            .filter(|&i| out.entries[i].class == class)
            .collect();
        let n = members.len();
        if n == 0 {
            continue;
        }
        if n < 3 {
            warn!("class {class} has only {n} entries; all go to train");
            for i in members {
                out.entries[i].split = Some(Split::Train);
            }
            continue;
        }
        members.shuffle(&mut rng);
        let n_val = (n as f64 * val).floor() as usize;
        let n_test = (n as f64 * test).floor() as usize;
        for (k, &i) in members.iter().enumerate() {
            out.entries[i].split = Some(if k < n_val {
                Split::Val
            } else if k < n_val + n_test {
                Split::Test
            } else {
                Split::Train
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic_index(counts: [usize; 3]) -> DatasetIndex {
        let entries = Class::ALL
            .iter()
            .zip(counts)
            .flat_map(|(&class, n)| {
                (0..n).map(move |i| Entry {
                    path: PathBuf::from(format!("{}/{i:04}.png", class.name())),
                    class,
                    augmentation: Dihedral::Identity,
                    split: None,
                })
            })
            .collect();
        DatasetIndex { entries, seed: None }
    }

    #[test]
    fn folder_names() {
        assert_eq!(Class::from_folder_name("Non-Tumor"), Some(Class::NonTumor));
        assert_eq!(Class::from_folder_name("Non-Viable-Tumor"), Some(Class::NecroticTumor));
        assert_eq!(Class::from_folder_name("viable_tumor"), Some(Class::ViableTumor));
        assert_eq!(Class::from_folder_name("misc"), None);
    }

    #[test]
    fn balance_reaches_target() {
        let b = balance(&synthetic_index([537, 263, 344]), 381, 1).unwrap();
        assert!(b.class_counts().values().all(|&c| c == 381));
        let pairs: BTreeSet<_> = b.entries.iter().map(|e| (e.path.clone(), e.augmentation)).collect();
        assert_eq!(pairs.len(), b.len());
    }

    #[test]
    fn class_at_target_is_untouched() {
        let idx = synthetic_index([5, 5, 5]);
        let b = balance(&idx, 5, 3).unwrap();
        assert_eq!(b.entries, idx.entries);
    }

    #[test]
    fn small_class_is_augmented() {
        let b = balance(&synthetic_index([381, 50, 381]), 381, 9).unwrap();
        let augmented: Vec<_> = b
            .entries
            .iter()
            .filter(|e| e.augmentation != Dihedral::Identity)
            .collect();
        assert_eq!(augmented.len(), 331);
        assert!(augmented.iter().all(|e| e.class == Class::NecroticTumor));
    }

    #[test]
    fn unreachable_target() {
        assert!(balance(&synthetic_index([10, 10, 10]), 81, 0).is_err());
        assert!(balance(&synthetic_index([10, 0, 10]), 5, 0).is_err());
    }

    #[test]
    fn split_arithmetic() {
        let b = balance(&synthetic_index([537, 263, 344]), 381, 1).unwrap();
        let s = split(&b, DEFAULT_RATIOS, 2).unwrap();
        let counts = s.split_counts();
        assert_eq!(counts[&Split::Train], 801);
        assert_eq!(counts[&Split::Val], 114);
        assert_eq!(counts[&Split::Test], 228);
        assert_eq!(s, split(&b, DEFAULT_RATIOS, 2).unwrap());
    }

    #[test]
    fn split_edge_cases() {
        let idx = synthetic_index([10, 2, 7]);
        let all_train = split(&idx, (1.0, 0.0, 0.0), 0).unwrap();
        assert!(all_train.entries.iter().all(|e| e.split == Some(Split::Train)));
        let s = split(&idx, DEFAULT_RATIOS, 0).unwrap();
        assert!(s
            .entries
            .iter()
            .filter(|e| e.class == Class::NecroticTumor)
            .all(|e| e.split == Some(Split::Train)));
        assert!(split(&idx, (0.5, 0.5, 0.5), 0).is_err());
    }

    #[test]
    fn stems_are_unique() {
        let b = balance(&synthetic_index([3, 3, 3]), 10, 0).unwrap();
        let stems: BTreeSet<_> = b.entries.iter().map(Entry::stem).collect();
        assert_eq!(stems.len(), b.len());
    }
}
