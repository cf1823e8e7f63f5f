//! Image conditioning: grayscale conversion, 2x downscaling, thresholding and
//! 2x2 binary morphology.
//!
//! All rasters are row-major with row 0 at the top. Every operation here is a
//! pure function of its input.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default intensity threshold for the tissue mask.
pub const DEFAULT_THRESHOLD: u8 = 200;

/// A row-major raster of `T` values.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Raster<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

/// 8-bit RGB image.
pub type RgbImage = Raster<[u8; 3]>;
/// 8-bit grayscale image.
pub type GrayImage = Raster<u8>;
/// Foreground (`true`) / background (`false`) mask.
pub type BinaryMask = Raster<bool>;

impl<T> Raster<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Geometry(format!(
                "buffer of {} values does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Raster { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
            }
        }
        Raster { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn is_square(&self) -> bool {
        self.width == self.height
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }
}

impl<T: Copy> Raster<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Raster {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: T) {
        let idx = row * self.width + col;
        self.data[idx] = value;
    }

    pub fn map<U>(&self, f: impl FnMut(T) -> U) -> Raster<U> {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().copied().map(f).collect(),
        }
    }

    /// Restriction to the `height` x `width` block whose top-left pixel is
    /// (`row`, `col`).
    pub fn crop(&self, row: usize, col: usize, height: usize, width: usize) -> Result<Self> {
        if row + height > self.height || col + width > self.width {
            return Err(Error::Geometry(format!(
                "crop {height}x{width} at ({row}, {col}) exceeds {}x{}",
                self.height, self.width
            )));
        }
        Ok(Raster::from_fn(width, height, |r, c| self.get(row + r, col + c)))
    }

    /// Applies one of the eight axis-aligned symmetries of the raster grid.
    pub fn transform(&self, element: Dihedral) -> Self {
        let (w, h) = (self.width, self.height);
        match element {
            Dihedral::Identity => self.clone(),
            Dihedral::Rot90 => Raster::from_fn(h, w, |r, c| self.get(h - 1 - c, r)),
            Dihedral::Rot180 => Raster::from_fn(w, h, |r, c| self.get(h - 1 - r, w - 1 - c)),
            Dihedral::Rot270 => Raster::from_fn(h, w, |r, c| self.get(c, w - 1 - r)),
            Dihedral::FlipHorizontal => Raster::from_fn(w, h, |r, c| self.get(r, w - 1 - c)),
            Dihedral::FlipVertical => Raster::from_fn(w, h, |r, c| self.get(h - 1 - r, c)),
            Dihedral::Transpose => Raster::from_fn(h, w, |r, c| self.get(c, r)),
            Dihedral::AntiTranspose => Raster::from_fn(h, w, |r, c| self.get(h - 1 - c, w - 1 - r)),
        }
    }
}

impl BinaryMask {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    /// `true` when every foreground pixel of `self` is foreground in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }
}

/// The dihedral group of order 8 acting on a square raster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dihedral {
    Identity,
    /// Quarter turn clockwise.
    Rot90,
    Rot180,
    /// Quarter turn counter-clockwise.
    Rot270,
    /// Mirror left-right.
    FlipHorizontal,
    /// Mirror top-bottom.
    FlipVertical,
    /// Reflection across the main diagonal.
    Transpose,
    /// Reflection across the anti-diagonal.
    AntiTranspose,
}

impl Dihedral {
    pub const ALL: [Dihedral; 8] = [
        Dihedral::Identity,
        Dihedral::Rot90,
        Dihedral::Rot180,
        Dihedral::Rot270,
        Dihedral::FlipHorizontal,
        Dihedral::FlipVertical,
        Dihedral::Transpose,
        Dihedral::AntiTranspose,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Dihedral::Identity => "id",
            Dihedral::Rot90 => "r90",
            Dihedral::Rot180 => "r180",
            Dihedral::Rot270 => "r270",
            Dihedral::FlipHorizontal => "fh",
            Dihedral::FlipVertical => "fv",
            Dihedral::Transpose => "tr",
            Dihedral::AntiTranspose => "atr",
        }
    }
}

/// Which side of the threshold counts as foreground.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdPolarity {
    /// Foreground iff intensity < k (dark stained tissue on a light background).
    #[default]
    Below,
    /// Foreground iff intensity >= k.
    AtLeast,
}

/// Binary morphology applied once after thresholding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Morphology {
    None,
    #[default]
    Dilate,
    Erode,
}

/// BT.601 luma with round-half-up, computed exactly in integers.
pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    img.map(|[r, g, b]| {
        let weighted = 299 * u32::from(r) + 587 * u32::from(g) + 114 * u32::from(b);
        ((weighted + 500) / 1000).min(255) as u8
    })
}

/// Halves both dimensions by averaging each 2x2 block.
pub fn resize_half(img: &GrayImage) -> Result<GrayImage> {
    if img.width % 2 != 0 || img.height % 2 != 0 {
        return Err(Error::Geometry(format!(
            "2x2 area averaging needs even dimensions, got {}x{}",
            img.width, img.height
        )));
    }
    Ok(Raster::from_fn(img.width / 2, img.height / 2, |r, c| {
        let sum: u32 = [(0, 0), (0, 1), (1, 0), (1, 1)]
            .iter()
            .map(|&(dr, dc)| u32::from(img.get(2 * r + dr, 2 * c + dc)))
            .sum();
        ((sum + 2) / 4) as u8
    }))
}

/// Foreground iff intensity < `k`.
pub fn threshold(img: &GrayImage, k: u8) -> BinaryMask {
    threshold_with(img, k, ThresholdPolarity::Below)
}

pub fn threshold_with(img: &GrayImage, k: u8, polarity: ThresholdPolarity) -> BinaryMask {
    match polarity {
        ThresholdPolarity::Below => img.map(|v| v < k),
        ThresholdPolarity::AtLeast => img.map(|v| v >= k),
    }
}

const BLOCK_2X2: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// Dilation by the 2x2 block anchored at its top-left pixel: every foreground
/// pixel p paints p, its right, lower and lower-right neighbours.
pub fn dilate(mask: &BinaryMask) -> BinaryMask {
    let mut out = BinaryMask::filled(mask.width, mask.height, false);
    for row in 0..mask.height {
        for col in 0..mask.width {
            if !mask.get(row, col) {
                continue;
            }
            for &(dr, dc) in &BLOCK_2X2 {
                let (r, c) = (row + dr, col + dc);
                if r < mask.height && c < mask.width {
                    out.set(r, c, true);
                }
            }
        }
    }
    out
}

/// Erosion by the same 2x2 block: p survives iff the whole block anchored at p
/// is foreground. Out-of-bounds pixels count as background.
pub fn erode(mask: &BinaryMask) -> BinaryMask {
    Raster::from_fn(mask.width, mask.height, |row, col| {
        BLOCK_2X2.iter().all(|&(dr, dc)| {
            let (r, c) = (row + dr, col + dc);
            r < mask.height && c < mask.width && mask.get(r, c)
        })
    })
}

pub fn apply_morphology(mask: &BinaryMask, op: Morphology) -> BinaryMask {
    match op {
        Morphology::None => mask.clone(),
        Morphology::Dilate => dilate(mask),
        Morphology::Erode => erode(mask),
    }
}

/// Reads a PNG or JPEG. 16-bit channels are brought to 8 bits by integer
/// division by 257.
pub fn load_rgb(path: &Path) -> Result<RgbImage> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    let color = img.color();
    let bits_per_channel = color.bits_per_pixel() / u16::from(color.channel_count());
    let (width, height) = (img.width() as usize, img.height() as usize);
    let data: Vec<[u8; 3]> = if bits_per_channel == 16 {
        img.to_rgb16().pixels().map(|p| p.0.map(|v| (v / 257) as u8)).collect()
    } else {
        img.to_rgb8().pixels().map(|p| p.0).collect()
    };
    Raster::new(width, height, data)
}

pub fn load_gray(path: &Path) -> Result<GrayImage> {
    load_rgb(path).map(|img| to_grayscale(&img))
}

/// Writes an 8-bit grayscale PNG or JPEG, chosen by extension.
pub fn save_gray(img: &GrayImage, path: &Path) -> Result<()> {
    let buf = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, img.data().to_vec())
        .ok_or_else(|| Error::Geometry("raster too large to encode".into()))?;
    buf.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray(width: usize, rows: &[&[u8]]) -> GrayImage {
        Raster::new(width, rows.len(), rows.concat()).unwrap()
    }

    #[test]
    fn luma_examples() {
        let img = RgbImage::new(3, 1, vec![[100, 100, 100], [255, 255, 255], [255, 0, 0]]).unwrap();
        assert_eq!(to_grayscale(&img).data(), &[100, 255, 76]);
    }

    #[test]
    fn resize_examples() {
        let constant = GrayImage::filled(4, 4, 37);
        let half = resize_half(&constant).unwrap();
        assert_eq!((half.width(), half.height()), (2, 2));
        assert!(half.data().iter().all(|&v| v == 37));

        let block = gray(2, &[&[0, 0], &[255, 255]]);
        assert_eq!(resize_half(&block).unwrap().data(), &[128]);

        let big = GrayImage::filled(1024, 1024, 0);
        let half = resize_half(&big).unwrap();
        assert_eq!((half.width(), half.height()), (512, 512));
    }

    #[test]
    fn resize_rejects_odd_sides() {
        assert!(matches!(
            resize_half(&GrayImage::filled(3, 4, 0)),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn threshold_examples() {
        let img = gray(2, &[&[10, 250], &[200, 199]]);
        let mask = threshold(&img, DEFAULT_THRESHOLD);
        assert_eq!(mask.data(), &[true, false, false, true]);
        assert_eq!(threshold(&GrayImage::filled(5, 5, 255), 200).count(), 0);

        let inverted = threshold_with(&img, 200, ThresholdPolarity::AtLeast);
        assert_eq!(inverted.data(), &[false, true, true, false]);
    }

    #[test]
    fn dilate_examples() {
        let mut single = BinaryMask::filled(3, 3, false);
        single.set(0, 0, true);
        let out = dilate(&single);
        let fg: Vec<_> = (0..9).filter(|&i| out.data()[i]).map(|i| (i / 3, i % 3)).collect();
        assert_eq!(fg, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);

        let empty = BinaryMask::filled(4, 4, false);
        assert_eq!(dilate(&empty), empty);
        let full = BinaryMask::filled(4, 4, true);
        assert_eq!(dilate(&full), full);
    }

    #[test]
    fn erode_is_dual_to_dilate_on_interior() {
        let mut mask = BinaryMask::filled(5, 5, false);
        for r in 1..4 {
            for c in 1..4 {
                mask.set(r, c, true);
            }
        }
        let eroded = erode(&mask);
        assert_eq!(eroded.count(), 4);
        assert!(eroded.get(1, 1) && eroded.get(2, 2));
        assert!(eroded.is_subset_of(&mask));
        assert_eq!(dilate(&eroded), mask);
    }

    #[test]
    fn dihedral_elements_are_distinct_on_asymmetric_raster() {
        let img = Raster::from_fn(3, 2, |r, c| (r * 3 + c) as u8);
        let images: Vec<_> = Dihedral::ALL.iter().map(|&d| img.transform(d)).collect();
        for i in 0..8 {
            for j in (i + 1)..8 {
                assert_ne!(images[i], images[j], "{:?} vs {:?}", Dihedral::ALL[i], Dihedral::ALL[j]);
            }
        }
        // quarter turn clockwise moves the top-left pixel to the top-right
        let rot = img.transform(Dihedral::Rot90);
        assert_eq!((rot.width(), rot.height()), (2, 3));
        assert_eq!(rot.get(0, 1), img.get(0, 0));
        assert_eq!(rot.transform(Dihedral::Rot270), img);
    }

    #[test]
    fn crop_bounds() {
        let img = Raster::from_fn(4, 4, |r, c| (r * 4 + c) as u8);
        let sub = img.crop(2, 1, 2, 3).unwrap();
        assert_eq!(sub.data(), &[9, 10, 11, 13, 14, 15]);
        assert!(img.crop(3, 0, 2, 2).is_err());
    }
}
