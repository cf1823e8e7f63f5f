//! Seeded synthetic stand-ins for H&E slide tiles.
//!
//! A light, noisy background carries dark cell membranes (rings with lighter
//! interiors), solid nuclei and scattered specks, so that thresholding at the
//! default level yields a mask with many small holes and components.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::imgprep::{GrayImage, Raster, RgbImage};

#[derive(Debug, Clone, Copy)]
pub struct SlideParams {
    pub side: usize,
    /// Expected number of ring-shaped cells per 512x512 area.
    pub cells_per_512: usize,
    pub nuclei_per_512: usize,
}

impl Default for SlideParams {
    fn default() -> Self {
        SlideParams {
            side: 512,
            cells_per_512: 160,
            nuclei_per_512: 120,
        }
    }
}

pub fn synthetic_slide(params: SlideParams, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = params.side;
    let mut img = Raster::from_fn(side, side, |_, _| rng.gen_range(215u8..=245));
    let scale = (side * side) as f64 / (512.0 * 512.0);
    let n_cells = (params.cells_per_512 as f64 * scale).round() as usize;
    let n_nuclei = (params.nuclei_per_512 as f64 * scale).round() as usize;

    for _ in 0..n_cells {
        let cy = rng.gen_range(0.0..side as f64);
        let cx = rng.gen_range(0.0..side as f64);
        let radius = rng.gen_range(4.0..13.0);
        let thickness = rng.gen_range(1.2..3.0);
        let membrane = rng.gen_range(90u8..170);
        paint_disc(&mut img, cy, cx, radius + thickness, |v, d| {
            if d >= radius {
                membrane.min(v)
            } else {
                v.max(205)
            }
        });
    }
    for _ in 0..n_nuclei {
        let cy = rng.gen_range(0.0..side as f64);
        let cx = rng.gen_range(0.0..side as f64);
        let radius = rng.gen_range(1.5..5.0);
        let tone = rng.gen_range(60u8..150);
        paint_disc(&mut img, cy, cx, radius, |v, _| tone.min(v));
    }
    let specks = side * side / 300;
    for _ in 0..specks {
        let r = rng.gen_range(0..side);
        let c = rng.gen_range(0..side);
        img.set(r, c, rng.gen_range(100u8..190));
    }
    img
}

fn paint_disc(img: &mut GrayImage, cy: f64, cx: f64, radius: f64, f: impl Fn(u8, f64) -> u8) {
    let side = img.height() as i64;
    let r0 = ((cy - radius).floor() as i64).max(0);
    let r1 = ((cy + radius).ceil() as i64).min(side - 1);
    let c0 = ((cx - radius).floor() as i64).max(0);
    let c1 = ((cx + radius).ceil() as i64).min(img.width() as i64 - 1);
    for r in r0..=r1 {
        for c in c0..=c1 {
            let d = ((r as f64 - cy).powi(2) + (c as f64 - cx).powi(2)).sqrt();
            if d <= radius {
                let (r, c) = (r as usize, c as usize);
                img.set(r, c, f(img.get(r, c), d));
            }
        }
    }
}

/// Grayscale slide replicated into three channels.
pub fn synthetic_rgb_slide(params: SlideParams, seed: u64) -> RgbImage {
    synthetic_slide(params, seed).map(|v| [v, v, v])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgprep::threshold;

    #[test]
    fn seeded_and_plausible() {
        let a = synthetic_slide(SlideParams::default(), 7);
        assert_eq!(a, synthetic_slide(SlideParams::default(), 7));
        assert_ne!(a, synthetic_slide(SlideParams::default(), 8));
        let fg = threshold(&a, 200).count() as f64 / (512.0 * 512.0);
        assert!((0.03..0.5).contains(&fg), "foreground fraction {fg}");
    }
}
