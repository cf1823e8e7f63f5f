//! Fixtures shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use phc_core::imgprep::{BinaryMask, GrayImage, Raster};
use rand::Rng;

pub fn random_mask<R: Rng>(rng: &mut R, side: usize, density: f64) -> BinaryMask {
    Raster::from_fn(side, side, |_, _| rng.gen_bool(density))
}

/// Dark foreground on a white background, so the default threshold recovers
/// the mask exactly.
pub fn mask_to_gray(mask: &BinaryMask) -> GrayImage {
    mask.map(|on| if on { 0 } else { 255 })
}

/// Outline of a 4x4 square with its top-left pixel at `(row, col)`.
pub fn ring_mask(side: usize, row: usize, col: usize) -> BinaryMask {
    Raster::from_fn(side, side, |r, c| {
        let (dr, dc) = (r.wrapping_sub(row), c.wrapping_sub(col));
        dr < 4 && dc < 4 && (dr == 0 || dr == 3 || dc == 0 || dc == 3)
    })
}

/// Height in pixels of the narrative level `t` on a 64-pixel canvas spanning
/// t in [0, 5].
pub fn level(t: f64) -> usize {
    (t * 63.0 / 5.0).round() as usize
}

/// An "A"-like figure on a 64x64 canvas: a left leg starting at t = 0.5, a
/// right leg reaching down to t = 0, a crossbar at t = 2, a second bar at
/// t = 3, a divider splitting the area above t = 3 and an apex closing the
/// left part at t = 5 and the right part at t = 4.5.
pub fn figure_a_mask() -> BinaryMask {
    let mut mask = Raster::filled(64, 64, false);
    let mut paint = |y0: usize, y1: usize, x0: usize, x1: usize| {
        for y in y0..=y1 {
            for x in x0..=x1 {
                mask.set(63 - y, x, true);
            }
        }
    };
    // left leg and apex
    paint(level(0.5), 63, 8, 9);
    paint(63, 63, 8, 32);
    // divider between the two upper regions
    paint(level(3.0), 63, 31, 32);
    // right leg and its closing stroke
    paint(0, level(4.5), 55, 56);
    paint(level(4.5), level(4.5), 31, 56);
    // bars
    paint(level(3.0), level(3.0), 8, 56);
    paint(level(2.0), level(2.0), 8, 56);
    mask
}
