//! Pixel-grid complexes: the adjacency complex of a mask and the lower-star
//! complex of a grayscale image.

use serde::{Deserialize, Serialize};

use super::{FilteredComplex, FiltrationKind, Simplex};
use crate::imgprep::{BinaryMask, GrayImage};

/// Pixel neighbourhood used for edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridOptions {
    pub connectivity: Connectivity,
    /// Add every 3-clique of the edge graph as a triangle.
    pub flag_expansion: bool,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            connectivity: Connectivity::Eight,
            flag_expansion: true,
        }
    }
}

const NO_VERTEX: u32 = u32::MAX;

/// Vertices are the `present` pixels numbered in row-major order.
fn grid_complex(
    width: usize,
    height: usize,
    present: &[bool],
    opts: GridOptions,
    kind: FiltrationKind,
) -> FilteredComplex {
    let mut id = vec![NO_VERTEX; width * height];
    let mut coords = Vec::new();
    for row in 0..height {
        for col in 0..width {
            let p = row * width + col;
            if present[p] {
                id[p] = coords.len() as u32;
                coords.push([col as f64, (height - 1 - row) as f64]);
            }
        }
    }
    let n_vertices = coords.len();
    if n_vertices == 0 {
        return FilteredComplex::empty(kind);
    }
    let vid = |row: usize, col: usize| id[row * width + col];

    let mut simplices: Vec<Simplex> = (0..n_vertices as u32).map(Simplex::vertex).collect();
    let eight = opts.connectivity == Connectivity::Eight;
    for row in 0..height {
        for col in 0..width {
            let a = vid(row, col);
            if a == NO_VERTEX {
                continue;
            }
            let mut link = |b: u32| {
                if b != NO_VERTEX {
                    simplices.push(Simplex::edge(a, b));
                }
            };
            if col + 1 < width {
                link(vid(row, col + 1));
            }
            if row + 1 < height {
                link(vid(row + 1, col));
                if eight && col + 1 < width {
                    link(vid(row + 1, col + 1));
                }
                if eight && col > 0 {
                    link(vid(row + 1, col - 1));
                }
            }
        }
    }
    // Pairwise 8-adjacent pixel triples always fit in one 2x2 block, and each
    // triple spans a unique block.
    if eight && opts.flag_expansion && width > 1 && height > 1 {
        for row in 0..height - 1 {
            for col in 0..width - 1 {
                let block = [
                    vid(row, col),
                    vid(row, col + 1),
                    vid(row + 1, col),
                    vid(row + 1, col + 1),
                ];
                let present: Vec<u32> = block.into_iter().filter(|&v| v != NO_VERTEX).collect();
                match present.len() {
                    3 => simplices.push(Simplex::triangle(present[0], present[1], present[2])),
                    4 => {
                        for skip in 0..4 {
                            let t: Vec<u32> = (0..4).filter(|&i| i != skip).map(|i| present[i]).collect();
                            simplices.push(Simplex::triangle(t[0], t[1], t[2]));
                        }
                    }
                    _ => {}
                }
            }
        }
    }
    let zeros = vec![0.0; simplices.len()];
    FilteredComplex::new(kind, simplices, zeros, coords).expect("grid complex is well formed")
}

/// Adjacency complex of the foreground with the default neighbourhood
/// (8-connected, triangles on 3-cliques), filtered by height.
pub fn build_adjacency_complex(mask: &BinaryMask) -> FilteredComplex {
    build_adjacency_complex_with(mask, GridOptions::default())
}

pub fn build_adjacency_complex_with(mask: &BinaryMask, opts: GridOptions) -> FilteredComplex {
    let cx = grid_complex(mask.width(), mask.height(), mask.data(), opts, FiltrationKind::Height);
    assign_height(cx)
}

/// Height filtration: each vertex gets its `y` coordinate, every other simplex
/// the maximum over its vertices.
pub fn assign_height(cx: FilteredComplex) -> FilteredComplex {
    let heights: Vec<f64> = cx.vertex_coords().iter().map(|c| c[1]).collect();
    cx.with_vertex_values(&heights).expect("one height per vertex")
}

/// Lower-star filtration of pixel intensity scaled to [0, 1].
pub fn build_lower_star(img: &GrayImage) -> FilteredComplex {
    build_lower_star_with(img, GridOptions::default())
}

pub fn build_lower_star_with(img: &GrayImage, opts: GridOptions) -> FilteredComplex {
    let present = vec![true; img.width() * img.height()];
    let cx = grid_complex(img.width(), img.height(), &present, opts, FiltrationKind::LowerStar);
    let values: Vec<f64> = img.data().iter().map(|&v| f64::from(v) / 255.0).collect();
    cx.with_vertex_values(&values).expect("one intensity per pixel")
}
