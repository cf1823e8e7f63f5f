//! Filtered simplicial complexes of dimension at most two.
//!
//! Simplices live in a flat array sorted by `(dim, vertices)`, so the faces of
//! any simplex can be found by binary search within its dimension's block. The
//! filtration order is kept separately as a permutation of that array.

mod alpha;
mod grid;

use std::cmp::Ordering;
use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use alpha::{build_alpha, build_alpha_from_points, circumradius_sq};
pub use grid::{
    assign_height, build_adjacency_complex, build_adjacency_complex_with, build_lower_star, build_lower_star_with,
    Connectivity, GridOptions,
};

/// Which filtration a complex (and the diagrams computed from it) carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FiltrationKind {
    /// Adjacency complex of a mask filtered by the height function.
    #[default]
    Height,
    /// All pixels, filtered by intensity / 255.
    #[serde(alias = "lowerstar")]
    LowerStar,
    /// Alpha complex of the foreground pixel centers.
    Alpha,
}

impl FiltrationKind {
    pub const ALL: [FiltrationKind; 3] = [FiltrationKind::Alpha, FiltrationKind::Height, FiltrationKind::LowerStar];

    pub fn name(self) -> &'static str {
        match self {
            FiltrationKind::Height => "height",
            FiltrationKind::LowerStar => "lower-star",
            FiltrationKind::Alpha => "alpha",
        }
    }
}

impl fmt::Display for FiltrationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FiltrationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "height" => Ok(FiltrationKind::Height),
            "lower-star" | "lowerstar" => Ok(FiltrationKind::LowerStar),
            "alpha" => Ok(FiltrationKind::Alpha),
            other => Err(Error::Config(format!("unknown filtration `{other}`"))),
        }
    }
}

/// A vertex, edge or triangle given by strictly increasing vertex ids.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Simplex {
    vertices: [u32; 3],
    dim: u8,
}

impl Simplex {
    pub fn vertex(v: u32) -> Self {
        Simplex {
            vertices: [v, 0, 0],
            dim: 0,
        }
    }

    pub fn edge(a: u32, b: u32) -> Self {
        assert_ne!(a, b, "degenerate edge");
        Simplex {
            vertices: [a.min(b), a.max(b), 0],
            dim: 1,
        }
    }

    pub fn triangle(a: u32, b: u32, c: u32) -> Self {
        let mut v = [a, b, c];
        v.sort_unstable();
        assert!(v[0] < v[1] && v[1] < v[2], "degenerate triangle");
        Simplex { vertices: v, dim: 2 }
    }

    pub fn from_vertices(vertices: &[u32]) -> Option<Self> {
        match *vertices {
            [a] => Some(Simplex::vertex(a)),
            [a, b] if a != b => Some(Simplex::edge(a, b)),
            [a, b, c] if a != b && b != c && a != c => Some(Simplex::triangle(a, b, c)),
            _ => None,
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn vertices(&self) -> &[u32] {
        &self.vertices[..=self.dim as usize]
    }

    /// Codimension-one faces; empty for a vertex.
    pub fn facets(&self) -> impl Iterator<Item = Simplex> + '_ {
        let d = self.dim as usize;
        let v = self.vertices;
        (0..if d == 0 { 0 } else { d + 1 }).map(move |skip| {
            let mut rest = [0u32; 2];
            let mut k = 0;
            for (i, &x) in v[..=d].iter().enumerate() {
                if i != skip {
                    rest[k] = x;
                    k += 1;
                }
            }
            Simplex::from_vertices(&rest[..d]).expect("facet of a valid simplex")
        })
    }
}

impl Ord for Simplex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dim
            .cmp(&other.dim)
            .then_with(|| self.vertices().cmp(other.vertices()))
    }
}

impl PartialOrd for Simplex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.vertices())
    }
}

/// A simplicial complex with a real value per simplex and a total insertion
/// order that is nondecreasing in value and lists faces before cofaces.
///
/// Vertex `i` has planar coordinates `vertex_coords[i]` in pixel units, with
/// `y` growing from the bottom row of the source raster upwards.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredComplex {
    kind: FiltrationKind,
    simplices: Vec<Simplex>,
    filtration: Vec<f64>,
    vertex_coords: Vec<[f64; 2]>,
    order: Vec<u32>,
    dim_start: [usize; 4],
}

impl FilteredComplex {
    /// Stores the simplices in canonical order and derives the filtration
    /// order. Face closure is not checked here; see [`Self::validate`].
    pub fn new(
        kind: FiltrationKind,
        simplices: Vec<Simplex>,
        filtration: Vec<f64>,
        vertex_coords: Vec<[f64; 2]>,
    ) -> Result<Self> {
        if simplices.len() != filtration.len() {
            return Err(Error::Structure(format!(
                "{} simplices but {} filtration values",
                simplices.len(),
                filtration.len()
            )));
        }
        if filtration.iter().any(|v| v.is_nan()) {
            return Err(Error::Structure("NaN filtration value".into()));
        }
        let mut paired: Vec<(Simplex, f64)> = simplices.into_iter().zip(filtration).collect();
        paired.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = paired.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Structure(format!("duplicate simplex {:?}", w[0].0)));
        }
        let (simplices, filtration): (Vec<_>, Vec<_>) = paired.into_iter().unzip();
        let mut dim_start = [simplices.len(); 4];
        for d in (0..3).rev() {
            dim_start[d] = simplices.partition_point(|s| s.dim() < d);
        }
        let n_vertices = dim_start[1];
        if vertex_coords.len() != n_vertices {
            return Err(Error::Structure(format!(
                "{} vertices but {} coordinates",
                n_vertices,
                vertex_coords.len()
            )));
        }
        if let Some((i, s)) = simplices[..n_vertices]
            .iter()
            .enumerate()
            .find(|(i, s)| s.vertices()[0] as usize != *i)
        {
            return Err(Error::Structure(format!(
                "vertex ids must be 0..{n_vertices}; slot {i} holds {:?}",
                s
            )));
        }
        let mut cx = FilteredComplex {
            kind,
            simplices,
            filtration,
            vertex_coords,
            order: Vec::new(),
            dim_start,
        };
        cx.recompute_order();
        Ok(cx)
    }

    pub fn empty(kind: FiltrationKind) -> Self {
        FilteredComplex {
            kind,
            simplices: Vec::new(),
            filtration: Vec::new(),
            vertex_coords: Vec::new(),
            order: Vec::new(),
            dim_start: [0; 4],
        }
    }

    /// Ties in value are broken by dimension, then by the lexicographic vertex
    /// list, which is exactly the canonical storage order.
    fn recompute_order(&mut self) {
        let mut order: Vec<u32> = (0..self.simplices.len() as u32).collect();
        let f = &self.filtration;
        order.sort_by(|&a, &b| f[a as usize].total_cmp(&f[b as usize]).then_with(|| a.cmp(&b)));
        self.order = order;
    }

    /// Sets each vertex value from `values` and every higher simplex to the
    /// maximum over its vertices.
    pub fn with_vertex_values(mut self, values: &[f64]) -> Result<Self> {
        if values.len() != self.num_vertices() {
            return Err(Error::Structure(format!(
                "{} vertex values for {} vertices",
                values.len(),
                self.num_vertices()
            )));
        }
        for (s, f) in self.simplices.iter().zip(self.filtration.iter_mut()) {
            *f = s
                .vertices()
                .iter()
                .map(|&v| values[v as usize])
                .fold(f64::NEG_INFINITY, f64::max);
        }
        self.recompute_order();
        Ok(self)
    }

    pub fn kind(&self) -> FiltrationKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn simplices(&self) -> &[Simplex] {
        &self.simplices
    }

    pub fn filtration(&self) -> &[f64] {
        &self.filtration
    }

    pub fn vertex_coords(&self) -> &[[f64; 2]] {
        &self.vertex_coords
    }

    /// Simplex indices in filtration order.
    pub fn order(&self) -> &[u32] {
        &self.order
    }

    pub fn num_vertices(&self) -> usize {
        self.dim_start[1]
    }

    pub fn count_dim(&self, dim: usize) -> usize {
        if dim > 2 {
            return 0;
        }
        self.dim_start[dim + 1] - self.dim_start[dim]
    }

    /// Index range of the simplices of dimension `dim` in storage order.
    pub fn dim_range(&self, dim: usize) -> std::ops::Range<usize> {
        self.dim_start[dim.min(3)]..self.dim_start[(dim + 1).min(3)]
    }

    pub fn index_of(&self, simplex: &Simplex) -> Option<usize> {
        let range = self.dim_range(simplex.dim());
        let block = &self.simplices[range.clone()];
        block.binary_search(simplex).ok().map(|i| range.start + i)
    }

    /// Storage indices of the codimension-one faces of simplex `idx`.
    pub fn facet_indices(&self, idx: usize) -> Result<Vec<usize>> {
        self.simplices[idx]
            .facets()
            .map(|face| {
                self.index_of(&face)
                    .ok_or_else(|| Error::Structure(format!("face {:?} of {:?} is missing", face, self.simplices[idx])))
            })
            .collect()
    }

    /// Checks face closure, value monotonicity and that `order` lists faces
    /// before cofaces.
    pub fn validate(&self) -> Result<()> {
        let mut position = vec![0usize; self.len()];
        for (pos, &idx) in self.order.iter().enumerate() {
            position[idx as usize] = pos;
        }
        for idx in 0..self.len() {
            for face in self.facet_indices(idx)? {
                if self.filtration[face] > self.filtration[idx] {
                    return Err(Error::Structure(format!(
                        "face {:?} enters after coface {:?}",
                        self.simplices[face], self.simplices[idx]
                    )));
                }
                if position[face] >= position[idx] {
                    return Err(Error::Structure(format!(
                        "order lists {:?} before its face {:?}",
                        self.simplices[idx], self.simplices[face]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn euler_characteristic(&self) -> i64 {
        (0..3)
            .map(|d| {
                let n = self.count_dim(d) as i64;
                if d % 2 == 0 {
                    n
                } else {
                    -n
                }
            })
            .sum()
    }

    /// Number of connected components of the 1-skeleton.
    pub fn component_count(&self) -> usize {
        let mut uf = crate::persistence::UnionFind::new(self.num_vertices());
        for s in &self.simplices[self.dim_range(1)] {
            let v = s.vertices();
            uf.union(v[0] as usize, v[1] as usize);
        }
        uf.set_count()
    }

    /// One CSV row per simplex in filtration order: `vertices,dim,filtration`,
    /// vertex ids separated by spaces.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "vertices,dim,filtration")?;
        for &idx in &self.order {
            let s = &self.simplices[idx as usize];
            let ids: Vec<String> = s.vertices().iter().map(u32::to_string).collect();
            writeln!(out, "{},{},{}", ids.join(" "), s.dim(), self.filtration[idx as usize])?;
        }
        Ok(())
    }
}
