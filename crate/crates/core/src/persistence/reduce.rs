//! Sparse boundary-matrix reduction over Z/2 with clearing.

use super::{Interval, IntervalKind, PersistenceDiagram, Provenance};
use crate::complex::FilteredComplex;
use crate::error::{Error, Result};

const NONE: u32 = u32::MAX;

/// Columns hold the filtration positions of the boundary, sorted ascending.
struct BoundaryMatrix {
    columns: Vec<Vec<u32>>,
    dims: Vec<u8>,
}

impl BoundaryMatrix {
    /// Reduces in place and returns the (birth, death) position pairs in
    /// order of increasing death position.
    ///
    /// Dimensions are processed top-down so that every column that becomes a
    /// pivot row can be skipped (cleared) when its own dimension comes up.
    fn reduce(&mut self) -> Vec<(u32, u32)> {
        let n = self.columns.len();
        let max_dim = self.dims.iter().copied().max().unwrap_or(0);
        let mut pivot_col = vec![NONE; n];
        let mut cleared = vec![false; n];
        let mut scratch = Vec::new();
        for dim in (1..=max_dim).rev() {
            for j in 0..n {
                if self.dims[j] != dim {
                    continue;
                }
                if cleared[j] {
                    self.columns[j] = Vec::new();
                    continue;
                }
                let mut col = std::mem::take(&mut self.columns[j]);
                while let Some(&low) = col.last() {
                    let k = pivot_col[low as usize];
                    if k == NONE {
                        pivot_col[low as usize] = j as u32;
                        cleared[low as usize] = true;
                        break;
                    }
                    xor_sorted(&col, &self.columns[k as usize], &mut scratch);
                    std::mem::swap(&mut col, &mut scratch);
                }
                self.columns[j] = col;
            }
        }
        let mut pairs: Vec<(u32, u32)> = pivot_col
            .iter()
            .enumerate()
            .filter(|(_, &j)| j != NONE)
            .map(|(low, &j)| (low as u32, j))
            .collect();
        pairs.sort_unstable_by_key(|&(_, death)| death);
        pairs
    }
}

/// Symmetric difference of two ascending index lists.
fn xor_sorted(a: &[u32], b: &[u32], out: &mut Vec<u32>) {
    out.clear();
    out.reserve(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

/// Boundary columns of the complex in its filtration order, with every
/// position shifted by `offset`.
fn complex_columns(cx: &FilteredComplex, offset: u32) -> Result<(Vec<Vec<u32>>, Vec<u32>)> {
    let mut position = vec![0u32; cx.len()];
    for (pos, &idx) in cx.order().iter().enumerate() {
        position[idx as usize] = pos as u32 + offset;
    }
    let mut columns = Vec::with_capacity(cx.len());
    for &idx in cx.order() {
        let idx = idx as usize;
        let mut col: Vec<u32> = cx.facet_indices(idx)?.into_iter().map(|f| position[f]).collect();
        col.sort_unstable();
        if col.last().is_some_and(|&last| last >= position[idx]) {
            return Err(Error::Structure(format!(
                "filtration order places {:?} before one of its faces",
                cx.simplices()[idx]
            )));
        }
        columns.push(col);
    }
    Ok((columns, position))
}

/// Sublevel-set persistence. Unpaired vertices and edges become essential
/// intervals with infinite death; two-dimensional classes are not reported.
pub fn reduce_ordinary(cx: &FilteredComplex) -> Result<PersistenceDiagram> {
    let provenance = Provenance {
        filtration: cx.kind(),
        window_origin: (0, 0),
    };
    let (columns, _) = complex_columns(cx, 0)?;
    let dims: Vec<u8> = cx
        .order()
        .iter()
        .map(|&i| cx.simplices()[i as usize].dim() as u8)
        .collect();
    let value = |pos: u32| cx.filtration()[cx.order()[pos as usize] as usize];
    let mut matrix = BoundaryMatrix {
        columns,
        dims: dims.clone(),
    };
    let pairs = matrix.reduce();

    let mut paired = vec![false; cx.len()];
    let mut intervals = Vec::new();
    for &(birth, death) in &pairs {
        paired[birth as usize] = true;
        paired[death as usize] = true;
        let kind = match dims[birth as usize] {
            0 => IntervalKind::Ord0,
            1 => IntervalKind::Ord1,
            _ => continue,
        };
        intervals.push(Interval::new(kind, value(birth), value(death)));
    }
    for (pos, &is_paired) in paired.iter().enumerate() {
        if is_paired {
            continue;
        }
        let kind = match dims[pos] {
            0 => IntervalKind::Ord0,
            1 => IntervalKind::Ord1,
            _ => continue,
        };
        intervals.push(Interval::new(kind, value(pos as u32), f64::INFINITY));
    }
    Ok(PersistenceDiagram::new(intervals, provenance))
}

/// Extended persistence via the cone construction.
///
/// Position 0 holds the cone vertex, positions `1..=n` the complex in its
/// filtration order, and the cone simplices over vertices and edges follow,
/// sorted by descending minimum vertex value, then dimension, then vertex ids.
/// Cones over triangles are omitted: they only pair two-dimensional classes.
pub fn reduce_extended(cx: &FilteredComplex) -> Result<PersistenceDiagram> {
    let provenance = Provenance {
        filtration: cx.kind(),
        window_origin: (0, 0),
    };
    if cx.is_empty() {
        return Ok(PersistenceDiagram::new(Vec::new(), provenance));
    }
    let n = cx.len();
    let (mut columns, position) = complex_columns(cx, 1)?;
    let f = cx.filtration();
    let simplices = cx.simplices();

    // Descending sweep: cones over vertices and edges.
    let vertex_value = |v: u32| f[v as usize];
    let mut cone: Vec<(usize, f64)> = cx
        .dim_range(0)
        .chain(cx.dim_range(1))
        .map(|idx| {
            let low = simplices[idx]
                .vertices()
                .iter()
                .map(|&v| vertex_value(v))
                .fold(f64::INFINITY, f64::min);
            (idx, low)
        })
        .collect();
    cone.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let cone_base = 1 + n as u32;
    let mut cone_position = vec![NONE; cx.dim_range(1).end];
    for (rank, &(idx, _)) in cone.iter().enumerate() {
        cone_position[idx] = cone_base + rank as u32;
    }

    let total = 1 + n + cone.len();
    let mut all_columns: Vec<Vec<u32>> = Vec::with_capacity(total);
    let mut dims: Vec<u8> = Vec::with_capacity(total);
    let mut values: Vec<f64> = Vec::with_capacity(total);
    all_columns.push(Vec::new());
    dims.push(0);
    values.push(f64::NEG_INFINITY);
    for &idx in cx.order() {
        dims.push(simplices[idx as usize].dim() as u8);
        values.push(f[idx as usize]);
    }
    all_columns.append(&mut columns);
    for &(idx, low) in &cone {
        let s = simplices[idx];
        let mut col = vec![position[idx]];
        if s.dim() == 0 {
            col.push(0);
        } else {
            col.extend(s.vertices().iter().map(|&v| cone_position[v as usize]));
        }
        col.sort_unstable();
        all_columns.push(col);
        dims.push(s.dim() as u8 + 1);
        values.push(low);
    }

    let mut matrix = BoundaryMatrix {
        columns: all_columns,
        dims: dims.clone(),
    };
    let pairs = matrix.reduce();

    let in_cone = |pos: u32| pos >= cone_base;
    let mut intervals = Vec::with_capacity(pairs.len());
    for (birth, death) in pairs {
        if birth == 0 {
            continue;
        }
        let birth_dim = dims[birth as usize];
        let kind = match (in_cone(birth), in_cone(death), birth_dim) {
            (false, false, 0) => IntervalKind::Ord0,
            (false, false, 1) => IntervalKind::Ord1,
            (false, true, 0) => IntervalKind::Ext0,
            (false, true, 1) => IntervalKind::Ext1,
            (true, true, 1) => IntervalKind::Rel1,
            _ => continue,
        };
        intervals.push(Interval::new(kind, values[birth as usize], values[death as usize]));
    }
    Ok(PersistenceDiagram::new(intervals, provenance))
}
