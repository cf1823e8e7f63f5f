//! Dense reference reduction used to cross-check the sparse engine.
//!
//! Shares nothing with `reduce.rs` beyond the complex's simplex list and
//! values: it rebuilds the filtration order, the cone, the boundary matrix
//! (as bitsets) and the pair classification from scratch, and reduces
//! column by column without clearing.

use std::collections::HashMap;

use super::{Interval, IntervalKind, PersistenceDiagram, Provenance};
use crate::complex::FilteredComplex;
use crate::error::{Error, Result};

/// Largest input complex the oracle accepts.
pub const ORACLE_SIZE_LIMIT: usize = 10_000;

#[derive(Clone, Copy, PartialEq)]
enum Phase {
    Cone,
    Ascending,
    Descending,
}

struct Cell {
    vertices: Vec<u32>,
    coned: bool,
    value: f64,
    phase: Phase,
}

impl Cell {
    fn dim(&self) -> usize {
        self.vertices.len() - 1 + usize::from(self.coned)
    }

    /// Facets as (vertex list, coned) keys; the cone point itself is the
    /// facet `([], false)`.
    fn facets(&self) -> Vec<(Vec<u32>, bool)> {
        let mut out = Vec::new();
        if self.coned {
            out.push((self.vertices.clone(), false));
            if self.vertices.len() == 1 {
                out.push((Vec::new(), false));
            }
        }
        if self.vertices.len() > 1 {
            for skip in 0..self.vertices.len() {
                let rest: Vec<u32> = self
                    .vertices
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &v)| v)
                    .collect();
                out.push((rest, self.coned));
            }
        }
        out
    }
}

fn check_size(cx: &FilteredComplex) -> Result<()> {
    if cx.len() > ORACLE_SIZE_LIMIT {
        return Err(Error::OracleTooLarge {
            size: cx.len(),
            limit: ORACLE_SIZE_LIMIT,
        });
    }
    Ok(())
}

fn ascending_cells(cx: &FilteredComplex) -> Vec<Cell> {
    let mut cells: Vec<Cell> = cx
        .simplices()
        .iter()
        .zip(cx.filtration())
        .map(|(s, &value)| Cell {
            vertices: s.vertices().to_vec(),
            coned: false,
            value,
            phase: Phase::Ascending,
        })
        .collect();
    cells.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then(a.vertices.len().cmp(&b.vertices.len()))
            .then_with(|| a.vertices.cmp(&b.vertices))
    });
    cells
}

/// Bitset columns; returns `low[j]` after reduction.
fn dense_reduce(cells: &[Cell]) -> Result<Vec<Option<usize>>> {
    let n = cells.len();
    let words = n.div_ceil(64);
    let index: HashMap<(Vec<u32>, bool), usize> = cells
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let key = if c.phase == Phase::Cone {
                (Vec::new(), false)
            } else {
                (c.vertices.clone(), c.coned)
            };
            (key, i)
        })
        .collect();
    let mut columns = vec![vec![0u64; words]; n];
    for (j, cell) in cells.iter().enumerate() {
        if cell.phase == Phase::Cone {
            continue;
        }
        for facet in cell.facets() {
            let i = *index
                .get(&facet)
                .ok_or_else(|| Error::Structure(format!("face {:?} of {:?} is missing", facet.0, cell.vertices)))?;
            if i >= j {
                return Err(Error::Structure(format!(
                    "face {:?} does not precede {:?}",
                    facet.0, cell.vertices
                )));
            }
            columns[j][i / 64] ^= 1 << (i % 64);
        }
    }
    let lowest = |col: &[u64]| {
        col.iter()
            .enumerate()
            .rev()
            .find(|(_, &w)| w != 0)
            .map(|(k, &w)| k * 64 + 63 - w.leading_zeros() as usize)
    };
    let mut low: Vec<Option<usize>> = vec![None; n];
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for j in 0..n {
        while let Some(l) = lowest(&columns[j]) {
            match owner[l] {
                Some(k) => {
                    let (head, tail) = columns.split_at_mut(j);
                    for (dst, src) in tail[0].iter_mut().zip(&head[k]) {
                        *dst ^= src;
                    }
                }
                None => {
                    owner[l] = Some(j);
                    low[j] = Some(l);
                    break;
                }
            }
        }
    }
    Ok(low)
}

/// Reference extended persistence; same contract as
/// [`reduce_extended`](super::reduce_extended).
pub fn oracle_reduce(cx: &FilteredComplex) -> Result<PersistenceDiagram> {
    check_size(cx)?;
    let provenance = Provenance {
        filtration: cx.kind(),
        window_origin: (0, 0),
    };
    if cx.is_empty() {
        return Ok(PersistenceDiagram::new(Vec::new(), provenance));
    }
    let vertex_value: HashMap<u32, f64> = cx
        .simplices()
        .iter()
        .zip(cx.filtration())
        .filter(|(s, _)| s.dim() == 0)
        .map(|(s, &v)| (s.vertices()[0], v))
        .collect();

    let mut cells = vec![Cell {
        vertices: vec![u32::MAX],
        coned: false,
        value: f64::NEG_INFINITY,
        phase: Phase::Cone,
    }];
    cells.extend(ascending_cells(cx));
    let mut descending: Vec<Cell> = cx
        .simplices()
        .iter()
        .filter(|s| s.dim() <= 1)
        .map(|s| Cell {
            vertices: s.vertices().to_vec(),
            coned: true,
            value: s
                .vertices()
                .iter()
                .map(|v| vertex_value[v])
                .fold(f64::INFINITY, f64::min),
            phase: Phase::Descending,
        })
        .collect();
    descending.sort_by(|a, b| {
        b.value
            .total_cmp(&a.value)
            .then(a.vertices.len().cmp(&b.vertices.len()))
            .then_with(|| a.vertices.cmp(&b.vertices))
    });
    cells.extend(descending);

    let low = dense_reduce(&cells)?;
    let mut intervals = Vec::new();
    for (j, l) in low.iter().enumerate() {
        let Some(i) = *l else { continue };
        let (b, d) = (&cells[i], &cells[j]);
        let kind = match (b.phase, d.phase, b.dim()) {
            (Phase::Ascending, Phase::Ascending, 0) => IntervalKind::Ord0,
            (Phase::Ascending, Phase::Ascending, 1) => IntervalKind::Ord1,
            (Phase::Ascending, Phase::Descending, 0) => IntervalKind::Ext0,
            (Phase::Ascending, Phase::Descending, 1) => IntervalKind::Ext1,
            (Phase::Descending, Phase::Descending, 1) => IntervalKind::Rel1,
            _ => continue,
        };
        intervals.push(Interval::new(kind, b.value, d.value));
    }
    Ok(PersistenceDiagram::new(intervals, provenance))
}

/// Reference sublevel persistence; same contract as
/// [`reduce_ordinary`](super::reduce_ordinary).
pub fn oracle_reduce_ordinary(cx: &FilteredComplex) -> Result<PersistenceDiagram> {
    check_size(cx)?;
    let provenance = Provenance {
        filtration: cx.kind(),
        window_origin: (0, 0),
    };
    let cells = ascending_cells(cx);
    let low = dense_reduce(&cells)?;
    let mut paired = vec![false; cells.len()];
    let mut intervals = Vec::new();
    for (j, l) in low.iter().enumerate() {
        let Some(i) = *l else { continue };
        paired[i] = true;
        paired[j] = true;
        let kind = match cells[i].dim() {
            0 => IntervalKind::Ord0,
            1 => IntervalKind::Ord1,
            _ => continue,
        };
        intervals.push(Interval::new(kind, cells[i].value, cells[j].value));
    }
    for (i, cell) in cells.iter().enumerate() {
        if paired[i] {
            continue;
        }
        let kind = match cell.dim() {
            0 => IntervalKind::Ord0,
            1 => IntervalKind::Ord1,
            _ => continue,
        };
        intervals.push(Interval::new(kind, cell.value, f64::INFINITY));
    }
    Ok(PersistenceDiagram::new(intervals, provenance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{build_adjacency_complex, build_alpha_from_points, FiltrationKind};
    use crate::imgprep::Raster;

    #[test]
    fn refuses_oversized_complexes() {
        let m = Raster::filled(64, 64, true);
        let cx = build_adjacency_complex(&m);
        assert!(cx.len() > ORACLE_SIZE_LIMIT);
        assert!(matches!(oracle_reduce(&cx), Err(Error::OracleTooLarge { .. })));
    }

    #[test]
    fn empty_complex() {
        let cx = FilteredComplex::empty(FiltrationKind::Height);
        assert!(oracle_reduce(&cx).unwrap().is_empty());
    }

    #[test]
    fn unit_square_alpha() {
        let cx = build_alpha_from_points(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        let d = oracle_reduce_ordinary(&cx).unwrap();
        let h1: Vec<_> = d
            .of_kind(IntervalKind::Ord1)
            .filter(|i| i.persistence() > 0.0)
            .map(|i| (i.birth, i.death))
            .collect();
        assert_eq!(h1, vec![(0.25, 0.5)]);
    }

    #[test]
    fn ring_by_oracle() {
        let data = "#####..##..#####".chars().map(|c| c == '#').collect();
        let cx = build_adjacency_complex(&Raster::new(4, 4, data).unwrap());
        let d = oracle_reduce(&cx).unwrap();
        let ext1: Vec<_> = d.of_kind(IntervalKind::Ext1).map(|i| (i.birth, i.death)).collect();
        assert_eq!(ext1, vec![(3.0, 0.0)]);
        let ext0: Vec<_> = d.of_kind(IntervalKind::Ext0).map(|i| (i.birth, i.death)).collect();
        assert_eq!(ext0, vec![(0.0, 3.0)]);
    }
}
