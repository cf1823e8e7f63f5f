use super::{Interval, IntervalKind, PersistenceDiagram, Provenance};
use crate::complex::FilteredComplex;
use crate::error::Result;

/// Disjoint sets over `0..n` with path halving. The caller decides which root
/// survives a merge.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    sets: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            sets: n,
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let grandparent = self.parent[self.parent[x] as usize];
            self.parent[x] = grandparent;
            x = grandparent as usize;
        }
        x
    }

    /// Attaches root `child` below root `root`.
    pub fn link(&mut self, child: usize, root: usize) {
        debug_assert_eq!(self.parent[child] as usize, child);
        debug_assert_eq!(self.parent[root] as usize, root);
        if child != root {
            self.parent[child] = root as u32;
            self.sets -= 1;
        }
    }

    /// Merges the sets of `a` and `b`, keeping `a`'s root. Returns `false` if
    /// they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.link(rb, ra);
        true
    }

    pub fn set_count(&self) -> usize {
        self.sets
    }
}

/// Zero-dimensional extended persistence by a single ascending union-find
/// sweep.
///
/// Each root is the oldest vertex of its component in filtration order. At a
/// merging edge the younger root dies (`Ord0`); each surviving component
/// yields `Ext0 = (min vertex value, max vertex value)`.
pub fn fast_h0(cx: &FilteredComplex) -> Result<PersistenceDiagram> {
    let provenance = Provenance {
        filtration: cx.kind(),
        window_origin: (0, 0),
    };
    let nv = cx.num_vertices();
    let f = cx.filtration();
    let mut rank = vec![u32::MAX; nv];
    for (pos, &idx) in cx.order().iter().enumerate() {
        if (idx as usize) < nv {
            rank[idx as usize] = pos as u32;
        }
    }
    let mut uf = UnionFind::new(nv);
    let mut intervals = Vec::new();
    let edges = cx.dim_range(1);
    for &idx in cx.order() {
        let idx = idx as usize;
        if !edges.contains(&idx) {
            continue;
        }
        let v = cx.simplices()[idx].vertices();
        let (ra, rb) = (uf.find(v[0] as usize), uf.find(v[1] as usize));
        if ra == rb {
            continue;
        }
        let (elder, younger) = if rank[ra] < rank[rb] { (ra, rb) } else { (rb, ra) };
        intervals.push(Interval::new(IntervalKind::Ord0, f[younger], f[idx]));
        uf.link(younger, elder);
    }
    let mut top = vec![f64::NEG_INFINITY; nv];
    for v in 0..nv {
        let r = uf.find(v);
        top[r] = top[r].max(f[v]);
    }
    for v in 0..nv {
        if uf.find(v) == v {
            intervals.push(Interval::new(IntervalKind::Ext0, f[v], top[v]));
        }
    }
    Ok(PersistenceDiagram::new(intervals, provenance))
}
