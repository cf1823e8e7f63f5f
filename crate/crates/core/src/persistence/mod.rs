//! Ordinary and extended persistent homology of filtered complexes.
//!
//! Extended persistence follows the cone construction: every simplex is
//! inserted in ascending filtration order, then a cone vertex is joined to
//! each simplex in order of descending minimum vertex value. Pairs are then
//! classified by the phases their columns belong to:
//!
//! | kind   | birth column | death column | endpoints                        |
//! |--------|--------------|--------------|----------------------------------|
//! | `Ord0` | vertex       | edge         | `birth <= death`                 |
//! | `Ext0` | vertex       | cone edge    | (component min, component max)   |
//! | `Ord1` | edge         | triangle     | `birth <= death`                 |
//! | `Ext1` | edge         | cone triangle| (cycle top, cycle bottom)        |
//! | `Rel1` | cone edge    | cone triangle| both from the descending sweep   |
//!
//! `Ext0` is reported as (min, max), and `Ext1` as (max, min), so
//! `Ext1` intervals always have `birth >= death`.

mod oracle;
mod reduce;
mod union_find;

use std::cmp::Ordering;
use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::complex::FiltrationKind;

pub use oracle::{oracle_reduce, oracle_reduce_ordinary, ORACLE_SIZE_LIMIT};
pub use reduce::{reduce_extended, reduce_ordinary};
pub use union_find::{fast_h0, UnionFind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalKind {
    /// Component of a sublevel set that later merges into an older one.
    Ord0,
    /// Connected component of the whole complex.
    Ext0,
    Ord1,
    /// Hole of the whole complex.
    Ext1,
    Rel1,
}

impl IntervalKind {
    pub const ALL: [IntervalKind; 5] = [
        IntervalKind::Ord0,
        IntervalKind::Ext0,
        IntervalKind::Ord1,
        IntervalKind::Ext1,
        IntervalKind::Rel1,
    ];

    pub fn dim(self) -> usize {
        match self {
            IntervalKind::Ord0 | IntervalKind::Ext0 => 0,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            IntervalKind::Ord0 => "ord0",
            IntervalKind::Ext0 => "ext0",
            IntervalKind::Ord1 => "ord1",
            IntervalKind::Ext1 => "ext1",
            IntervalKind::Rel1 => "rel1",
        }
    }
}

impl fmt::Display for IntervalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for IntervalKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        IntervalKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| crate::Error::Config(format!("unknown interval kind `{s}`")))
    }
}

/// A persistence pair. Essential classes of ordinary persistence carry
/// `death = f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub birth: f64,
    pub death: f64,
    pub kind: IntervalKind,
}

impl Interval {
    pub fn new(kind: IntervalKind, birth: f64, death: f64) -> Self {
        Interval { birth, death, kind }
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    /// `|birth - death|`; infinite for essential classes.
    pub fn persistence(&self) -> f64 {
        (self.birth - self.death).abs()
    }

    pub fn is_essential(&self) -> bool {
        !self.death.is_finite()
    }

    fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.kind
            .cmp(&other.kind)
            .then_with(|| self.birth.total_cmp(&other.birth))
            .then_with(|| self.death.total_cmp(&other.death))
    }
}

/// What a diagram was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub filtration: FiltrationKind,
    /// Top-left (row, col) of the source window; (0, 0) for a whole image.
    pub window_origin: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PersistenceDiagram {
    intervals: Vec<Interval>,
    provenance: Provenance,
}

impl PersistenceDiagram {
    pub fn new(intervals: Vec<Interval>, provenance: Provenance) -> Self {
        PersistenceDiagram { intervals, provenance }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn with_origin(mut self, origin: (usize, usize)) -> Self {
        self.provenance.window_origin = origin;
        self
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn of_kind(&self, kind: IntervalKind) -> impl Iterator<Item = &Interval> + '_ {
        self.intervals.iter().filter(move |i| i.kind == kind)
    }

    pub fn count(&self, kind: IntervalKind) -> usize {
        self.of_kind(kind).count()
    }

    /// The intervals in a canonical order, for multiset comparison.
    pub fn sorted(&self) -> Vec<Interval> {
        let mut v = self.intervals.clone();
        v.sort_by(Interval::canonical_cmp);
        v
    }

    /// Exact multiset equality of the intervals, ignoring provenance.
    pub fn same_multiset(&self, other: &PersistenceDiagram) -> bool {
        self.sorted() == other.sorted()
    }

    /// Restriction to `Ord0` and `Ext0`.
    pub fn dim0(&self) -> PersistenceDiagram {
        PersistenceDiagram {
            intervals: self.intervals.iter().filter(|i| i.dim() == 0).copied().collect(),
            provenance: self.provenance,
        }
    }

    pub fn write_csv_header<W: Write>(mut out: W) -> io::Result<()> {
        writeln!(out, "kind,dim,birth,death,window_row,window_col")
    }

    /// Rows of `kind,dim,birth,death,window_row,window_col`, no header.
    pub fn write_csv_rows<W: Write>(&self, mut out: W) -> io::Result<()> {
        let (row, col) = self.provenance.window_origin;
        for i in &self.intervals {
            writeln!(out, "{},{},{},{},{},{}", i.kind, i.dim(), i.birth, i.death, row, col)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows_carry_origin() {
        let d = PersistenceDiagram::new(vec![Interval::new(IntervalKind::Ext1, 2.0, 1.0)], Provenance::default())
            .with_origin((32, 64));
        let mut buf = Vec::new();
        PersistenceDiagram::write_csv_header(&mut buf).unwrap();
        d.write_csv_rows(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "kind,dim,birth,death,window_row,window_col\next1,1,2,1,32,64\n"
        );
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("Ext1".parse::<IntervalKind>().unwrap(), IntervalKind::Ext1);
        assert!("ext2".parse::<IntervalKind>().is_err());
    }
}
