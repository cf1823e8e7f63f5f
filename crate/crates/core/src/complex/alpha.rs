//! Alpha complex of a planar point set, filtered by squared radius.

use std::collections::HashMap;

use spade::{DelaunayTriangulation, Point2, Triangulation};

use super::{FilteredComplex, FiltrationKind, Simplex};
use crate::imgprep::BinaryMask;

/// Squared circumradius of a non-degenerate triangle.
pub fn circumradius_sq(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let d2 = |p: [f64; 2], q: [f64; 2]| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
    let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    d2(a, b) * d2(b, c) * d2(c, a) / (4.0 * cross * cross)
}

/// Alpha complex on the foreground pixel centers, `x = col`,
/// `y = height - 1 - row`.
pub fn build_alpha(mask: &BinaryMask) -> FilteredComplex {
    let h = mask.height();
    let points: Vec<[f64; 2]> = (0..h)
        .flat_map(|row| (0..mask.width()).map(move |col| (row, col)))
        .filter(|&(row, col)| mask.get(row, col))
        .map(|(row, col)| [col as f64, (h - 1 - row) as f64])
        .collect();
    build_alpha_from_points(&points)
}

/// Alpha complex of arbitrary points. Exact duplicates are merged, keeping the
/// first occurrence; vertex ids follow the surviving input order.
///
/// Values: vertices 0; triangles their squared circumradius; an edge gets the
/// squared radius of its diametral circle unless an opposite Delaunay vertex
/// lies strictly inside that circle, in which case it takes the smallest value
/// among its incident triangles.
pub fn build_alpha_from_points(points: &[[f64; 2]]) -> FilteredComplex {
    let mut seen = std::collections::HashSet::new();
    let points: Vec<[f64; 2]> = points
        .iter()
        .copied()
        .filter(|p| seen.insert((p[0].to_bits(), p[1].to_bits())))
        .collect();
    if points.is_empty() {
        return FilteredComplex::empty(FiltrationKind::Alpha);
    }

    let dt = DelaunayTriangulation::<Point2<f64>>::bulk_load_stable(
        points.iter().map(|p| Point2::new(p[0], p[1])).collect(),
    )
    .expect("finite pixel coordinates");

    let mut simplices: Vec<Simplex> = (0..points.len() as u32).map(Simplex::vertex).collect();
    let mut values = vec![0.0; points.len()];

    // edge -> (smallest incident triangle value, attached?)
    let mut edge_info: HashMap<Simplex, (f64, bool)> = HashMap::new();
    for edge in dt.undirected_edges() {
        let [a, b] = edge.vertices().map(|v| v.fix().index() as u32);
        edge_info.insert(Simplex::edge(a, b), (f64::INFINITY, false));
    }
    for face in dt.inner_faces() {
        let ids = face.vertices().map(|v| v.fix().index() as u32);
        let [a, b, c] = ids.map(|i| points[i as usize]);
        let r2 = circumradius_sq(a, b, c);
        simplices.push(Simplex::triangle(ids[0], ids[1], ids[2]));
        values.push(r2);
        for k in 0..3 {
            let (u, v, opp) = (ids[k], ids[(k + 1) % 3], ids[(k + 2) % 3]);
            let (pu, pv, po) = (points[u as usize], points[v as usize], points[opp as usize]);
            let inside = (pu[0] - po[0]) * (pv[0] - po[0]) + (pu[1] - po[1]) * (pv[1] - po[1]) < 0.0;
            let entry = edge_info
                .get_mut(&Simplex::edge(u, v))
                .expect("triangle edge is a Delaunay edge");
            entry.0 = entry.0.min(r2);
            entry.1 |= inside;
        }
    }
    for (edge, (tri_min, attached)) in edge_info {
        let v = edge.vertices();
        let (p, q) = (points[v[0] as usize], points[v[1] as usize]);
        let half_len_sq = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)) / 4.0;
        simplices.push(edge);
        values.push(if attached { tri_min } else { half_len_sq });
    }
    FilteredComplex::new(FiltrationKind::Alpha, simplices, values, points).expect("Delaunay complex is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn value(cx: &FilteredComplex, s: Simplex) -> f64 {
        cx.filtration()[cx.index_of(&s).unwrap()]
    }

    #[test]
    fn right_isoceles_triangle() {
        let cx = build_alpha_from_points(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(value(&cx, Simplex::edge(0, 1)), 0.25);
        assert_eq!(value(&cx, Simplex::edge(0, 2)), 0.25);
        assert_eq!(value(&cx, Simplex::edge(1, 2)), 0.5);
        assert_eq!(value(&cx, Simplex::triangle(0, 1, 2)), 0.5);
        cx.validate().unwrap();
    }

    #[test]
    fn obtuse_triangle_attaches_long_edge() {
        let cx = build_alpha_from_points(&[[0.0, 0.0], [4.0, 0.0], [2.0, 0.5]]);
        let tri = value(&cx, Simplex::triangle(0, 1, 2));
        assert_eq!(value(&cx, Simplex::edge(0, 1)), tri);
        assert!(tri > 4.0);
        cx.validate().unwrap();
    }

    #[test]
    fn single_point_and_empty() {
        let cx = build_alpha_from_points(&[[3.0, 4.0]]);
        assert_eq!(cx.len(), 1);
        assert_eq!(cx.filtration(), &[0.0]);
        assert!(build_alpha_from_points(&[]).is_empty());
    }

    #[test]
    fn collinear_points_form_a_path() {
        let cx = build_alpha_from_points(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]);
        assert_eq!((cx.count_dim(1), cx.count_dim(2)), (3, 0));
        assert!(cx.filtration()[cx.dim_range(1)].iter().all(|&v| v == 0.25));
    }

    #[test]
    fn duplicates_are_merged() {
        let cx = build_alpha_from_points(&[[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]]);
        assert_eq!(cx.num_vertices(), 2);
    }

    #[test]
    fn unit_square_has_cocircular_split() {
        let cx = build_alpha_from_points(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        assert_eq!((cx.count_dim(0), cx.count_dim(1), cx.count_dim(2)), (4, 5, 2));
        assert!(cx.filtration()[cx.dim_range(2)].iter().all(|&v| v == 0.5));
        cx.validate().unwrap();
    }
}
