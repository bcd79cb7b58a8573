//! Reference distance computations used to check the fast paths.
//!
//! Nothing here shares code with [`crate::simplex`] or [`crate::gjk`]: the
//! closest-point routines solve small quadratic programs directly and the
//! body-to-body distance materializes the whole Minkowski difference.

use nalgebra::Matrix3;

use crate::geometry::{Transform, Vec3};
use crate::mesh::{convex_hull, HullError, VertexGraph};

/// Closest point to `p` on segment `ab`.
pub fn closest_on_segment(a: &Vec3, b: &Vec3, p: &Vec3) -> Vec3 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return *a;
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

/// Closest point to `p` on triangle `abc`.
///
/// Minimizes `‖a + s·(b−a) + t·(c−a) − p‖²` over `(s, t)`; when the
/// unconstrained minimizer leaves the triangle, the optimum lies on an edge.
pub fn closest_on_triangle(a: &Vec3, b: &Vec3, c: &Vec3, p: &Vec3) -> Vec3 {
    let e1 = b - a;
    let e2 = c - a;
    let r = p - a;
    let (g11, g12, g22) = (e1.dot(&e1), e1.dot(&e2), e2.dot(&e2));
    let (h1, h2) = (e1.dot(&r), e2.dot(&r));
    let det = g11 * g22 - g12 * g12;
    if det > 1e-14 * g11 * g22 {
        let s = (g22 * h1 - g12 * h2) / det;
        let t = (g11 * h2 - g12 * h1) / det;
        if s >= 0.0 && t >= 0.0 && s + t <= 1.0 {
            return a + e1 * s + e2 * t;
        }
    }
    [
        closest_on_segment(a, b, p),
        closest_on_segment(b, c, p),
        closest_on_segment(c, a, p),
    ]
    .into_iter()
    .min_by(|x, y| (x - p).norm_squared().total_cmp(&(y - p).norm_squared()))
    .unwrap()
}

/// Barycentric coordinates of the origin with respect to a tetrahedron, or
/// `None` if it is flat.
pub fn tetrahedron_barycentric(points: &[Vec3; 4]) -> Option<[f64; 4]> {
    let [a, b, c, d] = points;
    let m = Matrix3::from_columns(&[b - a, c - a, d - a]);
    let lu = m.lu();
    if m.determinant().abs() <= 1e-14 * (b - a).norm() * (c - a).norm() * (d - a).norm() {
        return None;
    }
    let x = lu.solve(&(-a))?;
    Some([1.0 - x.x - x.y - x.z, x.x, x.y, x.z])
}

/// Closest point to the origin on the convex hull of 1–4 points, found by
/// enumerating every vertex, edge and face (and the interior for a solid
/// tetrahedron).
pub fn closest_on_simplex(points: &[Vec3]) -> Vec3 {
    let o = Vec3::zeros();
    let mut best = points[0];
    let mut consider = |q: Vec3| {
        if q.norm_squared() < best.norm_squared() {
            best = q;
        }
    };
    for p in points {
        consider(*p);
    }
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            consider(closest_on_segment(&points[i], &points[j], &o));
            for k in j + 1..points.len() {
                consider(closest_on_triangle(&points[i], &points[j], &points[k], &o));
            }
        }
    }
    if let [a, b, c, d] = points {
        if let Some(l) = tetrahedron_barycentric(&[*a, *b, *c, *d]) {
            if l.iter().all(|&x| x >= 0.0) {
                return o;
            }
        }
    }
    best
}

/// All pairwise differences `T_P·p − T_Q·q`.
pub fn minkowski_points(p: &VertexGraph, tp: &Transform, q: &VertexGraph, tq: &Transform) -> Vec<Vec3> {
    let ps: Vec<Vec3> = p.vertices().iter().map(|v| tp.apply(v)).collect();
    let qs: Vec<Vec3> = q.vertices().iter().map(|v| tq.apply(v)).collect();
    let mut out = Vec::with_capacity(ps.len() * qs.len());
    for a in &ps {
        for b in &qs {
            out.push(a - b);
        }
    }
    out
}

/// Distance between two placed convex bodies from the explicit Minkowski
/// difference: 0 when the origin is inside its hull, else the distance to
/// the nearest hull face.
pub fn oracle_distance(
    p: &VertexGraph,
    tp: &Transform,
    q: &VertexGraph,
    tq: &Transform,
) -> Result<f64, HullError> {
    let cloud = minkowski_points(p, tp, q, tq);
    match convex_hull(&cloud) {
        Ok(hull) => Ok(origin_to_hull(&hull)),
        Err(HullError::Degenerate(_)) if cloud.len() <= 64 => {
            let o = Vec3::zeros();
            let mut best = f64::INFINITY;
            for i in 0..cloud.len() {
                best = best.min(cloud[i].norm());
                for j in i + 1..cloud.len() {
                    best = best.min(closest_on_segment(&cloud[i], &cloud[j], &o).norm());
                    for k in j + 1..cloud.len() {
                        best = best.min(closest_on_triangle(&cloud[i], &cloud[j], &cloud[k], &o).norm());
                    }
                }
            }
            Ok(best)
        }
        Err(e) => Err(e),
    }
}

/// Distance from the origin to a closed convex hull (0 inside).
pub fn origin_to_hull(hull: &VertexGraph) -> f64 {
    let o = Vec3::zeros();
    let vs = hull.vertices();
    let mut inside = true;
    let mut best = f64::INFINITY;
    for f in hull.faces() {
        let [a, b, c] = f.map(|k| vs[k as usize]);
        let n = (b - a).cross(&(c - a));
        if n.dot(&(o - a)) > 0.0 {
            inside = false;
        }
        best = best.min(closest_on_triangle(&a, &b, &c, &o).norm());
    }
    if inside {
        0.0
    } else {
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_graph, shapes::cube_soup};

    #[test]
    fn triangle_regions() {
        let (a, b, c) = (Vec3::new(0.0, 0.0, 1.0), Vec3::new(2.0, 0.0, 1.0), Vec3::new(0.0, 2.0, 1.0));
        let o = Vec3::zeros();
        assert_eq!(closest_on_triangle(&a, &b, &c, &Vec3::new(0.5, 0.5, 0.0)), Vec3::new(0.5, 0.5, 1.0));
        assert_eq!(closest_on_triangle(&a, &b, &c, &o), a);
        let p = closest_on_triangle(&a, &b, &c, &Vec3::new(3.0, 3.0, 1.0));
        assert!((p - Vec3::new(1.0, 1.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn regular_tetrahedron_contains_origin() {
        let t = [
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(-1.0, -1.0, 1.0),
            Vec3::new(-1.0, 1.0, -1.0),
            Vec3::new(1.0, -1.0, -1.0),
        ];
        assert_eq!(closest_on_simplex(&t), Vec3::zeros());
        let l = tetrahedron_barycentric(&t).unwrap();
        assert!(l.iter().all(|&x| (x - 0.25).abs() < 1e-15));
    }

    #[test]
    fn separated_and_coincident_cubes() {
        let (cube, _) = build_graph(&cube_soup(1.0)).unwrap();
        let id = Transform::identity();
        let far = Transform::from_translation(Vec3::new(4.0, 0.0, 0.0));
        assert!((oracle_distance(&cube, &id, &cube, &far).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(oracle_distance(&cube, &id, &cube, &id).unwrap(), 0.0);
    }
}
