//! Small procedural meshes: boxes and closed surfaces of revolution.

use super::stl::{Triangle, TriangleSoup};
use crate::geometry::Vec3;

/// Axis-aligned box as 12 outward-wound triangles. The quad diagonals are
/// chosen so four corners have degree 4 and four have degree 5.
pub fn box_soup(center: Vec3, half: Vec3) -> TriangleSoup {
    let corner = |bits: u8| {
        let s = |b: u8| if bits & b != 0 { 1.0 } else { -1.0 };
        center + Vec3::new(s(4) * half.x, s(2) * half.y, s(1) * half.z)
    };
    // Corners named by their xyz bits, listed counter-clockwise from outside;
    // the flag picks the diagonal c0–c2 (true) or c1–c3 (false).
    const FACES: [([u8; 4], bool); 6] = [
        ([0b000, 0b010, 0b110, 0b100], true),
        ([0b001, 0b101, 0b111, 0b011], false),
        ([0b000, 0b100, 0b101, 0b001], false),
        ([0b010, 0b011, 0b111, 0b110], true),
        ([0b000, 0b001, 0b011, 0b010], false),
        ([0b100, 0b110, 0b111, 0b101], true),
    ];
    let mut tris = Vec::with_capacity(12);
    for (c, diag02) in FACES {
        let [a, b, cc, d] = c.map(corner);
        if diag02 {
            tris.push(Triangle::new(a, b, cc));
            tris.push(Triangle::new(a, cc, d));
        } else {
            tris.push(Triangle::new(b, cc, d));
            tris.push(Triangle::new(b, d, a));
        }
    }
    TriangleSoup::new(tris)
}

/// Cube `[-half, half]³`.
pub fn cube_soup(half: f64) -> TriangleSoup {
    box_soup(Vec3::zeros(), Vec3::repeat(half))
}

/// Closed surface of revolution about +z.
///
/// `profile` lists `(z, radius)` rings bottom to top; each ring has
/// `segments` vertices, rotated by `twist · ring_index` radians. The end
/// rings are closed with fans anchored on a ring vertex, so no vertex sits
/// in the interior of a cap.
pub fn revolution_soup(profile: &[(f64, f64)], segments: usize, twist: f64) -> TriangleSoup {
    assert!(profile.len() >= 2 && segments >= 3);
    let ring = |k: usize| -> Vec<Vec3> {
        let (z, r) = profile[k];
        (0..segments)
            .map(|s| {
                let a = std::f64::consts::TAU * s as f64 / segments as f64 + twist * k as f64;
                Vec3::new(r * a.cos(), r * a.sin(), z)
            })
            .collect()
    };
    let rings: Vec<Vec<Vec3>> = (0..profile.len()).map(ring).collect();
    let mut tris = Vec::new();
    for k in 0..rings.len() - 1 {
        let (lo, hi) = (&rings[k], &rings[k + 1]);
        for s in 0..segments {
            let t = (s + 1) % segments;
            tris.push(Triangle::new(lo[s], lo[t], hi[t]));
            tris.push(Triangle::new(lo[s], hi[t], hi[s]));
        }
    }
    let bottom = &rings[0];
    let top = &rings[rings.len() - 1];
    for s in 1..segments - 1 {
        tris.push(Triangle::new(bottom[0], bottom[s + 1], bottom[s]));
        tris.push(Triangle::new(top[0], top[s], top[s + 1]));
    }
    TriangleSoup::new(tris)
}
