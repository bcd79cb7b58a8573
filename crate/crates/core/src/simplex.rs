//! Closest point of a GJK simplex to the origin.
//!
//! Every routine assumes the newest witness `A` (index 0) was produced by a
//! support query in the direction of the previous closest point, so the
//! origin cannot lie in a Voronoi region made only of older witnesses. Only
//! regions that touch `A` are tested:
//!
//! * segment: beyond `A`, or over the edge `AB`;
//! * triangle: over edge `AC`, over edge `AB`, beyond `A`, or above/below the face;
//! * tetrahedron: inside, or one of the three triangles that contain `A`.
//!
//! Directions are obtained from vector rejection (segment) and projection
//! onto the face normal (triangle). Barycentric coefficients are computed
//! afterwards so the caller can rebuild closest points on both bodies.

use crate::geometry::Vec3;

/// `sin²` of the smallest triangle angle treated as a true triangle.
const FLAT_TRIANGLE: f64 = 1e-20;
/// Normalized volume below which a tetrahedron is treated as flat.
const FLAT_TETRAHEDRON: f64 = 1e-12;
/// Slack on barycentric coefficients when validating a face candidate.
const BARYCENTRIC_SLACK: f64 = 1e-12;

/// A point of the Minkowski difference `w = p − q` and the vertices it came from.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Witness {
    pub w: Vec3,
    pub p: Vec3,
    pub q: Vec3,
    pub p_index: u32,
    pub q_index: u32,
}

impl Witness {
    pub fn new(p_index: u32, p: Vec3, q_index: u32, q: Vec3) -> Self {
        Self {
            w: p - q,
            p,
            q,
            p_index,
            q_index,
        }
    }

    /// A bare Minkowski-space point (`q` at the origin), tagged with `id`.
    pub fn from_point(w: Vec3, id: u32) -> Self {
        Self::new(id, w, 0, Vec3::zeros())
    }
}

/// One to four witnesses, newest first.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Simplex {
    points: [Witness; 4],
    len: u8,
}

impl Simplex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a simplex from witnesses given newest first.
    pub fn from_witnesses(ws: &[Witness]) -> Self {
        assert!(ws.len() <= 4, "a simplex holds at most 4 witnesses");
        let mut s = Self::new();
        s.points[..ws.len()].copy_from_slice(ws);
        s.len = ws.len() as u8;
        s
    }

    pub fn from_points(ps: &[Vec3]) -> Self {
        let ws: Vec<Witness> = ps
            .iter()
            .enumerate()
            .map(|(i, p)| Witness::from_point(*p, i as u32))
            .collect();
        Self::from_witnesses(&ws)
    }

    /// Inserts `w` as the new `A`, shifting the older witnesses back.
    pub fn push_newest(&mut self, w: Witness) {
        assert!(self.len < 4, "simplex is full");
        self.points.copy_within(0..self.len as usize, 1);
        self.points[0] = w;
        self.len += 1;
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn witnesses(&self) -> &[Witness] {
        &self.points[..self.len as usize]
    }

    pub fn contains_pair(&self, p_index: u32, q_index: u32) -> bool {
        self.witnesses()
            .iter()
            .any(|w| w.p_index == p_index && w.q_index == q_index)
    }

    fn of(ws: &[&Witness]) -> Self {
        let mut s = Self::new();
        for (slot, w) in s.points.iter_mut().zip(ws) {
            *slot = **w;
        }
        s.len = ws.len() as u8;
        s
    }
}

/// Result of one distance sub-algorithm call.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimplexStep {
    /// From the closest simplex point to the origin; its norm is the distance.
    pub direction: Vec3,
    /// Witnesses spanning the feature that holds the closest point, newest first.
    pub reduced: Simplex,
    pub contains_origin: bool,
    /// Coefficients of the closest point over `reduced`; unused slots are 0.
    pub barycentric: [f64; 4],
}

impl SimplexStep {
    fn point(a: &Witness) -> Self {
        Self {
            direction: -a.w,
            reduced: Simplex::of(&[a]),
            contains_origin: false,
            barycentric: [1.0, 0.0, 0.0, 0.0],
        }
    }

    /// `Σ λᵢ wᵢ`, the closest point in Minkowski space.
    pub fn closest_point(&self) -> Vec3 {
        self.combine(|w| w.w)
    }

    /// Closest points on the two bodies, `(Σ λᵢ pᵢ, Σ λᵢ qᵢ)`.
    pub fn closest_points(&self) -> (Vec3, Vec3) {
        (self.combine(|w| w.p), self.combine(|w| w.q))
    }

    fn combine(&self, f: impl Fn(&Witness) -> Vec3) -> Vec3 {
        self.reduced
            .witnesses()
            .iter()
            .zip(self.barycentric)
            .map(|(w, l)| f(w) * l)
            .sum()
    }

    fn is_on_feature(&self) -> bool {
        self.barycentric[..self.reduced.len()]
            .iter()
            .all(|&l| l >= -BARYCENTRIC_SLACK)
    }
}

fn line(a: &Witness, b: &Witness) -> SimplexStep {
    let ab = b.w - a.w;
    let ao = -a.w;
    let along = ab.dot(&ao);
    let len2 = ab.norm_squared();
    if along > 0.0 && len2 > 0.0 {
        let t = along / len2;
        SimplexStep {
            direction: ao - ab * t,
            reduced: Simplex::of(&[a, b]),
            contains_origin: false,
            barycentric: [1.0 - t, t, 0.0, 0.0],
        }
    } else {
        SimplexStep::point(a)
    }
}

fn triangle(a: &Witness, b: &Witness, c: &Witness) -> SimplexStep {
    let ab = b.w - a.w;
    let ac = c.w - a.w;
    let ao = -a.w;
    let n = ab.cross(&ac);
    let n2 = n.norm_squared();
    let (ab2, ac2) = (ab.norm_squared(), ac.norm_squared());
    if n2 == 0.0 || n2 <= FLAT_TRIANGLE * ab2 * ac2 {
        // Collinear: the segment from A to the farther witness covers the rest.
        return if ab2 >= ac2 { line(a, b) } else { line(a, c) };
    }

    if n.cross(&ac).dot(&ao) > 0.0 {
        if ac.dot(&ao) > 0.0 {
            return line(a, c);
        }
        return if ab.dot(&ao) > 0.0 {
            line(a, b)
        } else {
            SimplexStep::point(a)
        };
    }
    if ab.cross(&n).dot(&ao) > 0.0 {
        return if ab.dot(&ao) > 0.0 {
            line(a, b)
        } else {
            SimplexStep::point(a)
        };
    }

    let direction = n * (n.dot(&ao) / n2);
    let rel = -direction - a.w;
    let s = rel.cross(&ac).dot(&n) / n2;
    let t = ab.cross(&rel).dot(&n) / n2;
    SimplexStep {
        direction,
        reduced: Simplex::of(&[a, b, c]),
        contains_origin: false,
        barycentric: [1.0 - s - t, s, t, 0.0],
    }
}

fn tetrahedron(a: &Witness, b: &Witness, c: &Witness, d: &Witness) -> SimplexStep {
    let ab = b.w - a.w;
    let ac = c.w - a.w;
    let ad = d.w - a.w;
    let volume = ab.dot(&ac.cross(&ad));
    let scale = ab.norm() * ac.norm() * ad.norm();
    if volume.abs() > FLAT_TETRAHEDRON * scale {
        let ao = -a.w;
        let lb = ao.dot(&ac.cross(&ad)) / volume;
        let lc = ab.dot(&ao.cross(&ad)) / volume;
        let ld = ab.dot(&ac.cross(&ao)) / volume;
        let la = 1.0 - lb - lc - ld;
        if la >= 0.0 && lb >= 0.0 && lc >= 0.0 && ld >= 0.0 {
            return SimplexStep {
                direction: Vec3::zeros(),
                reduced: Simplex::of(&[a, b, c, d]),
                contains_origin: true,
                barycentric: [la, lb, lc, ld],
            };
        }
    }

    // The face BCD cannot hold the closest point. A face whose own pruning
    // assumption fails reports coefficients outside [0, 1]; such candidates
    // are not points of the tetrahedron and are skipped.
    let faces = [triangle(a, b, c), triangle(a, c, d), triangle(a, d, b)];
    let by_distance = |x: &&SimplexStep, y: &&SimplexStep| {
        x.direction
            .norm_squared()
            .total_cmp(&y.direction.norm_squared())
    };
    let best = faces
        .iter()
        .filter(|s| s.is_on_feature())
        .min_by(by_distance)
        .or_else(|| faces.iter().min_by(by_distance))
        .unwrap();
    *best
}

/// Segment case: `S = {A, B}`.
pub fn closest_on_line(s: &Simplex) -> SimplexStep {
    let [a, b] = s.witnesses() else {
        panic!("closest_on_line needs 2 witnesses, got {}", s.len());
    };
    line(a, b)
}

/// Triangle case: `S = {A, B, C}`.
pub fn closest_on_triangle(s: &Simplex) -> SimplexStep {
    let [a, b, c] = s.witnesses() else {
        panic!("closest_on_triangle needs 3 witnesses, got {}", s.len());
    };
    triangle(a, b, c)
}

/// Tetrahedron case: `S = {A, B, C, D}`.
pub fn closest_on_tetrahedron(s: &Simplex) -> SimplexStep {
    let [a, b, c, d] = s.witnesses() else {
        panic!("closest_on_tetrahedron needs 4 witnesses, got {}", s.len());
    };
    tetrahedron(a, b, c, d)
}

/// Dispatches on the simplex size.
pub fn distance_subalgorithm(s: &Simplex) -> SimplexStep {
    match s.witnesses() {
        [a] => SimplexStep::point(a),
        [a, b] => line(a, b),
        [a, b, c] => triangle(a, b, c),
        [a, b, c, d] => tetrahedron(a, b, c, d),
        _ => panic!("empty simplex"),
    }
}
