//! 3D quickhull and a convexity check for vertex graphs.

use rustc_hash::FxHashMap;

use thiserror::Error;

use super::graph::{bounding_diagonal, VertexGraph};
use crate::geometry::{is_finite, Vec3};

/// Inputs thinner than `HULL_EPS · diagonal` in some direction are degenerate.
const HULL_EPS: f64 = 1e-10;
/// Relative tolerance of [`verify_convex`].
pub const CONVEXITY_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum HullError {
    #[error("convex hull needs at least 4 points, got {0}")]
    TooFewPoints(usize),
    #[error("point {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("input points are {0}; a hull needs a 3D body")]
    Degenerate(&'static str),
    #[error("hull construction lost consistency at point {0}")]
    Numerical(usize),
}

/// A hull plus, for every hull vertex, the index of the input point it came from.
#[derive(Clone, Debug)]
pub struct Hull {
    pub graph: VertexGraph,
    pub source_indices: Vec<usize>,
}

/// Convex hull of `points` as a triangulated vertex graph of extreme points.
pub fn convex_hull(points: &[Vec3]) -> Result<VertexGraph, HullError> {
    convex_hull_indexed(points).map(|h| h.graph)
}

#[derive(Clone, Debug)]
struct Face {
    v: [u32; 3],
    normal: Vec3,
    origin: Vec3,
    outside: Vec<u32>,
    alive: bool,
}

impl Face {
    fn new(points: &[Vec3], v: [u32; 3]) -> Face {
        let [a, b, c] = v.map(|i| points[i as usize]);
        let n = (b - a).cross(&(c - a));
        let len = n.norm();
        Face {
            v,
            normal: if len > 0.0 { n / len } else { n },
            origin: a,
            outside: Vec::new(),
            alive: true,
        }
    }

    /// Approximate signed distance; ranks candidates only.
    #[inline]
    fn distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(&(p - self.origin))
    }
}

/// Exact test that `p` lies strictly on the outer side of the plane through
/// `v` (counterclockwise seen from outside).
#[inline]
fn strictly_above(points: &[Vec3], v: [u32; 3], p: &Vec3) -> bool {
    orient(points, v, p) < 0.0
}

/// Exact orientation determinant; negative above, zero on the plane.
#[inline]
fn orient(points: &[Vec3], v: [u32; 3], p: &Vec3) -> f64 {
    let c = |q: &Vec3| robust::Coord3D { x: q.x, y: q.y, z: q.z };
    let [a, b, d] = v.map(|i| c(&points[i as usize]));
    robust::orient3d(a, b, d, c(p))
}

#[inline]
fn edge(a: u32, b: u32) -> u64 {
    (a as u64) << 32 | b as u64
}

struct Builder<'a> {
    points: &'a [Vec3],
    faces: Vec<Face>,
    /// Directed edge `(a, b)` packed as `a << 32 | b`, to its face.
    edges: FxHashMap<u64, usize>,
}

impl Builder<'_> {
    fn add_face(&mut self, v: [u32; 3]) -> Option<usize> {
        let id = self.faces.len();
        for (a, b) in [(v[0], v[1]), (v[1], v[2]), (v[2], v[0])] {
            if self.edges.insert(edge(a, b), id).is_some() {
                return None;
            }
        }
        self.faces.push(Face::new(self.points, v));
        Some(id)
    }

    fn remove_face(&mut self, id: usize) {
        let v = self.faces[id].v;
        for (a, b) in [(v[0], v[1]), (v[1], v[2]), (v[2], v[0])] {
            self.edges.remove(&edge(a, b));
        }
        self.faces[id].alive = false;
    }

    fn assign(&mut self, candidates: &[u32], point_ids: impl Iterator<Item = u32>) {
        for p in point_ids {
            let pos = &self.points[p as usize];
            let mut best = None;
            let mut best_d = f64::NEG_INFINITY;
            for &f in candidates {
                let face = &self.faces[f as usize];
                if !strictly_above(self.points, face.v, pos) {
                    continue;
                }
                let d = face.distance(pos);
                if d > best_d {
                    best_d = d;
                    best = Some(f);
                }
            }
            if let Some(f) = best {
                self.faces[f as usize].outside.push(p);
            }
        }
    }
}

pub fn convex_hull_indexed(points: &[Vec3]) -> Result<Hull, HullError> {
    let mut tris = quickhull(points)?;
    let extreme = extreme_vertices(points, &tris);
    let mut used: Vec<u32> = tris.iter().flatten().copied().collect();
    used.sort_unstable();
    used.dedup();
    if extreme.len() < used.len() {
        // Hulls of extreme points keep every input as a vertex.
        let sub: Vec<Vec3> = extreme.iter().map(|&i| points[i as usize]).collect();
        tris = quickhull(&sub)?
            .into_iter()
            .map(|t| t.map(|k| extreme[k as usize]))
            .collect();
        used = extreme;
    }

    // Reindex the surviving vertices in input order.
    let mut remap = vec![u32::MAX; points.len()];
    for (k, &i) in used.iter().enumerate() {
        remap[i as usize] = k as u32;
    }
    let mut adjacency = vec![Vec::new(); used.len()];
    let mut faces = Vec::with_capacity(tris.len());
    for t in &tris {
        let v = t.map(|i| remap[i as usize]);
        for (x, y) in [(v[0], v[1]), (v[1], v[2]), (v[2], v[0])] {
            adjacency[x as usize].push(y as usize);
        }
        faces.push(v);
    }
    let vertices = used.iter().map(|&i| points[i as usize]).collect();
    let graph = VertexGraph::from_adjacency(vertices, &adjacency, faces)
        .map_err(|_| HullError::Numerical(usize::MAX))?;
    Ok(Hull {
        graph,
        source_indices: used.iter().map(|&i| i as usize).collect(),
    })
}

/// Hull vertices whose incident triangles span at least three distinct
/// planes. Fewer planes put the vertex inside a facet or an edge.
fn extreme_vertices(points: &[Vec3], tris: &[[u32; 3]]) -> Vec<u32> {
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); points.len()];
    for (k, t) in tris.iter().enumerate() {
        for &v in t {
            incident[v as usize].push(k);
        }
    }
    let coplanar = |a: usize, b: usize| {
        tris[b]
            .iter()
            .all(|&p| orient(points, tris[a], &points[p as usize]) == 0.0)
    };
    incident
        .iter()
        .enumerate()
        .filter(|(_, faces)| {
            let mut planes: Vec<usize> = Vec::with_capacity(3);
            for &f in faces.iter() {
                if !planes.iter().any(|&r| coplanar(r, f)) {
                    planes.push(f);
                    if planes.len() == 3 {
                        return true;
                    }
                }
            }
            false
        })
        .map(|(v, _)| v as u32)
        .collect()
}

/// Triangles of the hull of `points`, outward counterclockwise; some
/// vertices may be non-extreme where the input has exact coplanarities.
fn quickhull(points: &[Vec3]) -> Result<Vec<[u32; 3]>, HullError> {
    if points.len() < 4 {
        return Err(HullError::TooFewPoints(points.len()));
    }
    if let Some(i) = points.iter().position(|p| !is_finite(p)) {
        return Err(HullError::NonFinite(i));
    }
    let diag = bounding_diagonal(points);
    if diag == 0.0 {
        return Err(HullError::Degenerate("coincident"));
    }
    let initial = initial_simplex(points, HULL_EPS * diag)?;

    let mut b = Builder {
        points,
        faces: Vec::new(),
        edges: FxHashMap::default(),
    };
    let [i0, i1, i2, i3] = initial;
    // Orient so that i3 lies below the first face.
    let tri = if strictly_above(points, [i0, i1, i2], &points[i3 as usize]) {
        [[i0, i2, i1], [i0, i1, i3], [i1, i2, i3], [i2, i0, i3]]
    } else {
        [[i0, i1, i2], [i0, i3, i1], [i1, i3, i2], [i2, i3, i0]]
    };
    let mut ids = Vec::with_capacity(4);
    for v in tri {
        ids.push(b.add_face(v).expect("initial simplex is consistent") as u32);
    }
    let rest = (0..points.len() as u32).filter(|i| !initial.contains(i));
    b.assign(&ids, rest);

    let mut pending: Vec<usize> = (0..4).collect();
    let mut visible = Vec::new();
    let mut stack = Vec::new();
    let mut horizon = Vec::new();
    let mut orphans = Vec::new();
    let mut is_visible: Vec<bool> = vec![false; 4];
    while let Some(f) = pending.pop() {
        if !b.faces[f].alive || b.faces[f].outside.is_empty() {
            continue;
        }
        let eye = {
            let face = &b.faces[f];
            *face
                .outside
                .iter()
                .max_by(|&&p, &&q| {
                    face.distance(&points[p as usize])
                        .total_cmp(&face.distance(&points[q as usize]))
                })
                .unwrap()
        };
        let eye_pos = points[eye as usize];

        visible.clear();
        stack.clear();
        is_visible.resize(b.faces.len(), false);
        is_visible[f] = true;
        stack.push(f);
        while let Some(g) = stack.pop() {
            visible.push(g);
            let v = b.faces[g].v;
            for (x, y) in [(v[0], v[1]), (v[1], v[2]), (v[2], v[0])] {
                let Some(&h) = b.edges.get(&edge(y, x)) else {
                    return Err(HullError::Numerical(eye as usize));
                };
                if !is_visible[h] && strictly_above(points, b.faces[h].v, &eye_pos) {
                    is_visible[h] = true;
                    stack.push(h);
                }
            }
        }

        horizon.clear();
        for &g in &visible {
            let v = b.faces[g].v;
            for (x, y) in [(v[0], v[1]), (v[1], v[2]), (v[2], v[0])] {
                let h = b.edges[&edge(y, x)];
                if !is_visible[h] {
                    horizon.push((x, y));
                }
            }
        }

        orphans.clear();
        for &g in &visible {
            orphans.append(&mut b.faces[g].outside);
            is_visible[g] = false;
        }
        for &g in &visible {
            b.remove_face(g);
        }
        let mut created = Vec::with_capacity(horizon.len());
        for &(x, y) in &horizon {
            match b.add_face([x, y, eye]) {
                Some(id) => created.push(id as u32),
                None => return Err(HullError::Numerical(eye as usize)),
            }
        }
        let orphan_ids: Vec<u32> = orphans.iter().copied().filter(|&p| p != eye).collect();
        b.assign(&created, orphan_ids.into_iter());
        pending.extend(created.iter().map(|&c| c as usize));
    }

    Ok(b.faces.iter().filter(|f| f.alive).map(|f| f.v).collect())
}

fn initial_simplex(points: &[Vec3], eps: f64) -> Result<[u32; 4], HullError> {
    let mut extremes = [0usize; 6];
    for (i, p) in points.iter().enumerate() {
        for axis in 0..3 {
            if p[axis] < points[extremes[2 * axis]][axis] {
                extremes[2 * axis] = i;
            }
            if p[axis] > points[extremes[2 * axis + 1]][axis] {
                extremes[2 * axis + 1] = i;
            }
        }
    }
    let (mut i0, mut i1, mut best) = (0, 0, -1.0);
    for &a in &extremes {
        for &b in &extremes {
            let d = (points[a] - points[b]).norm_squared();
            if d > best {
                (i0, i1, best) = (a, b, d);
            }
        }
    }
    if best.sqrt() <= eps {
        return Err(HullError::Degenerate("coincident"));
    }
    let dir = (points[i1] - points[i0]).normalize();
    let (i2, d2) = farthest(points, |p| {
        let r = p - points[i0];
        (r - dir * r.dot(&dir)).norm()
    });
    if d2 <= eps {
        return Err(HullError::Degenerate("collinear"));
    }
    let n = (points[i1] - points[i0]).cross(&(points[i2] - points[i0])).normalize();
    let (i3, d3) = farthest(points, |p| n.dot(&(p - points[i0])).abs());
    if d3 <= eps {
        return Err(HullError::Degenerate("coplanar"));
    }
    Ok([i0 as u32, i1 as u32, i2 as u32, i3 as u32])
}

fn farthest(points: &[Vec3], f: impl Fn(&Vec3) -> f64) -> (usize, f64) {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| (i, f(p)))
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
}

/// Why [`verify_convex`] rejected a graph.
#[derive(Clone, Debug, PartialEq)]
pub enum ConvexityViolation {
    /// The vertex is not an extreme point of the vertex set.
    InteriorVertex { vertex: usize },
    /// Vertices lie on both sides of this face's plane.
    ConcaveFace { face: usize, vertex: usize },
    /// The vertex set spans no volume.
    Degenerate,
}

impl std::fmt::Display for ConvexityViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::InteriorVertex { vertex } => {
                write!(f, "vertex {vertex} is not on the convex hull")
            }
            Self::ConcaveFace { face, vertex } => {
                write!(f, "face {face} is not a hull face (vertex {vertex} lies beyond it)")
            }
            Self::Degenerate => write!(f, "vertex set is flat or degenerate"),
        }
    }
}

/// Checks that every vertex is an extreme point of the vertex set (exact
/// orientation tests) and that every stored face lies on the hull boundary
/// within `CONVEXITY_TOL · diagonal`. Returns the first violation.
pub fn verify_convex(graph: &VertexGraph) -> Result<(), ConvexityViolation> {
    let hull = convex_hull_indexed(graph.vertices()).map_err(|_| ConvexityViolation::Degenerate)?;
    let mut on_hull = vec![false; graph.len()];
    for &i in &hull.source_indices {
        on_hull[i] = true;
    }
    if let Some(vertex) = on_hull.iter().position(|&h| !h) {
        return Err(ConvexityViolation::InteriorVertex { vertex });
    }
    let tol = CONVEXITY_TOL * graph.bounding_diagonal();
    let vs = graph.vertices();
    for (fi, f) in graph.faces().iter().enumerate() {
        let [a, b, c] = f.map(|k| vs[k as usize]);
        let n = (b - a).cross(&(c - a));
        let len = n.norm();
        if len == 0.0 {
            continue;
        }
        let n = n / len;
        let (mut lo, mut hi) = ((0usize, 0.0f64), (0usize, 0.0f64));
        // A side counts only when the exact predicate agrees with the rounded distance.
        for (i, v) in hull.graph.vertices().iter().enumerate() {
            let d = n.dot(&(v - a));
            if d < lo.1 && orient(vs, *f, v) > 0.0 {
                lo = (hull.source_indices[i], d);
            }
            if d > hi.1 && orient(vs, *f, v) < 0.0 {
                hi = (hull.source_indices[i], d);
            }
        }
        if lo.1 < -tol && hi.1 > tol {
            let vertex = if -lo.1 < hi.1 { lo.0 } else { hi.0 };
            return Err(ConvexityViolation::ConcaveFace { face: fi, vertex });
        }
    }
    Ok(())
}
