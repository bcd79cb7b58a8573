use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::stl::{Triangle, TriangleSoup};
use crate::geometry::{is_finite, Transform, Vec3};

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("mesh has no triangles")]
    Empty,
    #[error("graph is disconnected: component sizes {sizes:?}")]
    Disconnected { sizes: Vec<usize> },
    #[error("adjacency of vertex {vertex} references out-of-range index {neighbor}")]
    IndexOutOfRange { vertex: usize, neighbor: usize },
    #[error("vertex {vertex} is adjacent to itself")]
    SelfLoop { vertex: usize },
    #[error("adjacency is not symmetric: {a} lists {b} but not the reverse")]
    Asymmetric { a: usize, b: usize },
    #[error("vertices {a} and {b} share the same position")]
    DuplicateVertex { a: usize, b: usize },
    #[error("vertex {vertex} has a non-finite coordinate")]
    NonFinite { vertex: usize },
    #[error("adjacency has {adjacency} entries for {vertices} vertices")]
    LengthMismatch { vertices: usize, adjacency: usize },
    #[error("invalid graph JSON: {0}")]
    Json(String),
}

/// Compressed adjacency plus the triangles it came from. Shared between a
/// graph and every transformed copy of it.
#[derive(Debug, PartialEq)]
pub struct Topology {
    offsets: Vec<u32>,
    neighbors: Vec<u32>,
    faces: Vec<[u32; 3]>,
}

/// A polytope as welded vertices plus an adjacency list over them.
///
/// The topology is reference counted: [`VertexGraph::transformed`] and
/// [`VertexGraph::set_transformed_from`] only touch vertex positions.
#[derive(Clone, Debug)]
pub struct VertexGraph {
    vertices: Vec<Vec3>,
    centroid: Vec3,
    topology: Arc<Topology>,
}

impl PartialEq for VertexGraph {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.topology == other.topology
    }
}

/// Diagnostics gathered while welding a triangle soup.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeldReport {
    /// Every undirected edge is shared by exactly two triangles.
    pub closed: bool,
    /// Vertices with fewer than three neighbors.
    pub low_degree: Vec<usize>,
    /// Triangles whose corners collapsed onto fewer than three vertices.
    pub degenerate_triangles: Vec<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum WeldMode {
    /// Merge vertices whose coordinates are bitwise equal.
    #[default]
    Exact,
    /// Merge vertices within this distance of an earlier vertex.
    Epsilon(f64),
}

#[derive(Serialize, Deserialize)]
struct GraphDoc {
    vertices: Vec<[f64; 3]>,
    adjacency: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    faces: Vec<[usize; 3]>,
}

impl VertexGraph {
    /// Builds a graph from explicit adjacency lists and validates every
    /// structural invariant. `faces` may be empty.
    pub fn from_adjacency(
        vertices: Vec<Vec3>,
        adjacency: &[Vec<usize>],
        faces: Vec<[u32; 3]>,
    ) -> Result<Self, GraphError> {
        if vertices.is_empty() {
            return Err(GraphError::Empty);
        }
        if adjacency.len() != vertices.len() {
            return Err(GraphError::LengthMismatch {
                vertices: vertices.len(),
                adjacency: adjacency.len(),
            });
        }
        let n = vertices.len();
        for (i, v) in vertices.iter().enumerate() {
            if !is_finite(v) {
                return Err(GraphError::NonFinite { vertex: i });
            }
        }
        for (i, list) in adjacency.iter().enumerate() {
            for &j in list {
                if j >= n {
                    return Err(GraphError::IndexOutOfRange {
                        vertex: i,
                        neighbor: j,
                    });
                }
                if j == i {
                    return Err(GraphError::SelfLoop { vertex: i });
                }
                if !adjacency[j].contains(&i) {
                    return Err(GraphError::Asymmetric { a: i, b: j });
                }
            }
        }
        let mut seen: HashMap<[u64; 3], usize> = HashMap::with_capacity(n);
        for (i, v) in vertices.iter().enumerate() {
            if let Some(&a) = seen.get(&weld_key(v)) {
                return Err(GraphError::DuplicateVertex { a, b: i });
            }
            seen.insert(weld_key(v), i);
        }
        let sizes = component_sizes(adjacency);
        if sizes.len() > 1 {
            return Err(GraphError::Disconnected { sizes });
        }
        for f in &faces {
            for &k in f {
                if k as usize >= n {
                    return Err(GraphError::IndexOutOfRange {
                        vertex: f[0] as usize,
                        neighbor: k as usize,
                    });
                }
            }
        }
        Ok(Self::assemble(vertices, adjacency, faces))
    }

    fn assemble(vertices: Vec<Vec3>, adjacency: &[Vec<usize>], faces: Vec<[u32; 3]>) -> Self {
        let mut offsets = Vec::with_capacity(adjacency.len() + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for list in adjacency {
            let mut list = list.clone();
            list.sort_unstable();
            list.dedup();
            neighbors.extend(list.iter().map(|&j| j as u32));
            offsets.push(neighbors.len() as u32);
        }
        let centroid = centroid(&vertices);
        Self {
            vertices,
            centroid,
            topology: Arc::new(Topology {
                offsets,
                neighbors,
                faces,
            }),
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    #[inline]
    pub fn vertex(&self, i: usize) -> &Vec3 {
        &self.vertices[i]
    }

    /// Sorted neighbor indices of vertex `i`.
    #[inline]
    pub fn neighbors(&self, i: usize) -> &[u32] {
        let t = &*self.topology;
        &t.neighbors[t.offsets[i] as usize..t.offsets[i + 1] as usize]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors(i).len()
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.topology.faces
    }

    /// Mean of the vertex positions.
    pub fn centroid(&self) -> Vec3 {
        self.centroid
    }

    pub fn adjacency_lists(&self) -> Vec<Vec<usize>> {
        (0..self.len())
            .map(|i| self.neighbors(i).iter().map(|&j| j as usize).collect())
            .collect()
    }

    /// True when both graphs share one topology allocation.
    pub fn shares_topology(&self, other: &VertexGraph) -> bool {
        Arc::ptr_eq(&self.topology, &other.topology)
    }

    /// A copy with every vertex mapped through `t`, sharing this topology.
    pub fn transformed(&self, t: &Transform) -> VertexGraph {
        VertexGraph {
            vertices: self.vertices.iter().map(|v| t.apply(v)).collect(),
            centroid: t.apply(&self.centroid),
            topology: Arc::clone(&self.topology),
        }
    }

    /// Overwrites this graph's vertices with `t · source` in place.
    ///
    /// `source` must have the same vertex count; no allocation happens.
    pub fn set_transformed_from(&mut self, source: &VertexGraph, t: &Transform) {
        debug_assert_eq!(self.vertices.len(), source.vertices.len());
        for (dst, src) in self.vertices.iter_mut().zip(&source.vertices) {
            *dst = t.apply(src);
        }
        self.centroid = t.apply(&source.centroid);
    }

    /// Componentwise scale of the vertex positions (URDF `scale`).
    pub fn scaled(&self, scale: &Vec3) -> VertexGraph {
        let vertices: Vec<Vec3> = self.vertices.iter().map(|v| v.component_mul(scale)).collect();
        VertexGraph {
            centroid: centroid(&vertices),
            vertices,
            topology: Arc::clone(&self.topology),
        }
    }

    /// The stored faces as a triangle soup in face order.
    pub fn to_soup(&self) -> TriangleSoup {
        TriangleSoup::new(
            self.faces()
                .iter()
                .map(|f| {
                    Triangle::new(
                        self.vertices[f[0] as usize],
                        self.vertices[f[1] as usize],
                        self.vertices[f[2] as usize],
                    )
                })
                .collect(),
        )
    }

    /// Length of the axis-aligned bounding-box diagonal.
    pub fn bounding_diagonal(&self) -> f64 {
        bounding_diagonal(&self.vertices)
    }

    pub fn to_json(&self) -> String {
        let doc = GraphDoc {
            vertices: self.vertices.iter().map(|v| [v.x, v.y, v.z]).collect(),
            adjacency: self.adjacency_lists(),
            faces: self
                .faces()
                .iter()
                .map(|f| f.map(|k| k as usize))
                .collect(),
        };
        serde_json::to_string(&doc).expect("graph serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let doc: GraphDoc = serde_json::from_str(text).map_err(|e| GraphError::Json(e.to_string()))?;
        let vertices = doc.vertices.iter().map(|v| Vec3::new(v[0], v[1], v[2])).collect();
        let faces = doc.faces.iter().map(|f| f.map(|k| k as u32)).collect();
        Self::from_adjacency(vertices, &doc.adjacency, faces)
    }
}

pub(crate) fn bounding_diagonal(points: &[Vec3]) -> f64 {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    if points.is_empty() {
        0.0
    } else {
        (hi - lo).norm()
    }
}

fn centroid(vertices: &[Vec3]) -> Vec3 {
    if vertices.is_empty() {
        return Vec3::zeros();
    }
    vertices.iter().sum::<Vec3>() / vertices.len() as f64
}

/// Bit pattern used for exact welding; `-0.0` and `0.0` weld together.
fn weld_key(v: &Vec3) -> [u64; 3] {
    [v.x, v.y, v.z].map(|c| if c == 0.0 { 0u64 } else { c.to_bits() })
}

fn component_sizes(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let mut seen = vec![false; n];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut size = 0;
        while let Some(i) = stack.pop() {
            size += 1;
            for &j in &adjacency[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        sizes.push(size);
    }
    sizes
}

struct Welder {
    mode: WeldMode,
    exact: HashMap<[u64; 3], u32>,
    cells: HashMap<[i64; 3], Vec<u32>>,
    vertices: Vec<Vec3>,
}

impl Welder {
    fn index_of(&mut self, p: &Vec3) -> u32 {
        match self.mode {
            WeldMode::Exact => {
                let next = self.vertices.len() as u32;
                let idx = *self.exact.entry(weld_key(p)).or_insert(next);
                if idx == next {
                    self.vertices.push(*p);
                }
                idx
            }
            WeldMode::Epsilon(eps) => {
                let cell = p.map(|c| (c / eps).floor() as i64);
                for dx in -1..=1 {
                    for dy in -1..=1 {
                        for dz in -1..=1 {
                            let key = [cell.x + dx, cell.y + dy, cell.z + dz];
                            if let Some(list) = self.cells.get(&key) {
                                if let Some(&i) = list
                                    .iter()
                                    .find(|&&i| (self.vertices[i as usize] - p).norm() <= eps)
                                {
                                    return i;
                                }
                            }
                        }
                    }
                }
                let idx = self.vertices.len() as u32;
                self.vertices.push(*p);
                self.cells.entry([cell.x, cell.y, cell.z]).or_default().push(idx);
                idx
            }
        }
    }
}

/// Welds a triangle soup into a vertex graph. Vertices get indices in order
/// of first appearance; an edge joins two vertices iff some triangle holds both.
pub fn build_graph(soup: &TriangleSoup) -> Result<(VertexGraph, WeldReport), GraphError> {
    build_graph_with(soup, WeldMode::Exact)
}

pub fn build_graph_with(
    soup: &TriangleSoup,
    mode: WeldMode,
) -> Result<(VertexGraph, WeldReport), GraphError> {
    if soup.is_empty() {
        return Err(GraphError::Empty);
    }
    let mut welder = Welder {
        mode,
        exact: HashMap::new(),
        cells: HashMap::new(),
        vertices: Vec::new(),
    };
    let mut faces = Vec::with_capacity(soup.len());
    let mut report = WeldReport::default();
    for (t, tri) in soup.triangles.iter().enumerate() {
        let f = tri.vertices.map(|p| welder.index_of(&p));
        if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
            report.degenerate_triangles.push(t);
        }
        faces.push(f);
    }
    let vertices = welder.vertices;
    let mut adjacency = vec![Vec::new(); vertices.len()];
    let mut edge_uses: HashMap<(u32, u32), u32> = HashMap::new();
    for f in &faces {
        for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
            if a == b {
                continue;
            }
            adjacency[a as usize].push(b as usize);
            adjacency[b as usize].push(a as usize);
            *edge_uses.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    for list in &mut adjacency {
        list.sort_unstable();
        list.dedup();
    }
    let sizes = component_sizes(&adjacency);
    if sizes.len() > 1 {
        return Err(GraphError::Disconnected { sizes });
    }
    report.closed = edge_uses.values().all(|&n| n == 2);
    report.low_degree = adjacency
        .iter()
        .enumerate()
        .filter(|(_, l)| l.len() < 3)
        .map(|(i, _)| i)
        .collect();
    if report.closed && !report.low_degree.is_empty() {
        log::warn!(
            "closed mesh has {} vertices with degree < 3",
            report.low_degree.len()
        );
    }
    Ok((VertexGraph::assemble(vertices, &adjacency, faces), report))
}
