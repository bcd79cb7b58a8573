//! Mesh import and the vertex-graph representation used by the support
//! functions: STL parsing, vertex welding, convex hulls and a convexity gate.

mod graph;
mod hull;
pub mod shapes;
mod stl;

use std::path::Path;

use thiserror::Error;

pub use graph::{build_graph, build_graph_with, GraphError, Topology, VertexGraph, WeldMode, WeldReport};
pub use hull::{convex_hull, convex_hull_indexed, verify_convex, ConvexityViolation, Hull, HullError, CONVEXITY_TOL};
pub use stl::{load_stl, write_ascii_stl, write_binary_stl, StlError, Triangle, TriangleSoup};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Stl { path: String, source: StlError },
    #[error("{path}: {source}")]
    Graph { path: String, source: GraphError },
    #[error("{path}: {source}")]
    Hull { path: String, source: HullError },
    #[error("{path}: mesh is not convex: {violation}")]
    NonConvex {
        path: String,
        violation: ConvexityViolation,
    },
}

/// What to do with a mesh that fails [`verify_convex`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum HullPolicy {
    /// Reject non-convex meshes.
    #[default]
    Reject,
    /// Replace non-convex meshes by their convex hull.
    HullIfNonConvex,
    /// Replace every mesh by its convex hull.
    Always,
}

/// Reads a mesh file (`.stl`, or `.json` in the graph format) into a graph.
pub fn load_graph_file(path: &Path, weld: WeldMode) -> Result<VertexGraph, MeshError> {
    let name = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|source| MeshError::Io {
        path: name.clone(),
        source,
    })?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        let text = String::from_utf8_lossy(&bytes);
        return VertexGraph::from_json(&text).map_err(|source| MeshError::Graph { path: name, source });
    }
    let soup = load_stl(&bytes).map_err(|source| MeshError::Stl {
        path: name.clone(),
        source,
    })?;
    let (graph, _) = build_graph_with(&soup, weld).map_err(|source| MeshError::Graph { path: name, source })?;
    Ok(graph)
}

/// Applies the convexity gate to a loaded graph.
pub fn prepare_convex(graph: VertexGraph, policy: HullPolicy, path: &str) -> Result<VertexGraph, MeshError> {
    let hull = |g: &VertexGraph| {
        convex_hull(g.vertices()).map_err(|source| MeshError::Hull {
            path: path.to_string(),
            source,
        })
    };
    match policy {
        HullPolicy::Always => hull(&graph),
        HullPolicy::Reject | HullPolicy::HullIfNonConvex => match verify_convex(&graph) {
            Ok(()) => Ok(graph),
            Err(_) if policy == HullPolicy::HullIfNonConvex => hull(&graph),
            Err(violation) => Err(MeshError::NonConvex {
                path: path.to_string(),
                violation,
            }),
        },
    }
}
