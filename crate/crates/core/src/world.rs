//! Environment model and the per-pose self-collision sweep.
//!
//! Components keep an untransformed backup graph and a current graph with
//! the same topology. A pose update rewrites only the current vertices of
//! mobile components; the sweep then queries every non-excluded pair with
//! identity transforms.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::gjk::{gjk_distance, GjkConfig, GjkError, Placed, SupportHint};
use crate::kinematics::{parse_urdf, resolve_mesh_path, Frames, KinematicChain, KinematicsError, LimitMode};
use crate::mesh::{load_graph_file, prepare_convex, write_ascii_stl, HullPolicy, MeshError, TriangleSoup, VertexGraph, WeldMode};

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("duplicate component name `{0}`")]
    DuplicateName(String),
    #[error("mobile component `{component}` is attached to link `{link}`, which the chain does not have")]
    Unattached { component: String, link: String },
    #[error("epsilon must be finite and non-negative, got {0}")]
    InvalidEpsilon(f64),
    #[error("URDF {path}: {source}")]
    Urdf { path: String, source: KinematicsError },
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("pair ({a}, {b}): {source}")]
    Gjk { a: String, b: String, source: GjkError },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Clone, Debug)]
pub struct Component {
    pub name: String,
    pub backup: VertexGraph,
    pub current: VertexGraph,
    pub mobile: bool,
    /// Link carrying a mobile component.
    pub link: Option<String>,
    /// Collision element of the link, when built from a chain.
    collision: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CheckMode {
    /// Stop at the first pair within epsilon.
    #[default]
    EarlyExit,
    /// Query every pair.
    Exhaustive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairReport {
    pub name_i: String,
    pub name_j: String,
    pub distance: f64,
    pub colliding: bool,
    pub iterations: u32,
    pub support_calls: u32,
    pub converged: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CollisionReport {
    pub colliding: bool,
    pub pairs: Vec<PairReport>,
}

impl CollisionReport {
    pub fn min_distance(&self) -> Option<f64> {
        self.pairs.iter().map(|p| p.distance).reduce(f64::min)
    }

    pub fn all_converged(&self) -> bool {
        self.pairs.iter().all(|p| p.converged)
    }
}

/// Per-pair result without names, used on the allocation-free path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairResult {
    pub i: usize,
    pub j: usize,
    pub distance: f64,
    pub colliding: bool,
    pub iterations: u32,
    pub support_calls: u32,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct WorldModel {
    components: Vec<Component>,
    excluded: BTreeSet<(usize, usize)>,
    epsilon: f64,
    config: GjkConfig,
    warm_start: bool,
    /// Queried pairs `i < j`, and one hint per pair.
    pairs: Vec<(usize, usize)>,
    hints: Vec<SupportHint>,
    frames: Frames,
}

impl Default for WorldModel {
    fn default() -> Self {
        Self::new()
    }
}

/// How [`load_robot`] builds a world from a URDF.
#[derive(Clone, Debug)]
pub struct RobotOptions {
    pub package_root: Option<PathBuf>,
    pub hull: HullPolicy,
    pub weld: WeldMode,
    pub exclude_adjacent: bool,
}

impl Default for RobotOptions {
    fn default() -> Self {
        Self {
            package_root: None,
            hull: HullPolicy::Reject,
            weld: WeldMode::Exact,
            exclude_adjacent: true,
        }
    }
}

/// A robot chain with its collision world.
#[derive(Clone, Debug)]
pub struct Robot {
    pub chain: KinematicChain,
    pub world: WorldModel,
}

impl Robot {
    pub fn update_pose(&mut self, theta: &[f64], mode: LimitMode) -> Result<(), WorldError> {
        self.world.update_pose(&self.chain, theta, mode)
    }
}

/// Reads a URDF and its collision meshes.
pub fn load_robot(urdf: &Path, opts: &RobotOptions) -> Result<Robot, WorldError> {
    let path = urdf.display().to_string();
    let xml = std::fs::read_to_string(urdf).map_err(|source| WorldError::Io {
        path: path.clone(),
        source,
    })?;
    let chain = parse_urdf(&xml).map_err(|source| WorldError::Urdf { path, source })?;
    let dir = urdf.parent().unwrap_or(Path::new("."));
    let mut graphs = Vec::with_capacity(chain.collisions.len());
    for c in &chain.collisions {
        let file = resolve_mesh_path(&c.filename, dir, opts.package_root.as_deref())?;
        let mut g = load_graph_file(&file, opts.weld)?;
        if let Some(s) = c.scale {
            g = g.scaled(&s);
        }
        graphs.push(prepare_convex(g, opts.hull, &file.display().to_string())?);
    }
    let world = WorldModel::from_chain(&chain, graphs, opts.exclude_adjacent)?;
    Ok(Robot { chain, world })
}

impl WorldModel {
    pub fn new() -> Self {
        Self {
            components: Vec::new(),
            excluded: BTreeSet::new(),
            epsilon: 0.0,
            config: GjkConfig::default(),
            warm_start: true,
            pairs: Vec::new(),
            hints: Vec::new(),
            frames: Frames::default(),
        }
    }

    /// One mobile component per collision mesh of `chain`, with `graphs` in
    /// collision order. Links holding one mesh name their component; further
    /// meshes are suffixed `#k`.
    pub fn from_chain(chain: &KinematicChain, graphs: Vec<VertexGraph>, exclude_adjacent: bool) -> Result<Self, WorldError> {
        assert_eq!(graphs.len(), chain.collisions.len(), "one graph per collision mesh");
        let mut world = Self::new();
        for (ci, graph) in graphs.into_iter().enumerate() {
            let link = &chain.links[chain.collisions[ci].link];
            let k = link.collisions.iter().position(|&c| c == ci).unwrap_or(0);
            let name = if k == 0 {
                link.name.clone()
            } else {
                format!("{}#{k}", link.name)
            };
            world.push(name, graph, true, Some(link.name.clone()), Some(ci))?;
        }
        if exclude_adjacent {
            world.exclude_adjacent(chain);
        }
        Ok(world)
    }

    fn push(
        &mut self,
        name: String,
        graph: VertexGraph,
        mobile: bool,
        link: Option<String>,
        collision: Option<usize>,
    ) -> Result<usize, WorldError> {
        if self.index_of(&name).is_some() {
            return Err(WorldError::DuplicateName(name));
        }
        self.components.push(Component {
            name,
            current: graph.clone(),
            backup: graph,
            mobile,
            link,
            collision,
        });
        self.rebuild_pairs();
        Ok(self.components.len() - 1)
    }

    /// Adds a component whose vertices are already in the world frame.
    pub fn add_stationary(&mut self, name: &str, graph: VertexGraph) -> Result<usize, WorldError> {
        self.push(name.to_string(), graph, false, None, None)
    }

    /// Adds a component carried by `link`; its graph is in the link frame.
    pub fn add_mobile(&mut self, name: &str, graph: VertexGraph, link: &str) -> Result<usize, WorldError> {
        self.push(name.to_string(), graph, true, Some(link.to_string()), None)
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn component(&self, name: &str) -> Option<&Component> {
        self.index_of(name).map(|i| &self.components[i])
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.components.iter().position(|c| c.name == name)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn set_epsilon(&mut self, epsilon: f64) -> Result<(), WorldError> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(WorldError::InvalidEpsilon(epsilon));
        }
        self.epsilon = epsilon;
        Ok(())
    }

    pub fn config(&self) -> &GjkConfig {
        &self.config
    }

    pub fn set_config(&mut self, config: GjkConfig) {
        self.config = config;
        self.reset_hints();
    }

    /// Enables or disables per-pair warm starts.
    pub fn set_warm_start(&mut self, on: bool) {
        self.warm_start = on;
        self.reset_hints();
    }

    pub fn reset_hints(&mut self) {
        self.hints.iter_mut().for_each(SupportHint::reset);
    }

    /// Excluded pairs as names, `i < j` by insertion order.
    pub fn excluded_pairs(&self) -> Vec<(&str, &str)> {
        self.excluded
            .iter()
            .map(|&(i, j)| (self.components[i].name.as_str(), self.components[j].name.as_str()))
            .collect()
    }

    pub fn exclude(&mut self, a: &str, b: &str) -> Result<(), WorldError> {
        let i = self.index_of(a).ok_or_else(|| WorldError::UnknownComponent(a.to_string()))?;
        let j = self.index_of(b).ok_or_else(|| WorldError::UnknownComponent(b.to_string()))?;
        if i != j {
            self.excluded.insert((i.min(j), i.max(j)));
            self.rebuild_pairs();
        }
        Ok(())
    }

    pub fn clear_exclusions(&mut self) {
        self.excluded.clear();
        self.rebuild_pairs();
    }

    /// Excludes pairs whose links are joined by a joint, skipping over links
    /// without collision geometry, and pairs on the same link.
    pub fn exclude_adjacent(&mut self, chain: &KinematicChain) {
        let has_geometry: Vec<bool> = chain.links.iter().map(|l| !l.collisions.is_empty()).collect();
        let nearest_geometric_parent = |mut link: usize| {
            while let Some(j) = chain.parent_joint(link) {
                link = j.parent;
                if has_geometry[link] {
                    return Some(link);
                }
            }
            None
        };
        let link_of: Vec<Option<usize>> = self
            .components
            .iter()
            .map(|c| c.link.as_deref().and_then(|l| chain.link_index(l)))
            .collect();
        for i in 0..self.components.len() {
            for j in i + 1..self.components.len() {
                let (Some(a), Some(b)) = (link_of[i], link_of[j]) else {
                    continue;
                };
                if a == b || nearest_geometric_parent(a) == Some(b) || nearest_geometric_parent(b) == Some(a) {
                    self.excluded.insert((i, j));
                }
            }
        }
        self.rebuild_pairs();
    }

    fn rebuild_pairs(&mut self) {
        let n = self.components.len();
        self.pairs.clear();
        for i in 0..n {
            for j in i + 1..n {
                if !self.excluded.contains(&(i, j)) {
                    self.pairs.push((i, j));
                }
            }
        }
        self.hints.clear();
        self.hints.resize(self.pairs.len(), SupportHint::default());
    }

    /// Number of queries an exhaustive sweep runs.
    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    /// Moves every mobile component to the pose `theta` of `chain`.
    pub fn update_pose(&mut self, chain: &KinematicChain, theta: &[f64], mode: LimitMode) -> Result<(), WorldError> {
        chain.forward_kinematics_into(theta, mode, &mut self.frames)?;
        for c in self.components.iter_mut().filter(|c| c.mobile) {
            let link = c.link.as_deref().unwrap_or("");
            let from_chain = c
                .collision
                .filter(|&ci| ci < chain.collisions.len() && chain.links[chain.collisions[ci].link].name == link);
            let frame = match from_chain {
                Some(ci) => &self.frames.collisions[ci],
                None => match chain.link_index(link) {
                    Some(l) => &self.frames.links[l],
                    None => {
                        return Err(WorldError::Unattached {
                            component: c.name.clone(),
                            link: link.to_string(),
                        })
                    }
                },
            };
            c.current.set_transformed_from(&c.backup, frame);
        }
        Ok(())
    }

    fn query(&self, k: usize, hint: &mut SupportHint) -> Result<PairResult, WorldError> {
        let (i, j) = self.pairs[k];
        let (a, b) = (&self.components[i], &self.components[j]);
        if !self.warm_start {
            hint.reset();
        }
        let r = gjk_distance(&Placed::world(&a.current), &Placed::world(&b.current), &self.config, hint).map_err(
            |source| WorldError::Gjk {
                a: a.name.clone(),
                b: b.name.clone(),
                source,
            },
        )?;
        Ok(PairResult {
            i,
            j,
            distance: r.distance,
            colliding: r.distance <= self.epsilon,
            iterations: r.iterations,
            support_calls: r.support_calls,
            converged: r.converged,
        })
    }

    /// Runs the sweep, appending per-pair results to `out` (cleared first).
    /// Returns whether any pair is within epsilon.
    pub fn check_into(&mut self, mode: CheckMode, out: &mut Vec<PairResult>) -> Result<bool, WorldError> {
        out.clear();
        let mut hints = std::mem::take(&mut self.hints);
        let mut hit = false;
        let mut failure = None;
        for (k, hint) in hints.iter_mut().enumerate() {
            match self.query(k, hint) {
                Ok(r) => {
                    out.push(r);
                    if r.colliding {
                        hit = true;
                        if mode == CheckMode::EarlyExit {
                            break;
                        }
                    }
                }
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
        }
        self.hints = hints;
        match failure {
            Some(e) => Err(e),
            None => Ok(hit),
        }
    }

    /// Exhaustive sweep with pair queries spread over the rayon pool.
    pub fn check_parallel(&mut self, out: &mut Vec<PairResult>) -> Result<bool, WorldError> {
        let mut hints = std::mem::take(&mut self.hints);
        let results: Result<Vec<PairResult>, WorldError> = hints
            .par_iter_mut()
            .enumerate()
            .map(|(k, hint)| self.query(k, hint))
            .collect();
        self.hints = hints;
        *out = results?;
        Ok(out.iter().any(|r| r.colliding))
    }

    /// Named report of a sweep.
    pub fn check_collisions(&mut self, mode: CheckMode) -> Result<CollisionReport, WorldError> {
        let mut results = Vec::new();
        let colliding = self.check_into(mode, &mut results)?;
        Ok(self.report(colliding, &results))
    }

    pub fn report(&self, colliding: bool, results: &[PairResult]) -> CollisionReport {
        CollisionReport {
            colliding,
            pairs: results
                .iter()
                .map(|r| PairReport {
                    name_i: self.components[r.i].name.clone(),
                    name_j: self.components[r.j].name.clone(),
                    distance: r.distance,
                    colliding: r.colliding,
                    iterations: r.iterations,
                    support_calls: r.support_calls,
                    converged: r.converged,
                })
                .collect(),
        }
    }

    /// All current meshes as one ASCII STL solid.
    pub fn export_stl(&self) -> String {
        let mut soup = TriangleSoup::default();
        for c in &self.components {
            soup.triangles.extend(c.current.to_soup().triangles);
        }
        write_ascii_stl(&soup, "scene")
    }

    /// All current meshes as a JSON list of named graphs.
    pub fn export_json(&self) -> String {
        let items: Vec<serde_json::Value> = self
            .components
            .iter()
            .map(|c| {
                let graph: serde_json::Value =
                    serde_json::from_str(&c.current.to_json()).expect("graph JSON is valid");
                serde_json::json!({
                    "name": c.name,
                    "mobile": c.mobile,
                    "link": c.link,
                    "graph": graph,
                })
            })
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({ "components": items })).expect("scene JSON is valid")
    }
}
