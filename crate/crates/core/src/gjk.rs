//! GJK distance between two placed convex vertex graphs.
//!
//! Each iteration asks both bodies for a support vertex, pushes the witness
//! `w = support(P, −v) − support(Q, v)` onto the simplex and reduces the
//! simplex to the feature closest to the origin. Support vertices come from a
//! full scan or from hill climbing the adjacency graph, starting at the
//! previous support vertex of the same body.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Transform, Vec3};
use crate::mesh::VertexGraph;
use crate::simplex::{distance_subalgorithm, Simplex, SimplexStep, Witness};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportStrategy {
    Exhaustive,
    #[default]
    HillClimb,
}

impl std::str::FromStr for SupportStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exhaustive" => Ok(Self::Exhaustive),
            "hill_climb" | "hill-climb" => Ok(Self::HillClimb),
            other => Err(format!("unknown support strategy `{other}` (expected exhaustive or hill_climb)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GjkConfig {
    pub max_iterations: u32,
    /// Relative stopping tolerance on `‖v‖² − v·w`; the returned distance
    /// exceeds the true one by at most `termination_tolerance · distance`.
    pub termination_tolerance: f64,
    pub support_strategy: SupportStrategy,
}

impl Default for GjkConfig {
    fn default() -> Self {
        Self {
            max_iterations: 128,
            termination_tolerance: 1e-13,
            support_strategy: SupportStrategy::HillClimb,
        }
    }
}

impl GjkConfig {
    pub fn with_strategy(strategy: SupportStrategy) -> Self {
        Self {
            support_strategy: strategy,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), GjkError> {
        if self.max_iterations == 0 {
            return Err(GjkError::InvalidConfig("max_iterations must be at least 1"));
        }
        if !(self.termination_tolerance > 0.0) {
            return Err(GjkError::InvalidConfig("termination_tolerance must be positive"));
        }
        Ok(())
    }
}

/// Last support vertex of each body for one pair.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportHint {
    pub p_start: Option<u32>,
    pub q_start: Option<u32>,
}

impl SupportHint {
    pub fn is_set(&self) -> bool {
        self.p_start.is_some() && self.q_start.is_some()
    }

    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceResult {
    pub distance: f64,
    pub colliding: bool,
    pub closest_p: Vec3,
    pub closest_q: Vec3,
    pub iterations: u32,
    pub support_calls: u32,
    pub converged: bool,
}

/// Which body of a query an error refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Body {
    P,
    Q,
}

impl std::fmt::Display for Body {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Body::P => "P",
            Body::Q => "Q",
        })
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum GjkError {
    #[error("support direction is zero")]
    ZeroDirection,
    #[error("body {0} has no vertices")]
    Empty(Body),
    #[error("hint vertex {index} out of range for body {body} ({len} vertices)")]
    InvalidHint { body: Body, index: u32, len: usize },
    #[error("hill climb on body {body} visited {visits} vertices of {len}; the graph is not convex")]
    NonConvex { body: Body, visits: usize, len: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

/// A vertex graph and an optional rigid placement. Without a transform the
/// vertices are already in the query frame.
#[derive(Clone, Copy, Debug)]
pub struct Placed<'a> {
    pub graph: &'a VertexGraph,
    pub transform: Option<Transform>,
}

impl<'a> Placed<'a> {
    pub fn new(graph: &'a VertexGraph, transform: Transform) -> Self {
        Self {
            graph,
            transform: Some(transform),
        }
    }

    pub fn world(graph: &'a VertexGraph) -> Self {
        Self { graph, transform: None }
    }

    /// `v` expressed in the graph's local frame.
    #[inline]
    fn local_direction(&self, v: &Vec3) -> Vec3 {
        match &self.transform {
            Some(t) => t.rotation.tr_mul(v),
            None => *v,
        }
    }

    #[inline]
    pub fn point(&self, i: usize) -> Vec3 {
        let p = self.graph.vertex(i);
        match &self.transform {
            Some(t) => t.apply(p),
            None => *p,
        }
    }

    fn centroid(&self) -> Vec3 {
        let c = self.graph.centroid();
        match &self.transform {
            Some(t) => t.apply(&c),
            None => c,
        }
    }
}

/// Vertex maximizing `v·(T·x)`; ties go to the lowest index.
pub fn support_exhaustive(body: &Placed, v: &Vec3) -> Result<usize, GjkError> {
    if v.x == 0.0 && v.y == 0.0 && v.z == 0.0 {
        return Err(GjkError::ZeroDirection);
    }
    let d = body.local_direction(v);
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, x) in body.graph.vertices().iter().enumerate() {
        let value = d.dot(x);
        if value > best_value {
            best = i;
            best_value = value;
        }
    }
    Ok(best)
}

/// Climbs from `start` to the best strictly improving neighbor until none
/// remains. Returns the vertex and the number of moves.
pub fn support_hill_climb(body: &Placed, v: &Vec3, start: usize) -> Result<(usize, usize), GjkError> {
    hill_climb(body, v, start, Body::P)
}

fn hill_climb(body: &Placed, v: &Vec3, start: usize, which: Body) -> Result<(usize, usize), GjkError> {
    if v.x == 0.0 && v.y == 0.0 && v.z == 0.0 {
        return Err(GjkError::ZeroDirection);
    }
    let g = body.graph;
    let d = body.local_direction(v);
    let mut current = start;
    let mut value = d.dot(g.vertex(current));
    let mut moves = 0;
    loop {
        let mut next = current;
        let mut next_value = value;
        for &j in g.neighbors(current) {
            let candidate = d.dot(g.vertex(j as usize));
            if candidate > next_value {
                next = j as usize;
                next_value = candidate;
            }
        }
        if next == current {
            return Ok((current, moves));
        }
        moves += 1;
        if moves > g.len() {
            return Err(GjkError::NonConvex {
                body: which,
                visits: moves,
                len: g.len(),
            });
        }
        current = next;
        value = next_value;
    }
}

struct Supporter {
    strategy: SupportStrategy,
    calls: u32,
}

impl Supporter {
    fn find(&mut self, body: &Placed, v: &Vec3, start: usize, which: Body) -> Result<usize, GjkError> {
        self.calls += 1;
        match self.strategy {
            SupportStrategy::Exhaustive => support_exhaustive(body, v),
            SupportStrategy::HillClimb => hill_climb(body, v, start, which).map(|(i, _)| i),
        }
    }
}

/// Distance between `p` and `q`.
///
/// The hint supplies the starting vertices and is overwritten with the final
/// support vertices.
pub fn gjk_distance(
    p: &Placed,
    q: &Placed,
    cfg: &GjkConfig,
    hint: &mut SupportHint,
) -> Result<DistanceResult, GjkError> {
    run(p, q, cfg, hint, None, None)
}

/// [`gjk_distance`] with an explicit initial direction and a record of
/// `‖v_k‖` after every simplex update.
pub fn gjk_distance_traced(
    p: &Placed,
    q: &Placed,
    cfg: &GjkConfig,
    hint: &mut SupportHint,
    initial: Option<Vec3>,
    trace: &mut Vec<f64>,
) -> Result<DistanceResult, GjkError> {
    run(p, q, cfg, hint, initial, Some(trace))
}

fn check_hint(index: Option<u32>, body: &Placed, which: Body) -> Result<Option<usize>, GjkError> {
    match index {
        Some(i) if i as usize >= body.graph.len() => Err(GjkError::InvalidHint {
            body: which,
            index: i,
            len: body.graph.len(),
        }),
        other => Ok(other.map(|i| i as usize)),
    }
}

fn run(
    p: &Placed,
    q: &Placed,
    cfg: &GjkConfig,
    hint: &mut SupportHint,
    initial: Option<Vec3>,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<DistanceResult, GjkError> {
    cfg.validate()?;
    if p.graph.is_empty() {
        return Err(GjkError::Empty(Body::P));
    }
    if q.graph.is_empty() {
        return Err(GjkError::Empty(Body::Q));
    }
    let hint_p = check_hint(hint.p_start, p, Body::P)?;
    let hint_q = check_hint(hint.q_start, q, Body::Q)?;

    // `v` is the current estimate of the closest point of P ⊖ Q.
    let mut v = match (initial, hint_p, hint_q) {
        (Some(v), _, _) => v,
        (None, Some(i), Some(j)) => p.point(i) - q.point(j),
        _ => p.centroid() - q.centroid(),
    };
    if v.norm_squared() == 0.0 || !v.iter().all(|x| x.is_finite()) {
        v = Vec3::x();
    }
    let (mut ip, mut iq) = (hint_p.unwrap_or(0), hint_q.unwrap_or(0));

    let mut supporter = Supporter {
        strategy: cfg.support_strategy,
        calls: 0,
    };
    let mut simplex = Simplex::new();
    let mut last: Option<SimplexStep> = None;
    let mut converged = false;
    let mut colliding = false;
    let mut iterations = 0;

    while iterations < cfg.max_iterations {
        iterations += 1;
        let dir = -v;
        ip = supporter.find(p, &dir, ip, Body::P)?;
        iq = supporter.find(q, &v, iq, Body::Q)?;
        let w = Witness::new(ip as u32, p.point(ip), iq as u32, q.point(iq));

        if last.is_some() {
            let v2 = v.norm_squared();
            if v2 - v.dot(&w.w) <= cfg.termination_tolerance * v2 || simplex.contains_pair(w.p_index, w.q_index) {
                converged = true;
                break;
            }
        }

        simplex.push_newest(w);
        let step = distance_subalgorithm(&simplex);
        let next_v = -step.direction;
        let next2 = next_v.norm_squared();
        if step.contains_origin || next2 == 0.0 {
            colliding = true;
            converged = true;
            last = Some(step);
            if let Some(t) = trace.as_deref_mut() {
                t.push(0.0);
            }
            break;
        }
        if let Some(prev) = &last {
            // Rounding can stall progress; the previous feature is then final.
            if next2 >= prev.direction.norm_squared() {
                converged = true;
                break;
            }
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(next2.sqrt());
        }
        simplex = step.reduced;
        v = next_v;
        last = Some(step);
    }

    hint.p_start = Some(ip as u32);
    hint.q_start = Some(iq as u32);
    let step = last.expect("at least one iteration runs");
    let (closest_p, closest_q) = step.closest_points();
    let distance = if colliding { 0.0 } else { step.direction.norm() };
    Ok(DistanceResult {
        distance,
        colliding,
        closest_p,
        closest_q: if colliding { closest_p } else { closest_q },
        iterations,
        support_calls: supporter.calls,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_graph, shapes::cube_soup};

    fn cube() -> VertexGraph {
        build_graph(&cube_soup(1.0)).unwrap().0
    }

    fn tetra() -> VertexGraph {
        let vs = vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()];
        let adj = vec![vec![1, 2, 3], vec![0, 2, 3], vec![0, 1, 3], vec![0, 1, 2]];
        VertexGraph::from_adjacency(vs, &adj, vec![]).unwrap()
    }

    #[test]
    fn exhaustive_support_examples() {
        let c = cube();
        let body = Placed::world(&c);
        let i = support_exhaustive(&body, &Vec3::x()).unwrap();
        assert_eq!(c.vertex(i).x, 1.0);
        let first = c.vertices().iter().position(|x| x.x == 1.0).unwrap();
        assert_eq!(i, first);
        let i = support_exhaustive(&body, &Vec3::new(1.0, 1.0, 1.0)).unwrap();
        assert_eq!(*c.vertex(i), Vec3::new(1.0, 1.0, 1.0));
        let t = tetra();
        assert_eq!(support_exhaustive(&Placed::world(&t), &Vec3::z()).unwrap(), 3);
        assert_eq!(support_exhaustive(&body, &Vec3::zeros()), Err(GjkError::ZeroDirection));
    }

    #[test]
    fn hill_climb_examples() {
        let c = cube();
        let body = Placed::world(&c);
        for start in (0..c.len()).filter(|&i| c.vertex(i).x == -1.0) {
            let (i, moves) = support_hill_climb(&body, &Vec3::x(), start).unwrap();
            assert_eq!(c.vertex(i).x, 1.0);
            assert!(moves <= 2);
        }
        let top = support_exhaustive(&body, &Vec3::new(1.0, 1.0, 1.0)).unwrap();
        assert_eq!(support_hill_climb(&body, &Vec3::new(1.0, 1.0, 1.0), top).unwrap(), (top, 0));
    }

    #[test]
    fn transformed_support_uses_world_direction() {
        let c = cube();
        let t = Transform::new(Transform::from_rpy(0.0, 0.0, 0.3), Vec3::new(5.0, 0.0, 0.0));
        let body = Placed::new(&c, t);
        let moved = c.transformed(&t);
        let v = Vec3::new(0.2, -1.0, 0.4);
        let i = support_exhaustive(&body, &v).unwrap();
        let j = support_exhaustive(&Placed::world(&moved), &v).unwrap();
        assert_eq!(i, j);
    }

    #[test]
    fn separated_cubes() {
        let c = cube();
        let p = Placed::new(&c, Transform::identity());
        let q = Placed::new(&c, Transform::from_translation(Vec3::new(4.0, 0.0, 0.0)));
        for strategy in [SupportStrategy::Exhaustive, SupportStrategy::HillClimb] {
            let r = gjk_distance(&p, &q, &GjkConfig::with_strategy(strategy), &mut SupportHint::default()).unwrap();
            assert!(!r.colliding);
            assert!((r.distance - 2.0).abs() < 1e-12);
            assert!((r.closest_p.x - 1.0).abs() < 1e-12 && (r.closest_q.x - 3.0).abs() < 1e-12);
            assert!(((r.closest_q - r.closest_p).norm() - r.distance).abs() < 1e-12);
            assert!(r.converged);
        }
    }

    #[test]
    fn overlapping_cubes() {
        let c = cube();
        let p = Placed::world(&c);
        let q = Placed::new(&c, Transform::from_translation(Vec3::new(1.0, 0.0, 0.0)));
        let r = gjk_distance(&p, &q, &GjkConfig::default(), &mut SupportHint::default()).unwrap();
        assert!(r.colliding);
        assert_eq!(r.distance, 0.0);
    }

    #[test]
    fn hint_is_updated_and_validated() {
        let c = cube();
        let p = Placed::world(&c);
        let q = Placed::new(&c, Transform::from_translation(Vec3::new(0.0, 3.0, 0.5)));
        let mut hint = SupportHint::default();
        let cold = gjk_distance(&p, &q, &GjkConfig::default(), &mut hint).unwrap();
        assert!(hint.is_set());
        let warm = gjk_distance(&p, &q, &GjkConfig::default(), &mut hint).unwrap();
        assert!((cold.distance - warm.distance).abs() < 1e-12);
        assert!(warm.support_calls <= cold.support_calls);
        let mut bad = SupportHint {
            p_start: Some(99),
            q_start: None,
        };
        assert!(matches!(
            gjk_distance(&p, &q, &GjkConfig::default(), &mut bad),
            Err(GjkError::InvalidHint { body: Body::P, .. })
        ));
    }

    #[test]
    fn config_validation() {
        let c = cube();
        let p = Placed::world(&c);
        let cfg = GjkConfig {
            max_iterations: 0,
            ..GjkConfig::default()
        };
        assert!(gjk_distance(&p, &p, &cfg, &mut SupportHint::default()).is_err());
    }

    #[test]
    fn hill_climb_stops_at_local_maximum_of_nonconvex_graph() {
        let vs = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.5, 1.0, 0.0),
            Vec3::new(5.0, 0.0, 0.0),
        ];
        let adj = vec![vec![1, 2, 3], vec![0, 2], vec![0, 1], vec![0]];
        let g = VertexGraph::from_adjacency(vs, &adj, vec![]).unwrap();
        let body = Placed::world(&g);
        let (i, _) = support_hill_climb(&body, &Vec3::x(), 1).unwrap();
        assert_eq!(i, 1);
        assert_eq!(support_exhaustive(&body, &Vec3::x()).unwrap(), 3);
    }
}
