//! Random inputs shared by the integration suites.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rgjk::fixtures::Fixture;
use rgjk::mesh::{convex_hull, HullPolicy, VertexGraph};
use rgjk::oracle;
use rgjk::simplex::{Simplex, SimplexStep};
use rgjk::world::{load_robot, Robot, RobotOptions};
use rgjk::{Transform, Vec3};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit_cube_point(rng: &mut impl Rng) -> Vec3 {
    Vec3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    )
}

pub fn unit_vector(rng: &mut impl Rng) -> Vec3 {
    loop {
        let p = unit_cube_point(rng);
        let n = p.norm();
        if n > 1e-3 && n <= 1.0 {
            return p / n;
        }
    }
}

/// Uniformly random rotation (normalized Gaussian-free quaternion rejection).
pub fn random_rotation(rng: &mut impl Rng) -> Transform {
    let q: nalgebra::Vector4<f64> = loop {
        let q = nalgebra::Vector4::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = q.norm();
        if n > 1e-3 && n <= 1.0 {
            break q / n;
        }
    };
    let uq = nalgebra::UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(q.w, q.x, q.y, q.z));
    Transform::new(*uq.to_rotation_matrix().matrix(), Vec3::zeros())
}

pub fn random_transform(rng: &mut impl Rng, reach: f64) -> Transform {
    let mut t = random_rotation(rng);
    t.translation = unit_cube_point(rng) * reach;
    t
}

/// A random simplex in the domain the distance sub-algorithm is defined
/// on: the newest point `A` strictly improves on the closest point of the
/// older witnesses, as every GJK support step does.
pub fn gjk_simplex(rng: &mut impl Rng, size: usize) -> Simplex {
    loop {
        let older: Vec<Vec3> = (1..size).map(|_| unit_cube_point(rng)).collect();
        let a = unit_cube_point(rng);
        if size > 1 {
            let c = oracle::closest_on_simplex(&older);
            if c.norm_squared() == 0.0 || a.dot(&c) >= c.norm_squared() {
                continue;
            }
        }
        let mut pts = vec![a];
        pts.extend(older);
        return Simplex::from_points(&pts);
    }
}

/// Random convex polytope with exactly `n` extreme points: points on an
/// ellipsoid with random axes.
pub fn random_polytope(rng: &mut impl Rng, n: usize) -> VertexGraph {
    loop {
        let axes = Vec3::new(
            rng.random_range(0.3..1.5),
            rng.random_range(0.3..1.5),
            rng.random_range(0.3..1.5),
        );
        let pts: Vec<Vec3> = (0..n).map(|_| unit_vector(rng).component_mul(&axes)).collect();
        if let Ok(g) = convex_hull(&pts) {
            if g.len() == n {
                return g;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairKind {
    Separated,
    Touching,
    Overlapping,
}

pub struct PairCase {
    pub p: VertexGraph,
    pub tp: Transform,
    pub q: VertexGraph,
    pub tq: Transform,
    pub kind: PairKind,
}

/// Offset from exact contact used for touching pairs.
pub const CONTACT_OFFSET: f64 = 1e-7;

/// Largest `s` with `s·u` inside the closed convex hull `m` (which holds
/// the origin).
fn ray_exit(m: &VertexGraph, u: &Vec3) -> f64 {
    let vs = m.vertices();
    let mut s = f64::INFINITY;
    for f in m.faces() {
        let [a, b, c] = f.map(|k| vs[k as usize]);
        let n = (b - a).cross(&(c - a));
        let along = n.dot(u);
        if along > 0.0 {
            s = s.min(n.dot(&a) / along);
        }
    }
    s
}

/// A random pair of convex polytopes with 8–64 vertices each. Touching
/// pairs sit `±CONTACT_OFFSET` along a random direction from first contact.
pub fn random_pair(rng: &mut impl Rng, kind: PairKind) -> PairCase {
    let (np, nq) = (rng.random_range(8..=64), rng.random_range(8..=64));
    let p = random_polytope(rng, np);
    let q = random_polytope(rng, nq);
    let tp = random_transform(rng, 2.0);
    let mut tq = random_rotation(rng);
    let u = unit_vector(rng);
    // Q's centroid on P's centroid: the bodies overlap and the Minkowski
    // difference holds the origin.
    tq.translation = tp.apply(&p.centroid()) - tq.apply_vector(&q.centroid());
    let m = convex_hull(&oracle::minkowski_points(&p, &tp, &q, &tq)).expect("full-dimensional bodies");
    let contact = ray_exit(&m, &u);
    let s = match kind {
        PairKind::Separated => contact + rng.random_range(0.05..2.0),
        PairKind::Overlapping => contact * rng.random_range(0.0..0.9),
        PairKind::Touching => {
            if rng.random_bool(0.5) {
                contact + CONTACT_OFFSET
            } else {
                contact - CONTACT_OFFSET
            }
        }
    };
    // Translating Q by t shifts the difference by −t; the bodies touch when
    // t reaches the boundary of the difference.
    tq.translation += u * s;
    PairCase { p, tp, q, tq, kind }
}

/// Cycles through separated, touching and overlapping pairs.
pub fn mixed_pairs(seed: u64, count: usize) -> Vec<PairCase> {
    let mut r = rng(seed);
    let kinds = [PairKind::Separated, PairKind::Touching, PairKind::Overlapping];
    (0..count).map(|i| random_pair(&mut r, kinds[i % 3])).collect()
}

/// Checks one sub-algorithm step against feature enumeration: distance
/// within 1e-12, barycentric weights, orthogonality within 1e-9 and
/// tetrahedron containment.
pub fn check_step(s: &Simplex, step: &SimplexStep) -> Result<(), String> {
    let pts: Vec<Vec3> = s.witnesses().iter().map(|w| w.w).collect();
    let truth = oracle::closest_on_simplex(&pts).norm();
    let got = step.direction.norm();
    if (got - truth).abs() > 1e-12 {
        return Err(format!("distance {got} vs oracle {truth} for {pts:?}"));
    }
    let recon = step.closest_point();
    if (recon + step.direction).norm() > 1e-12 {
        return Err(format!("closest point {recon:?} vs {:?}", -step.direction));
    }
    let n = step.reduced.len();
    let sum: f64 = step.barycentric[..n].iter().sum();
    if (sum - 1.0).abs() > 1e-12 || step.barycentric[..n].iter().any(|&l| l < -1e-12) {
        return Err(format!("barycentric {:?}", step.barycentric));
    }
    let a = step.reduced.witnesses()[0].w;
    for w in &step.reduced.witnesses()[1..] {
        let d = step.direction.dot(&(w.w - a));
        if d.abs() > 1e-9 {
            return Err(format!("direction not orthogonal to feature: {d}"));
        }
    }
    if n == 4 && !step.contains_origin {
        return Err("4-witness reduction without containment".into());
    }
    if s.len() == 4 {
        let arr = [pts[0], pts[1], pts[2], pts[3]];
        if let Some(l) = oracle::tetrahedron_barycentric(&arr) {
            let inside = l.iter().all(|&x| x >= 0.0);
            if inside != step.contains_origin {
                return Err(format!("containment {} vs oracle {inside}", step.contains_origin));
            }
        }
    }
    Ok(())
}

/// Writes `f` to a temporary directory and loads it, hulling non-convex
/// meshes.
pub fn load_fixture(f: &Fixture) -> (tempfile::TempDir, Robot) {
    let dir = tempfile::tempdir().unwrap();
    let urdf = f.write_to(dir.path()).unwrap();
    let opts = RobotOptions {
        hull: HullPolicy::HullIfNonConvex,
        ..RobotOptions::default()
    };
    let robot = load_robot(&urdf, &opts).unwrap();
    (dir, robot)
}
