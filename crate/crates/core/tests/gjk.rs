mod common;

use common::{mixed_pairs, PairKind};
use rgjk::gjk::{gjk_distance, gjk_distance_traced, support_exhaustive, support_hill_climb, Placed};
use rgjk::{oracle, GjkConfig, SupportHint, SupportStrategy, Transform, Vec3};

fn run(case: &common::PairCase, strategy: SupportStrategy) -> rgjk::DistanceResult {
    gjk_distance(
        &Placed::new(&case.p, case.tp),
        &Placed::new(&case.q, case.tq),
        &GjkConfig::with_strategy(strategy),
        &mut SupportHint::default(),
    )
    .unwrap()
}

#[test]
fn matches_minkowski_oracle() {
    for (i, case) in mixed_pairs(11, 90).iter().enumerate() {
        let truth = oracle::oracle_distance(&case.p, &case.tp, &case.q, &case.tq).unwrap();
        for strategy in [SupportStrategy::Exhaustive, SupportStrategy::HillClimb] {
            let r = run(case, strategy);
            assert!(r.converged, "pair {i}");
            assert!(
                (r.distance - truth).abs() <= 1e-9 * truth.max(1.0),
                "pair {i} {:?}: gjk {} oracle {truth}",
                case.kind,
                r.distance
            );
            assert_eq!(r.colliding, truth == 0.0, "pair {i} {:?}", case.kind);
            if case.kind == PairKind::Separated {
                assert!(truth > 0.0);
            }
            if case.kind == PairKind::Overlapping {
                assert!(r.colliding);
            }
        }
    }
}

/// Distance from `x` to the boundary of the placed hull `g`.
fn surface_distance(g: &rgjk::mesh::VertexGraph, t: &Transform, x: &Vec3) -> f64 {
    let vs: Vec<Vec3> = g.vertices().iter().map(|v| t.apply(v)).collect();
    g.faces()
        .iter()
        .map(|f| {
            let [a, b, c] = f.map(|k| vs[k as usize]);
            (oracle::closest_on_triangle(&a, &b, &c, x) - x).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn closest_points_are_witnesses() {
    for case in mixed_pairs(12, 60).iter().filter(|c| c.kind == PairKind::Separated) {
        let r = run(case, SupportStrategy::HillClimb);
        assert!(((r.closest_q - r.closest_p).norm() - r.distance).abs() <= 1e-9);
        assert!(surface_distance(&case.p, &case.tp, &r.closest_p) <= 1e-9);
        assert!(surface_distance(&case.q, &case.tq, &r.closest_q) <= 1e-9);
    }
}

#[test]
fn hill_climb_reaches_exhaustive_maximum() {
    let mut rng = common::rng(5);
    for _ in 0..500 {
        let n = rand::Rng::random_range(&mut rng, 8..=64);
        let g = common::random_polytope(&mut rng, n);
        let t = common::random_transform(&mut rng, 3.0);
        let body = Placed::new(&g, t);
        let v = common::unit_vector(&mut rng);
        let start = rand::Rng::random_range(&mut rng, 0..g.len());
        let (i, _) = support_hill_climb(&body, &v, start).unwrap();
        let j = support_exhaustive(&body, &v).unwrap();
        let local = t.rotation.tr_mul(&v);
        assert_eq!(local.dot(g.vertex(i)), local.dot(g.vertex(j)));
    }
}

#[test]
fn distance_sequence_is_monotone() {
    for case in mixed_pairs(13, 60) {
        let mut trace = Vec::new();
        let r = gjk_distance_traced(
            &Placed::new(&case.p, case.tp),
            &Placed::new(&case.q, case.tq),
            &GjkConfig::default(),
            &mut SupportHint::default(),
            None,
            &mut trace,
        )
        .unwrap();
        assert!(trace.windows(2).all(|w| w[1] <= w[0]), "{trace:?}");
        assert!(r.iterations < 64);
    }
}

#[test]
fn warm_start_matches_cold_start() {
    let mut better = 0;
    let mut frames = 0;
    for case in mixed_pairs(14, 30).iter().filter(|c| c.kind == PairKind::Separated) {
        let p = Placed::new(&case.p, case.tp);
        let mut hint = SupportHint::default();
        for k in 0..20 {
            let mut tq = case.tq;
            tq.translation += Vec3::new(1e-3, -5e-4, 2e-4) * k as f64;
            let q = Placed::new(&case.q, tq);
            let cold = gjk_distance(&p, &q, &GjkConfig::default(), &mut SupportHint::default()).unwrap();
            let warm = gjk_distance(&p, &q, &GjkConfig::default(), &mut hint).unwrap();
            assert!((cold.distance - warm.distance).abs() <= 1e-12);
            if k > 0 {
                frames += 1;
                better += (warm.support_calls <= cold.support_calls) as usize;
            }
        }
    }
    eprintln!("warm start used no more support calls on {better}/{frames} frames");
}
