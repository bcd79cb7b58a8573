use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rgjk::mesh::shapes::{cube_soup, revolution_soup};
use rgjk::mesh::{load_graph_file, verify_convex, write_binary_stl, Triangle, TriangleSoup, WeldMode};
use rgjk::world::{load_robot, RobotOptions};
use rgjk::{fixtures, oracle, LimitMode, Transform, Vec3};
use serde_json::Value;

fn rgjk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rgjk")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_stl(dir: &Path, name: &str, soup: &TriangleSoup) -> String {
    let path = dir.join(name);
    std::fs::write(&path, write_binary_stl(soup)).unwrap();
    path.display().to_string()
}

/// Cube `[-1, 1]³` whose +x face is pushed in to a point at x = 0.5.
fn dented_cube() -> TriangleSoup {
    let corners = [
        Vec3::new(1.0, -1.0, -1.0),
        Vec3::new(1.0, 1.0, -1.0),
        Vec3::new(1.0, 1.0, 1.0),
        Vec3::new(1.0, -1.0, 1.0),
    ];
    let mut tris: Vec<Triangle> = cube_soup(1.0)
        .triangles
        .into_iter()
        .filter(|t| t.vertices.iter().any(|v| v.x != 1.0))
        .collect();
    let dent = Vec3::new(0.5, 0.0, 0.0);
    for k in 0..4 {
        tris.push(Triangle::new(corners[k], corners[(k + 1) % 4], dent));
    }
    TriangleSoup::new(tris)
}

fn fixture_dir(name: &str) -> (tempfile::TempDir, String) {
    let dir = tempfile::tempdir().unwrap();
    let out = rgjk(&["fixture", name, dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let urdf = String::from_utf8(out.stdout).unwrap().lines().next().unwrap().to_string();
    (dir, urdf)
}

#[test]
fn distance_between_cubes() {
    let dir = tempfile::tempdir().unwrap();
    let cube = write_stl(dir.path(), "cube.stl", &cube_soup(1.0));
    let v = json(&rgjk(&["distance", &cube, &cube, "--tb", "4,0,0", "--json"]));
    assert_eq!(v["schema"], "rgjk.distance/1");
    assert!((v["distance"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert_eq!(v["colliding"], false);
    assert!((v["closest_a"][0].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((v["closest_b"][0].as_f64().unwrap() - 3.0).abs() < 1e-12);

    let v = json(&rgjk(&["distance", &cube, &cube, "--json", "--strategy", "exhaustive"]));
    assert_eq!(v["colliding"], true);
    assert_eq!(v["distance"], 0.0);

    let v = json(&rgjk(&["distance", &cube, &cube, "--ta", "-3,0,0,0,0,0.5", "--json"]));
    assert!(v["distance"].as_f64().unwrap() > 0.0);
}

#[test]
fn nonconvex_mesh_needs_override() {
    let dir = tempfile::tempdir().unwrap();
    let hourglass = revolution_soup(&[(0.0, 1.0), (1.0, 0.5), (2.0, 1.0)], 8, 0.2);
    let a = write_stl(dir.path(), "hourglass.stl", &hourglass);
    let cube = write_stl(dir.path(), "cube.stl", &cube_soup(1.0));
    let out = rgjk(&["distance", &a, &cube]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("not convex") && stderr(&out).contains("vertex"), "{}", stderr(&out));
    let v = json(&rgjk(&["distance", &a, &cube, "--allow-nonconvex", "--tb", "0,0,5", "--json"]));
    assert!((v["distance"].as_f64().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cube = write_stl(dir.path(), "cube.stl", &cube_soup(1.0));
    for args in [
        vec!["distance", &cube, "missing.stl"],
        vec!["distance", &cube, &cube, "--tb", "1,2"],
        vec!["distance", &cube, &cube, "--max-iterations", "0"],
        vec!["fixture", "no-such-robot", "out"],
        vec!["frobnicate"],
    ] {
        assert_eq!(rgjk(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn check_zero_pose_matches_oracle() {
    let (_dir, urdf) = fixture_dir(fixtures::MECA_CLASS);
    let v = json(&rgjk(&["check", &urdf, "0", "0", "0", "0", "0", "0", "--json"]));
    assert_eq!(v["schema"], "rgjk.check/1");
    assert_eq!(v["colliding"], false);
    assert!(v["min_distance"].as_f64().unwrap() > 0.0);

    let mut robot = load_robot(Path::new(&urdf), &RobotOptions::default()).unwrap();
    robot.update_pose(&[0.0; 6], LimitMode::Strict).unwrap();
    let id = Transform::identity();
    let pairs = v["pairs"]["pairs"].as_array().unwrap();
    assert_eq!(pairs.len(), robot.world.pair_count());
    for p in pairs {
        let a = robot.world.component(p["name_i"].as_str().unwrap()).unwrap();
        let b = robot.world.component(p["name_j"].as_str().unwrap()).unwrap();
        let truth = oracle::oracle_distance(&a.current, &id, &b.current, &id).unwrap();
        assert!((p["distance"].as_f64().unwrap() - truth).abs() <= 1e-9, "{p}: oracle {truth}");
    }
}

#[test]
fn check_folded_pose_and_epsilon() {
    let (_dir, urdf) = fixture_dir(fixtures::MECA_CLASS);
    let folded: Vec<String> = fixtures::meca_class(fixtures::Detail::Full)
        .folded_pose
        .iter()
        .map(|x| x.to_string())
        .collect();
    let mut args = vec!["check", urdf.as_str()];
    args.extend(folded.iter().map(String::as_str));
    args.push("--json");
    assert_eq!(json(&rgjk(&args))["colliding"], true);

    let v = json(&rgjk(&["check", &urdf, "0", "0", "0", "0", "0", "0", "--epsilon", "1000", "--json"]));
    assert_eq!(v["colliding"], true);

    let v = json(&rgjk(&["check", &urdf, "0", "0", "0", "0", "0", "0", "--no-adjacent-exclusion", "--json"]));
    assert_eq!(v["pairs"]["pairs"].as_array().unwrap().len(), 21);
    assert_eq!(v["excluded_pairs"].as_array().unwrap().len(), 0);

    let v = json(&rgjk(&["check", &urdf, "0", "90", "60", "0", "75", "0", "--degrees", "--json"]));
    assert_eq!(v["colliding"], true);
}

#[test]
fn check_reports_arity_and_limits() {
    let (_dir, urdf) = fixture_dir(fixtures::MECA_CLASS);
    let out = rgjk(&["check", &urdf, "0", "0", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("expected 6 joint values, got 3"), "{}", stderr(&out));

    let out = rgjk(&["check", &urdf, "0", "-3", "0", "0", "0", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("outside"), "{}", stderr(&out));
    let v = json(&rgjk(&["check", &urdf, "0", "-3", "0", "0", "0", "0", "--clamp", "--json"]));
    assert_eq!(v["theta"][1], -3.0);
}

#[test]
fn strict_nonconvergence_exits_3() {
    let (_dir, urdf) = fixture_dir(fixtures::MECA_CLASS);
    let base = ["check", urdf.as_str(), "0", "0", "0", "0", "0", "0", "--max-iterations", "1"];
    assert_eq!(rgjk(&base).status.code(), Some(0));
    let mut strict = base.to_vec();
    strict.push("--strict");
    assert_eq!(rgjk(&strict).status.code(), Some(3));
    let mut converged = strict[..8].to_vec();
    converged.push("--strict");
    assert_eq!(rgjk(&converged).status.code(), Some(0));
}

#[test]
fn bench_is_reproducible_and_csv_matches_summary() {
    let (dir, urdf) = fixture_dir(fixtures::KUKA_CLASS);
    let first = |seed: &str| json(&rgjk(&["bench", &urdf, "--allow-nonconvex", "--poses", "1", "--seed", seed, "--json"]))["first_pose"].clone();
    assert_eq!(first("7"), first("7"));
    assert_ne!(first("7"), first("8"));

    let csv: PathBuf = dir.path().join("samples.csv");
    let v = json(&rgjk(&[
        "bench",
        &urdf,
        "--allow-nonconvex",
        "--poses",
        "300",
        "--csv",
        csv.to_str().unwrap(),
        "--json",
    ]));
    assert_eq!(v["schema"], "rgjk.bench/1");
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("pose_index,time_ms,colliding,min_distance"));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 300);
    let times: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    let n = times.len() as f64;
    let mean = times.iter().sum::<f64>() / n;
    let std = (times.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (n - 1.0)).sqrt();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1e-300);
    assert!(close(mean, v["mean_ms"].as_f64().unwrap()));
    assert!(close(std, v["std_ms"].as_f64().unwrap()));
    let hits = rows.iter().filter(|r| r[2] == "true").count();
    assert_eq!(hits as u64, v["collision_count"].as_u64().unwrap());

    let out = rgjk(&["bench", &urdf, "--allow-nonconvex", "--poses", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = rgjk(&["bench", &urdf, "--poses", "5"]);
    assert_eq!(out.status.code(), Some(2), "non-convex meshes are rejected by default");
}

#[test]
fn hull_command() {
    let dir = tempfile::tempdir().unwrap();
    let dented = write_stl(dir.path(), "dented.stl", &dented_cube());
    let out_path = dir.path().join("hull.stl");
    let v = json(&rgjk(&["hull", &dented, out_path.to_str().unwrap(), "--json"]));
    assert_eq!(v["schema"], "rgjk.hull/1");
    assert_eq!(v["input_vertices"], 9);
    assert_eq!(v["hull_vertices"], 8);
    let hull = load_graph_file(&out_path, WeldMode::Exact).unwrap();
    assert_eq!(hull.len(), 8);

    // Already convex: same vertex set.
    let cube = write_stl(dir.path(), "cube.stl", &cube_soup(1.0));
    let again = dir.path().join("again.stl");
    let graph_json = dir.path().join("again.json");
    json(&rgjk(&[
        "hull",
        &cube,
        again.to_str().unwrap(),
        "--graph-json",
        graph_json.to_str().unwrap(),
        "--json",
    ]));
    let sorted = |g: &rgjk::VertexGraph| {
        let mut v: Vec<[u64; 3]> = g.vertices().iter().map(|p| [p.x, p.y, p.z].map(f64::to_bits)).collect();
        v.sort_unstable();
        v
    };
    let original = load_graph_file(Path::new(&cube), WeldMode::Exact).unwrap();
    assert_eq!(sorted(&load_graph_file(&again, WeldMode::Exact).unwrap()), sorted(&original));
    assert_eq!(sorted(&load_graph_file(&graph_json, WeldMode::Exact).unwrap()), sorted(&original));
}

#[test]
fn hull_of_nonconvex_link_passes_convexity_gate() {
    let (dir, _urdf) = fixture_dir(fixtures::KUKA_CLASS);
    let meshes = dir.path().join("meshes").join(fixtures::KUKA_CLASS);
    let mut count = 0;
    for entry in std::fs::read_dir(&meshes).unwrap() {
        let input = entry.unwrap().path();
        let original = load_graph_file(&input, WeldMode::Exact).unwrap();
        assert!(verify_convex(&original).is_err(), "{} is convex", input.display());
        let output = dir.path().join("hull.stl");
        let out = rgjk(&["hull", input.to_str().unwrap(), output.to_str().unwrap(), "--ascii"]);
        assert!(out.status.success(), "{}", stderr(&out));
        let hull = load_graph_file(&output, WeldMode::Exact).unwrap();
        assert_eq!(verify_convex(&hull), Ok(()), "{}", input.display());
        count += 1;
    }
    assert_eq!(count, 8);
}

#[test]
fn fixture_list() {
    let out = rgjk(&["fixture", "--list"]);
    let names = String::from_utf8(out.stdout).unwrap();
    for name in fixtures::names() {
        assert!(names.lines().any(|l| l == name));
    }
}
