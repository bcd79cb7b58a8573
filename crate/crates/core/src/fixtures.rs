//! Synthetic robot models for tests, benchmarks and the `fixture` command.
//!
//! Two serial arms with vendor-like joint layouts: a 6-joint desktop arm
//! with convex barrel links, and a 7-joint arm whose links are waisted
//! (non-convex) solids of revolution that must be hulled before use. Each
//! comes in a full and a decimated (at most 32 hull vertices per link)
//! variant. Link shapes stop short of the joints so the zero pose is free
//! of contact between non-adjacent links.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{Rotation3, Unit};

use crate::geometry::Vec3;
use crate::mesh::shapes::revolution_soup;
use crate::mesh::{convex_hull, write_binary_stl, Triangle, TriangleSoup};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Detail {
    Full,
    /// At most 32 hull vertices per link.
    Decimated,
}

/// A URDF document and the binary STL files it references.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: String,
    pub urdf: String,
    /// `(relative path, contents)`.
    pub meshes: Vec<(String, Vec<u8>)>,
    /// A pose in which non-adjacent links interpenetrate.
    pub folded_pose: Vec<f64>,
}

impl Fixture {
    /// Writes `<name>.urdf` and its meshes under `dir`; returns the URDF path.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<PathBuf> {
        for (rel, bytes) in &self.meshes {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, bytes)?;
        }
        let urdf = dir.join(format!("{}.urdf", self.name));
        std::fs::write(&urdf, &self.urdf)?;
        Ok(urdf)
    }
}

pub const MECA_CLASS: &str = "meca500-class";
pub const KUKA_CLASS: &str = "kuka-class";

/// Fixture by name: [`MECA_CLASS`] or [`KUKA_CLASS`], optionally suffixed
/// `-decimated`.
pub fn by_name(name: &str) -> Option<Fixture> {
    let (base, detail) = match name.strip_suffix("-decimated") {
        Some(base) => (base, Detail::Decimated),
        None => (name, Detail::Full),
    };
    match base {
        MECA_CLASS => Some(meca_class(detail)),
        KUKA_CLASS => Some(kuka_class(detail)),
        _ => None,
    }
}

pub fn names() -> [&'static str; 4] {
    ["meca500-class", "meca500-class-decimated", "kuka-class", "kuka-class-decimated"]
}

struct JointSpec {
    origin: [f64; 3],
    axis: [f64; 3],
    limits_deg: [f64; 2],
}

struct LinkShape {
    from: [f64; 3],
    to: [f64; 3],
    radius: f64,
}

fn deg(x: f64) -> f64 {
    x * PI / 180.0
}

/// Rings of a barrel of length `len`; a waisted barrel narrows mid-length.
fn profile(len: f64, radius: f64, waisted: bool) -> Vec<(f64, f64)> {
    let mut p = vec![(0.0, 0.55 * radius), (0.12 * len, radius)];
    if waisted {
        p.push((0.5 * len, 0.75 * radius));
    }
    p.push((0.88 * len, radius));
    p.push((len, 0.55 * radius));
    p
}

/// Surface of revolution from `from` to `to`, rounded to `f32` so the STL
/// stores it exactly.
fn link_soup(shape: &LinkShape, segments: usize, waisted: bool) -> TriangleSoup {
    let from = Vec3::from(shape.from);
    let axis = Vec3::from(shape.to) - from;
    let len = axis.norm();
    let rot = Rotation3::rotation_between(&Vec3::z(), &axis)
        .unwrap_or_else(|| Rotation3::from_axis_angle(&Unit::new_unchecked(Vec3::x()), PI));
    let place = |p: &Vec3| (from + rot * p).map(|c| c as f32 as f64);
    let soup = revolution_soup(&profile(len, shape.radius, waisted), segments, 0.0);
    TriangleSoup::new(
        soup.triangles
            .iter()
            .map(|t| Triangle::new(place(&t.vertices[0]), place(&t.vertices[1]), place(&t.vertices[2])))
            .collect(),
    )
}

/// Hull of a soup's vertices as a triangle soup.
fn hull_soup(soup: &TriangleSoup) -> TriangleSoup {
    convex_hull(&soup.points().copied().collect::<Vec<_>>())
        .expect("link shapes are full-dimensional")
        .to_soup()
}

fn v3(v: [f64; 3]) -> String {
    format!("{} {} {}", v[0], v[1], v[2])
}

fn build(
    name: &str,
    joints: &[JointSpec],
    shapes: &[LinkShape],
    segments: usize,
    waisted: bool,
    folded_pose: Vec<f64>,
) -> Fixture {
    assert_eq!(shapes.len(), joints.len() + 1);
    let suffix = if segments <= 8 { "-decimated" } else { "" };
    let name = format!("{name}{suffix}");
    let link_name = |i: usize| {
        if i == 0 {
            "base".to_string()
        } else {
            format!("link{i}")
        }
    };
    let mut urdf = String::new();
    let _ = writeln!(urdf, r#"<?xml version="1.0"?>"#);
    let _ = writeln!(urdf, r#"<robot name="{name}">"#);
    let mut meshes = Vec::new();
    for (i, shape) in shapes.iter().enumerate() {
        let link = link_name(i);
        let file = format!("meshes/{name}/{link}.stl");
        let soup = link_soup(shape, segments, waisted);
        let soup = if waisted { soup } else { hull_soup(&soup) };
        meshes.push((file.clone(), write_binary_stl(&soup)));
        let _ = writeln!(urdf, r#"  <link name="{link}">"#);
        let _ = writeln!(
            urdf,
            r#"    <collision><origin xyz="0 0 0" rpy="0 0 0"/><geometry><mesh filename="{file}"/></geometry></collision>"#
        );
        let _ = writeln!(urdf, "  </link>");
    }
    for (i, j) in joints.iter().enumerate() {
        let _ = writeln!(urdf, r#"  <joint name="joint{}" type="revolute">"#, i + 1);
        let _ = writeln!(urdf, r#"    <parent link="{}"/><child link="{}"/>"#, link_name(i), link_name(i + 1));
        let _ = writeln!(urdf, r#"    <origin xyz="{}" rpy="0 0 0"/>"#, v3(j.origin));
        let _ = writeln!(urdf, r#"    <axis xyz="{}"/>"#, v3(j.axis));
        let _ = writeln!(
            urdf,
            r#"    <limit lower="{}" upper="{}" effort="10" velocity="1"/>"#,
            deg(j.limits_deg[0]),
            deg(j.limits_deg[1])
        );
        let _ = writeln!(urdf, "  </joint>");
    }
    let _ = writeln!(urdf, "</robot>");
    Fixture {
        name,
        urdf,
        meshes,
        folded_pose,
    }
}

/// Six revolute joints, convex links of 64 (full) or 32 (decimated) vertices.
pub fn meca_class(detail: Detail) -> Fixture {
    let joints = [
        JointSpec { origin: [0.0, 0.0, 0.0915], axis: [0.0, 0.0, 1.0], limits_deg: [-175.0, 175.0] },
        JointSpec { origin: [0.0, 0.0, 0.0435], axis: [0.0, 1.0, 0.0], limits_deg: [-70.0, 90.0] },
        JointSpec { origin: [0.0, 0.0, 0.135], axis: [0.0, 1.0, 0.0], limits_deg: [-135.0, 70.0] },
        JointSpec { origin: [0.0615, 0.0, 0.038], axis: [1.0, 0.0, 0.0], limits_deg: [-170.0, 170.0] },
        JointSpec { origin: [0.0585, 0.0, 0.0], axis: [0.0, 1.0, 0.0], limits_deg: [-115.0, 115.0] },
        JointSpec { origin: [0.03, 0.0, 0.0], axis: [1.0, 0.0, 0.0], limits_deg: [-180.0, 180.0] },
    ];
    let shapes = [
        LinkShape { from: [0.0, 0.0, 0.0], to: [0.0, 0.0, 0.085], radius: 0.05 },
        LinkShape { from: [0.0, 0.0, 0.004], to: [0.0, 0.0, 0.04], radius: 0.04 },
        LinkShape { from: [0.0, 0.0, 0.012], to: [0.0, 0.0, 0.123], radius: 0.035 },
        LinkShape { from: [0.0, 0.0, 0.01], to: [0.05, 0.0, 0.038], radius: 0.032 },
        LinkShape { from: [0.008, 0.0, 0.0], to: [0.05, 0.0, 0.0], radius: 0.028 },
        LinkShape { from: [0.006, 0.0, 0.0], to: [0.024, 0.0, 0.0], radius: 0.022 },
        LinkShape { from: [0.004, 0.0, 0.0], to: [0.06, 0.0, 0.0], radius: 0.022 },
    ];
    let segments = match detail {
        Detail::Full => 16,
        Detail::Decimated => 8,
    };
    let folded = vec![0.0, deg(90.0), deg(60.0), 0.0, deg(75.0), 0.0];
    build(MECA_CLASS, &joints, &shapes, segments, false, folded)
}

/// Seven revolute joints, waisted links; hulls have 112 (full) or 32
/// (decimated) vertices.
pub fn kuka_class(detail: Detail) -> Fixture {
    let offsets = [0.1575, 0.2025, 0.2045, 0.2155, 0.1845, 0.2155, 0.081];
    let axes = [
        [0.0, 0.0, 1.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
    ];
    let limits = [170.0, 120.0, 170.0, 120.0, 170.0, 120.0, 175.0];
    let joints: Vec<JointSpec> = (0..7)
        .map(|i| JointSpec {
            origin: [0.0, 0.0, offsets[i]],
            axis: axes[i],
            limits_deg: [-limits[i], limits[i]],
        })
        .collect();
    let radii = [0.09, 0.085, 0.085, 0.08, 0.08, 0.075, 0.065, 0.05];
    let gap = 0.012;
    let shapes: Vec<LinkShape> = (0..8)
        .map(|i| {
            let len = if i < 7 { offsets[i] } else { 0.16 };
            let start = if i == 0 { 0.0 } else { gap };
            LinkShape {
                from: [0.0, 0.0, start],
                to: [0.0, 0.0, len - gap],
                radius: radii[i],
            }
        })
        .collect();
    let segments = match detail {
        Detail::Full => 28,
        Detail::Decimated => 8,
    };
    let folded = vec![0.0, deg(-120.0), 0.0, deg(120.0), 0.0, deg(-120.0), 0.0];
    build(KUKA_CLASS, &joints, &shapes, segments, true, folded)
}
