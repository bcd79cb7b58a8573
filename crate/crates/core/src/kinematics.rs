//! URDF subset and forward kinematics.
//!
//! Only the joint tree and `<collision>` mesh geometry are read. Joint
//! values are ordered like the non-fixed joints in the document.

use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{Transform, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JointType {
    Revolute,
    Continuous,
    Prismatic,
    Fixed,
}

impl JointType {
    pub fn is_fixed(self) -> bool {
        self == JointType::Fixed
    }

    /// Revolute and continuous joints take radians.
    pub fn is_angular(self) -> bool {
        matches!(self, JointType::Revolute | JointType::Continuous)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Joint {
    pub name: String,
    pub kind: JointType,
    pub parent: usize,
    pub child: usize,
    pub origin: Transform,
    /// Unit axis; unused for fixed joints.
    pub axis: Vec3,
    /// `[lower, upper]`; `None` for continuous and fixed joints.
    pub limits: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CollisionMesh {
    pub link: usize,
    pub filename: String,
    pub origin: Transform,
    pub scale: Option<Vec3>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Link {
    pub name: String,
    /// Indices into [`KinematicChain::collisions`].
    pub collisions: Vec<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LimitMode {
    /// Out-of-range joint values are an error.
    #[default]
    Strict,
    /// Out-of-range values are clamped with a warning.
    Clamp,
}

#[derive(Debug, Error, PartialEq)]
pub enum KinematicsError {
    #[error("URDF is not well-formed XML: {0}")]
    Xml(String),
    #[error("URDF structure: {0}")]
    Structure(String),
    #[error("link `{link}` has a collision element without a mesh filename")]
    MissingMeshFilename { link: String },
    #[error("joint `{joint}` has unsupported type `{kind}`")]
    UnsupportedJoint { joint: String, kind: String },
    #[error("joint `{joint}`: {message}")]
    InvalidJoint { joint: String, message: String },
    #[error("bad numeric attribute `{attribute}` on <{element}>: `{value}`")]
    BadNumber {
        element: String,
        attribute: String,
        value: String,
    },
    #[error("expected {expected} joint values, got {actual}")]
    Arity { expected: usize, actual: usize },
    #[error("joint `{joint}` value {value} outside [{lower}, {upper}]")]
    OutOfLimits {
        joint: String,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("joint `{joint}` value is not finite")]
    NonFiniteValue { joint: String },
    #[error("unknown link `{0}`")]
    UnknownLink(String),
    #[error("mesh `{filename}`: {message}")]
    MeshPath { filename: String, message: String },
}

/// A rooted tree of links and joints.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KinematicChain {
    pub name: String,
    pub links: Vec<Link>,
    pub joints: Vec<Joint>,
    pub collisions: Vec<CollisionMesh>,
    pub root: usize,
    /// Joint indices, parents before children.
    order: Vec<usize>,
    /// Joint driving each link; `None` for the root.
    parent_joint: Vec<Option<usize>>,
    /// Non-fixed joints in document order.
    active: Vec<usize>,
    /// Position of each joint in the joint vector.
    slot: Vec<Option<usize>>,
}

/// World frames from one forward-kinematics evaluation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Frames {
    /// Per link.
    pub links: Vec<Transform>,
    /// Per collision mesh: the link frame composed with the collision origin.
    pub collisions: Vec<Transform>,
}

fn attr_vec(node: roxmltree::Node, name: &str, default: Vec3) -> Result<Vec3, KinematicsError> {
    let Some(text) = node.attribute(name) else {
        return Ok(default);
    };
    let bad = || KinematicsError::BadNumber {
        element: node.tag_name().name().to_string(),
        attribute: name.to_string(),
        value: text.to_string(),
    };
    let vals: Vec<f64> = text
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    match vals[..] {
        [x, y, z] if x.is_finite() && y.is_finite() && z.is_finite() => Ok(Vec3::new(x, y, z)),
        _ => Err(bad()),
    }
}

fn attr_f64(node: roxmltree::Node, name: &str) -> Result<Option<f64>, KinematicsError> {
    let Some(text) = node.attribute(name) else {
        return Ok(None);
    };
    match text.trim().parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(Some(x)),
        _ => Err(KinematicsError::BadNumber {
            element: node.tag_name().name().to_string(),
            attribute: name.to_string(),
            value: text.to_string(),
        }),
    }
}

fn child<'a, 'i>(node: roxmltree::Node<'a, 'i>, tag: &str) -> Option<roxmltree::Node<'a, 'i>> {
    node.children().find(|c| c.is_element() && c.has_tag_name(tag))
}

fn origin_of(node: roxmltree::Node) -> Result<Transform, KinematicsError> {
    match child(node, "origin") {
        Some(o) => Ok(Transform::from_xyz_rpy(
            attr_vec(o, "xyz", Vec3::zeros())?,
            attr_vec(o, "rpy", Vec3::zeros())?,
        )),
        None => Ok(Transform::identity()),
    }
}

/// Parses the URDF subset into a chain.
pub fn parse_urdf(xml: &str) -> Result<KinematicChain, KinematicsError> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| KinematicsError::Xml(e.to_string()))?;
    let robot = doc.root_element();
    if !robot.has_tag_name("robot") {
        return Err(KinematicsError::Structure(format!(
            "root element is <{}>, expected <robot>",
            robot.tag_name().name()
        )));
    }

    let mut links = Vec::new();
    let mut collisions = Vec::new();
    for node in robot.children().filter(|c| c.is_element() && c.has_tag_name("link")) {
        let name = node
            .attribute("name")
            .ok_or_else(|| KinematicsError::Structure("<link> without a name".into()))?
            .to_string();
        if links.iter().any(|l: &Link| l.name == name) {
            return Err(KinematicsError::Structure(format!("duplicate link `{name}`")));
        }
        let index = links.len();
        let mut mine = Vec::new();
        for col in node.children().filter(|c| c.is_element() && c.has_tag_name("collision")) {
            let mesh = child(col, "geometry").and_then(|g| child(g, "mesh"));
            let filename = mesh.and_then(|m| m.attribute("filename")).filter(|f| !f.is_empty());
            let (Some(mesh), Some(filename)) = (mesh, filename) else {
                return Err(KinematicsError::MissingMeshFilename { link: name });
            };
            let scale = match mesh.attribute("scale") {
                Some(_) => Some(attr_vec(mesh, "scale", Vec3::repeat(1.0))?),
                None => None,
            };
            mine.push(collisions.len());
            collisions.push(CollisionMesh {
                link: index,
                filename: filename.to_string(),
                origin: origin_of(col)?,
                scale,
            });
        }
        links.push(Link { name, collisions: mine });
    }
    if links.is_empty() {
        return Err(KinematicsError::Structure("no links".into()));
    }

    let link_index = |joint: &str, node: Option<roxmltree::Node>, role: &str| -> Result<usize, KinematicsError> {
        let name = node.and_then(|n| n.attribute("link")).ok_or_else(|| KinematicsError::InvalidJoint {
            joint: joint.to_string(),
            message: format!("missing <{role} link=...>"),
        })?;
        links
            .iter()
            .position(|l| l.name == name)
            .ok_or_else(|| KinematicsError::InvalidJoint {
                joint: joint.to_string(),
                message: format!("{role} link `{name}` does not exist"),
            })
    };

    let mut joints = Vec::new();
    for node in robot.children().filter(|c| c.is_element() && c.has_tag_name("joint")) {
        let name = node
            .attribute("name")
            .ok_or_else(|| KinematicsError::Structure("<joint> without a name".into()))?
            .to_string();
        if joints.iter().any(|j: &Joint| j.name == name) {
            return Err(KinematicsError::Structure(format!("duplicate joint `{name}`")));
        }
        let type_name = node.attribute("type").unwrap_or("");
        let kind = match type_name {
            "revolute" => JointType::Revolute,
            "continuous" => JointType::Continuous,
            "prismatic" => JointType::Prismatic,
            "fixed" => JointType::Fixed,
            other => {
                return Err(KinematicsError::UnsupportedJoint {
                    joint: name,
                    kind: other.to_string(),
                })
            }
        };
        let parent = link_index(&name, child(node, "parent"), "parent")?;
        let child_link = link_index(&name, child(node, "child"), "child")?;
        let axis = match child(node, "axis") {
            Some(a) => attr_vec(a, "xyz", Vec3::x())?,
            None => Vec3::x(),
        };
        let invalid = |message: &str| KinematicsError::InvalidJoint {
            joint: name.clone(),
            message: message.to_string(),
        };
        let axis = if kind.is_fixed() {
            axis
        } else {
            let n = axis.norm();
            if n == 0.0 {
                return Err(invalid("zero axis"));
            }
            axis / n
        };
        let limits = match kind {
            JointType::Revolute | JointType::Prismatic => {
                let limit = child(node, "limit").ok_or_else(|| invalid("missing <limit>"))?;
                let lower = attr_f64(limit, "lower")?.unwrap_or(0.0);
                let upper = attr_f64(limit, "upper")?.unwrap_or(0.0);
                if lower > upper {
                    return Err(invalid(&format!("lower limit {lower} exceeds upper {upper}")));
                }
                Some([lower, upper])
            }
            _ => None,
        };
        joints.push(Joint {
            name,
            kind,
            parent,
            child: child_link,
            origin: origin_of(node)?,
            axis,
            limits,
        });
    }

    let name = robot.attribute("name").unwrap_or("robot").to_string();
    KinematicChain::new(name, links, joints, collisions)
}

impl KinematicChain {
    /// Validates the tree and derives the evaluation order.
    pub fn new(
        name: String,
        links: Vec<Link>,
        joints: Vec<Joint>,
        collisions: Vec<CollisionMesh>,
    ) -> Result<Self, KinematicsError> {
        let mut parent_joint: Vec<Option<usize>> = vec![None; links.len()];
        for (j, joint) in joints.iter().enumerate() {
            if joint.parent == joint.child {
                return Err(KinematicsError::Structure(format!("joint `{}` connects a link to itself", joint.name)));
            }
            if let Some(other) = parent_joint[joint.child] {
                return Err(KinematicsError::Structure(format!(
                    "link `{}` is the child of both `{}` and `{}`",
                    links[joint.child].name, joints[other].name, joint.name
                )));
            }
            parent_joint[joint.child] = Some(j);
        }
        let roots: Vec<usize> = (0..links.len()).filter(|&l| parent_joint[l].is_none()).collect();
        let root = match roots[..] {
            [r] => r,
            [] => return Err(KinematicsError::Structure("joints form a cycle; no root link".into())),
            _ => {
                let names: Vec<&str> = roots.iter().map(|&r| links[r].name.as_str()).collect();
                return Err(KinematicsError::Structure(format!("multiple root links: {}", names.join(", "))));
            }
        };

        let mut children: Vec<Vec<usize>> = vec![Vec::new(); links.len()];
        for (j, joint) in joints.iter().enumerate() {
            children[joint.parent].push(j);
        }
        let mut order = Vec::with_capacity(joints.len());
        let mut stack = vec![root];
        while let Some(l) = stack.pop() {
            for &j in children[l].iter().rev() {
                order.push(j);
                stack.push(joints[j].child);
            }
        }
        if order.len() != joints.len() {
            return Err(KinematicsError::Structure("joints form a cycle detached from the root".into()));
        }

        let active: Vec<usize> = (0..joints.len()).filter(|&j| !joints[j].kind.is_fixed()).collect();
        let mut slot = vec![None; joints.len()];
        for (k, &j) in active.iter().enumerate() {
            slot[j] = Some(k);
        }
        Ok(Self {
            name,
            links,
            joints,
            collisions,
            root,
            order,
            parent_joint,
            active,
            slot,
        })
    }

    /// Number of entries in a joint vector.
    pub fn dof(&self) -> usize {
        self.active.len()
    }

    /// Non-fixed joints in joint-vector order.
    pub fn active_joints(&self) -> impl Iterator<Item = &Joint> + '_ {
        self.active.iter().map(|&j| &self.joints[j])
    }

    pub fn link_index(&self, name: &str) -> Option<usize> {
        self.links.iter().position(|l| l.name == name)
    }

    pub fn parent_joint(&self, link: usize) -> Option<&Joint> {
        self.parent_joint[link].map(|j| &self.joints[j])
    }

    /// Unordered link pairs connected by a joint.
    pub fn adjacent_links(&self) -> Vec<(usize, usize)> {
        self.joints.iter().map(|j| (j.parent, j.child)).collect()
    }

    /// Sampling interval of each joint-vector entry; continuous joints use
    /// `[−π, π)`.
    pub fn sampling_ranges(&self) -> Vec<[f64; 2]> {
        self.active_joints()
            .map(|j| j.limits.unwrap_or([-std::f64::consts::PI, std::f64::consts::PI]))
            .collect()
    }

    pub fn zero_pose(&self) -> Vec<f64> {
        vec![0.0; self.dof()]
    }

    /// Checks arity, finiteness and limits, clamping in [`LimitMode::Clamp`].
    pub fn validate_pose(&self, theta: &[f64], mode: LimitMode) -> Result<Option<Vec<f64>>, KinematicsError> {
        if theta.len() != self.dof() {
            return Err(KinematicsError::Arity {
                expected: self.dof(),
                actual: theta.len(),
            });
        }
        let mut clamped: Option<Vec<f64>> = None;
        for (k, joint) in self.active_joints().enumerate() {
            let value = theta[k];
            if !value.is_finite() {
                return Err(KinematicsError::NonFiniteValue {
                    joint: joint.name.clone(),
                });
            }
            let Some([lower, upper]) = joint.limits else {
                continue;
            };
            if value < lower || value > upper {
                if mode == LimitMode::Strict {
                    return Err(KinematicsError::OutOfLimits {
                        joint: joint.name.clone(),
                        value,
                        lower,
                        upper,
                    });
                }
                log::warn!("joint `{}` value {value} clamped to [{lower}, {upper}]", joint.name);
                clamped.get_or_insert_with(|| theta.to_vec())[k] = value.clamp(lower, upper);
            }
        }
        Ok(clamped)
    }

    fn motion(joint: &Joint, value: f64) -> Transform {
        match joint.kind {
            JointType::Revolute | JointType::Continuous => Transform::rotation_about(&joint.axis, value),
            JointType::Prismatic => Transform::from_translation(joint.axis * value),
            JointType::Fixed => Transform::identity(),
        }
    }

    /// Link and collision frames for `theta`.
    pub fn forward_kinematics(&self, theta: &[f64], mode: LimitMode) -> Result<Frames, KinematicsError> {
        let mut frames = Frames::default();
        self.forward_kinematics_into(theta, mode, &mut frames)?;
        Ok(frames)
    }

    /// [`Self::forward_kinematics`] into reused buffers.
    pub fn forward_kinematics_into(
        &self,
        theta: &[f64],
        mode: LimitMode,
        frames: &mut Frames,
    ) -> Result<(), KinematicsError> {
        let clamped = self.validate_pose(theta, mode)?;
        let theta = clamped.as_deref().unwrap_or(theta);
        frames.links.clear();
        frames.links.resize(self.links.len(), Transform::identity());
        for &j in &self.order {
            let joint = &self.joints[j];
            let base = frames.links[joint.parent].compose(&joint.origin);
            frames.links[joint.child] = match self.slot[j] {
                Some(k) => base.compose(&Self::motion(joint, theta[k])),
                None => base,
            };
        }
        frames.collisions.clear();
        frames
            .collisions
            .extend(self.collisions.iter().map(|c| frames.links[c.link].compose(&c.origin)));
        Ok(())
    }

    /// The subtree rooted at `link`, and for each of its joint-vector
    /// entries the index of the same joint in this chain's joint vector.
    pub fn subtree(&self, link: &str) -> Result<(KinematicChain, Vec<usize>), KinematicsError> {
        let start = self.link_index(link).ok_or_else(|| KinematicsError::UnknownLink(link.to_string()))?;
        let mut keep = vec![false; self.links.len()];
        keep[start] = true;
        for &j in &self.order {
            if keep[self.joints[j].parent] {
                keep[self.joints[j].child] = true;
            }
        }
        let mut remap = vec![usize::MAX; self.links.len()];
        let mut links = Vec::new();
        let mut collisions = Vec::new();
        for (l, link) in self.links.iter().enumerate().filter(|(l, _)| keep[*l]) {
            remap[l] = links.len();
            let mut mine = Vec::new();
            for &c in &link.collisions {
                mine.push(collisions.len());
                collisions.push(CollisionMesh {
                    link: remap[l],
                    ..self.collisions[c].clone()
                });
            }
            links.push(Link {
                name: link.name.clone(),
                collisions: mine,
            });
        }
        let mut joints = Vec::new();
        let mut slots = Vec::new();
        for (j, joint) in self.joints.iter().enumerate() {
            if keep[joint.parent] && keep[joint.child] {
                joints.push(Joint {
                    parent: remap[joint.parent],
                    child: remap[joint.child],
                    ..joint.clone()
                });
                if let Some(k) = self.slot[j] {
                    slots.push(k);
                }
            }
        }
        let sub = KinematicChain::new(self.name.clone(), links, joints, collisions)?;
        Ok((sub, slots))
    }
}

/// Resolves a mesh `filename` from a URDF located in `urdf_dir`.
///
/// `package://pkg/rest` maps to `package_root/pkg/rest`, `file://` URIs to
/// their path, and bare relative paths to `urdf_dir`.
pub fn resolve_mesh_path(
    filename: &str,
    urdf_dir: &Path,
    package_root: Option<&Path>,
) -> Result<PathBuf, KinematicsError> {
    if let Some(rest) = filename.strip_prefix("package://") {
        let root = package_root.ok_or_else(|| KinematicsError::MeshPath {
            filename: filename.to_string(),
            message: "package:// URI needs a package root directory".into(),
        })?;
        return Ok(root.join(rest));
    }
    if let Some(rest) = filename.strip_prefix("file://") {
        return Ok(PathBuf::from(rest));
    }
    if filename.contains("://") {
        return Err(KinematicsError::MeshPath {
            filename: filename.to_string(),
            message: "unsupported URI scheme".into(),
        });
    }
    let path = Path::new(filename);
    Ok(if path.is_absolute() {
        path.to_path_buf()
    } else {
        urdf_dir.join(path)
    })
}
