//! Distance queries and self-collision checking for articulated robots.
//!
//! Meshes are welded into vertex graphs ([`mesh`]), placed by forward
//! kinematics ([`kinematics`]) and compared pairwise with a GJK distance
//! loop ([`gjk`]) whose support function hill-climbs the graph adjacency
//! and whose simplex step ([`simplex`]) only inspects the regions that can
//! still hold the closest point. [`world`] keeps the per-frame scene and
//! runs the all-pairs sweep.

pub mod bench;
pub mod fixtures;
pub mod geometry;
pub mod gjk;
pub mod kinematics;
pub mod mesh;
pub mod oracle;
pub mod simplex;
pub mod world;

pub use geometry::{Transform, Vec3};
pub use gjk::{gjk_distance, DistanceResult, GjkConfig, GjkError, Placed, SupportHint, SupportStrategy};
pub use kinematics::{KinematicChain, LimitMode};
pub use mesh::VertexGraph;
pub use world::{CheckMode, WorldModel};
