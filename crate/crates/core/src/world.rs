//! Obstacles, goals, tasks and the collision queries behind the self- and
//! environment-collision constraints.

use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::ParseError;
use crate::geometry::{Placement, Pose, ToleranceSpec};
use crate::kinematics::{BasePose, ChainState, SerialChain, Wrench};

/// Capsule in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capsule {
    pub a: Vector3<f64>,
    pub b: Vector3<f64>,
    pub radius: f64,
}

impl Capsule {
    pub fn new(a: Vector3<f64>, b: Vector3<f64>, radius: f64) -> Self {
        Self { a, b, radius }
    }

    pub fn transformed(&self, t: &Pose) -> Capsule {
        Capsule {
            a: t.transform_point(&self.a),
            b: t.transform_point(&self.b),
            radius: self.radius,
        }
    }
}

pub fn point_segment_distance(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (a + ab * t - p).norm()
}

/// Minimum distance between segments `p1q1` and `p2q2`.
pub fn segment_segment_distance(
    p1: &Vector3<f64>,
    q1: &Vector3<f64>,
    p2: &Vector3<f64>,
    q2: &Vector3<f64>,
) -> f64 {
    const EPS: f64 = 1e-14;
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);
    let (s, t);
    if a <= EPS && e <= EPS {
        return r.norm();
    }
    if a <= EPS {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= EPS {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > EPS {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    ((p1 + d1 * s) - (p2 + d2 * t)).norm()
}

fn point_box_distance(p: &Vector3<f64>, half: &Vector3<f64>) -> f64 {
    let q = Vector3::new(
        (p.x.abs() - half.x).max(0.0),
        (p.y.abs() - half.y).max(0.0),
        (p.z.abs() - half.z).max(0.0),
    );
    q.norm()
}

/// Distance from segment `ab` to an axis-aligned box centred at the origin.
///
/// The distance along the segment is convex, so a golden-section search over the
/// segment parameter converges to the minimum.
pub fn segment_box_distance(a: &Vector3<f64>, b: &Vector3<f64>, half: &Vector3<f64>) -> f64 {
    let f = |t: f64| point_box_distance(&(a + (b - a) * t), half);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..48 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
        if f1 == 0.0 || f2 == 0.0 {
            return 0.0;
        }
    }
    f(0.0).min(f(1.0)).min(f1).min(f2)
}

pub fn capsule_pair_collides(a: &Capsule, b: &Capsule) -> bool {
    segment_segment_distance(&a.a, &a.b, &b.a, &b.b) < a.radius + b.radius
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    Box {
        #[serde(rename = "half_extents_m")]
        half_extents: [f64; 3],
    },
    Sphere {
        #[serde(rename = "radius_m")]
        radius: f64,
    },
    Capsule {
        #[serde(rename = "a_m")]
        a: [f64; 3],
        #[serde(rename = "b_m")]
        b: [f64; 3],
        #[serde(rename = "radius_m")]
        radius: f64,
    },
}

impl Shape {
    pub fn validate(&self) -> Result<(), String> {
        let ok = match self {
            Shape::Box { half_extents } => half_extents.iter().all(|h| *h > 0.0),
            Shape::Sphere { radius } | Shape::Capsule { radius, .. } => *radius > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err("dimensions must be positive".into())
        }
    }

    /// Same shape with every dimension multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Shape {
        match *self {
            Shape::Box { half_extents } => Shape::Box {
                half_extents: half_extents.map(|h| h * s),
            },
            Shape::Sphere { radius } => Shape::Sphere { radius: radius * s },
            Shape::Capsule { a, b, radius } => {
                let c = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0, (a[2] + b[2]) / 2.0];
                let sc = |p: [f64; 3]| [c[0] + (p[0] - c[0]) * s, c[1] + (p[1] - c[1]) * s, c[2] + (p[2] - c[2]) * s];
                Shape::Capsule {
                    a: sc(a),
                    b: sc(b),
                    radius: radius * s,
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub id: String,
    pub pose: Placement,
    pub shape: Shape,
}

impl Obstacle {
    pub fn new_box(id: &str, center: [f64; 3], half_extents: [f64; 3]) -> Self {
        Self {
            id: id.to_string(),
            pose: Placement::from_translation(center),
            shape: Shape::Box { half_extents },
        }
    }

    pub fn placed(&self) -> PlacedObstacle {
        PlacedObstacle::new(self.pose.pose(), self.shape)
    }
}

/// Obstacle with its pose resolved, ready for distance queries.
#[derive(Debug, Clone, Copy)]
pub struct PlacedObstacle {
    pose: Pose,
    inverse: Pose,
    shape: Shape,
}

impl PlacedObstacle {
    pub fn new(pose: Pose, shape: Shape) -> Self {
        Self {
            pose,
            inverse: pose.inverse(),
            shape,
        }
    }

    /// Distance from the capsule core segment to the obstacle surface (0 when overlapping).
    fn core_distance(&self, c: &Capsule) -> f64 {
        match self.shape {
            Shape::Box { half_extents } => {
                let a = self.inverse.transform_point(&c.a);
                let b = self.inverse.transform_point(&c.b);
                segment_box_distance(&a, &b, &Vector3::from(half_extents))
            }
            Shape::Sphere { radius } => {
                (point_segment_distance(&self.pose.translation, &c.a, &c.b) - radius).max(0.0)
            }
            Shape::Capsule { a, b, radius } => {
                let pa = self.pose.transform_point(&Vector3::from(a));
                let pb = self.pose.transform_point(&Vector3::from(b));
                (segment_segment_distance(&pa, &pb, &c.a, &c.b) - radius).max(0.0)
            }
        }
    }

    pub fn collides(&self, c: &Capsule) -> bool {
        match self.shape {
            Shape::Box { .. } => self.core_distance(c) < c.radius,
            Shape::Sphere { radius } => point_segment_distance(&self.pose.translation, &c.a, &c.b) < radius + c.radius,
            Shape::Capsule { a, b, radius } => {
                let pa = self.pose.transform_point(&Vector3::from(a));
                let pb = self.pose.transform_point(&Vector3::from(b));
                segment_segment_distance(&pa, &pb, &c.a, &c.b) < radius + c.radius
            }
        }
    }
}

/// Desired end-effector pose with its tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Goal {
    pub id: String,
    pub pose: Placement,
    pub tolerance: ToleranceSpec,
}

impl Goal {
    pub fn target(&self) -> Pose {
        self.pose.pose()
    }
}

/// Wrench in the tool frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ToolWrench {
    #[serde(rename = "force_n", default)]
    pub force: [f64; 3],
    #[serde(rename = "torque_nm", default)]
    pub torque: [f64; 3],
}

impl ToolWrench {
    pub fn to_world(&self, tcp: &Pose) -> Wrench {
        Wrench {
            force: tcp.rotation * Vector3::from(self.force),
            torque: tcp.rotation * Vector3::from(self.torque),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.force.iter().chain(self.torque.iter()).all(|v| *v == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Transit,
    Approach,
    Drill,
    Retract,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Transit => "transit",
            Phase::Approach => "approach",
            Phase::Drill => "drill",
            Phase::Retract => "retract",
        }
    }
}

/// External wrench exerted by the tool during each trajectory phase.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PayloadSchedule {
    pub transit: ToolWrench,
    pub approach: ToolWrench,
    pub drill: ToolWrench,
    pub retract: ToolWrench,
}

impl PayloadSchedule {
    pub fn for_phase(&self, phase: Phase) -> &ToolWrench {
        match phase {
            Phase::Transit => &self.transit,
            Phase::Approach => &self.approach,
            Phase::Drill => &self.drill,
            Phase::Retract => &self.retract,
        }
    }

    /// 13 N along and 15 N·m about the drill axis while drilling.
    pub fn drilling() -> Self {
        Self {
            drill: ToolWrench {
                force: [0.0, 0.0, 13.0],
                torque: [0.0, 0.0, 15.0],
            },
            ..Default::default()
        }
    }
}

/// Maximum base displacement after calibration, `Δ_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    #[serde(rename = "x_m")]
    pub x: f64,
    #[serde(rename = "y_m")]
    pub y: f64,
    #[serde(rename = "theta_rad")]
    pub theta: f64,
}

impl Default for Envelope {
    fn default() -> Self {
        Self {
            x: 0.20,
            y: 0.20,
            theta: 15f64.to_radians(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrillSettings {
    /// Hole depth; the goal pose is the bottom of the hole.
    #[serde(rename = "depth_m")]
    pub depth: f64,
    /// Clearance in front of the hole entry where approach starts.
    #[serde(rename = "standoff_m")]
    pub standoff: f64,
    /// Radius of the per-goal cylinder exempted from environment collision checks.
    #[serde(rename = "exemption_radius_m")]
    pub exemption_radius: f64,
}

impl Default for DrillSettings {
    fn default() -> Self {
        Self {
            depth: 0.0,
            standoff: 0.05,
            exemption_radius: 0.02,
        }
    }
}

/// Box attached to the mobile base frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Platform {
    #[serde(rename = "center_m")]
    pub center: [f64; 3],
    #[serde(rename = "half_extents_m")]
    pub half_extents: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub name: String,
    /// Nominal base pose.
    pub base: BasePose,
    #[serde(rename = "mount_height_m", default = "default_mount_height")]
    pub mount_height: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub platform: Option<Platform>,
    #[serde(default)]
    pub robustness_envelope: Envelope,
    #[serde(default)]
    pub drilling: DrillSettings,
    #[serde(default)]
    pub payload: PayloadSchedule,
    #[serde(rename = "goal")]
    pub goals: Vec<Goal>,
    #[serde(rename = "obstacle", default)]
    pub obstacles: Vec<Obstacle>,
}

fn default_mount_height() -> f64 {
    0.7
}

pub const DRILL_TWO_HOLES_TOML: &str = include_str!("../data/drill_two_holes.toml");

impl Task {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, ParseError> {
        let task: Task = toml::from_str(text).map_err(|e| ParseError::syntax(origin, e))?;
        task.validate(origin)?;
        Ok(task)
    }

    pub fn load(path: &Path) -> Result<Self, ParseError> {
        let text = std::fs::read_to_string(path).map_err(|source| ParseError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("task serializes")
    }

    /// The bundled two-hole drilling task.
    pub fn drill_two_holes() -> Self {
        Self::from_toml_str(DRILL_TWO_HOLES_TOML, "<bundled drill_two_holes.toml>").expect("bundled task is valid")
    }

    pub fn validate(&self, origin: &str) -> Result<(), ParseError> {
        if self.goals.is_empty() {
            return Err(ParseError::field(origin, "goal", "at least one goal is required"));
        }
        for (i, g) in self.goals.iter().enumerate() {
            g.tolerance
                .validate()
                .map_err(|m| ParseError::field(origin, format!("goal[{i}] ({}).tolerance", g.id), m))?;
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            o.shape
                .validate()
                .map_err(|m| ParseError::field(origin, format!("obstacle[{i}] ({}).shape", o.id), m))?;
        }
        let e = &self.robustness_envelope;
        if !(e.x >= 0.0 && e.y >= 0.0 && e.theta >= 0.0) {
            return Err(ParseError::field(origin, "robustness_envelope", "entries must be >= 0"));
        }
        let d = &self.drilling;
        if !(d.depth >= 0.0 && d.standoff >= 0.0 && d.exemption_radius >= 0.0) {
            return Err(ParseError::field(origin, "drilling", "entries must be >= 0"));
        }
        if let Some(p) = &self.platform {
            if p.half_extents.iter().any(|h| !(*h > 0.0)) {
                return Err(ParseError::field(origin, "platform.half_extents_m", "must be positive"));
            }
        }
        Ok(())
    }

    /// Mount transform from the base frame to the manipulator's first module.
    pub fn mount_pose(&self) -> Pose {
        Pose::from_translation(0.0, 0.0, self.mount_height)
    }

    /// World position of the nominal mount point.
    pub fn mount_point(&self) -> Vector3<f64> {
        self.base.pose().compose(&self.mount_pose()).translation
    }

    /// Environment obstacles, platform and drill exemptions resolved for queries.
    pub fn scene(&self) -> Scene {
        let exemptions = if self.drilling.depth > 0.0 && self.drilling.exemption_radius > 0.0 {
            self.goals
                .iter()
                .map(|g| {
                    let p = g.target();
                    ExemptionCylinder {
                        tip: p.translation,
                        axis: p.rotation * Vector3::z(),
                        radius: self.drilling.exemption_radius,
                    }
                })
                .collect()
        } else {
            Vec::new()
        };
        Scene {
            obstacles: self.obstacles.iter().map(Obstacle::placed).collect(),
            platform: self.platform,
            exemptions,
        }
    }
}

/// Region around a drill axis where link capsules may enter the environment: a
/// half-infinite cylinder ending 1 cm beyond the hole bottom.
#[derive(Debug, Clone, Copy)]
pub struct ExemptionCylinder {
    pub tip: Vector3<f64>,
    pub axis: Vector3<f64>,
    pub radius: f64,
}

impl ExemptionCylinder {
    const TIP_SLACK: f64 = 0.01;

    pub fn contains(&self, c: &Capsule) -> bool {
        let inner = self.radius - c.radius;
        if inner < 0.0 {
            return false;
        }
        [c.a, c.b].iter().all(|p| {
            let d = p - self.tip;
            let axial = d.dot(&self.axis);
            axial <= Self::TIP_SLACK && (d - self.axis * axial).norm() <= inner
        })
    }
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub obstacles: Vec<PlacedObstacle>,
    pub platform: Option<Platform>,
    pub exemptions: Vec<ExemptionCylinder>,
}

impl Scene {
    pub fn empty() -> Self {
        Scene {
            obstacles: Vec::new(),
            platform: None,
            exemptions: Vec::new(),
        }
    }

    pub fn from_obstacles(obstacles: &[Obstacle]) -> Self {
        Scene {
            obstacles: obstacles.iter().map(Obstacle::placed).collect(),
            platform: None,
            exemptions: Vec::new(),
        }
    }

    /// No link capsule intersects an obstacle or, except the base column, the platform.
    pub fn collision_free(&self, chain: &SerialChain, base: &BasePose, state: &ChainState) -> bool {
        let capsules = world_capsules(chain, state);
        let platform = self.platform.map(|p| {
            PlacedObstacle::new(
                base.pose().compose(&Pose::from_translation(p.center[0], p.center[1], p.center[2])),
                Shape::Box {
                    half_extents: p.half_extents,
                },
            )
        });
        for (body, c) in &capsules {
            if let Some(p) = &platform {
                if *body > 0 && p.collides(c) {
                    return false;
                }
            }
            if self.obstacles.iter().any(|o| o.collides(c)) && !self.exemptions.iter().any(|e| e.contains(c)) {
                return false;
            }
        }
        true
    }
}

/// Every capsule of the chain in world coordinates, tagged with its body index.
pub fn world_capsules(chain: &SerialChain, state: &ChainState) -> Vec<(usize, Capsule)> {
    let poses = chain.body_poses(state);
    chain
        .bodies()
        .iter()
        .zip(poses)
        .enumerate()
        .flat_map(|(i, (b, pose))| {
            b.capsules
                .iter()
                .map(move |c| (i, Capsule::new(pose.transform_point(&c.a), pose.transform_point(&c.b), c.radius)))
        })
        .collect()
}

/// Self-collision check over non-adjacent body pairs.
pub fn self_collision_free_state(chain: &SerialChain, state: &ChainState) -> bool {
    let caps = world_capsules(chain, state);
    for (i, (bi, ci)) in caps.iter().enumerate() {
        for (bj, cj) in &caps[..i] {
            if bi.abs_diff(*bj) > 1 && capsule_pair_collides(ci, cj) {
                return false;
            }
        }
    }
    true
}

pub fn self_collision_free(chain: &SerialChain, base: &BasePose, q: &[f64]) -> bool {
    match chain.state(base, q) {
        Ok(s) => self_collision_free_state(chain, &s),
        Err(_) => false,
    }
}

pub fn environment_collision_free(chain: &SerialChain, base: &BasePose, q: &[f64], obstacles: &[Obstacle]) -> bool {
    match chain.state(base, q) {
        Ok(s) => Scene::from_obstacles(obstacles).collision_free(chain, base, &s),
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{default_catalog, ModuleSequence};
    use crate::geometry::exp_rotation;
    use crate::kinematics::{build_chain, BodyCapsule, ChainBuilder};
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn v(x: f64, y: f64, z: f64) -> Vector3<f64> {
        Vector3::new(x, y, z)
    }

    /// Dense sampling oracle for segment distance.
    fn sampled_segment_distance(p1: &Vector3<f64>, q1: &Vector3<f64>, p2: &Vector3<f64>, q2: &Vector3<f64>) -> f64 {
        let n = 400;
        let mut best = f64::INFINITY;
        for i in 0..=n {
            let a = p1 + (q1 - p1) * (i as f64 / n as f64);
            best = best.min(point_segment_distance(&a, p2, q2));
        }
        best
    }

    #[test]
    fn capsule_examples() {
        let c = Capsule::new(v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), 0.1);
        assert!(capsule_pair_collides(&c, &c));
        let d = Capsule::new(v(0.0, 1.0, 0.0), v(1.0, 1.0, 0.0), 0.1);
        assert!(!capsule_pair_collides(&c, &d));
        let a = Capsule::new(v(-1.0, 0.0, 0.0), v(1.0, 0.0, 0.0), 0.05);
        let b = Capsule::new(v(0.0, -1.0, 0.09), v(0.0, 1.0, 0.09), 0.05);
        assert!((sampled_segment_distance(&a.a, &a.b, &b.a, &b.b) - 0.09).abs() < 1e-9);
        assert!(capsule_pair_collides(&a, &b));
    }

    #[test]
    fn segment_distance_matches_sampling() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut r = || v(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        for _ in 0..200 {
            let (p1, q1, p2, q2) = (r(), r(), r(), r());
            let exact = segment_segment_distance(&p1, &q1, &p2, &q2);
            let sampled = sampled_segment_distance(&p1, &q1, &p2, &q2);
            assert!(exact <= sampled + 1e-12);
            assert!(sampled - exact < 5e-3, "{exact} vs {sampled}");
            assert!((exact - segment_segment_distance(&p2, &q2, &p1, &q1)).abs() < 1e-12);
        }
        // parallel and degenerate segments
        assert!((segment_segment_distance(&v(0., 0., 0.), &v(1., 0., 0.), &v(0.5, 0.3, 0.), &v(2., 0.3, 0.)) - 0.3).abs() < 1e-12);
        assert!((segment_segment_distance(&v(0., 0., 0.), &v(0., 0., 0.), &v(0., 0., 2.), &v(0., 0., 2.)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn box_distance_analytic() {
        let half = v(0.5, 0.5, 0.5);
        // segment parallel to the +x face at 0.2 m
        assert!((segment_box_distance(&v(0.7, -2.0, 0.0), &v(0.7, 2.0, 0.0), &half) - 0.2).abs() < 1e-6);
        // corner region
        let d = segment_box_distance(&v(1.0, 1.0, 2.0), &v(1.0, 1.0, 3.0), &half);
        assert!((d - (0.25f64 + 0.25 + 2.25).sqrt()).abs() < 1e-6);
        // passing through
        assert_eq!(segment_box_distance(&v(-2.0, 0.0, 0.0), &v(2.0, 0.1, 0.0), &half), 0.0);
    }

    #[test]
    fn environment_examples() {
        let cat = default_catalog();
        let chain = build_chain(&ModuleSequence::parse("base;straight;elbow;straight;elbow;eef"), &cat).unwrap();
        let b = BasePose::default();
        let mut q = chain.home();
        q[1] = PI / 2.0; // lean the arm over towards -y
        assert!(environment_collision_free(&chain, &b, &q, &[]));

        let s = chain.state(&b, &q).unwrap();
        let tip = s.tcp.translation;
        // wall 1 cm beyond the drill tip capsule, then pushed to touch it
        let dir = s.tcp.rotation * Vector3::z();
        let wall_at = |gap: f64| {
            let c = tip + dir * (gap + 0.005 + 0.05);
            Obstacle {
                id: "wall".into(),
                pose: Placement {
                    translation: [c.x, c.y, c.z],
                    rotation_vector: [0.0; 3],
                },
                shape: Shape::Box {
                    half_extents: [0.05, 0.05, 0.05],
                },
            }
        };
        // tool points along -y here, so an axis-aligned cube face is normal to it
        assert!(dir.y < -0.999, "{dir}");
        assert!(environment_collision_free(&chain, &b, &q, &[wall_at(0.01)]));
        assert!(!environment_collision_free(&chain, &b, &q, &[wall_at(-0.001)]));

        let behind = Obstacle::new_box("behind", [0.0, 1.5, 1.0], [0.3, 0.3, 1.0]);
        assert!(environment_collision_free(&chain, &b, &q, &[behind]));
    }

    #[test]
    fn self_collision_examples() {
        let cat = default_catalog();
        let chain = build_chain(&ModuleSequence::parse("base;straight;elbow;straight;elbow;straight;elbow;eef"), &cat).unwrap();
        let b = BasePose::default();
        assert!(self_collision_free(&chain, &b, &chain.home()));

        // sweep the two lower elbows; folding far enough must bring some link back onto the arm
        let mut folded = 0;
        for i in -14..=14 {
            for j in -14..=14 {
                let mut q = chain.home();
                q[1] = i as f64 * 0.2;
                q[3] = j as f64 * 0.2;
                let s = chain.state(&b, &q).unwrap();
                let caps = world_capsules(&chain, &s);
                let mut hit = false;
                for (x, cx) in &caps {
                    for (y, cy) in &caps {
                        if x + 1 < *y && sampled_segment_distance(&cx.a, &cx.b, &cy.a, &cy.b) < cx.radius + cy.radius - 1e-3 {
                            hit = true;
                        }
                    }
                }
                if hit {
                    folded += 1;
                    assert!(!self_collision_free(&chain, &b, &q), "{q:?}");
                }
            }
        }
        assert!(folded > 0);

        let one = ChainBuilder::new()
            .body("only", 1.0, Vector3::zeros(), vec![BodyCapsule { a: v(0., 0., 0.), b: v(0., 0., 1.), radius: 0.5 }])
            .build();
        assert!(self_collision_free(&one, &b, &[]));
    }

    #[test]
    fn exemption_cylinder() {
        let e = ExemptionCylinder {
            tip: v(1.0, 0.0, 1.0),
            axis: v(1.0, 0.0, 0.0),
            radius: 0.02,
        };
        let bit = Capsule::new(v(0.7, 0.0, 1.0), v(0.99, 0.005, 1.0), 0.005);
        assert!(e.contains(&bit));
        let fat = Capsule { radius: 0.03, ..bit };
        assert!(!e.contains(&fat));
        let off = Capsule::new(v(0.7, 0.05, 1.0), v(0.99, 0.0, 1.0), 0.005);
        assert!(!e.contains(&off));
        let past = Capsule::new(v(0.9, 0.0, 1.0), v(1.05, 0.0, 1.0), 0.005);
        assert!(!e.contains(&past));
    }

    #[test]
    fn task_round_trip_and_defaults() {
        let task = Task::drill_two_holes();
        assert_eq!(task.goals.len(), 2);
        assert_eq!(task.robustness_envelope, Envelope::default());
        assert!((task.robustness_envelope.theta - 15f64.to_radians()).abs() < 1e-15);
        assert_eq!(task.payload.drill.force, [0.0, 0.0, 13.0]);
        assert_eq!(task.payload.drill.torque, [0.0, 0.0, 15.0]);
        assert!(task.payload.transit.is_zero());
        assert_eq!(task.goals[0].tolerance, ToleranceSpec::drilling());
        let again = Task::from_toml_str(&task.to_toml_string(), "mem").unwrap();
        assert_eq!(task, again);
    }

    #[test]
    fn task_errors() {
        let e = Task::from_toml_str("name = 3", "t.toml").unwrap_err().to_string();
        assert!(e.contains("t.toml"), "{e}");
        let text = Task::drill_two_holes().to_toml_string().replace("max_angle_rad = 0.03490658503988659", "max_angle_rad = -1.0");
        let e = Task::from_toml_str(&text, "t.toml").unwrap_err().to_string();
        assert!(e.contains("tolerance"), "{e}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn pt() -> impl Strategy<Value = Vector3<f64>> {
            (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y, z)| Vector3::new(x, y, z))
        }

        proptest! {
            #[test]
            fn capsule_collision_rigid_invariant(a in pt(), b in pt(), c in pt(), d in pt(), r1 in 0.01..0.5f64, r2 in 0.01..0.5f64,
                                                 rv in pt(), t in pt()) {
                let x = Capsule::new(a, b, r1);
                let y = Capsule::new(c, d, r2);
                let m = Pose::new(t, exp_rotation(&(rv * 3.0)));
                let dist = segment_segment_distance(&a, &b, &c, &d);
                prop_assume!((dist - r1 - r2).abs() > 1e-9);
                prop_assert_eq!(capsule_pair_collides(&x, &y), capsule_pair_collides(&y, &x));
                prop_assert_eq!(capsule_pair_collides(&x, &y), capsule_pair_collides(&x.transformed(&m), &y.transformed(&m)));
            }

            #[test]
            fn obstacle_shrinking_monotone(q1 in -2.8..2.8f64, q2 in -2.8..2.8f64, q3 in -2.8..2.8f64,
                                           cx in -0.8..0.8f64, cy in -0.8..0.8f64, cz in 0.3..1.8f64, s in 0.05..1.0f64) {
                let cat = default_catalog();
                let chain = build_chain(&ModuleSequence::parse("base;straight;elbow;L200;elbow;eef"), &cat).unwrap();
                let b = BasePose::default();
                let q = [q1, q2, q3];
                let obstacles = vec![
                    Obstacle::new_box("box", [cx, cy, cz], [0.2, 0.3, 0.25]),
                    Obstacle { id: "ball".into(), pose: Placement::from_translation([cy, cx, cz]), shape: Shape::Sphere { radius: 0.2 } },
                    Obstacle { id: "rod".into(), pose: Placement::from_translation([cx, -cy, cz]), shape: Shape::Capsule { a: [0.0, 0.0, -0.2], b: [0.0, 0.1, 0.2], radius: 0.1 } },
                ];
                let before = environment_collision_free(&chain, &b, &q, &obstacles);
                let shrunk: Vec<_> = obstacles.iter().map(|o| Obstacle { shape: o.shape.scaled(s), ..o.clone() }).collect();
                prop_assert!(!before || environment_collision_free(&chain, &b, &q, &shrunk));
            }

            #[test]
            fn scene_rigid_invariant(q1 in -2.8..2.8f64, q2 in -2.8..2.8f64, bx in -1.0..1.0f64, by in -1.0..1.0f64, th in -3.0..3.0f64,
                                     cx in -0.8..0.8f64, cz in 0.5..1.8f64) {
                let cat = default_catalog();
                let chain = build_chain(&ModuleSequence::parse("base;straight;elbow;L500;eef"), &cat).unwrap();
                let q = [q1, q2];
                let wall = Obstacle::new_box("w", [cx, 0.4, cz], [0.3, 0.1, 0.3]);
                let here = environment_collision_free(&chain, &BasePose::default(), &q, std::slice::from_ref(&wall));
                // move base and obstacle together
                let m = BasePose::new(bx, by, th).pose();
                let moved_pose = m.compose(&wall.pose.pose());
                let moved = PlacedObstacle::new(moved_pose, wall.shape);
                let scene = Scene { obstacles: vec![moved], platform: None, exemptions: vec![] };
                let bp = BasePose::new(bx, by, th);
                let s = chain.state(&bp, &q).unwrap();
                prop_assert_eq!(here, scene.collision_free(&chain, &bp, &s));
            }
        }
    }
}
