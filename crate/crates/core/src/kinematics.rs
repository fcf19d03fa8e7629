//! Serial-chain model built from a module sequence: forward kinematics, body frames,
//! geometric Jacobian and quasi-static joint torques.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, Vector3};

use crate::catalog::{assembly_valid, Catalog, ModuleSequence};
use crate::error::ChainError;
use crate::geometry::{axis_angle, rot_z, Pose};

pub const GRAVITY: f64 = 9.81;

/// Joint angles in radians.
pub type JointConfig = Vec<f64>;

/// Planar pose of the mobile base.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct BasePose {
    #[serde(rename = "x_m")]
    pub x: f64,
    #[serde(rename = "y_m")]
    pub y: f64,
    #[serde(rename = "theta_rad")]
    pub theta: f64,
}

impl BasePose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn pose(&self) -> Pose {
        Pose::new(Vector3::new(self.x, self.y, 0.0), rot_z(self.theta))
    }

    /// Displaced by `(dx, dy, dθ)` in world coordinates.
    pub fn offset(&self, dx: f64, dy: f64, dtheta: f64) -> Self {
        Self::new(self.x + dx, self.y + dy, self.theta + dtheta)
    }
}

/// Wraps to `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a % (2.0 * PI);
    if w <= -PI {
        w += 2.0 * PI;
    } else if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Force and moment in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench {
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
}

impl Wrench {
    pub fn zero() -> Self {
        Self {
            force: Vector3::zeros(),
            torque: Vector3::zeros(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            force: self.force * s,
            torque: self.torque * s,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    /// Transform from the previous joint frame to this joint's axis frame.
    pub pre: Pose,
    pub axis: Vector3<f64>,
    pub limits: (f64, f64),
    pub torque_limit: f64,
}

/// Capsule segment in its body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyCapsule {
    pub a: Vector3<f64>,
    pub b: Vector3<f64>,
    pub radius: f64,
}

/// Rigid body attached to a chain frame: frame 0 is the chain root, frame `k` follows joint `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkBody {
    pub frame: usize,
    pub offset: Pose,
    pub mass: f64,
    pub com: Vector3<f64>,
    pub capsules: Vec<BodyCapsule>,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SerialChain {
    mount: Pose,
    joints: Vec<Joint>,
    tail: Pose,
    bodies: Vec<LinkBody>,
    gravity: Vector3<f64>,
}

/// World poses of every joint frame plus the TCP, for one configuration.
#[derive(Debug, Clone)]
pub struct ChainState {
    /// `frames[0]` is the chain root; `frames[k]` the frame after joint `k`.
    pub frames: Vec<Pose>,
    /// World rotation axis and origin for each joint.
    pub axes: Vec<(Vector3<f64>, Vector3<f64>)>,
    pub tcp: Pose,
}

/// Incremental construction of a chain; used by `build_chain` and for hand-made test chains.
#[derive(Debug, Clone, Default)]
pub struct ChainBuilder {
    joints: Vec<Joint>,
    bodies: Vec<LinkBody>,
    acc: Pose,
}

impl ChainBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a fixed transform.
    pub fn fixed(mut self, t: &Pose) -> Self {
        self.acc = self.acc.compose(t);
        self
    }

    /// Appends a revolute joint at the current frame.
    pub fn joint(mut self, axis: Vector3<f64>, limits: (f64, f64), torque_limit: f64) -> Self {
        self.joints.push(Joint {
            pre: self.acc,
            axis: axis.normalize(),
            limits,
            torque_limit,
        });
        self.acc = Pose::identity();
        self
    }

    /// Attaches a body at the current frame.
    pub fn body(mut self, label: &str, mass: f64, com: Vector3<f64>, capsules: Vec<BodyCapsule>) -> Self {
        self.bodies.push(LinkBody {
            frame: self.joints.len(),
            offset: self.acc,
            mass,
            com,
            capsules,
            label: label.to_string(),
        });
        self
    }

    pub fn build(self) -> SerialChain {
        SerialChain {
            mount: Pose::identity(),
            joints: self.joints,
            tail: self.acc,
            bodies: self.bodies,
            gravity: Vector3::new(0.0, 0.0, -GRAVITY),
        }
    }
}

/// Builds the kinematic and static model of an assemblable sequence.
pub fn build_chain(seq: &ModuleSequence, cat: &Catalog) -> Result<SerialChain, ChainError> {
    assembly_valid(seq, cat).map_err(|v| ChainError::InvalidAssembly(v.to_string()))?;
    Ok(build_chain_unchecked(seq, cat))
}

/// Like [`build_chain`] but ignores availability; unknown ids are skipped.
pub fn build_chain_unchecked(seq: &ModuleSequence, cat: &Catalog) -> SerialChain {
    let mut b = ChainBuilder::new();
    for id in seq.ids() {
        let Some(m) = cat.get(id) else { continue };
        if let (true, Some(j)) = (m.kind.is_joint(), m.joint) {
            b = b.joint(Vector3::from(j.axis), (j.limits[0], j.limits[1]), j.torque_limit);
        }
        let capsules = m
            .capsules
            .iter()
            .map(|c| BodyCapsule {
                a: Vector3::from(c.a),
                b: Vector3::from(c.b),
                radius: c.radius,
            })
            .collect();
        b = b
            .body(&m.id, m.mass, Vector3::from(m.com), capsules)
            .fixed(&m.proximal_to_distal());
    }
    b.build()
}

impl SerialChain {
    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn bodies(&self) -> &[LinkBody] {
        &self.bodies
    }

    pub fn tail(&self) -> &Pose {
        &self.tail
    }

    pub fn mount(&self) -> &Pose {
        &self.mount
    }

    /// Same chain mounted on the base platform with `mount`.
    pub fn with_mount(mut self, mount: Pose) -> Self {
        self.mount = mount;
        self
    }

    pub fn with_gravity(mut self, g: Vector3<f64>) -> Self {
        self.gravity = g;
        self
    }

    pub fn gravity(&self) -> Vector3<f64> {
        self.gravity
    }

    /// Appends a body at the TCP frame.
    pub fn with_tcp_body(mut self, label: &str, mass: f64, capsules: Vec<BodyCapsule>) -> Self {
        self.bodies.push(LinkBody {
            frame: self.joints.len(),
            offset: self.tail,
            mass,
            com: Vector3::zeros(),
            capsules,
            label: label.to_string(),
        });
        self
    }

    pub fn limits(&self) -> Vec<(f64, f64)> {
        self.joints.iter().map(|j| j.limits).collect()
    }

    /// Clamps into joint limits.
    pub fn clamp(&self, q: &mut [f64]) {
        for (v, j) in q.iter_mut().zip(&self.joints) {
            *v = v.clamp(j.limits.0, j.limits.1);
        }
    }

    pub fn within_limits(&self, q: &[f64]) -> bool {
        q.iter()
            .zip(&self.joints)
            .all(|(v, j)| *v >= j.limits.0 && *v <= j.limits.1)
    }

    /// Zero configuration clamped into limits.
    pub fn home(&self) -> JointConfig {
        let mut q = vec![0.0; self.dof()];
        self.clamp(&mut q);
        q
    }

    fn check(&self, q: &[f64]) -> Result<(), ChainError> {
        if q.len() != self.dof() {
            return Err(ChainError::DimensionMismatch {
                expected: self.dof(),
                actual: q.len(),
            });
        }
        Ok(())
    }

    pub fn root(&self, base: &BasePose) -> Pose {
        base.pose().compose(&self.mount)
    }

    pub fn state(&self, base: &BasePose, q: &[f64]) -> Result<ChainState, ChainError> {
        self.check(q)?;
        let mut frames = Vec::with_capacity(self.dof() + 1);
        let mut axes = Vec::with_capacity(self.dof());
        let mut f = self.root(base);
        frames.push(f);
        for (j, qi) in self.joints.iter().zip(q) {
            let at = f.compose(&j.pre);
            axes.push((at.rotation * j.axis, at.translation));
            f = at.compose(&Pose::from_rotation(axis_angle(&j.axis, *qi)));
            frames.push(f);
        }
        let tcp = f.compose(&self.tail);
        Ok(ChainState { frames, axes, tcp })
    }

    pub fn forward_kinematics(&self, base: &BasePose, q: &[f64]) -> Result<Pose, ChainError> {
        Ok(self.state(base, q)?.tcp)
    }

    /// World pose of every body frame.
    pub fn link_frames(&self, base: &BasePose, q: &[f64]) -> Result<Vec<Pose>, ChainError> {
        let s = self.state(base, q)?;
        Ok(self.body_poses(&s))
    }

    pub fn body_poses(&self, s: &ChainState) -> Vec<Pose> {
        self.bodies
            .iter()
            .map(|b| s.frames[b.frame].compose(&b.offset))
            .collect()
    }

    /// Geometric Jacobian (linear rows on top) of the TCP in world coordinates.
    pub fn jacobian(&self, base: &BasePose, q: &[f64]) -> Result<DMatrix<f64>, ChainError> {
        let s = self.state(base, q)?;
        Ok(self.jacobian_from_state(&s))
    }

    pub fn jacobian_from_state(&self, s: &ChainState) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(6, self.dof());
        let p = s.tcp.translation;
        for (k, (z, o)) in s.axes.iter().enumerate() {
            let v = z.cross(&(p - o));
            for r in 0..3 {
                j[(r, k)] = v[r];
                j[(r + 3, k)] = z[r];
            }
        }
        j
    }

    /// Joint torques holding the chain against gravity; equal to `∂U/∂q`.
    pub fn gravity_torques(&self, s: &ChainState) -> Vec<f64> {
        let poses = self.body_poses(s);
        let mut tau = vec![0.0; self.dof()];
        for (b, pose) in self.bodies.iter().zip(&poses) {
            if b.mass == 0.0 || b.frame == 0 {
                continue;
            }
            let c = pose.transform_point(&b.com);
            let weight = self.gravity * b.mass;
            for (k, (z, o)) in s.axes.iter().enumerate().take(b.frame) {
                // joints before the body's frame move it
                tau[k] -= z.cross(&(c - o)).dot(&weight);
            }
        }
        tau
    }

    /// Quasi-static joint torques `τ = ∂U/∂q + Jᵀ w` for a wrench `w` the TCP exerts on the
    /// environment.
    pub fn static_torques(&self, base: &BasePose, q: &[f64], wrench: &Wrench) -> Result<Vec<f64>, ChainError> {
        let s = self.state(base, q)?;
        Ok(self.static_torques_from_state(&s, wrench))
    }

    pub fn static_torques_from_state(&self, s: &ChainState, wrench: &Wrench) -> Vec<f64> {
        let mut tau = self.gravity_torques(s);
        let p = s.tcp.translation;
        for (k, (z, o)) in s.axes.iter().enumerate() {
            tau[k] += z.cross(&(p - o)).dot(&wrench.force) + z.dot(&wrench.torque);
        }
        tau
    }

    /// Total gravitational potential energy `Σ m g h`.
    pub fn potential_energy(&self, base: &BasePose, q: &[f64]) -> Result<f64, ChainError> {
        let s = self.state(base, q)?;
        Ok(self
            .bodies
            .iter()
            .zip(self.body_poses(&s))
            .map(|(b, pose)| -b.mass * self.gravity.dot(&pose.transform_point(&b.com)))
            .sum())
    }
}

impl fmt::Display for SerialChain {
    /// Plain-text model dump: one line per joint and per body.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = |v: &Vector3<f64>| format!("{:.6} {:.6} {:.6}", v.x, v.y, v.z);
        writeln!(f, "# chain dof={} bodies={}", self.dof(), self.bodies.len())?;
        writeln!(f, "mount t=[{}]", v(&self.mount.translation))?;
        for (i, j) in self.joints.iter().enumerate() {
            writeln!(
                f,
                "joint {} pre_t=[{}] axis=[{}] limits=[{:.6} {:.6}] torque_limit={:.3}",
                i + 1,
                v(&j.pre.translation),
                v(&j.axis),
                j.limits.0,
                j.limits.1,
                j.torque_limit
            )?;
        }
        for b in &self.bodies {
            writeln!(
                f,
                "body {} frame={} offset_t=[{}] mass={:.3} capsules={}",
                b.label,
                b.frame,
                v(&b.offset.translation),
                b.mass,
                b.capsules.len()
            )?;
        }
        writeln!(f, "tail t=[{}]", v(&self.tail.translation))
    }
}
