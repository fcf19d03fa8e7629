//! Inverse kinematics, collision-checked drilling trajectories, replanning under base
//! perturbation and the robustness search.
//!
//! A plan visits the goals in task order. For every goal the trajectory moves in joint
//! space to a standoff pose in front of the hole, then follows the drill axis through the
//! hole entry down to the goal (the hole bottom) and retracts along the same path.
//! The calibration index is the arrival at the first standoff pose; the base stays at its
//! nominal pose throughout.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ChainError;
use crate::geometry::{pose_error, tolerance_met, DistanceWeights, Pose, PoseError, ToleranceSpec};
use crate::kinematics::{BasePose, ChainState, JointConfig, SerialChain};
use crate::world::{self_collision_free_state, Goal, Phase, Scene, Task};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IkBudget {
    pub iterations: usize,
    pub restarts: usize,
    pub damping: f64,
    #[serde(rename = "max_step_rad")]
    pub max_step: f64,
}

impl Default for IkBudget {
    fn default() -> Self {
        Self {
            iterations: 300,
            restarts: 10,
            damping: 1e-3,
            max_step: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub ik: IkBudget,
    /// Largest per-joint step between interpolated samples.
    #[serde(rename = "joint_resolution_rad")]
    pub joint_resolution: f64,
    /// Spacing of samples along the drill axis.
    #[serde(rename = "cartesian_step_m")]
    pub cartesian_step: f64,
    /// Largest per-joint change tolerated between consecutive IK-tracked samples.
    #[serde(rename = "max_joint_jump_rad")]
    pub max_joint_jump: f64,
    /// Iteration cap for warm-started IK along the drill axis and during replanning.
    pub tracking_iterations: usize,
    /// Cap on expanded candidates in the goal-sequence search.
    pub node_cap: usize,
    /// Random via configurations tried when a direct joint-space transit collides.
    pub transit_via_points: usize,
    pub weights: DistanceWeights,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            ik: IkBudget::default(),
            joint_resolution: 0.05,
            cartesian_step: 0.01,
            max_joint_jump: 0.5,
            tracking_iterations: 100,
            node_cap: 2000,
            transit_via_points: 16,
            weights: DistanceWeights::default(),
        }
    }
}

/// Which path constraints a plan must respect. Torque limits are scored separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub limits: bool,
    pub self_collision: bool,
    pub environment: bool,
}

impl ConstraintSet {
    pub const NONE: Self = Self::new(false, false, false);
    pub const LIMITS: Self = Self::new(true, false, false);
    pub const LIMITS_SELF: Self = Self::new(true, true, false);
    pub const ALL: Self = Self::new(true, true, true);

    pub const fn new(limits: bool, self_collision: bool, environment: bool) -> Self {
        Self {
            limits,
            self_collision,
            environment,
        }
    }

    /// The nested sets behind c4, c5 and c6.
    pub fn nested() -> [ConstraintSet; 3] {
        [Self::LIMITS, Self::LIMITS_SELF, Self::ALL]
    }

    pub fn is_subset_of(&self, other: &ConstraintSet) -> bool {
        (!self.limits || other.limits)
            && (!self.self_collision || other.self_collision)
            && (!self.environment || other.environment)
    }
}

impl fmt::Display for ConstraintSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = [
            (self.limits, "lim"),
            (self.self_collision, "sc"),
            (self.environment, "col"),
        ]
        .iter()
        .filter(|(on, _)| *on)
        .map(|(_, n)| *n)
        .collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

#[derive(Debug, Clone)]
pub struct IkSolution {
    pub q: JointConfig,
    pub error: PoseError,
    /// Weighted translation error plus the angle between actual and desired tool axes.
    pub distance: f64,
    pub met: bool,
}

impl IkSolution {
    fn better_than(&self, other: &IkSolution) -> bool {
        (self.met && !other.met) || (self.met == other.met && self.distance < other.distance)
    }
}

/// Rotation vector turning `a` onto `d`, and its angle.
fn swing(a: &Vector3<f64>, d: &Vector3<f64>) -> (Vector3<f64>, f64) {
    let c = a.cross(d);
    let s = c.norm();
    let angle = s.atan2(a.dot(d));
    if s > 1e-12 {
        (c * (angle / s), angle)
    } else if angle > 1.0 {
        let helper = if a.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        (a.cross(&helper).normalize() * angle, angle)
    } else {
        (Vector3::zeros(), angle)
    }
}

/// Distance used to rank IK results: `w_t‖t_e‖ + w_R·∠(R_a u, R_d u)`.
pub fn goal_distance(actual: &Pose, target: &Pose, tol: &ToleranceSpec, w: &DistanceWeights) -> f64 {
    let u = tol.axis_vector();
    let (_, angle) = swing(&(actual.rotation * u), &(target.rotation * u));
    w.w_t * (target.translation - actual.translation).norm() + w.w_r * angle
}

/// One damped-least-squares run from `seed`.
///
/// Rotation about the tolerance axis is left free, so the solver only drives the tool axis
/// onto the goal axis.
pub fn ik_run(
    chain: &SerialChain,
    base: &BasePose,
    target: &Pose,
    tol: &ToleranceSpec,
    seed: &[f64],
    iterations: usize,
    budget: &IkBudget,
    weights: &DistanceWeights,
) -> IkSolution {
    let u = tol.axis_vector().normalize();
    let d = target.rotation * u;
    let mut q = seed.to_vec();
    q.resize(chain.dof(), 0.0);
    chain.clamp(&mut q);
    let mut best: Option<IkSolution> = None;
    let mut cols = Vec::with_capacity(chain.dof());
    for it in 0..=iterations {
        let s = chain.state(base, &q).expect("dof checked");
        let a = s.tcp.rotation * u;
        let et = target.translation - s.tcp.translation;
        let (er, angle) = swing(&a, &d);
        let error = pose_error(target, &s.tcp);
        let cand = IkSolution {
            met: tolerance_met(&error, tol),
            distance: weights.w_t * et.norm() + weights.w_r * angle,
            q: Vec::new(),
            error,
        };
        let converged = cand.met && (et.norm_squared() + er.norm_squared()).sqrt() < 1e-9;
        if best.as_ref().is_none_or(|b| cand.better_than(b)) {
            best = Some(IkSolution { q: q.clone(), ..cand });
        }
        if converged || it == iterations || chain.dof() == 0 {
            break;
        }
        let proj = Matrix3::identity() - a * a.transpose();
        let e = Vector6::new(et.x, et.y, et.z, er.x, er.y, er.z);
        let mut jjt = Matrix6::identity() * budget.damping;
        cols.clear();
        for (z, o) in &s.axes {
            let lin = z.cross(&(s.tcp.translation - o));
            let ang = proj * z;
            let c = Vector6::new(lin.x, lin.y, lin.z, ang.x, ang.y, ang.z);
            jjt += c * c.transpose();
            cols.push(c);
        }
        let Some(y) = jjt.cholesky().map(|ch| ch.solve(&e)) else { break };
        let dq: Vec<f64> = cols.iter().map(|c| c.dot(&y)).collect();
        let peak = dq.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak < 1e-12 {
            break;
        }
        let scale = if peak > budget.max_step { budget.max_step / peak } else { 1.0 };
        for (qi, di) in q.iter_mut().zip(&dq) {
            *qi += di * scale;
        }
        chain.clamp(&mut q);
    }
    best.expect("at least one iterate")
}

/// Best IK result for `goal`, starting at `seed` and then restarting from configurations
/// drawn uniformly within the joint limits until the tolerance is met or the budget runs out.
pub fn solve_ik<R: Rng>(
    chain: &SerialChain,
    base: &BasePose,
    goal: &Goal,
    seed: &[f64],
    budget: &IkBudget,
    weights: &DistanceWeights,
    rng: &mut R,
) -> IkSolution {
    let target = goal.target();
    let mut best = ik_run(chain, base, &target, &goal.tolerance, seed, budget.iterations, budget, weights);
    for _ in 0..budget.restarts {
        if best.met {
            break;
        }
        let start = random_config(chain, rng);
        let r = ik_run(chain, base, &target, &goal.tolerance, &start, budget.iterations, budget, weights);
        if r.better_than(&best) {
            best = r;
        }
    }
    best
}

pub fn random_config<R: Rng>(chain: &SerialChain, rng: &mut R) -> JointConfig {
    chain
        .joints()
        .iter()
        .map(|j| if j.limits.0 < j.limits.1 { rng.gen_range(j.limits.0..=j.limits.1) } else { j.limits.0 })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub base: BasePose,
    pub q: JointConfig,
    pub phase: Phase,
    /// Goal the sample belongs to (the upcoming goal for transit samples).
    pub goal: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub calibration_index: usize,
    /// Sample index at which each goal is reached.
    pub goal_indices: Vec<usize>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Plain-text table: `t base_x base_y base_theta q0 … phase goal`.
    pub fn export(&self) -> String {
        let mut out = String::new();
        let dof = self.samples.first().map_or(0, |s| s.q.len());
        out.push_str("# t base_x_m base_y_m base_theta_rad");
        for k in 0..dof {
            out.push_str(&format!(" q{k}_rad"));
        }
        out.push_str(" phase goal\n");
        out.push_str(&format!("# calibration_index {}\n", self.calibration_index));
        for (t, s) in self.samples.iter().enumerate() {
            out.push_str(&format!("{t} {} {} {}", s.base.x, s.base.y, s.base.theta));
            for v in &s.q {
                out.push_str(&format!(" {v}"));
            }
            out.push_str(&format!(" {} {}\n", s.phase.as_str(), s.goal));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub trajectory: Option<Trajectory>,
    pub per_goal_best_error: Vec<PoseError>,
    /// Per-goal distance behind `per_goal_best_error`; when no trajectory exists it carries
    /// a unit penalty for goals whose best candidate violates the constraint set.
    pub per_goal_distance: Vec<f64>,
    pub constraint_set: ConstraintSet,
}

/// Trajectory present and every goal's tolerance met at its goal sample.
pub fn feasible(outcome: &PlanOutcome, task: &Task) -> bool {
    outcome.trajectory.is_some()
        && outcome.per_goal_best_error.len() == task.goals.len()
        && outcome
            .per_goal_best_error
            .iter()
            .zip(&task.goals)
            .all(|(e, g)| tolerance_met(e, &g.tolerance))
}

/// `max_t ‖q(t) − q̂(t)‖∞`.
pub fn max_joint_adjustment(original: &Trajectory, adjusted: &Trajectory) -> Result<f64, ChainError> {
    if original.len() != adjusted.len() {
        return Err(ChainError::DimensionMismatch {
            expected: original.len(),
            actual: adjusted.len(),
        });
    }
    let mut m = 0.0f64;
    for (a, b) in original.samples.iter().zip(&adjusted.samples) {
        if a.q.len() != b.q.len() {
            return Err(ChainError::DimensionMismatch {
                expected: a.q.len(),
                actual: b.q.len(),
            });
        }
        for (x, y) in a.q.iter().zip(&b.q) {
            m = m.max((x - y).abs());
        }
    }
    Ok(m)
}

fn inf_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Interior samples of the straight joint-space segment `a → b` at the given resolution.
pub fn interpolate(a: &[f64], b: &[f64], resolution: f64) -> Vec<JointConfig> {
    let n = (inf_distance(a, b) / resolution).ceil().max(1.0) as usize;
    (1..n)
        .map(|k| {
            let t = k as f64 / n as f64;
            a.iter().zip(b).map(|(x, y)| x + (y - x) * t).collect()
        })
        .collect()
}

/// Drill-axis segment of one goal, from the goal configuration back to the standoff pose.
#[derive(Debug, Clone)]
struct AxisSegment {
    /// `configs[0]` reaches the goal; the last entry is the standoff configuration.
    configs: Vec<JointConfig>,
    phases: Vec<Phase>,
}

/// Per-sample validity under a constraint set.
struct Checker<'a> {
    chain: &'a SerialChain,
    scene: &'a Scene,
    base: BasePose,
    set: ConstraintSet,
}

impl Checker<'_> {
    fn valid(&self, q: &[f64]) -> bool {
        if self.set.limits && !self.chain.within_limits(q) {
            return false;
        }
        if !self.set.self_collision && !self.set.environment {
            return true;
        }
        let s = match self.chain.state(&self.base, q) {
            Ok(s) => s,
            Err(_) => return false,
        };
        self.valid_state(&s)
    }

    fn valid_state(&self, s: &ChainState) -> bool {
        (!self.set.self_collision || self_collision_free_state(self.chain, s))
            && (!self.set.environment || self.scene.collision_free(self.chain, &self.base, s))
    }
}

/// Planner for one chain on one task.
///
/// Pointwise IK candidates for every goal are computed once, independent of the constraint
/// set, so plans under nested constraint sets are comparable.
pub struct Planner<'a> {
    chain: SerialChain,
    task: &'a Task,
    scene: Scene,
    config: PlannerConfig,
    candidates: Vec<Vec<IkSolution>>,
    seed: u64,
    segments: RefCell<HashMap<Vec<u64>, Option<AxisSegment>>>,
}

impl<'a> Planner<'a> {
    /// `chain` is mounted on the task's base platform; `seed` drives the random IK restarts.
    pub fn new(chain: &SerialChain, task: &'a Task, config: &PlannerConfig, seed: u64) -> Self {
        let chain = chain.clone().with_mount(task.mount_pose());
        let base = task.base;
        let home = chain.home();
        let candidates = task
            .goals
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64 + 1);
                let target = g.target();
                let mut out = Vec::with_capacity(config.ik.restarts + 1);
                let mut start = home.clone();
                for r in 0..=config.ik.restarts {
                    if r > 0 {
                        start = random_config(&chain, &mut rng);
                    }
                    out.push(ik_run(&chain, &base, &target, &g.tolerance, &start, config.ik.iterations, &config.ik, &config.weights));
                }
                out
            })
            .collect();
        Self {
            scene: task.scene(),
            chain,
            task,
            config: *config,
            candidates,
            seed,
            segments: RefCell::new(HashMap::new()),
        }
    }

    /// The mounted chain used for planning.
    pub fn chain(&self) -> &SerialChain {
        &self.chain
    }

    pub fn task(&self) -> &Task {
        self.task
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    /// Pointwise IK results per goal (home seed first, then the random restarts).
    pub fn candidates(&self) -> &[Vec<IkSolution>] {
        &self.candidates
    }

    fn checker(&self, base: BasePose, set: ConstraintSet) -> Checker<'_> {
        Checker {
            chain: &self.chain,
            scene: &self.scene,
            base,
            set,
        }
    }

    /// Pose along the drill axis `offset` metres back from the goal.
    fn axis_pose(goal: &Goal, offset: f64) -> Pose {
        let g = goal.target();
        Pose::new(g.translation - g.rotation * Vector3::z() * offset, g.rotation)
    }

    fn axis_offsets(&self) -> Vec<(f64, Phase)> {
        let d = &self.task.drilling;
        let total = d.depth + d.standoff;
        let step = self.config.cartesian_step;
        let mut offs: Vec<f64> = (0..).map(|k| k as f64 * step).take_while(|s| *s < total - 1e-9).collect();
        offs.push(d.depth);
        offs.push(total);
        offs.sort_by(f64::total_cmp);
        offs.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        offs.into_iter()
            .map(|s| (s, if s < d.depth - 1e-9 { Phase::Drill } else { Phase::Approach }))
            .collect()
    }

    fn segment(&self, goal_idx: usize, q_goal: &[f64]) -> Option<AxisSegment> {
        let key: Vec<u64> = std::iter::once(goal_idx as u64).chain(q_goal.iter().map(|v| v.to_bits())).collect();
        if let Some(s) = self.segments.borrow().get(&key) {
            return s.clone();
        }
        let s = self.build_segment(goal_idx, q_goal);
        self.segments.borrow_mut().insert(key, s.clone());
        s
    }

    fn build_segment(&self, goal_idx: usize, q_goal: &[f64]) -> Option<AxisSegment> {
        let goal = &self.task.goals[goal_idx];
        let offsets = self.axis_offsets();
        let mut configs = vec![q_goal.to_vec()];
        let mut phases = vec![offsets[0].1];
        for &(s, phase) in &offsets[1..] {
            let prev = configs.last().expect("nonempty");
            let r = ik_run(
                &self.chain,
                &self.task.base,
                &Self::axis_pose(goal, s),
                &goal.tolerance,
                prev,
                self.config.tracking_iterations,
                &self.config.ik,
                &self.config.weights,
            );
            if !r.met || inf_distance(prev, &r.q) > self.config.max_joint_jump {
                return None;
            }
            configs.push(r.q);
            phases.push(phase);
        }
        Some(AxisSegment { configs, phases })
    }

    /// Plans the full drilling trajectory under `set`.
    pub fn plan(&self, set: ConstraintSet) -> PlanOutcome {
        let check = self.checker(self.task.base, set);
        let n = self.task.goals.len();
        let pointwise_ok = self
            .candidates
            .iter()
            .all(|cs| cs.iter().any(|c| c.met && check.valid(&c.q)));
        let home = self.chain.home();
        let mut path = Vec::new();
        let mut nodes = 0usize;
        let found = n > 0
            && pointwise_ok
            && check.valid(&home)
            && self.search(0, &home, &check, &mut path, &mut nodes);
        if found {
            let traj = self.assemble(&home, &path);
            let mut errors = Vec::with_capacity(n);
            let mut dists = Vec::with_capacity(n);
            for (g, &idx) in self.task.goals.iter().zip(&traj.goal_indices) {
                let tcp = self.chain.forward_kinematics(&self.task.base, &traj.samples[idx].q).expect("dof");
                errors.push(pose_error(&g.target(), &tcp));
                dists.push(goal_distance(&tcp, &g.target(), &g.tolerance, &self.config.weights));
            }
            return PlanOutcome {
                trajectory: Some(traj),
                per_goal_best_error: errors,
                per_goal_distance: dists,
                constraint_set: set,
            };
        }
        let mut errors = Vec::with_capacity(n);
        let mut dists = Vec::with_capacity(n);
        for cs in &self.candidates {
            let (best, score) = cs
                .iter()
                .map(|c| (c, c.distance + if check.valid(&c.q) { 0.0 } else { 1.0 }))
                .fold(None::<(&IkSolution, f64)>, |acc, (c, s)| match acc {
                    Some((_, bs)) if bs <= s => acc,
                    _ => Some((c, s)),
                })
                .expect("at least one candidate per goal");
            errors.push(best.error);
            dists.push(score);
        }
        PlanOutcome {
            trajectory: None,
            per_goal_best_error: errors,
            per_goal_distance: dists,
            constraint_set: set,
        }
    }

    /// Depth-first search over goal configurations; `path` collects (transit, segment) pairs.
    fn search(
        &self,
        goal_idx: usize,
        q_prev: &[f64],
        check: &Checker<'_>,
        path: &mut Vec<(Vec<JointConfig>, AxisSegment)>,
        nodes: &mut usize,
    ) -> bool {
        if goal_idx == self.task.goals.len() {
            return true;
        }
        let goal = &self.task.goals[goal_idx];
        let mut options: Vec<JointConfig> = Vec::new();
        if goal_idx > 0 {
            let r = ik_run(
                &self.chain,
                &self.task.base,
                &goal.target(),
                &goal.tolerance,
                q_prev,
                self.config.ik.iterations,
                &self.config.ik,
                &self.config.weights,
            );
            if r.met {
                options.push(r.q);
            }
        }
        for c in &self.candidates[goal_idx] {
            if c.met && !options.contains(&c.q) {
                options.push(c.q.clone());
            }
        }
        let mut ranked: Vec<(f64, usize, AxisSegment)> = options
            .iter()
            .enumerate()
            .filter(|(_, q)| check.valid(q))
            .filter_map(|(i, q)| self.segment(goal_idx, q).map(|s| (i, s)))
            .filter(|(_, s)| s.configs.iter().all(|q| check.valid(q)))
            .map(|(i, s)| (inf_distance(q_prev, s.configs.last().expect("nonempty")), i, s))
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (_, _, seg) in ranked {
            *nodes += 1;
            if *nodes > self.config.node_cap {
                return false;
            }
            let standoff = seg.configs.last().expect("nonempty").clone();
            let Some(transit) = self.transit(goal_idx, q_prev, &standoff, check) else {
                continue;
            };
            path.push((transit, seg));
            if self.search(goal_idx + 1, &standoff, check, path, nodes) {
                return true;
            }
            path.pop();
        }
        false
    }

    /// Joint-space motion `from → to`, directly or through one via configuration.
    fn transit(&self, goal_idx: usize, from: &[f64], to: &[f64], check: &Checker<'_>) -> Option<Vec<JointConfig>> {
        let res = self.config.joint_resolution;
        let direct = interpolate(from, to, res);
        if direct.iter().all(|q| check.valid(q)) {
            return Some(direct);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(1 << 32 | goal_idx as u64);
        for _ in 0..self.config.transit_via_points {
            let via = random_config(&self.chain, &mut rng);
            if !check.valid(&via) {
                continue;
            }
            let first = interpolate(from, &via, res);
            if !first.iter().all(|q| check.valid(q)) {
                continue;
            }
            let second = interpolate(&via, to, res);
            if second.iter().all(|q| check.valid(q)) {
                let mut out = first;
                out.push(via);
                out.extend(second);
                return Some(out);
            }
        }
        None
    }

    fn assemble(&self, home: &[f64], path: &[(Vec<JointConfig>, AxisSegment)]) -> Trajectory {
        let base = self.task.base;
        let mut samples = vec![TrajectorySample {
            base,
            q: home.to_vec(),
            phase: Phase::Transit,
            goal: 0,
        }];
        let mut calibration_index = 0;
        let mut goal_indices = Vec::with_capacity(path.len());
        for (gi, (transit, seg)) in path.iter().enumerate() {
            for q in transit {
                samples.push(TrajectorySample {
                    base,
                    q: q.clone(),
                    phase: Phase::Transit,
                    goal: gi,
                });
            }
            if gi == 0 {
                calibration_index = samples.len();
            }
            for (q, phase) in seg.configs.iter().zip(&seg.phases).rev() {
                samples.push(TrajectorySample {
                    base,
                    q: q.clone(),
                    phase: *phase,
                    goal: gi,
                });
            }
            goal_indices.push(samples.len() - 1);
            for q in seg.configs.iter().skip(1) {
                samples.push(TrajectorySample {
                    base,
                    q: q.clone(),
                    phase: Phase::Retract,
                    goal: gi,
                });
            }
        }
        Trajectory {
            samples,
            calibration_index,
            goal_indices,
        }
    }

    /// Adjusted trajectory after the base is displaced by `delta = (Δx, Δy, Δθ)` at
    /// calibration, or `None` when the plan cannot be repaired without moving the base.
    ///
    /// Drill-axis samples are re-solved by IK, seeded with the original configuration, to
    /// keep the nominal tool pose; goal samples must meet the goal tolerance. Transit samples
    /// are re-interpolated between the adjusted segment ends with the same sample count.
    /// Every adjusted sample must satisfy the outcome's constraint set.
    pub fn replan_trajectory(&self, outcome: &PlanOutcome, delta: [f64; 3]) -> Option<Trajectory> {
        if !feasible(outcome, self.task) {
            return None;
        }
        let traj = outcome.trajectory.as_ref()?;
        if delta == [0.0; 3] {
            return Some(traj.clone());
        }
        let nominal = self.task.base;
        let moved = nominal.offset(delta[0], delta[1], delta[2]);
        let check = self.checker(moved, outcome.constraint_set);
        let mut out = traj.clone();
        let tcal = traj.calibration_index;
        let goal_samples: std::collections::HashSet<usize> = traj.goal_indices.iter().copied().collect();
        // IK-tracked samples first
        let mut prev_tracked: Option<JointConfig> = None;
        for t in tcal..traj.len() {
            let s = &traj.samples[t];
            if s.phase == Phase::Transit {
                prev_tracked = None;
                continue;
            }
            let goal = &self.task.goals[s.goal];
            let target = if goal_samples.contains(&t) {
                goal.target()
            } else {
                self.chain.forward_kinematics(&nominal, &s.q).ok()?
            };
            let r = ik_run(
                &self.chain,
                &moved,
                &target,
                &goal.tolerance,
                &s.q,
                self.config.tracking_iterations,
                &self.config.ik,
                &self.config.weights,
            );
            if !r.met || !check.valid(&r.q) {
                return None;
            }
            if let Some(p) = &prev_tracked {
                if inf_distance(p, &r.q) > self.config.max_joint_jump {
                    return None;
                }
            }
            prev_tracked = Some(r.q.clone());
            out.samples[t].q = r.q;
            out.samples[t].base = moved;
        }
        // transit runs after calibration
        let mut t = tcal + 1;
        while t < traj.len() {
            if traj.samples[t].phase != Phase::Transit {
                t += 1;
                continue;
            }
            let start = t;
            while t < traj.len() && traj.samples[t].phase == Phase::Transit {
                t += 1;
            }
            let a = out.samples[start - 1].q.clone();
            let b = if t < traj.len() { out.samples[t].q.clone() } else { a.clone() };
            let n = t - start + 1;
            for (k, idx) in (start..t).enumerate() {
                let f = (k + 1) as f64 / n as f64;
                let q: JointConfig = a.iter().zip(&b).map(|(x, y)| x + (y - x) * f).collect();
                if !check.valid(&q) {
                    return None;
                }
                out.samples[idx].q = q;
                out.samples[idx].base = moved;
            }
        }
        Some(out)
    }

    pub fn replan(&self, outcome: &PlanOutcome, delta: [f64; 3]) -> bool {
        self.replan_trajectory(outcome, delta).is_some()
    }

    /// Sign corners `(±δΔx_max, ±δΔy_max, ±δΔθ_max)`.
    pub fn corners(&self, delta: f64) -> [[f64; 3]; 8] {
        let e = &self.task.robustness_envelope;
        let mut out = [[0.0; 3]; 8];
        for (i, c) in out.iter_mut().enumerate() {
            let sx = if i & 1 == 0 { 1.0 } else { -1.0 };
            let sy = if i & 2 == 0 { 1.0 } else { -1.0 };
            let st = if i & 4 == 0 { 1.0 } else { -1.0 };
            *c = [sx * delta * e.x, sy * delta * e.y, st * delta * e.theta];
        }
        out
    }

    /// Largest `δ ∈ {0, 0.05, …, 1}` for which every sign corner can be replanned,
    /// searched from 1 downwards.
    pub fn robustness_delta(&self, outcome: &PlanOutcome) -> f64 {
        if !feasible(outcome, self.task) {
            return 0.0;
        }
        for k in (1..=20u32).rev() {
            let delta = f64::from(k) / 20.0;
            if self.corners(delta).iter().all(|c| self.replan(outcome, *c)) {
                return delta;
            }
        }
        0.0
    }
}

/// Plans `task` with a fresh [`Planner`].
pub fn plan(chain: &SerialChain, task: &Task, set: ConstraintSet, config: &PlannerConfig, seed: u64) -> PlanOutcome {
    Planner::new(chain, task, config, seed).plan(set)
}
