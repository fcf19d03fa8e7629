//! Constraint vector `c1…c7` and objective vector `(f_c, f_r, f_t)` of a candidate.
//!
//! Constraints are evaluated cheapest first; once one is violated the remaining slots are
//! left at [`NOT_EVALUATED`] and the objectives are the all-`−∞` sentinel.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::catalog::{common_prefix_length, structure_valid, Catalog, ModuleSequence};
use crate::error::ChainError;
use crate::kinematics::{build_chain_unchecked, wrap_angle, BasePose, SerialChain};
use crate::planner::{feasible, max_joint_adjustment, ConstraintSet, PlanOutcome, Planner, PlannerConfig, Trajectory};
use crate::world::Task;

pub const NOT_EVALUATED: f64 = f64::NEG_INFINITY;
pub const SENTINEL: [f64; 3] = [f64::NEG_INFINITY; 3];
pub const CONSTRAINT_NAMES: [&str; 7] = [
    "c1_size",
    "c2_availability",
    "c3_base_still",
    "c4_joint_limits",
    "c5_self_collision",
    "c6_env_collision",
    "c7_torque",
];
pub const OBJECTIVE_NAMES: [&str; 3] = ["f_c", "f_r", "f_t"];

/// How per-goal distances combine into c4–c6 when a plan fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalAggregation {
    #[default]
    Worst,
    Sum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluationConfig {
    pub aggregation: GoalAggregation,
    /// Assembly time for modules missing from the catalog.
    #[serde(rename = "module_time_s")]
    pub module_time: f64,
    /// Composition currently mounted on the robot; empty means nothing assembled.
    pub current_assembly: ModuleSequence,
    /// Smallest magnitude reported by c4–c6 for a failed plan.
    pub violation_floor: f64,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            aggregation: GoalAggregation::Worst,
            module_time: 60.0,
            current_assembly: ModuleSequence::empty(),
            violation_floor: 1e-6,
        }
    }
}

/// `min(0, Σ‖m_i‖ − max_i ‖t_i − p_mount‖)`.
pub fn c1_size(seq: &ModuleSequence, task: &Task, cat: &Catalog) -> f64 {
    let mount = task.mount_point();
    let far = task
        .goals
        .iter()
        .map(|g| (g.target().translation - mount).norm())
        .fold(0.0, f64::max);
    (cat.total_size(seq) - far).min(0.0)
}

/// `min(0, min_i(available(m_i) − used(m_i)))`.
pub fn c2_availability(seq: &ModuleSequence, cat: &Catalog) -> f64 {
    let mut worst = 0i64;
    for id in seq.ids() {
        worst = worst.min(i64::from(cat.availability(id)) - seq.count(id) as i64);
    }
    worst as f64
}

/// `−Σ_{t>T_cal} (‖Δxy‖ + |wrap(Δθ)|)` relative to the base pose at calibration.
pub fn c3_base_still(traj: &Trajectory) -> f64 {
    let Some(cal) = traj.samples.get(traj.calibration_index) else {
        return 0.0;
    };
    let b0 = cal.base;
    let moved: f64 = traj.samples[traj.calibration_index + 1..]
        .iter()
        .map(|s| base_shift(&b0, &s.base))
        .sum();
    if moved == 0.0 {
        0.0
    } else {
        -moved
    }
}

fn base_shift(a: &BasePose, b: &BasePose) -> f64 {
    (b.x - a.x).hypot(b.y - a.y) + wrap_angle(b.theta - a.theta).abs()
}

/// `Σ_i min(0, τ̄_i − τ_i, τ_i + τ̄_i)` for one torque vector.
pub fn torque_violation(tau: &[f64], limits: &[f64]) -> f64 {
    tau.iter()
        .zip(limits)
        .map(|(t, l)| (l - t).min(t + l).min(0.0))
        .sum()
}

/// Torque constraint summed over every trajectory sample; the phase payload is applied
/// along the tool frame.
pub fn c7_torque(chain: &SerialChain, traj: &Trajectory, task: &Task) -> f64 {
    let limits: Vec<f64> = chain.joints().iter().map(|j| j.torque_limit).collect();
    traj.samples
        .iter()
        .map(|s| {
            let st = chain.state(&s.base, &s.q).expect("trajectory matches chain");
            let wrench = task.payload.for_phase(s.phase).to_world(&st.tcp);
            torque_violation(&chain.static_torques_from_state(&st, &wrench), &limits)
        })
        .sum()
}

/// `f_c = −Σ‖m_i‖`.
pub fn compactness(seq: &ModuleSequence, cat: &Catalog) -> f64 {
    -cat.total_size(seq)
}

/// Negative time to disassemble `current` down to the shared prefix and assemble `target`.
///
/// With a uniform module time `t_m` this is `−t_m·(len(m) + len(m_d) − 2n_c)`.
pub fn reconfiguration_time(current: &ModuleSequence, target: &ModuleSequence, cat: &Catalog, default_time: f64) -> f64 {
    let n = common_prefix_length(current, target);
    let time = |id: &String| cat.get(id).map_or(default_time, |m| m.assembly_time);
    -(current.ids()[n..].iter().map(time).sum::<f64>() + target.ids()[n..].iter().map(time).sum::<f64>())
}

/// Per-individual planner seed: the first 8 bytes of `sha256(master_seed ‖ genome)`.
pub fn derive_seed(master: u64, seq: &ModuleSequence) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(seq.to_string().as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub sequence: ModuleSequence,
    pub constraints: [f64; 7],
    pub objectives: [f64; 3],
    pub plan_seed: u64,
    /// Plan under the largest constraint set that was reached.
    pub outcome: Option<PlanOutcome>,
    pub elapsed: Duration,
}

impl Evaluation {
    pub fn is_feasible(&self) -> bool {
        self.constraints.iter().all(|c| *c == 0.0)
    }

    pub fn robustness(&self) -> Option<f64> {
        self.is_feasible().then_some(self.objectives[1])
    }
}

/// Evaluates candidates for one task and catalog.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    pub task: &'a Task,
    pub catalog: &'a Catalog,
    pub planner: PlannerConfig,
    pub config: EvaluationConfig,
}

impl<'a> Evaluator<'a> {
    pub fn new(task: &'a Task, catalog: &'a Catalog) -> Self {
        Self {
            task,
            catalog,
            planner: PlannerConfig::default(),
            config: EvaluationConfig::default(),
        }
    }

    /// Aggregated, floored violation of a failed plan.
    fn plan_violation(&self, outcome: &PlanOutcome) -> f64 {
        let d = match self.config.aggregation {
            GoalAggregation::Worst => outcome.per_goal_distance.iter().copied().fold(0.0, f64::max),
            GoalAggregation::Sum => outcome.per_goal_distance.iter().sum(),
        };
        -d.max(self.config.violation_floor)
    }

    /// Full evaluation with a planner seeded from `plan_seed`.
    ///
    /// Fails only when the sequence cannot form a chain at all (wrong base/end-effector
    /// placement or unknown modules); availability is scored by c2.
    pub fn evaluate(&self, seq: &ModuleSequence, plan_seed: u64) -> Result<Evaluation, ChainError> {
        let started = Instant::now();
        structure_valid(seq, self.catalog).map_err(|v| ChainError::InvalidAssembly(v.to_string()))?;
        let mut c = [NOT_EVALUATED; 7];
        let done = |c: [f64; 7], objectives: [f64; 3], outcome: Option<PlanOutcome>| Evaluation {
            sequence: seq.clone(),
            constraints: c,
            objectives,
            plan_seed,
            outcome,
            elapsed: started.elapsed(),
        };
        c[0] = c1_size(seq, self.task, self.catalog);
        if c[0] < 0.0 {
            return Ok(done(c, SENTINEL, None));
        }
        c[1] = c2_availability(seq, self.catalog);
        if c[1] < 0.0 {
            return Ok(done(c, SENTINEL, None));
        }
        let chain = build_chain_unchecked(seq, self.catalog);
        let planner = Planner::new(&chain, self.task, &self.planner, plan_seed);
        // feasibility under the full set implies feasibility under every subset
        let full = planner.plan(ConstraintSet::ALL);
        let mut outcome = None;
        let mut path = [0.0; 3];
        if feasible(&full, self.task) {
            outcome = Some(full);
        } else {
            for (k, set) in ConstraintSet::nested().iter().enumerate() {
                let o = if *set == ConstraintSet::ALL { full.clone() } else { planner.plan(*set) };
                if feasible(&o, self.task) {
                    path[k] = 0.0;
                    outcome = Some(o);
                } else {
                    path[k] = self.plan_violation(&o);
                    for slot in path.iter_mut().skip(k + 1) {
                        *slot = NOT_EVALUATED;
                    }
                    outcome = Some(o);
                    break;
                }
            }
        }
        let outcome = outcome.expect("at least one plan");
        c[2] = outcome.trajectory.as_ref().map_or(0.0, c3_base_still);
        c[3..6].copy_from_slice(&path);
        if c[2] < 0.0 || path.iter().any(|v| *v < 0.0) {
            if c[2] < 0.0 {
                c[3..].fill(NOT_EVALUATED);
            }
            return Ok(done(c, SENTINEL, Some(outcome)));
        }
        let traj = outcome.trajectory.as_ref().expect("feasible plan");
        c[6] = c7_torque(planner.chain(), traj, self.task);
        if c[6] < 0.0 {
            return Ok(done(c, SENTINEL, Some(outcome)));
        }
        let objectives = [
            compactness(seq, self.catalog),
            planner.robustness_delta(&outcome),
            reconfiguration_time(&self.config.current_assembly, seq, self.catalog, self.config.module_time),
        ];
        Ok(done(c, objectives, Some(outcome)))
    }
}

/// Result of re-checking one candidate in detail, as printed by the `evaluate` command.
#[derive(Debug, Clone)]
pub struct Report {
    pub evaluation: Evaluation,
    /// Largest joint change between the nominal plan and the plan repaired at
    /// `robustness·Δ_max` on the first sign corner; 0 without a robust plan.
    pub max_adjustment: f64,
    pub trajectory_text: Option<String>,
}

pub fn report(ev: &Evaluator<'_>, seq: &ModuleSequence, plan_seed: u64) -> Result<Report, ChainError> {
    let evaluation = ev.evaluate(seq, plan_seed)?;
    let mut max_adjustment = 0.0;
    if let (Some(delta), Some(outcome)) = (evaluation.robustness(), evaluation.outcome.as_ref()) {
        if delta > 0.0 {
            let chain = build_chain_unchecked(seq, ev.catalog);
            let planner = Planner::new(&chain, ev.task, &ev.planner, plan_seed);
            let corner = planner.corners(delta)[0];
            if let (Some(a), Some(b)) = (outcome.trajectory.as_ref(), planner.replan_trajectory(outcome, corner)) {
                max_adjustment = max_joint_adjustment(a, &b)?;
            }
        }
    }
    let trajectory_text = evaluation
        .outcome
        .as_ref()
        .and_then(|o| o.trajectory.as_ref())
        .map(Trajectory::export);
    Ok(Report {
        evaluation,
        max_adjustment,
        trajectory_text,
    })
}
