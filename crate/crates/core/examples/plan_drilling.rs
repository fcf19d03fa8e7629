//! Plan both holes of the bundled task with a fixed arm and export the trajectory.

use morphsynth::catalog::{default_catalog, ModuleSequence};
use morphsynth::kinematics::build_chain;
use morphsynth::planner::{feasible, ConstraintSet, Planner, PlannerConfig};
use morphsynth::world::Task;

fn main() {
    let cat = default_catalog();
    let task = Task::drill_two_holes();
    let seq = ModuleSequence::parse("base;straight;elbow;L500;elbow;straight;elbow;eef");
    let chain = build_chain(&seq, &cat).unwrap();
    let planner = Planner::new(&chain, &task, &PlannerConfig::default(), 7);

    for set in ConstraintSet::nested() {
        let out = planner.plan(set);
        let d: Vec<String> = out.per_goal_distance.iter().map(|d| format!("{d:.2e}")).collect();
        println!("{set:?}: feasible {}  goal distances [{}]", feasible(&out, &task), d.join(", "));
    }

    let out = planner.plan(ConstraintSet::ALL);
    let Some(traj) = out.trajectory.as_ref() else {
        println!("no trajectory");
        return;
    };
    println!("{} samples, calibration at {}, holes at {:?}", traj.len(), traj.calibration_index, traj.goal_indices);
    let text = traj.export();
    for line in text.lines().take(5) {
        println!("{line}");
    }
    println!("...");
}
