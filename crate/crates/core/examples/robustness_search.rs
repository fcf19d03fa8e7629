//! How far can the base drift after calibration before the plan breaks?

use morphsynth::catalog::{default_catalog, ModuleSequence};
use morphsynth::kinematics::build_chain;
use morphsynth::planner::{feasible, max_joint_adjustment, ConstraintSet, Planner, PlannerConfig};
use morphsynth::world::Task;

fn main() {
    let cat = default_catalog();
    let task = Task::drill_two_holes();
    let env = task.robustness_envelope;
    println!("envelope: {} m, {} m, {:.1} deg", env.x, env.y, env.theta.to_degrees());
    for text in [
        "base;straight;elbow;straight;elbow;elbow;eef",
        "base;straight;elbow;L500;elbow;straight;elbow;eef",
    ] {
        let seq = ModuleSequence::parse(text);
        let chain = build_chain(&seq, &cat).unwrap();
        let planner = Planner::new(&chain, &task, &PlannerConfig::default(), 1);
        let out = planner.plan(ConstraintSet::ALL);
        if !feasible(&out, &task) {
            println!("{seq}: no nominal plan");
            continue;
        }
        let delta = planner.robustness_delta(&out);
        println!("{seq}: delta {delta:.2}");
        for k in 1..=4 {
            let d = k as f64 * 0.25;
            let ok = planner.corners(d).iter().filter(|c| planner.replan(&out, **c)).count();
            let eps = planner
                .replan_trajectory(&out, planner.corners(d)[0])
                .map(|t| max_joint_adjustment(out.trajectory.as_ref().unwrap(), &t).unwrap());
            println!("  at {d:.2}: {ok}/8 corners repairable, first corner eps {eps:.3?}");
        }
    }
}
