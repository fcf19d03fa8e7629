//! Score a five- and a six-axis arm that share a prefix on the bundled task.

use morphsynth::catalog::{common_prefix_length, default_catalog, ModuleSequence};
use morphsynth::evaluation::{derive_seed, report, Evaluator, CONSTRAINT_NAMES, NOT_EVALUATED};
use morphsynth::world::Task;

fn main() {
    let cat = default_catalog();
    let task = Task::drill_two_holes();
    let ev = Evaluator::new(&task, &cat);
    let six = ModuleSequence::parse("base;straight;elbow;L100;straight;elbow;straight;elbow;eef");
    let five = ModuleSequence::parse("base;straight;elbow;L100;straight;elbow;elbow;eef");

    for seq in [&six, &five, &ModuleSequence::parse("base;L100;eef")] {
        let r = report(&ev, seq, derive_seed(0, seq)).unwrap();
        let e = &r.evaluation;
        println!("{seq}");
        let violated: Vec<String> = CONSTRAINT_NAMES
            .iter()
            .zip(&e.constraints)
            .filter(|(_, c)| **c != 0.0 && **c != NOT_EVALUATED)
            .map(|(n, c)| format!("{n}={c:.3}"))
            .collect();
        if violated.is_empty() {
            println!("  feasible  f_c {:.2}  f_r {:.2}  f_t {}  eps {:.3} rad", e.objectives[0], e.objectives[1], e.objectives[2], r.max_adjustment);
        } else {
            println!("  infeasible: {}", violated.join(" "));
        }
        println!("  {:.1} ms", e.elapsed.as_secs_f64() * 1e3);
    }

    // swapping one arm for the other keeps the shared prefix
    let mut switched = ev.clone();
    switched.config.current_assembly = six.clone();
    let e = switched.evaluate(&five, derive_seed(0, &five)).unwrap();
    println!("prefix {} modules; switching six -> five: f_t {}", common_prefix_length(&six, &five), e.objectives[2]);
}
