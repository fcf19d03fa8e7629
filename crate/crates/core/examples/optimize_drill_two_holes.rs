//! The full search on the bundled task, printing progress per generation.
//!
//! `cargo run --release --example optimize_drill_two_holes -- [seed] [generations]`

use morphsynth::catalog::default_catalog;
use morphsynth::evaluation::Evaluator;
use morphsynth::io::stats_line;
use morphsynth::optimizer::{run_with, GaConfig};
use morphsynth::world::Task;

fn main() {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<u64>().expect("numeric argument"));
    let seed = args.next().unwrap_or(0);
    let generations = args.next().unwrap_or(15) as usize;
    let cat = default_catalog();
    let task = Task::drill_two_holes();
    let ev = Evaluator::new(&task, &cat);
    let cfg = GaConfig { generations, seed, ..GaConfig::default() };
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());

    let result = run_with(&ev, &cfg, workers, |s| println!("{}", stats_line(s))).unwrap();
    println!("\n{} distinct candidates evaluated", result.evaluations.len());
    println!("{:>8} {:>6} {:>6}  sequence", "f_c", "f_r", "f_t");
    for m in &result.archive {
        println!("{:>8.2} {:>6.2} {:>6}  {}", m.objectives[0], m.objectives[1], m.objectives[2], m.sequence);
    }
}
