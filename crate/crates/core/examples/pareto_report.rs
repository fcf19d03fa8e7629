//! Write an archive as CSV, read it back and print the plot columns.

use morphsynth::catalog::default_catalog;
use morphsynth::evaluation::Evaluator;
use morphsynth::io::{pareto_report, read_archive, write_archive};
use morphsynth::optimizer::{run, GaConfig};
use morphsynth::world::Task;

fn main() {
    let cat = default_catalog();
    let task = Task::drill_two_holes();
    let ev = Evaluator::new(&task, &cat);
    let result = run(&ev, &GaConfig { generations: 15, seed: 3, ..GaConfig::default() }, 1).unwrap();

    let csv = write_archive(&result.archive);
    print!("{csv}");
    let rows = read_archive(&csv, "archive.csv").unwrap();
    let report = pareto_report(&rows);
    println!();
    print!("{}", report.render(&rows));
    println!("{} violation(s)", report.violations.len());
}
