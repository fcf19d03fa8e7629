//! The `morphsynth` command line: `optimize`, `evaluate` and `pareto-report`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::catalog::{Catalog, ModuleSequence, DEFAULT_CATALOG_TOML};
use crate::error::ParseError;
use crate::evaluation::{derive_seed, report, Evaluator, CONSTRAINT_NAMES, OBJECTIVE_NAMES};
use crate::io::{self, Manifest, RunConfig, RunInfo};
use crate::kinematics::build_chain_unchecked;
use crate::optimizer::run_with;
use crate::world::{Task, DRILL_TWO_HOLES_TOML};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_NO_FEASIBLE: i32 = 3;
pub const EXIT_INVALID_ASSEMBLY: i32 = 4;
pub const EXIT_DOMINANCE: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "morphsynth", version, about = "Pareto-optimal module compositions for modular robot arms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the genetic search and write the Pareto archive.
    Optimize(OptimizeArgs),
    /// Evaluate one module sequence in detail.
    Evaluate(EvaluateArgs),
    /// Check an archive for dominance and print plot-ready columns.
    ParetoReport(ReportArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Inputs {
    /// Task file; the bundled two-hole drilling task when omitted.
    #[arg(long)]
    pub task: Option<PathBuf>,
    /// Module catalog; the bundled catalog when omitted.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Configuration with [ga], [evaluation] and [planner] tables, or a manifest to replay.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "results")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Suppress the per-generation progress lines.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    /// Module ids separated by `;` or `,`, base first.
    #[arg(long)]
    pub sequence: String,
    /// Master seed; the planner seed is derived from it and the sequence.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Planner seed used directly, e.g. the `plan_seed` column of an archive.
    #[arg(long)]
    pub plan_seed: Option<u64>,
    /// Also write trajectory.txt here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub archive: PathBuf,
}

/// Parsed inputs plus what the manifest needs to know about them.
pub struct Loaded {
    pub task: Task,
    pub task_path: String,
    pub task_sha256: String,
    pub catalog: Catalog,
    pub catalog_path: String,
    pub catalog_sha256: String,
    pub config: RunConfig,
}

#[derive(Deserialize)]
struct ReplayHeader {
    run: Option<RunInfo>,
}

pub fn load_inputs(inputs: &Inputs) -> Result<Loaded, ParseError> {
    let mut config = RunConfig::default();
    let mut task_path = inputs.task.clone();
    let mut catalog_path = inputs.catalog.clone();
    if let Some(p) = &inputs.config {
        let text = io::read(p)?;
        let origin = p.display().to_string();
        config = RunConfig::from_toml_str(&text, &origin)?;
        let header: ReplayHeader = toml::from_str(&text).map_err(|e| ParseError::syntax(&origin, e))?;
        if let Some(run) = header.run {
            if task_path.is_none() && !run.task_path.is_empty() {
                task_path = Some(run.task_path.into());
            }
            if catalog_path.is_none() && !run.catalog_path.is_empty() {
                catalog_path = Some(run.catalog_path.into());
            }
        }
    }
    let (task, task_text, task_path) = match &task_path {
        Some(p) => {
            let text = io::read(p)?;
            (Task::from_toml_str(&text, &p.display().to_string())?, text, p.display().to_string())
        }
        None => (Task::drill_two_holes(), DRILL_TWO_HOLES_TOML.to_string(), String::new()),
    };
    let (catalog, catalog_text, catalog_path) = match &catalog_path {
        Some(p) => {
            let text = io::read(p)?;
            (Catalog::from_toml_str(&text, &p.display().to_string())?, text, p.display().to_string())
        }
        None => (crate::catalog::default_catalog(), DEFAULT_CATALOG_TOML.to_string(), String::new()),
    };
    Ok(Loaded {
        task,
        task_sha256: io::sha256_hex(task_text.as_bytes()),
        task_path,
        catalog,
        catalog_sha256: io::sha256_hex(catalog_text.as_bytes()),
        catalog_path,
        config,
    })
}

fn write_file(dir: &Path, name: &str, text: &str, err: &mut dyn Write) -> bool {
    match std::fs::write(dir.join(name), text) {
        Ok(()) => true,
        Err(e) => {
            let _ = writeln!(err, "error: cannot write {}: {e}", dir.join(name).display());
            false
        }
    }
}

pub fn cmd_optimize(args: &OptimizeArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let started = Instant::now();
    let mut loaded = match load_inputs(&args.inputs) {
        Ok(l) => l,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_PARSE;
        }
    };
    let cfg = &mut loaded.config;
    if let Some(s) = args.seed {
        cfg.ga.seed = s;
    }
    if let Some(g) = args.generations {
        cfg.ga.generations = g;
    }
    if let Some(p) = args.population {
        cfg.ga.population_size = p;
    }
    if let Err(e) = cfg.ga.validate() {
        let _ = writeln!(err, "error: {e}");
        return EXIT_PARSE;
    }
    let mut ev = Evaluator::new(&loaded.task, &loaded.catalog);
    ev.planner = cfg.planner;
    ev.config = cfg.evaluation.clone();
    let quiet = args.quiet;
    let result = run_with(&ev, &cfg.ga, args.workers, |s| {
        if !quiet {
            let _ = writeln!(err, "{}", io::stats_line(s));
        }
    });
    let result = match result {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_PARSE;
        }
    };
    if let Err(e) = std::fs::create_dir_all(&args.out_dir) {
        let _ = writeln!(err, "error: cannot create {}: {e}", args.out_dir.display());
        return EXIT_IO;
    }
    let dir = &args.out_dir;
    let started_unix_s = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
        .saturating_sub(started.elapsed().as_secs());
    let manifest = Manifest {
        run: RunInfo {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            task_path: loaded.task_path.clone(),
            task_sha256: loaded.task_sha256.clone(),
            catalog_path: loaded.catalog_path.clone(),
            catalog_sha256: loaded.catalog_sha256.clone(),
            seed: cfg.ga.seed,
            workers: args.workers,
            started_unix_s,
            wall_clock_s: started.elapsed().as_secs_f64(),
            host: io::host_info(),
        },
        config: cfg.clone(),
    };
    let mut ok = write_file(dir, "archive.csv", &io::write_archive(&result.archive), err)
        && write_file(dir, "stats.csv", &io::write_stats(&result.history), err)
        && write_file(dir, "evaluations.csv", &io::write_evaluations(&result.evaluations), err)
        && write_file(dir, "manifest.txt", &manifest.to_toml_string(), err);
    // trajectory of the most robust archive member
    let best = result
        .archive
        .iter()
        .fold(None, |acc: Option<&crate::optimizer::Individual>, m| match acc {
            Some(a) if a.objectives[1] >= m.objectives[1] => Some(a),
            _ => Some(m),
        });
    if let Some(m) = best {
        if let Ok(rep) = report(&ev, &m.sequence, m.plan_seed) {
            if let Some(t) = rep.trajectory_text {
                let text = format!("# sequence {}\n{t}", m.sequence);
                ok &= write_file(dir, "trajectory.txt", &text, err);
            }
        }
    }
    if !ok {
        return EXIT_IO;
    }
    let _ = writeln!(
        out,
        "{} archive member(s), {} evaluations, {:.1} s; results in {}",
        result.archive.len(),
        result.evaluations.len(),
        started.elapsed().as_secs_f64(),
        dir.display()
    );
    for m in &result.archive {
        let _ = writeln!(out, "  {}  f_c {}  f_r {}  f_t {}", m.sequence, m.objectives[0], m.objectives[1], m.objectives[2]);
    }
    if result.archive.is_empty() {
        let _ = writeln!(err, "no feasible solution found");
        return EXIT_NO_FEASIBLE;
    }
    EXIT_OK
}

pub fn parse_sequence(s: &str) -> ModuleSequence {
    ModuleSequence::new(s.split([';', ',']).map(str::trim).filter(|t| !t.is_empty()))
}

pub fn cmd_evaluate(args: &EvaluateArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let loaded = match load_inputs(&args.inputs) {
        Ok(l) => l,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_PARSE;
        }
    };
    let seq = parse_sequence(&args.sequence);
    let master = args.seed.unwrap_or(loaded.config.ga.seed);
    let plan_seed = args.plan_seed.unwrap_or_else(|| derive_seed(master, &seq));
    let mut ev = Evaluator::new(&loaded.task, &loaded.catalog);
    ev.planner = loaded.config.planner;
    ev.config = loaded.config.evaluation.clone();
    let rep = match report(&ev, &seq, plan_seed) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INVALID_ASSEMBLY;
        }
    };
    let e = &rep.evaluation;
    let mut text = format!("sequence {seq}\ndof {}\n", build_chain_unchecked(&seq, &loaded.catalog).dof());
    for (n, v) in CONSTRAINT_NAMES.iter().zip(&e.constraints) {
        text.push_str(&format!("{n} {v}\n"));
    }
    for (n, v) in OBJECTIVE_NAMES.iter().zip(&e.objectives) {
        text.push_str(&format!("{n} {v}\n"));
    }
    text.push_str(&format!("feasible {}\n", e.is_feasible()));
    text.push_str(&format!("robustness_delta {}\n", e.robustness().unwrap_or(0.0)));
    text.push_str(&format!("max_joint_adjustment_rad {}\n", rep.max_adjustment));
    text.push_str(&format!("plan_seed {plan_seed}\n"));
    text.push_str(&format!("elapsed_ms {:.3}\n", e.elapsed.as_secs_f64() * 1e3));
    if let Some(t) = &rep.trajectory_text {
        text.push_str("\n# trajectory\n");
        text.push_str(t);
        if let Some(dir) = &args.out_dir {
            if std::fs::create_dir_all(dir).is_err() || !write_file(dir, "trajectory.txt", t, err) {
                return EXIT_IO;
            }
        }
    }
    let _ = out.write_all(text.as_bytes());
    EXIT_OK
}

pub fn cmd_pareto_report(args: &ReportArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let rows = match io::read(&args.archive).and_then(|t| io::read_archive(&t, &args.archive.display().to_string())) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_PARSE;
        }
    };
    let rep = io::pareto_report(&rows);
    let _ = out.write_all(rep.render(&rows).as_bytes());
    if rep.violations.is_empty() {
        EXIT_OK
    } else {
        let _ = writeln!(err, "{} dominance violation(s)", rep.violations.len());
        EXIT_DOMINANCE
    }
}

pub fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match &cli.command {
        Command::Optimize(a) => cmd_optimize(a, out, err),
        Command::Evaluate(a) => cmd_evaluate(a, out, err),
        Command::ParetoReport(a) => cmd_pareto_report(a, out, err),
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => dispatch(&cli, out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let _ = write!(err, "{e}");
            code
        }
    }
}

pub fn main() -> i32 {
    run_args(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr())
}
