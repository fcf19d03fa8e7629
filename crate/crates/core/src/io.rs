//! Result files and run configuration.
//!
//! `archive.csv` holds one row per archive member with the module sequence joined by `;`.
//! Floats are written in Rust's shortest round-trip form, so re-reading a row reproduces
//! the exact values; unevaluated constraints and infeasible objectives appear as `-inf`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::catalog::ModuleSequence;
use crate::error::ParseError;
use crate::evaluation::{EvaluationConfig, CONSTRAINT_NAMES, OBJECTIVE_NAMES};
use crate::optimizer::ga::{EvaluationRecord, GenerationStats, Individual};
use crate::optimizer::pareto::dom;
use crate::optimizer::GaConfig;
use crate::planner::PlannerConfig;

/// Everything that influences the result of a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub ga: GaConfig,
    pub evaluation: EvaluationConfig,
    pub planner: PlannerConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, ParseError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ParseError::syntax(origin, e))?;
        cfg.ga.validate().map_err(|e| ParseError::field(origin, "ga", e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ParseError> {
        Self::from_toml_str(&read(path)?, &path.display().to_string())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Provenance recorded next to the configuration in `manifest.txt`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunInfo {
    pub tool_version: String,
    /// Empty for the bundled task.
    pub task_path: String,
    pub task_sha256: String,
    /// Empty for the bundled catalog.
    pub catalog_path: String,
    pub catalog_sha256: String,
    pub seed: u64,
    pub workers: usize,
    pub started_unix_s: u64,
    pub wall_clock_s: f64,
    pub host: String,
}

/// `manifest.txt`: a `[run]` table followed by the `RunConfig` tables. Passing it back as
/// `--config` replays the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub run: RunInfo,
    #[serde(flatten)]
    pub config: RunConfig,
}

impl Manifest {
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, ParseError> {
        toml::from_str(text).map_err(|e| ParseError::syntax(origin, e))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn host_info() -> String {
    let name = std::fs::read_to_string("/etc/hostname")
        .map(|s| s.trim().to_string())
        .ok()
        .filter(|s| !s.is_empty())
        .or_else(|| std::env::var("HOSTNAME").ok())
        .unwrap_or_else(|| "unknown".into());
    format!("{name} ({}-{})", std::env::consts::OS, std::env::consts::ARCH)
}

pub(crate) fn read(path: &Path) -> Result<String, ParseError> {
    std::fs::read_to_string(path).map_err(|source| ParseError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// One parsed `archive.csv` row.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveRow {
    pub sequence: ModuleSequence,
    pub constraints: [f64; 7],
    pub objectives: [f64; 3],
    pub normalized_compactness: f64,
    pub plan_seed: u64,
}

/// Min–max normalization of `f_c`: 0 for the largest robot, 1 for the most compact. A set
/// without spread maps to 1.
pub fn normalized_compactness(f_c: &[f64]) -> Vec<f64> {
    let lo = f_c.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = f_c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    f_c.iter()
        .map(|v| if hi > lo && (hi - lo).is_finite() { (v - lo) / (hi - lo) } else { 1.0 })
        .collect()
}

pub fn archive_header() -> String {
    let mut cols = vec!["sequence".to_string()];
    cols.extend(CONSTRAINT_NAMES.iter().map(|s| s.to_string()));
    cols.extend(OBJECTIVE_NAMES.iter().map(|s| s.to_string()));
    cols.push("normalized_compactness".into());
    cols.push("plan_seed".into());
    cols.join(",")
}

pub fn write_archive(members: &[Individual]) -> String {
    let norm = normalized_compactness(&members.iter().map(|m| m.objectives[0]).collect::<Vec<_>>());
    let mut out = archive_header();
    out.push('\n');
    for (m, n) in members.iter().zip(norm) {
        out.push_str(&m.sequence.to_string());
        for v in m.constraints.iter().chain(&m.objectives) {
            let _ = write!(out, ",{v}");
        }
        let _ = writeln!(out, ",{n},{}", m.plan_seed);
    }
    out
}

pub fn read_archive(text: &str, origin: &str) -> Result<Vec<ArchiveRow>, ParseError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == archive_header() => {}
        Some((i, _)) => return Err(ParseError::field(origin, format!("line {}", i + 1), "unexpected header")),
        None => return Err(ParseError::field(origin, "line 1", "missing header")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let at = format!("line {}", i + 1);
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 13 {
            return Err(ParseError::field(origin, at, format!("expected 13 columns, found {}", cells.len())));
        }
        let num = |k: usize| -> Result<f64, ParseError> {
            cells[k]
                .parse::<f64>()
                .map_err(|e| ParseError::field(origin, format!("{at}, column {}", k + 1), e.to_string()))
        };
        let mut constraints = [0.0; 7];
        for (k, c) in constraints.iter_mut().enumerate() {
            *c = num(1 + k)?;
        }
        let objectives = [num(8)?, num(9)?, num(10)?];
        let normalized = num(11)?;
        let plan_seed = cells[12]
            .parse::<u64>()
            .map_err(|e| ParseError::field(origin, format!("{at}, column 13"), e.to_string()))?;
        rows.push(ArchiveRow {
            sequence: ModuleSequence::parse(cells[0]),
            constraints,
            objectives,
            normalized_compactness: normalized,
            plan_seed,
        });
    }
    Ok(rows)
}

pub fn write_stats(history: &[GenerationStats]) -> String {
    let mut out = String::from("generation,evaluations,feasible,best_f_c,best_f_r,best_f_t,archive_size,hypervolume\n");
    for s in history {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.generation, s.evaluations, s.feasible, s.best[0], s.best[1], s.best[2], s.archive_size, s.hypervolume
        );
    }
    out
}

/// One human-readable line per generation.
pub fn stats_line(s: &GenerationStats) -> String {
    format!(
        "gen {:>3}  feasible {:>3}  best f_c {}  f_r {}  f_t {}  archive {}",
        s.generation, s.feasible, s.best[0], s.best[1], s.best[2], s.archive_size
    )
}

pub fn write_evaluations(records: &[EvaluationRecord]) -> String {
    let mut out = String::from("generation,sequence");
    for n in CONSTRAINT_NAMES.iter().chain(&OBJECTIVE_NAMES) {
        out.push(',');
        out.push_str(n);
    }
    out.push_str(",plan_seed,elapsed_ms\n");
    for r in records {
        let m = &r.individual;
        let _ = write!(out, "{},{}", r.generation, m.sequence);
        for v in m.constraints.iter().chain(&m.objectives) {
            let _ = write!(out, ",{v}");
        }
        let _ = writeln!(out, ",{},{:.3}", m.plan_seed, r.elapsed_ms);
    }
    out
}

/// Plot-ready view of an archive with its dominance violations.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoReport {
    /// `(normalized compactness, robustness, reconfiguration time)` per row.
    pub points: Vec<(f64, f64, f64)>,
    /// `(i, j)`: row `j` dominates row `i`.
    pub violations: Vec<(usize, usize)>,
}

pub fn pareto_report(rows: &[ArchiveRow]) -> ParetoReport {
    let norm = normalized_compactness(&rows.iter().map(|r| r.objectives[0]).collect::<Vec<_>>());
    let points = rows.iter().zip(norm).map(|(r, n)| (n, r.objectives[1], r.objectives[2])).collect();
    let mut violations = Vec::new();
    for (i, a) in rows.iter().enumerate() {
        for (j, b) in rows.iter().enumerate() {
            if i != j && dom(&b.objectives, &a.objectives) {
                violations.push((i, j));
            }
        }
    }
    ParetoReport { points, violations }
}

impl ParetoReport {
    pub fn render(&self, rows: &[ArchiveRow]) -> String {
        let mut out = String::from("# normalized_compactness robustness sequence\n");
        for (p, r) in self.points.iter().zip(rows) {
            let _ = writeln!(out, "{} {} {}", p.0, p.1, r.sequence);
        }
        out.push_str("\n# robustness reconfiguration_time_s sequence\n");
        for (p, r) in self.points.iter().zip(rows) {
            let _ = writeln!(out, "{} {} {}", p.1, -p.2, r.sequence);
        }
        if !self.violations.is_empty() {
            out.push('\n');
            for (i, j) in &self.violations {
                let _ = writeln!(out, "violation: row {} ({}) is dominated by row {} ({})", i + 1, rows[*i].sequence, j + 1, rows[*j].sequence);
            }
        }
        out
    }
}
