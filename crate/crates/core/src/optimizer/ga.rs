//! Elitist (μ+λ) genetic algorithm over module sequences.

use std::cmp::Ordering;
use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::ModuleSequence;
use crate::error::OptimizerError;
use crate::evaluation::{derive_seed, Evaluator, NOT_EVALUATED, SENTINEL};

use super::operators::{crossover, mutate, random_genome, tournament_select, MutationRates};
use super::pareto::{crowding_distances, dom, hypervolume, lex, nondomination_ranks};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    pub mutation: MutationRates,
    pub max_sequence_length: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 32,
            generations: 50,
            tournament_size: 3,
            crossover_rate: 0.7,
            mutation: MutationRates::default(),
            max_sequence_length: 12,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        let bad = |m: &str| Err(OptimizerError::Config(m.to_string()));
        if self.population_size < 2 {
            return bad("population_size must be at least 2");
        }
        if self.tournament_size == 0 {
            return bad("tournament_size must be positive");
        }
        if self.max_sequence_length < 2 {
            return bad("max_sequence_length must be at least 2");
        }
        let rates = [self.crossover_rate, self.mutation.insert, self.mutation.remove, self.mutation.replace];
        if rates.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("probabilities must lie in [0, 1]");
        }
        Ok(())
    }
}

/// A scored genome.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub sequence: ModuleSequence,
    pub constraints: [f64; 7],
    pub objectives: [f64; 3],
    pub plan_seed: u64,
}

impl Individual {
    pub fn is_feasible(&self) -> bool {
        self.constraints.iter().all(|c| *c == 0.0)
    }
}

/// One row of `evaluations.csv`.
#[derive(Debug, Clone)]
pub struct EvaluationRecord {
    pub generation: usize,
    pub individual: Individual,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    /// Distinct genomes evaluated so far.
    pub evaluations: usize,
    pub feasible: usize,
    /// Per-objective maximum over feasible population members, `−∞` if none.
    pub best: [f64; 3],
    pub archive_size: usize,
    pub hypervolume: f64,
    pub archive_objectives: Vec<[f64; 3]>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub archive: Vec<Individual>,
    pub population: Vec<Individual>,
    pub history: Vec<GenerationStats>,
    pub evaluations: Vec<EvaluationRecord>,
}

/// Fitness vectors `(c1…c7, −rank, crowding)` of a population.
pub fn fitness_vectors(pop: &[Individual]) -> Vec<Vec<f64>> {
    let objs: Vec<Vec<f64>> = pop.iter().map(|i| i.objectives.to_vec()).collect();
    let ranks = nondomination_ranks(&objs);
    let crowd = crowding_distances(&objs);
    pop.iter()
        .enumerate()
        .map(|(k, ind)| {
            let mut f = ind.constraints.to_vec();
            f.push(-(ranks[k] as f64));
            f.push(crowd[k]);
            f
        })
        .collect()
}

/// Adds the feasible members of `new` to a nondominated archive of distinct genomes.
pub fn update_archive(archive: &mut Vec<Individual>, new: &[Individual]) {
    for ind in new.iter().filter(|i| i.is_feasible()) {
        if archive.iter().any(|a| a.sequence == ind.sequence || dom(&a.objectives, &ind.objectives)) {
            continue;
        }
        archive.retain(|a| !dom(&ind.objectives, &a.objectives));
        archive.push(ind.clone());
    }
    archive.sort_by(|a, b| lex(&b.objectives, &a.objectives).then_with(|| a.sequence.cmp(&b.sequence)));
}

/// Lower corner for hypervolume: below every reachable objective vector.
pub fn reference_point(ev: &Evaluator<'_>, max_len: usize) -> [f64; 3] {
    let max_size = ev
        .catalog
        .modules()
        .map(crate::catalog::module_size)
        .fold(0.0, f64::max);
    let max_time = ev
        .catalog
        .modules()
        .map(|m| m.assembly_time)
        .fold(ev.config.module_time, f64::max);
    let current = ev.config.current_assembly.len();
    [
        -(max_len as f64) * max_size - 1.0,
        -1.0,
        -((max_len + current) as f64) * max_time - 1.0,
    ]
}

struct Engine<'e, 'a> {
    ev: &'e Evaluator<'a>,
    master: u64,
    pool: rayon::ThreadPool,
    cache: HashMap<ModuleSequence, Individual>,
    records: Vec<EvaluationRecord>,
}

impl Engine<'_, '_> {
    fn score(&mut self, genomes: &[ModuleSequence], generation: usize) -> Vec<Individual> {
        let mut fresh: Vec<ModuleSequence> = Vec::new();
        for g in genomes {
            if !self.cache.contains_key(g) && !fresh.contains(g) {
                fresh.push(g.clone());
            }
        }
        let (ev, master) = (self.ev, self.master);
        let done: Vec<(Individual, f64)> = self.pool.install(|| {
            fresh
                .par_iter()
                .map(|g| {
                    let seed = derive_seed(master, g);
                    match ev.evaluate(g, seed) {
                        Ok(e) => (
                            Individual {
                                sequence: e.sequence,
                                constraints: e.constraints,
                                objectives: e.objectives,
                                plan_seed: seed,
                            },
                            e.elapsed.as_secs_f64() * 1e3,
                        ),
                        Err(_) => {
                            let mut c = [NOT_EVALUATED; 7];
                            c[0] = -1.0;
                            (
                                Individual {
                                    sequence: g.clone(),
                                    constraints: c,
                                    objectives: SENTINEL,
                                    plan_seed: seed,
                                },
                                0.0,
                            )
                        }
                    }
                })
                .collect()
        });
        for (ind, ms) in done {
            self.records.push(EvaluationRecord {
                generation,
                individual: ind.clone(),
                elapsed_ms: ms,
            });
            self.cache.insert(ind.sequence.clone(), ind);
        }
        genomes.iter().map(|g| self.cache[g].clone()).collect()
    }
}

/// Runs the GA with `workers` evaluation threads. Results do not depend on `workers`.
pub fn run(ev: &Evaluator<'_>, cfg: &GaConfig, workers: usize) -> Result<RunResult, OptimizerError> {
    run_with(ev, cfg, workers, |_| {})
}

/// As [`run`], calling `observe` after every generation (generation 0 is the initial
/// population).
pub fn run_with(
    ev: &Evaluator<'_>,
    cfg: &GaConfig,
    workers: usize,
    mut observe: impl FnMut(&GenerationStats),
) -> Result<RunResult, OptimizerError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| OptimizerError::Config(e.to_string()))?;
    let mut engine = Engine {
        ev,
        master: cfg.seed,
        pool,
        cache: HashMap::new(),
        records: Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.population_size;
    let reference = reference_point(ev, cfg.max_sequence_length);

    let genomes: Vec<ModuleSequence> = (0..n).map(|_| random_genome(ev.catalog, cfg.max_sequence_length, &mut rng)).collect();
    let mut pop = engine.score(&genomes, 0);
    let mut fit = fitness_vectors(&pop);
    let mut archive = Vec::new();
    update_archive(&mut archive, &pop);
    let mut history = Vec::new();
    let s = stats(0, &pop, &archive, engine.cache.len(), &reference);
    observe(&s);
    history.push(s);

    for generation in 1..=cfg.generations {
        let mut children = Vec::with_capacity(n + 1);
        while children.len() < n {
            let a = &pop[tournament_select(&fit, cfg.tournament_size, &mut rng)].sequence;
            let b = &pop[tournament_select(&fit, cfg.tournament_size, &mut rng)].sequence;
            let (c1, c2) = if rng.gen_bool(cfg.crossover_rate) {
                crossover(a, b, cfg.max_sequence_length, &mut rng)
            } else {
                (a.clone(), b.clone())
            };
            children.push(mutate(&c1, ev.catalog, &cfg.mutation, cfg.max_sequence_length, &mut rng));
            children.push(mutate(&c2, ev.catalog, &cfg.mutation, cfg.max_sequence_length, &mut rng));
        }
        children.truncate(n);
        let offspring = engine.score(&children, generation);
        update_archive(&mut archive, &offspring);

        let mut union = pop;
        union.extend(offspring);
        pop = survivors(&union, n);
        fit = fitness_vectors(&pop);

        let s = stats(generation, &pop, &archive, engine.cache.len(), &reference);
        observe(&s);
        history.push(s);
    }
    Ok(RunResult {
        archive,
        population: pop,
        history,
        evaluations: engine.records,
    })
}

fn stats(generation: usize, pop: &[Individual], archive: &[Individual], evaluations: usize, reference: &[f64; 3]) -> GenerationStats {
    let mut best = [f64::NEG_INFINITY; 3];
    let mut feasible = 0;
    for ind in pop.iter().filter(|i| i.is_feasible()) {
        feasible += 1;
        for k in 0..3 {
            best[k] = best[k].max(ind.objectives[k]);
        }
    }
    let objs: Vec<Vec<f64>> = archive.iter().map(|a| a.objectives.to_vec()).collect();
    GenerationStats {
        generation,
        evaluations,
        feasible,
        best,
        archive_size: archive.len(),
        hypervolume: hypervolume(&objs, reference),
        archive_objectives: archive.iter().map(|a| a.objectives).collect(),
    }
}

/// The `n` best of `union` by fitness, ranking each genome once. Repeated genomes only
/// fill slots left over when there are fewer than `n` distinct ones.
pub fn survivors(union: &[Individual], n: usize) -> Vec<Individual> {
    let mut seen = std::collections::HashSet::new();
    let (distinct, repeats): (Vec<usize>, Vec<usize>) = (0..union.len()).partition(|&i| seen.insert(&union[i].sequence));
    let unique: Vec<Individual> = distinct.iter().map(|&i| union[i].clone()).collect();
    let mut out: Vec<Individual> = sort_by_fitness(&unique).into_iter().take(n).map(|i| unique[i].clone()).collect();
    out.extend(repeats.iter().take(n - out.len()).map(|&i| union[i].clone()));
    out
}

/// Sorts `pop` best first by lexicographic fitness; ties keep their original order.
pub fn sort_by_fitness(pop: &[Individual]) -> Vec<usize> {
    let fit = fitness_vectors(pop);
    let mut order: Vec<usize> = (0..pop.len()).collect();
    order.sort_by(|&i, &j| match lex(&fit[j], &fit[i]) {
        Ordering::Equal => i.cmp(&j),
        o => o,
    });
    order
}
