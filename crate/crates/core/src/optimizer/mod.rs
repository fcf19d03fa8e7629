//! Mixed Pareto-lexicographic search: constraints first, then nondomination rank, then
//! crowding distance.

pub mod ga;
pub mod operators;
pub mod pareto;

pub use ga::{run, run_with, GaConfig, GenerationStats, Individual, RunResult};
pub use operators::{crossover, mutate, random_genome, tournament_select, MutationRates};
pub use pareto::{
    crowding_distance, crowding_distances, dominates, hypervolume, lexicographic_compare, nondominated_fronts,
    nondomination_rank, nondomination_ranks,
};
