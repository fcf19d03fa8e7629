//! Genome variation and selection.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{assembly_valid, Catalog, ModuleSequence};

use super::pareto::lex;

/// Per-genome probabilities, each applied independently once per mutation call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutationRates {
    pub insert: f64,
    pub remove: f64,
    pub replace: f64,
}

impl Default for MutationRates {
    fn default() -> Self {
        let p = 0.4 / 3.0;
        Self {
            insert: p,
            remove: p,
            replace: p,
        }
    }
}

impl MutationRates {
    pub const ZERO: Self = Self {
        insert: 0.0,
        remove: 0.0,
        replace: 0.0,
    };
}

fn interior_ids(cat: &Catalog) -> Vec<String> {
    cat.ids_of_kind(|k| k.is_interior())
}

fn base_id(cat: &Catalog) -> String {
    cat.ids_of_kind(|k| k == crate::catalog::ModuleKind::Base)
        .into_iter()
        .next()
        .unwrap_or_else(|| "base".into())
}

fn eef_id(cat: &Catalog) -> String {
    cat.ids_of_kind(|k| k == crate::catalog::ModuleKind::EndEffector)
        .into_iter()
        .next()
        .unwrap_or_else(|| "eef".into())
}

/// Random assemblable genome: length uniform in `[min(4, max_len), max_len]`, interior
/// modules uniform over the catalog's joint and link types, redrawn until the catalog can
/// supply every module.
pub fn random_genome<R: Rng>(cat: &Catalog, max_len: usize, rng: &mut R) -> ModuleSequence {
    let interior = interior_ids(cat);
    let (base, eef) = (base_id(cat), eef_id(cat));
    let lo = 4.min(max_len).max(2);
    for _ in 0..100_000 {
        let len = rng.gen_range(lo..=max_len.max(lo));
        let mut ids = Vec::with_capacity(len);
        ids.push(base.clone());
        for _ in 0..len - 2 {
            match interior.choose(rng) {
                Some(id) => ids.push(id.clone()),
                None => break,
            }
        }
        ids.push(eef.clone());
        let seq = ModuleSequence(ids);
        if assembly_valid(&seq, cat).is_ok() {
            return seq;
        }
    }
    ModuleSequence(vec![base, eef])
}

/// Insert, remove and replace interior modules. Base and end effector stay in place and
/// the length never exceeds `max_len`; availability is not enforced.
pub fn mutate<R: Rng>(
    genome: &ModuleSequence,
    cat: &Catalog,
    rates: &MutationRates,
    max_len: usize,
    rng: &mut R,
) -> ModuleSequence {
    let interior = interior_ids(cat);
    let mut ids = genome.0.clone();
    if interior.is_empty() || ids.len() < 2 {
        return ModuleSequence(ids);
    }
    if rng.gen_bool(rates.insert.clamp(0.0, 1.0)) && ids.len() < max_len {
        let at = rng.gen_range(1..ids.len());
        ids.insert(at, interior.choose(rng).expect("nonempty").clone());
    }
    if rng.gen_bool(rates.remove.clamp(0.0, 1.0)) && ids.len() > 2 {
        let at = rng.gen_range(1..ids.len() - 1);
        ids.remove(at);
    }
    if rng.gen_bool(rates.replace.clamp(0.0, 1.0)) && ids.len() > 2 {
        let at = rng.gen_range(1..ids.len() - 1);
        ids[at] = interior.choose(rng).expect("nonempty").clone();
    }
    ModuleSequence(ids)
}

fn clip(mut ids: Vec<String>, max_len: usize) -> ModuleSequence {
    if ids.len() > max_len && max_len >= 2 {
        let last = ids.pop().expect("nonempty");
        ids.truncate(max_len - 1);
        ids.push(last);
    }
    ModuleSequence(ids)
}

/// Single-point crossover: each parent is cut at an interior position and the tails are
/// swapped.
pub fn crossover<R: Rng>(
    a: &ModuleSequence,
    b: &ModuleSequence,
    max_len: usize,
    rng: &mut R,
) -> (ModuleSequence, ModuleSequence) {
    if a.len() < 2 || b.len() < 2 {
        return (a.clone(), b.clone());
    }
    let i = rng.gen_range(1..a.len());
    let j = rng.gen_range(1..b.len());
    crossover_at(a, b, i, j, max_len)
}

/// Crossover with explicit cut positions; the tails start at `a[i]` and `b[j]`.
pub fn crossover_at(a: &ModuleSequence, b: &ModuleSequence, i: usize, j: usize, max_len: usize) -> (ModuleSequence, ModuleSequence) {
    let c1: Vec<String> = a.0[..i].iter().chain(&b.0[j..]).cloned().collect();
    let c2: Vec<String> = b.0[..j].iter().chain(&a.0[i..]).cloned().collect();
    (clip(c1, max_len), clip(c2, max_len))
}

/// Draws `k` members with replacement and returns the index of the lexicographically
/// largest fitness; ties among the drawn members are broken uniformly.
pub fn tournament_select<R: Rng>(fitness: &[Vec<f64>], k: usize, rng: &mut R) -> usize {
    assert!(!fitness.is_empty(), "tournament on an empty population");
    let drawn: Vec<usize> = (0..k.max(1)).map(|_| rng.gen_range(0..fitness.len())).collect();
    let mut best: Vec<usize> = vec![drawn[0]];
    for &i in &drawn[1..] {
        match lex(&fitness[i], &fitness[best[0]]) {
            std::cmp::Ordering::Greater => best = vec![i],
            std::cmp::Ordering::Equal => best.push(i),
            std::cmp::Ordering::Less => {}
        }
    }
    if best.len() == 1 {
        best[0]
    } else {
        best[rng.gen_range(0..best.len())]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{default_catalog, structure_valid};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mutation_examples() {
        let cat = default_catalog();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = ModuleSequence::parse("base;straight;elbow;L100;eef");
        assert_eq!(mutate(&g, &cat, &MutationRates::ZERO, 12, &mut rng), g);
        let min = ModuleSequence::parse("base;eef");
        let only_remove = MutationRates {
            insert: 0.0,
            remove: 1.0,
            replace: 1.0,
        };
        assert_eq!(mutate(&min, &cat, &only_remove, 12, &mut rng), min);
        for _ in 0..10_000 {
            let rates = MutationRates {
                insert: 0.5,
                remove: 0.5,
                replace: 0.5,
            };
            let m = mutate(&g, &cat, &rates, 6, &mut rng);
            assert_eq!(m.ids()[0], "base");
            assert_eq!(m.ids().last().unwrap(), "eef");
            assert!(m.len() <= 6);
            assert!(structure_valid(&m, &cat).is_ok());
        }
    }

    #[test]
    fn crossover_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = ModuleSequence::parse("base;straight;elbow;L100;eef");
        for _ in 0..20 {
            let (c1, c2) = crossover(&a, &a, 12, &mut rng);
            let _ = (&c1, &c2);
            // identical parents only reproduce themselves when the cuts coincide
        }
        for i in 1..a.len() {
            assert_eq!(crossover_at(&a, &a, i, i, 12), (a.clone(), a.clone()));
        }
        let b = ModuleSequence::parse("base;elbow;L500;elbow;eef");
        let (c1, c2) = crossover_at(&a, &b, 1, 1, 12);
        assert_eq!(c1, ModuleSequence::parse("base;elbow;L500;elbow;eef"));
        assert_eq!(c2, ModuleSequence::parse("base;straight;elbow;L100;eef"));
        let (c1, _) = crossover_at(&a, &b, 4, 1, 6);
        assert_eq!(c1, ModuleSequence::parse("base;straight;elbow;L100;elbow;eef"));
    }

    #[test]
    fn tournament_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let fit = vec![vec![1.0], vec![3.0], vec![2.0]];
        assert_eq!(tournament_select(&[vec![0.0]], 3, &mut rng), 0);
        // k ≫ n: the global best wins almost surely
        assert_eq!(tournament_select(&fit, 64, &mut rng), 1);
        let tied = vec![vec![1.0], vec![1.0]];
        let picks: Vec<usize> = (0..200).map(|_| tournament_select(&tied, 2, &mut rng)).collect();
        assert!(picks.contains(&0) && picks.contains(&1));
    }

    #[test]
    fn random_genomes_valid() {
        let cat = default_catalog();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let g = random_genome(&cat, 12, &mut rng);
            assert!(assembly_valid(&g, &cat).is_ok());
            assert!((4..=12).contains(&g.len()));
        }
    }

    proptest! {
        #[test]
        fn crossover_children_bounded(seed in any::<u64>(), max_len in 4usize..=12) {
            let cat = default_catalog();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_genome(&cat, max_len, &mut rng);
            let b = random_genome(&cat, max_len, &mut rng);
            let (c1, c2) = crossover(&a, &b, max_len, &mut rng);
            for c in [c1, c2] {
                prop_assert!(c.len() <= max_len);
                prop_assert!(structure_valid(&c, &cat).is_ok());
            }
        }
    }
}
