//! Lexicographic order, Pareto dominance, nondominated sorting, crowding distance and
//! dominated hypervolume. Every objective is maximized.

use std::cmp::Ordering;

use crate::error::OptimizerError;

fn same_len(a: &[f64], b: &[f64]) -> Result<(), OptimizerError> {
    if a.len() == b.len() {
        Ok(())
    } else {
        Err(OptimizerError::LengthMismatch(a.len(), b.len()))
    }
}

/// Left-to-right comparison; `−0.0` and `0.0` compare equal.
pub fn lexicographic_compare(a: &[f64], b: &[f64]) -> Result<Ordering, OptimizerError> {
    same_len(a, b)?;
    Ok(lex(a, b))
}

pub(crate) fn lex(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return Ordering::Greater;
        }
        if x < y {
            return Ordering::Less;
        }
    }
    Ordering::Equal
}

pub fn dominates(f: &[f64], g: &[f64]) -> Result<bool, OptimizerError> {
    same_len(f, g)?;
    Ok(dom(f, g))
}

pub(crate) fn dom(f: &[f64], g: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in f.iter().zip(g) {
        if x < y {
            return false;
        }
        if x > y {
            strict = true;
        }
    }
    strict
}

/// The all-`−∞` objective vector of an infeasible individual.
pub fn is_sentinel(v: &[f64]) -> bool {
    !v.is_empty() && v.iter().all(|x| *x == f64::NEG_INFINITY)
}

/// Fronts of the non-sentinel members, best first (fast nondominated sort).
pub fn nondominated_fronts(points: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let live: Vec<usize> = (0..points.len()).filter(|&i| !is_sentinel(&points[i])).collect();
    let mut dominated_by = vec![0usize; points.len()];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); points.len()];
    for (a, &i) in live.iter().enumerate() {
        for &j in &live[a + 1..] {
            if dom(&points[i], &points[j]) {
                dominates_list[i].push(j);
                dominated_by[j] += 1;
            } else if dom(&points[j], &points[i]) {
                dominates_list[j].push(i);
                dominated_by[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = live.iter().copied().filter(|&i| dominated_by[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Nondomination rank of every member; sentinels get the number of fronts.
pub fn nondomination_ranks(points: &[Vec<f64>]) -> Vec<usize> {
    let fronts = nondominated_fronts(points);
    let mut ranks = vec![fronts.len(); points.len()];
    for (r, f) in fronts.iter().enumerate() {
        for &i in f {
            ranks[i] = r;
        }
    }
    ranks
}

/// Rank of `x` within `set`, which must contain it.
pub fn nondomination_rank(x: &[f64], set: &[Vec<f64>]) -> Option<usize> {
    let i = set.iter().position(|p| p.as_slice() == x)?;
    Some(nondomination_ranks(set)[i])
}

/// Crowding distance of every member within its front; sentinels get 0.
pub fn crowding_distances(points: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; points.len()];
    for front in nondominated_fronts(points) {
        for (i, d) in front_crowding(points, &front) {
            out[i] = d;
        }
    }
    out
}

/// Members sharing the extreme value of an objective are all boundary members; interior
/// members are measured between the nearest distinct values on either side, so the result
/// does not depend on input order. An objective with zero range contributes nothing, and
/// fronts of at most two members are all boundary.
fn front_crowding(points: &[Vec<f64>], front: &[usize]) -> Vec<(usize, f64)> {
    if front.len() <= 2 {
        return front.iter().map(|&i| (i, f64::INFINITY)).collect();
    }
    let mut dist: Vec<f64> = vec![0.0; front.len()];
    let m = points[front[0]].len();
    for k in 0..m {
        let mut vals: Vec<f64> = front.iter().map(|&i| points[i][k]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        let (lo, hi) = (vals[0], vals[vals.len() - 1]);
        let range = hi - lo;
        if range == 0.0 {
            continue;
        }
        for (w, &i) in front.iter().enumerate() {
            let v = points[i][k];
            if v == lo || v == hi {
                dist[w] = f64::INFINITY;
            } else if range.is_finite() && range > 0.0 {
                let at = vals.partition_point(|x| *x < v);
                dist[w] += (vals[at + 1] - vals[at - 1]) / range;
            }
        }
    }
    front.iter().copied().zip(dist).collect()
}

/// Crowding distance of `x` within `set`.
pub fn crowding_distance(x: &[f64], set: &[Vec<f64>]) -> Option<f64> {
    let i = set.iter().position(|p| p.as_slice() == x)?;
    Some(crowding_distances(set)[i])
}

/// Volume dominated by `points` and bounded below by `reference`.
pub fn hypervolume(points: &[Vec<f64>], reference: &[f64]) -> f64 {
    let clipped: Vec<Vec<f64>> = points
        .iter()
        .filter(|p| p.iter().zip(reference).all(|(x, r)| x > r))
        .cloned()
        .collect();
    hv(clipped, reference)
}

/// Slicing along the last objective.
fn hv(mut pts: Vec<Vec<f64>>, r: &[f64]) -> f64 {
    let d = r.len();
    if pts.is_empty() {
        return 0.0;
    }
    if d == 1 {
        return pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max) - r[0];
    }
    pts.sort_by(|a, b| b[d - 1].total_cmp(&a[d - 1]));
    let mut vol = 0.0;
    for i in 0..pts.len() {
        let top = pts[i][d - 1];
        let bottom = if i + 1 < pts.len() { pts[i + 1][d - 1] } else { r[d - 1] };
        if top > bottom {
            let slice: Vec<Vec<f64>> = pts[..=i].iter().map(|p| p[..d - 1].to_vec()).collect();
            vol += hv(slice, &r[..d - 1]) * (top - bottom);
        }
    }
    vol
}
