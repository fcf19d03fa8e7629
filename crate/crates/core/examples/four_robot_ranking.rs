//! Lexicographic order, dominance, ranks and crowding on four hand-made robots.

use morphsynth::optimizer::{crowding_distances, dominates, lexicographic_compare, nondomination_ranks};

fn main() {
    let names = ["r1", "r2", "r3", "r4"];
    // (f_fast, f_cheap, f_robust)
    let r = vec![vec![1.0, 2.0, 3.0], vec![2.0, 1.0, 2.0], vec![2.0, 3.0, 2.0], vec![3.0, 1.0, 2.0]];

    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| lexicographic_compare(&r[b], &r[a]).unwrap());
    println!("fast, cheap, robust: {:?}", order.iter().map(|&i| names[i]).collect::<Vec<_>>());

    let robust_first: Vec<Vec<f64>> = r.iter().map(|v| vec![v[2], v[0], v[1]]).collect();
    order.sort_by(|&a, &b| lexicographic_compare(&robust_first[b], &robust_first[a]).unwrap());
    println!("robust, fast, cheap: {:?}", order.iter().map(|&i| names[i]).collect::<Vec<_>>());

    for (i, a) in r.iter().enumerate() {
        for (j, b) in r.iter().enumerate() {
            if dominates(a, b).unwrap() {
                println!("{} dominates {}", names[i], names[j]);
            }
        }
    }
    println!("ranks {:?}", nondomination_ranks(&r));
    println!("crowding {:?}", crowding_distances(&r));
}
