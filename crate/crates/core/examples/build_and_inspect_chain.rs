//! Assemble a chain from catalog modules and look at its kinematics and statics.
//!
//! `cargo run --example build_and_inspect_chain -- "base;straight;elbow;L100;straight;elbow;elbow;eef"`

use morphsynth::catalog::{default_catalog, ModuleSequence};
use morphsynth::kinematics::{build_chain, BasePose, Wrench};

fn main() {
    let text = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "base;straight;elbow;L100;straight;elbow;straight;elbow;eef".into());
    let cat = default_catalog();
    let seq = ModuleSequence::parse(&text);
    let chain = match build_chain(&seq, &cat) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(4);
        }
    };
    println!("{seq}");
    println!("{} modules, {:.2} m total size, {} dof", seq.len(), cat.total_size(&seq), chain.dof());
    for (i, j) in chain.joints().iter().enumerate() {
        println!("  q{i}: axis {:?}  limits [{:.2}, {:.2}] rad  torque {} N m", j.axis.as_slice(), j.limits.0, j.limits.1, j.torque_limit);
    }

    let base = BasePose::default();
    let q = chain.home();
    let tcp = chain.forward_kinematics(&base, &q).unwrap();
    println!("home TCP at {:.3?}", tcp.translation.as_slice());
    let tau = chain.static_torques(&base, &q, &Wrench::zero()).unwrap();
    println!("gravity torques at home {:.2?}", tau);

    let bent: Vec<f64> = q.iter().enumerate().map(|(i, v)| v + if i % 2 == 1 { 0.6 } else { 0.0 }).collect();
    let tau = chain.static_torques(&base, &bent, &Wrench::zero()).unwrap();
    println!("gravity torques bent  {:.2?}", tau);
    let j = chain.jacobian(&base, &bent).unwrap();
    println!("jacobian rank {}", j.rank(1e-9));
}
