//! Drilling tolerances: a tight box across the hole, free spin about the drill axis.

use morphsynth::geometry::{
    axis_tolerance_met, euclidean_tolerance_met, pose_error, rot_x, rot_z, scalar_distance, DistanceWeights, Pose,
    ToleranceSpec,
};

fn main() {
    let tol = ToleranceSpec::drilling();
    let goal = Pose::from_translation(1.0, 0.1, 1.6);
    let cases = [
        ("exact", Pose::identity()),
        ("0.3 mm sideways", Pose::from_translation(0.3e-3, 0.0, 0.0)),
        ("9 mm deeper", Pose::from_translation(0.0, 0.0, 9e-3)),
        ("spun 90 deg about the bit", Pose::from_rotation(rot_z(90f64.to_radians()))),
        ("tilted 1 deg", Pose::from_rotation(rot_x(1f64.to_radians()))),
        ("tilted 5 deg", Pose::from_rotation(rot_x(5f64.to_radians()))),
    ];
    for (name, offset) in cases {
        let actual = goal.compose(&offset);
        let e = pose_error(&goal, &actual);
        println!(
            "{name:>26}: box {:5}  axis {:5}  d = {:.5}",
            euclidean_tolerance_met(&e, &tol),
            axis_tolerance_met(&e, &tol),
            scalar_distance(&e, &DistanceWeights::default())
        );
    }
}
