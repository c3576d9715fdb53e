//! Extension controls: reachability-guided steering and random controls.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::Rng;

use super::{PlannerConfig, PlannerRng};
use crate::kinematics::{wrap_angle, ArcSegment, Pose};

/// Arc from `pose` that heads for `sample`.
///
/// The roll turns the bending plane toward the sample. If the sample is
/// reachable with curvature at most `kappa_max`, the segment uses the unique
/// circle through it tangent to the current heading, and its length is the
/// arc to the sample; otherwise it bends as hard as allowed. The length is
/// always clamped to the configured range. `None` only when `sample`
/// coincides with the pose.
pub fn steer_toward(pose: &Pose, sample: &Vector3<f64>, config: &PlannerConfig) -> Option<ArcSegment> {
    let local = pose.to_local(sample);
    let dist2 = local.norm_squared();
    if dist2 == 0.0 || !dist2.is_finite() {
        return None;
    }
    let perp = local.x.hypot(local.y);
    let along = local.z;
    // rounding in the frame can leave a sub-ulp lateral offset on samples
    // dead ahead; treat those as straight
    let (roll, kappa, length) = if perp <= 1e-12 * dist2.sqrt() {
        if along > 0.0 {
            (0.0, 0.0, along)
        } else {
            // directly behind: turn around as fast as possible
            (0.0, config.kappa_max, config.arc_length_max)
        }
    } else {
        let roll = local.y.atan2(local.x);
        let kappa_req = 2.0 * perp / dist2;
        if kappa_req > config.kappa_max {
            (roll, config.kappa_max, config.arc_length_max)
        } else {
            let sweep = 2.0 * perp.atan2(along);
            (roll, kappa_req, sweep / kappa_req)
        }
    };
    let length = length.clamp(config.arc_length_min, config.arc_length_max);
    ArcSegment::new(wrap_angle(roll), kappa, length).ok()
}

/// Whether some arc from `pose` with curvature at most `kappa_max` passes
/// through `sample`. Points straight ahead count; points straight behind do
/// not.
pub fn reachable(pose: &Pose, sample: &Vector3<f64>, kappa_max: f64) -> bool {
    let local = pose.to_local(sample);
    let dist2 = local.norm_squared();
    let perp = local.x.hypot(local.y);
    if perp <= 1e-12 * dist2.sqrt() {
        return local.z > 0.0;
    }
    2.0 * perp <= kappa_max * dist2
}

/// Uniform random control: roll in `[-pi, pi)`, curvature in
/// `[0, kappa_max]`, length in `[arc_length_min, arc_length_max]`.
pub fn random_control(config: &PlannerConfig, rng: &mut PlannerRng) -> ArcSegment {
    let roll = wrap_angle(rng.random_range(-PI..PI));
    let kappa = rng.random_range(0.0..=config.kappa_max);
    let length = rng.random_range(config.arc_length_min..=config.arc_length_max);
    ArcSegment::new(roll, kappa, length).expect("configured ranges produce valid segments")
}
