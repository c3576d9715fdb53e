//! Constant-curvature needle paths in 3D.
//!
//! Frame convention: the needle tangent is the local +z axis. An arc first
//! rolls the frame by `roll` about +z, then bends toward the (rolled) local +x
//! axis, i.e. rotates by `curvature * length` about the local +y axis.

use std::f64::consts::PI;

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shortest segment accepted by [`ArcSegment::new`], in meters.
pub const MIN_SEGMENT_LENGTH: f64 = 1e-9;

/// Samples closer than this to a segment boundary are merged into it.
const SAMPLE_MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn new(position: Vector3<f64>, orientation: UnitQuaternion<f64>) -> Self {
        Self {
            position,
            orientation,
        }
    }

    /// Validated pose from raw arrays; the quaternion is `(w, x, y, z)` and
    /// is normalized.
    pub fn from_components(position: [f64; 3], orientation: [f64; 4]) -> Result<Self> {
        PoseDoc { position, orientation }.to_pose("pose")
    }

    pub fn identity() -> Self {
        Self::new(Vector3::zeros(), UnitQuaternion::identity())
    }

    /// Pose at `position` whose tangent points along `direction`.
    pub fn looking_along(position: Vector3<f64>, direction: Vector3<f64>) -> Self {
        let orientation = UnitQuaternion::rotation_between(&Vector3::z(), &direction)
            .unwrap_or_else(|| UnitQuaternion::from_axis_angle(&Vector3::x_axis(), PI));
        Self::new(position, orientation)
    }

    pub fn tangent(&self) -> Vector3<f64> {
        self.orientation * Vector3::z()
    }

    /// Same position, tangent reversed, local +x (the bending direction) kept.
    pub fn flipped(&self) -> Self {
        let half_turn = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), PI);
        Self::new(self.position, renormalize(self.orientation * half_turn))
    }

    /// Express a world-frame point in this pose's local frame.
    pub fn to_local(&self, point: &Vector3<f64>) -> Vector3<f64> {
        self.orientation.inverse() * (point - self.position)
    }
}

/// One constant-curvature arc of a needle path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSegment", into = "RawSegment")]
pub struct ArcSegment {
    roll: f64,
    curvature: f64,
    length: f64,
}

#[derive(Serialize, Deserialize)]
struct RawSegment {
    roll: f64,
    curvature: f64,
    length: f64,
}

impl TryFrom<RawSegment> for ArcSegment {
    type Error = Error;

    fn try_from(raw: RawSegment) -> Result<Self> {
        ArcSegment::new(raw.roll, raw.curvature, raw.length)
    }
}

impl From<ArcSegment> for RawSegment {
    fn from(seg: ArcSegment) -> Self {
        RawSegment {
            roll: seg.roll,
            curvature: seg.curvature,
            length: seg.length,
        }
    }
}

impl ArcSegment {
    /// Builds a segment; `roll` is wrapped into `[-pi, pi)`.
    pub fn new(roll: f64, curvature: f64, length: f64) -> Result<Self> {
        if !roll.is_finite() || !curvature.is_finite() || !length.is_finite() {
            return Err(Error::InvalidSegment(format!(
                "non-finite field (roll {roll}, curvature {curvature}, length {length})"
            )));
        }
        if curvature < 0.0 {
            return Err(Error::InvalidSegment(format!(
                "curvature must be >= 0, got {curvature}"
            )));
        }
        if length < MIN_SEGMENT_LENGTH {
            return Err(Error::InvalidSegment(format!(
                "length must be >= {MIN_SEGMENT_LENGTH} m, got {length}"
            )));
        }
        Ok(Self {
            roll: wrap_angle(roll),
            curvature,
            length,
        })
    }

    pub fn straight(length: f64) -> Result<Self> {
        Self::new(0.0, 0.0, length)
    }

    pub fn roll(&self) -> f64 {
        self.roll
    }

    pub fn curvature(&self) -> f64 {
        self.curvature
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn is_straight(&self) -> bool {
        self.curvature == 0.0
    }
}

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_angle(angle: f64) -> f64 {
    let wrapped = (angle + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped >= PI {
        -PI
    } else {
        wrapped
    }
}

fn renormalize(q: UnitQuaternion<f64>) -> UnitQuaternion<f64> {
    UnitQuaternion::new_normalize(q.into_inner())
}

/// Propagates `pose` along the arc `(roll, curvature)` for `length` meters.
/// A zero length returns the pose unchanged (roll is not applied).
pub(crate) fn propagate_partial(pose: &Pose, roll: f64, curvature: f64, length: f64) -> Pose {
    if length <= 0.0 {
        return *pose;
    }
    let rolled = pose.orientation * UnitQuaternion::from_axis_angle(&Vector3::z_axis(), roll);
    let angle = curvature * length;
    let offset = if curvature == 0.0 {
        Vector3::new(0.0, 0.0, length)
    } else {
        // (1 - cos a) / k written as 2 sin^2(a/2) / k to avoid cancellation.
        let half = 0.5 * angle;
        Vector3::new(
            2.0 * half.sin() * half.sin() / curvature,
            0.0,
            angle.sin() / curvature,
        )
    };
    let bend = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), angle);
    Pose::new(pose.position + rolled * offset, renormalize(rolled * bend))
}

/// Pose at the far end of `seg` starting from `pose`.
pub fn propagate_pose(pose: &Pose, seg: &ArcSegment) -> Pose {
    propagate_partial(pose, seg.roll, seg.curvature, seg.length)
}

/// A chain of arcs, indexed from the base (s = 0) to the tip (s = L).
#[derive(Debug, Clone, PartialEq)]
pub struct NeedlePath {
    base_pose: Pose,
    segments: Vec<ArcSegment>,
    // boundaries[i] = s_i, boundaries[0] = 0, last = total length
    boundaries: Vec<f64>,
}

impl NeedlePath {
    pub fn new(base_pose: Pose, segments: Vec<ArcSegment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidSegment("path has no segments".into()));
        }
        let mut boundaries = Vec::with_capacity(segments.len() + 1);
        let mut s = 0.0;
        boundaries.push(s);
        for seg in &segments {
            s += seg.length;
            boundaries.push(s);
        }
        Ok(Self {
            base_pose,
            segments,
            boundaries,
        })
    }

    pub fn base_pose(&self) -> &Pose {
        &self.base_pose
    }

    pub fn segments(&self) -> &[ArcSegment] {
        &self.segments
    }

    /// Segment boundaries `s_0 = 0 < s_1 < ... < s_N = L`.
    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn total_length(&self) -> f64 {
        *self.boundaries.last().expect("path has at least one boundary")
    }

    pub fn tip_pose(&self) -> Pose {
        self.segments
            .iter()
            .fold(self.base_pose, |pose, seg| propagate_pose(&pose, seg))
    }

    /// Start pose of every segment, followed by the tip pose.
    pub fn segment_start_poses(&self) -> Vec<Pose> {
        let mut poses = Vec::with_capacity(self.segments.len() + 1);
        let mut pose = self.base_pose;
        poses.push(pose);
        for seg in &self.segments {
            pose = propagate_pose(&pose, seg);
            poses.push(pose);
        }
        poses
    }

    fn check_range(&self, s: f64) -> Result<()> {
        let length = self.total_length();
        if !(0.0..=length).contains(&s) {
            return Err(Error::OutOfRange { s, length });
        }
        Ok(())
    }

    /// Index of the segment containing `s`; interior boundaries resolve to the
    /// distal segment.
    fn segment_index_at(&self, s: f64) -> usize {
        // first i with boundaries[i + 1] > s, clamped to the last segment
        let idx = self.boundaries[1..].partition_point(|&b| b <= s);
        idx.min(self.segments.len() - 1)
    }

    pub fn pose_at(&self, s: f64) -> Result<Pose> {
        self.check_range(s)?;
        let mut pose = self.base_pose;
        for (i, seg) in self.segments.iter().enumerate() {
            let end = self.boundaries[i + 1];
            if s >= end {
                pose = propagate_pose(&pose, seg);
                if s == end {
                    return Ok(pose);
                }
            } else {
                let partial = (s - self.boundaries[i]).clamp(0.0, seg.length);
                return Ok(propagate_partial(&pose, seg.roll, seg.curvature, partial));
            }
        }
        Ok(pose)
    }

    pub fn curvature_at(&self, s: f64) -> Result<f64> {
        self.check_range(s)?;
        Ok(self.segments[self.segment_index_at(s)].curvature)
    }

    /// Samples at multiples of `resolution`, every segment boundary and the tip.
    pub fn discretize(&self, resolution: f64) -> Result<Vec<(f64, Pose)>> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::InvalidResolution(resolution));
        }
        let mut out = Vec::new();
        let mut start = self.base_pose;
        out.push((0.0, start));
        for (i, seg) in self.segments.iter().enumerate() {
            let (lo, hi) = (self.boundaries[i], self.boundaries[i + 1]);
            let mut k = (lo / resolution).floor() as u64 + 1;
            loop {
                let s = k as f64 * resolution;
                if s >= hi - SAMPLE_MERGE_TOL {
                    break;
                }
                if s > lo + SAMPLE_MERGE_TOL {
                    out.push((s, propagate_partial(&start, seg.roll, seg.curvature, s - lo)));
                }
                k += 1;
            }
            start = propagate_pose(&start, seg);
            out.push((hi, start));
        }
        Ok(out)
    }
}

pub fn path_pose_at(path: &NeedlePath, s: f64) -> Result<Pose> {
    path.pose_at(s)
}

pub fn curvature_at(path: &NeedlePath, s: f64) -> Result<f64> {
    path.curvature_at(s)
}

pub fn discretize_path(path: &NeedlePath, resolution: f64) -> Result<Vec<(f64, Pose)>> {
    path.discretize(resolution)
}

/// Length of the polyline through the given samples.
pub fn polyline_length(samples: &[(f64, Pose)]) -> f64 {
    samples
        .windows(2)
        .map(|w| (w[1].1.position - w[0].1.position).norm())
        .sum()
}

// JSON form: {"position": [x, y, z], "orientation": [w, x, y, z]}
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct PoseDoc {
    pub position: [f64; 3],
    pub orientation: [f64; 4],
}

impl From<&Pose> for PoseDoc {
    fn from(pose: &Pose) -> Self {
        let q = pose.orientation.quaternion();
        PoseDoc {
            position: [pose.position.x, pose.position.y, pose.position.z],
            orientation: [q.w, q.i, q.j, q.k],
        }
    }
}

impl PoseDoc {
    pub(crate) fn to_pose(self, field: &str) -> Result<Pose> {
        let [x, y, z] = self.position;
        let [w, i, j, k] = self.orientation;
        if ![x, y, z].iter().all(|v| v.is_finite()) {
            return Err(Error::validation(
                format!("{field}.position"),
                "non-finite coordinate",
            ));
        }
        let q = nalgebra::Quaternion::new(w, i, j, k);
        let norm = q.norm();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(Error::validation(
                format!("{field}.orientation"),
                "quaternion must be finite and non-zero",
            ));
        }
        Ok(Pose::new(
            Vector3::new(x, y, z),
            UnitQuaternion::from_quaternion(q),
        ))
    }
}

impl Serialize for Pose {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        PoseDoc::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        PoseDoc::deserialize(deserializer)?
            .to_pose("pose")
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct PathDoc {
    base_pose: Pose,
    segments: Vec<ArcSegment>,
}

impl Serialize for NeedlePath {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        PathDoc {
            base_pose: self.base_pose,
            segments: self.segments.clone(),
        }
        .serialize(serializer)
    }
}

// Unknown fields are tolerated so that planner solution files (which carry
// extra cost fields) parse as paths.
impl<'de> Deserialize<'de> for NeedlePath {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = PathDoc::deserialize(deserializer)?;
        NeedlePath::new(doc.base_pose, doc.segments).map_err(serde::de::Error::custom)
    }
}

impl NeedlePath {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(Error::from_json)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("path serialization is infallible")
    }
}
