//! Planning scenarios: start pose, insertion region, obstacles, tissue
//! parameters and workspace bounds, plus the geometric queries the planner
//! runs against them.

mod voxel;

use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::force::{TissueParams, DEFAULT_C_FRICTION, DEFAULT_MU, DEFAULT_PIERCING_FORCE};
use crate::kinematics::{propagate_partial, ArcSegment, NeedlePath, Pose, PoseDoc};

pub use voxel::VoxelGrid;

pub const DEFAULT_NEEDLE_RADIUS: f64 = 0.001;
pub const DEFAULT_KAPPA_MAX: f64 = 20.0;
/// Default spacing of collision samples along an arc (m).
pub const DEFAULT_CHECK_RESOLUTION: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sphere {
    pub center: Vector3<f64>,
    pub radius: f64,
}

impl Sphere {
    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        (p - self.center).norm() - self.radius
    }
}

/// Closed axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|i| self.min[i] <= p[i] && p[i] <= self.max[i])
    }

    pub fn center(&self) -> Vector3<f64> {
        0.5 * (self.min + self.max)
    }

    /// Euclidean distance outside, negative depth inside.
    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        let outside = Vector3::from_fn(|i, _| (self.min[i] - p[i]).max(p[i] - self.max[i]).max(0.0));
        if outside != Vector3::zeros() {
            return outside.norm();
        }
        -(0..3)
            .map(|i| (p[i] - self.min[i]).min(self.max[i] - p[i]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Orientation-free insertion site: a closed ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InsertionRegion {
    pub center: Vector3<f64>,
    pub radius: f64,
}

impl InsertionRegion {
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (p - self.center).norm() <= self.radius
    }
}

pub fn in_target(region: &InsertionRegion, p: &Vector3<f64>) -> bool {
    region.contains(p)
}

#[derive(Debug, Clone, Default)]
pub struct ObstacleSet {
    pub spheres: Vec<Sphere>,
    pub boxes: Vec<Aabb>,
    pub voxel_grid: Option<VoxelGrid>,
}

impl ObstacleSet {
    pub fn is_empty(&self) -> bool {
        self.spheres.is_empty() && self.boxes.is_empty() && self.voxel_grid.is_none()
    }

    /// Distance to the nearest obstacle surface, negative inside an obstacle,
    /// `+inf` with no obstacles.
    pub fn point_clearance(&self, p: &Vector3<f64>) -> f64 {
        let spheres = self.spheres.iter().map(|s| s.signed_distance(p));
        let boxes = self.boxes.iter().map(|b| b.signed_distance(p));
        let voxels = self.voxel_grid.iter().map(|g| g.clearance(p));
        spheres.chain(boxes).chain(voxels).fold(f64::INFINITY, f64::min)
    }
}

pub fn point_clearance(env: &ObstacleSet, p: &Vector3<f64>) -> f64 {
    env.point_clearance(p)
}

/// Axis-aligned region with its own tissue parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TissueOverride {
    pub region: Aabb,
    pub params: TissueParams,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    /// In-body target pose; the backward search starts here.
    pub start_pose: Pose,
    pub target: InsertionRegion,
    pub obstacles: ObstacleSet,
    pub tissue: TissueParams,
    /// Checked in order; the first box containing a point wins.
    pub tissue_overrides: Vec<TissueOverride>,
    pub bounds: Aabb,
    pub needle_radius: f64,
    pub kappa_max: f64,
}

impl Scenario {
    /// Checks every scenario invariant, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        let finite = |v: &Vector3<f64>| v.iter().all(|x| x.is_finite());
        if !finite(&self.bounds.min) || !finite(&self.bounds.max) {
            return Err(Error::validation("bounds", "non-finite corner"));
        }
        if (0..3).any(|i| self.bounds.min[i] >= self.bounds.max[i]) {
            return Err(Error::validation("bounds", "min must be < max componentwise"));
        }
        if !(self.needle_radius >= 0.0 && self.needle_radius.is_finite()) {
            return Err(Error::validation("needle_radius", "must be finite and >= 0"));
        }
        if !(self.kappa_max > 0.0 && self.kappa_max.is_finite()) {
            return Err(Error::validation("kappa_max", "must be finite and > 0"));
        }
        if !(self.target.radius > 0.0 && self.target.radius.is_finite()) {
            return Err(Error::validation("target.radius", "must be finite and > 0"));
        }
        if !finite(&self.target.center) || !self.bounds.contains(&self.target.center) {
            return Err(Error::validation("target.center", "must lie inside bounds"));
        }
        for (i, s) in self.obstacles.spheres.iter().enumerate() {
            if !(s.radius > 0.0 && s.radius.is_finite()) || !finite(&s.center) {
                return Err(Error::validation(
                    format!("obstacles.spheres[{i}]"),
                    "radius must be > 0 and center finite",
                ));
            }
        }
        for (i, b) in self.obstacles.boxes.iter().enumerate() {
            if !finite(&b.min) || !finite(&b.max) || (0..3).any(|k| b.min[k] >= b.max[k]) {
                return Err(Error::validation(
                    format!("obstacles.boxes[{i}]"),
                    "min must be < max componentwise",
                ));
            }
        }
        for (i, o) in self.tissue_overrides.iter().enumerate() {
            if (0..3).any(|k| o.region.min[k] > o.region.max[k]) {
                return Err(Error::validation(
                    format!("tissue.overrides[{i}]"),
                    "min must be <= max componentwise",
                ));
            }
        }
        let p = &self.start_pose.position;
        if !self.bounds.contains(p) {
            return Err(Error::validation("start_pose", "position lies outside bounds"));
        }
        let clearance = self.obstacles.point_clearance(p);
        if clearance < self.needle_radius {
            return Err(Error::validation(
                "start_pose",
                format!("position collides with an obstacle (clearance {clearance:.6} m)"),
            ));
        }
        Ok(())
    }

    pub fn point_clearance(&self, p: &Vector3<f64>) -> f64 {
        self.obstacles.point_clearance(p)
    }

    /// Inside bounds with at least `needle_radius` clearance.
    pub fn point_free(&self, p: &Vector3<f64>) -> bool {
        self.bounds.contains(p) && self.obstacles.point_clearance(p) >= self.needle_radius
    }

    /// Samples the arc at `check_resolution` (endpoints included) and checks
    /// every sample with [`Scenario::point_free`].
    pub fn segment_collision_free(&self, start: &Pose, seg: &ArcSegment, check_resolution: f64) -> bool {
        if !(check_resolution > 0.0 && check_resolution.is_finite()) {
            return false;
        }
        let at = |d: f64| propagate_partial(start, seg.roll(), seg.curvature(), d).position;
        if !self.point_free(&start.position) {
            return false;
        }
        let mut k = 1u64;
        loop {
            let d = k as f64 * check_resolution;
            if d >= seg.length() {
                break;
            }
            if !self.point_free(&at(d)) {
                return false;
            }
            k += 1;
        }
        self.point_free(&at(seg.length()))
    }

    /// Every sample of a whole path, as produced by `NeedlePath::discretize`.
    pub fn path_collision_free(&self, path: &NeedlePath, check_resolution: f64) -> bool {
        match path.discretize(check_resolution) {
            Ok(samples) => samples.iter().all(|(_, pose)| self.point_free(&pose.position)),
            Err(_) => false,
        }
    }

    pub fn in_target(&self, p: &Vector3<f64>) -> bool {
        self.target.contains(p)
    }

    pub fn tissue_params_at(&self, p: &Vector3<f64>) -> TissueParams {
        self.tissue_overrides
            .iter()
            .find(|o| o.region.contains(p))
            .map_or(self.tissue, |o| o.params)
    }

    /// Tip piercing force, taken from the tissue at the in-body target.
    pub fn piercing_force(&self) -> f64 {
        self.tissue_params_at(&self.start_pose.position).piercing_force()
    }

    /// Bottleneck force of a forward path under this scenario's tissue model.
    pub fn max_tissue_force(&self, path: &NeedlePath) -> f64 {
        crate::force::max_tissue_force_piecewise(path, &self.path_params(path), self.piercing_force())
            .expect("per-segment parameters match the path")
    }

    /// Tissue parameters for a segment, looked up at its arc midpoint.
    pub fn segment_params(&self, start: &Pose, seg: &ArcSegment) -> TissueParams {
        if self.tissue_overrides.is_empty() {
            return self.tissue;
        }
        let mid = propagate_partial(start, seg.roll(), seg.curvature(), 0.5 * seg.length());
        self.tissue_params_at(&mid.position)
    }

    /// Per-segment parameters for a whole path, base to tip.
    pub fn path_params(&self, path: &NeedlePath) -> Vec<TissueParams> {
        let poses = path.segment_start_poses();
        path.segments()
            .iter()
            .zip(&poses)
            .map(|(seg, pose)| self.segment_params(pose, seg))
            .collect()
    }
}

pub fn segment_collision_free(env: &Scenario, start: &Pose, seg: &ArcSegment, check_resolution: f64) -> bool {
    env.segment_collision_free(start, seg, check_resolution)
}

pub fn tissue_params_at(env: &Scenario, p: &Vector3<f64>) -> TissueParams {
    env.tissue_params_at(p)
}

// ---- scenario document ----

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    start_pose: PoseDoc,
    target: TargetDoc,
    bounds: BoxDoc,
    #[serde(default)]
    obstacles: ObstaclesDoc,
    #[serde(default)]
    tissue: TissueDoc,
    #[serde(default = "default_needle_radius")]
    needle_radius: f64,
    #[serde(default = "default_kappa_max")]
    kappa_max: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetDoc {
    center: [f64; 3],
    radius: f64,
}

#[derive(Deserialize, Clone, Copy)]
#[serde(deny_unknown_fields)]
struct BoxDoc {
    min: [f64; 3],
    max: [f64; 3],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SphereDoc {
    center: [f64; 3],
    radius: f64,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ObstaclesDoc {
    #[serde(default)]
    spheres: Vec<SphereDoc>,
    #[serde(default)]
    boxes: Vec<BoxDoc>,
    #[serde(default)]
    voxel_grid_file: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TissueDoc {
    #[serde(default = "default_c")]
    c: f64,
    #[serde(default = "default_mu")]
    mu: f64,
    #[serde(default = "default_fp")]
    fp: f64,
    #[serde(default)]
    overrides: Vec<OverrideDoc>,
}

impl Default for TissueDoc {
    fn default() -> Self {
        Self {
            c: DEFAULT_C_FRICTION,
            mu: DEFAULT_MU,
            fp: DEFAULT_PIERCING_FORCE,
            overrides: Vec::new(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OverrideDoc {
    min: [f64; 3],
    max: [f64; 3],
    c: f64,
    mu: f64,
    #[serde(default = "default_fp")]
    fp: f64,
}

fn default_needle_radius() -> f64 {
    DEFAULT_NEEDLE_RADIUS
}
fn default_kappa_max() -> f64 {
    DEFAULT_KAPPA_MAX
}
fn default_c() -> f64 {
    DEFAULT_C_FRICTION
}
fn default_mu() -> f64 {
    DEFAULT_MU
}
fn default_fp() -> f64 {
    DEFAULT_PIERCING_FORCE
}

impl From<BoxDoc> for Aabb {
    fn from(b: BoxDoc) -> Self {
        Aabb {
            min: b.min.into(),
            max: b.max.into(),
        }
    }
}

/// Parses and validates a scenario document. A relative `voxel_grid_file` is
/// resolved against `base_dir` (or the working directory when `None`).
pub fn load_scenario(text: &str, base_dir: Option<&Path>) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: ScenarioDoc = serde_path_to_error::deserialize(de).map_err(Error::from_json)?;

    let start_pose = doc.start_pose.to_pose("start_pose")?;
    let tissue = TissueParams::new(doc.tissue.c, doc.tissue.mu, doc.tissue.fp)
        .map_err(|e| Error::validation("tissue", e.to_string()))?;
    let tissue_overrides = doc
        .tissue
        .overrides
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let params = TissueParams::new(o.c, o.mu, o.fp)
                .map_err(|e| Error::validation(format!("tissue.overrides[{i}]"), e.to_string()))?;
            Ok(TissueOverride {
                region: Aabb {
                    min: o.min.into(),
                    max: o.max.into(),
                },
                params,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let voxel_grid = match &doc.obstacles.voxel_grid_file {
        Some(file) => {
            let path = match base_dir {
                Some(dir) if file.is_relative() => dir.join(file),
                _ => file.clone(),
            };
            let grid = VoxelGrid::load(&path).map_err(|e| {
                Error::validation("obstacles.voxel_grid_file", format!("{}: {e}", path.display()))
            })?;
            Some(grid)
        }
        None => None,
    };

    let scenario = Scenario {
        start_pose,
        target: InsertionRegion {
            center: doc.target.center.into(),
            radius: doc.target.radius,
        },
        obstacles: ObstacleSet {
            spheres: doc
                .obstacles
                .spheres
                .iter()
                .map(|s| Sphere {
                    center: s.center.into(),
                    radius: s.radius,
                })
                .collect(),
            boxes: doc.obstacles.boxes.iter().map(|&b| b.into()).collect(),
            voxel_grid,
        },
        tissue,
        tissue_overrides,
        bounds: doc.bounds.into(),
        needle_radius: doc.needle_radius,
        kappa_max: doc.kappa_max,
    };
    scenario.validate()?;
    Ok(scenario)
}

pub fn load_scenario_file(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_scenario(&text, path.parent())
}
