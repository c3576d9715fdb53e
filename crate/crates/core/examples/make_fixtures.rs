//! Regenerates the files under `fixtures/`.
//!
//!     cargo run -p needle-core --example make_fixtures [out_dir]

use std::fs;
use std::path::PathBuf;

use nalgebra::Vector3;
use needle_core::environment::VoxelGrid;
use needle_core::{ArcSegment, NeedlePath, Pose};

const TWO_SPHERES: &str = r#"{
  "start_pose": {"position": [0.0, 0.0, 0.1], "orientation": [1.0, 0.0, 0.0, 0.0]},
  "target": {"center": [0.0, 0.0, 0.0], "radius": 0.01},
  "bounds": {"min": [-0.06, -0.06, -0.01], "max": [0.06, 0.06, 0.12]},
  "obstacles": {
    "spheres": [
      {"center": [0.0, 0.0, 0.045], "radius": 0.012},
      {"center": [0.022, 0.012, 0.078], "radius": 0.009}
    ],
    "boxes": []
  },
  "tissue": {"c": 83.75, "mu": 0.32, "fp": 0.4},
  "needle_radius": 0.001,
  "kappa_max": 20.0
}
"#;

const OPEN_FIELD: &str = r#"{
  "start_pose": {"position": [0.0, 0.0, 0.06], "orientation": [1.0, 0.0, 0.0, 0.0]},
  "target": {"center": [0.0, 0.0, 0.0], "radius": 0.005},
  "bounds": {"min": [-0.05, -0.05, -0.01], "max": [0.05, 0.05, 0.08]},
  "obstacles": {"spheres": [], "boxes": []},
  "kappa_max": 20.0
}
"#;

const LUNG: &str = r#"{
  "start_pose": {"position": [0.0, 0.0, 0.17], "orientation": [1.0, 0.0, 0.0, 0.0]},
  "target": {"center": [0.0, 0.0, 0.01], "radius": 0.01},
  "bounds": {"min": [-0.06, -0.06, 0.0], "max": [0.06, 0.06, 0.2]},
  "obstacles": {"spheres": [], "boxes": [], "voxel_grid_file": "lung_voxels.nvox"},
  "tissue": {"c": 83.75, "mu": 0.32, "fp": 0.4},
  "needle_radius": 0.001,
  "kappa_max": 20.0
}
"#;

/// 60 x 60 x 100 voxels of 2 mm: a membrane at z in [0.08, 0.10] pierced
/// by one round opening 3 cm off-axis, plus a few vessel-like blobs that
/// stay clear of the corridor.
fn lung_grid() -> VoxelGrid {
    let h = 0.002;
    let origin = Vector3::new(-0.06, -0.06, 0.0);
    let blobs = [
        (Vector3::new(-0.03, 0.03, 0.13), 0.012),
        (Vector3::new(-0.035, -0.025, 0.04), 0.014),
        (Vector3::new(0.0, 0.04, 0.05), 0.01),
    ];
    VoxelGrid::from_fn(origin, h, [60, 60, 100], |c| {
        let in_membrane = (0.08..=0.10).contains(&c.z);
        let in_opening = (c.x - 0.03).hypot(c.y) < 0.015;
        let in_blob = blobs.iter().any(|(b, r)| (c - b).norm() < *r);
        (in_membrane && !in_opening) || in_blob
    })
    .expect("grid parameters are valid")
}

fn path_json(segs: &[(f64, f64, f64)]) -> String {
    let segs = segs
        .iter()
        .map(|&(r, k, l)| ArcSegment::new(r, k, l).expect("fixture segment"))
        .collect();
    NeedlePath::new(Pose::identity(), segs).expect("fixture path").to_json() + "\n"
}

fn main() {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    fs::create_dir_all(&out).expect("create fixture dir");
    let put = |name: &str, text: &str| fs::write(out.join(name), text).expect("write fixture");

    put("two_spheres.json", TWO_SPHERES);
    put("open_field.json", OPEN_FIELD);
    put("lung_voxel.json", LUNG);
    lung_grid().save(&out.join("lung_voxels.nvox")).expect("write voxel grid");

    put("straight_path.json", &path_json(&[(0.0, 0.0, 0.1)]));
    put("distal_arc_path.json", &path_json(&[(0.0, 0.0, 0.05), (0.0, 10.0, 0.05)]));
    put("proximal_arc_path.json", &path_json(&[(0.0, 10.0, 0.05), (0.0, 0.0, 0.05)]));
    println!("fixtures written to {}", out.display());
}
