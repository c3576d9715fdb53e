//! Voxel occupancy grids and the `NVOX` file format.
//!
//! Layout (little-endian): magic `NVOX`, `u32` dims `nx ny nz`, `f64` origin
//! `x y z` (minimum corner of the grid), `f64` spacing, then the occupancy
//! bits. Voxel `(i, j, k)` has flat index `(i * ny + j) * nz + k` (row-major,
//! `k` fastest) and is stored in byte `index / 8`, bit `index % 8` (LSB
//! first). Voxel centers sit at `origin + (index + 0.5) * spacing`.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"NVOX";
const HEADER_LEN: usize = 4 + 3 * 4 + 3 * 8 + 8;

#[derive(Debug, Clone)]
pub struct VoxelGrid {
    origin: Vector3<f64>,
    spacing: f64,
    dims: [u32; 3],
    occupancy: Vec<bool>,
    index: CenterTree,
}

impl VoxelGrid {
    pub fn new(origin: Vector3<f64>, spacing: f64, dims: [u32; 3], occupancy: Vec<bool>) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::Voxel(format!("spacing must be > 0, got {spacing}")));
        }
        if !origin.iter().all(|v| v.is_finite()) {
            return Err(Error::Voxel("non-finite origin".into()));
        }
        let count = dims.iter().map(|&d| d as usize).product::<usize>();
        if count != occupancy.len() {
            return Err(Error::Voxel(format!(
                "dims {dims:?} need {count} cells, got {}",
                occupancy.len()
            )));
        }
        let mut grid = Self {
            origin,
            spacing,
            dims,
            occupancy,
            index: CenterTree::default(),
        };
        let centers = grid.occupied_centers();
        grid.index = CenterTree::build(centers);
        Ok(grid)
    }

    /// Rasterizes `occupied(center)` over a grid.
    pub fn from_fn(
        origin: Vector3<f64>,
        spacing: f64,
        dims: [u32; 3],
        occupied: impl Fn(&Vector3<f64>) -> bool,
    ) -> Result<Self> {
        let [nx, ny, nz] = dims;
        let mut occupancy = Vec::with_capacity((nx * ny * nz) as usize);
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    let c = origin + Vector3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * spacing;
                    occupancy.push(occupied(&c));
                }
            }
        }
        Self::new(origin, spacing, dims, occupancy)
    }

    pub fn origin(&self) -> &Vector3<f64> {
        &self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn dims(&self) -> [u32; 3] {
        self.dims
    }

    pub fn occupied_count(&self) -> usize {
        self.index.points.len()
    }

    pub fn is_occupied(&self, i: u32, j: u32, k: u32) -> bool {
        let [_, ny, nz] = self.dims;
        self.occupancy[((i as usize * ny as usize) + j as usize) * nz as usize + k as usize]
    }

    fn occupied_centers(&self) -> Vec<[f64; 3]> {
        let [nx, ny, nz] = self.dims;
        let mut out = Vec::new();
        let mut idx = 0;
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    if self.occupancy[idx] {
                        let c = self.origin
                            + Vector3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * self.spacing;
                        out.push([c.x, c.y, c.z]);
                    }
                    idx += 1;
                }
            }
        }
        out
    }

    /// Distance to the nearest occupied voxel center minus half the voxel
    /// diagonal; `+inf` for an empty grid.
    pub fn clearance(&self, p: &Vector3<f64>) -> f64 {
        match self.index.nearest_distance(&[p.x, p.y, p.z]) {
            Some(d) => d - 0.5 * 3f64.sqrt() * self.spacing,
            None => f64::INFINITY,
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        for d in self.dims {
            w.write_all(&d.to_le_bytes())?;
        }
        for v in self.origin.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.spacing.to_le_bytes())?;
        let mut bytes = vec![0u8; self.occupancy.len().div_ceil(8)];
        for (i, &occ) in self.occupancy.iter().enumerate() {
            if occ {
                bytes[i / 8] |= 1 << (i % 8);
            }
        }
        w.write_all(&bytes)
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)
            .map_err(|e| Error::Voxel(format!("read failed: {e}")))?;
        Self::from_bytes(&buf)
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        if buf.len() < HEADER_LEN || &buf[..4] != MAGIC {
            return Err(Error::Voxel("missing NVOX header".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(buf[o..o + 4].try_into().expect("4 bytes"));
        let f64_at = |o: usize| f64::from_le_bytes(buf[o..o + 8].try_into().expect("8 bytes"));
        let dims = [u32_at(4), u32_at(8), u32_at(12)];
        let origin = Vector3::new(f64_at(16), f64_at(24), f64_at(32));
        let spacing = f64_at(40);
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))
            .ok_or_else(|| Error::Voxel("dimensions overflow".into()))?;
        let body = &buf[HEADER_LEN..];
        if body.len() != count.div_ceil(8) {
            return Err(Error::Voxel(format!(
                "expected {} occupancy bytes, found {}",
                count.div_ceil(8),
                body.len()
            )));
        }
        let occupancy = (0..count).map(|i| body[i / 8] >> (i % 8) & 1 == 1).collect();
        Self::new(origin, spacing, dims, occupancy)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }
}

/// Static kd-tree over points, stored as an implicit balanced tree: the
/// median of each slice is its root.
#[derive(Debug, Clone, Default)]
struct CenterTree {
    points: Vec<[f64; 3]>,
}

impl CenterTree {
    fn build(mut points: Vec<[f64; 3]>) -> Self {
        fn split(pts: &mut [[f64; 3]], depth: usize) {
            if pts.len() <= 1 {
                return;
            }
            let axis = depth % 3;
            let mid = pts.len() / 2;
            pts.select_nth_unstable_by(mid, |a, b| a[axis].total_cmp(&b[axis]));
            let (left, right) = pts.split_at_mut(mid);
            split(left, depth + 1);
            split(&mut right[1..], depth + 1);
        }
        split(&mut points, 0);
        Self { points }
    }

    fn nearest_distance(&self, q: &[f64; 3]) -> Option<f64> {
        fn search(pts: &[[f64; 3]], depth: usize, q: &[f64; 3], best: &mut f64) {
            if pts.is_empty() {
                return;
            }
            let mid = pts.len() / 2;
            let p = &pts[mid];
            let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2);
            if d2 < *best {
                *best = d2;
            }
            let axis = depth % 3;
            let diff = q[axis] - p[axis];
            let (near, far) = if diff < 0.0 {
                (&pts[..mid], &pts[mid + 1..])
            } else {
                (&pts[mid + 1..], &pts[..mid])
            };
            search(near, depth + 1, q, best);
            if diff * diff < *best {
                search(far, depth + 1, q, best);
            }
        }
        if self.points.is_empty() {
            return None;
        }
        let mut best = f64::INFINITY;
        search(&self.points, 0, q, &mut best);
        Some(best.sqrt())
    }
}
