//! Nearest-node lookup by position over a uniform bucket grid.

use nalgebra::Vector3;

use crate::environment::Aabb;

const MAX_CELLS_PER_AXIS: usize = 32;
/// Below this many points a linear scan beats walking grid shells.
const LINEAR_SCAN_LIMIT: usize = 256;

#[derive(Debug)]
pub(crate) struct GridIndex {
    origin: Vector3<f64>,
    cell: f64,
    dims: [usize; 3],
    buckets: Vec<Vec<usize>>,
    points: Vec<Vector3<f64>>,
}

impl GridIndex {
    pub(crate) fn new(bounds: &Aabb, preferred_cell: f64) -> Self {
        let extent = bounds.max - bounds.min;
        let longest = extent.max();
        let cell = preferred_cell.max(longest / MAX_CELLS_PER_AXIS as f64);
        let dims = [0, 1, 2].map(|i| ((extent[i] / cell).ceil() as usize).clamp(1, MAX_CELLS_PER_AXIS));
        Self {
            origin: bounds.min,
            cell,
            dims,
            buckets: vec![Vec::new(); dims[0] * dims[1] * dims[2]],
            points: Vec::new(),
        }
    }

    fn cell_of(&self, p: &Vector3<f64>) -> [usize; 3] {
        [0, 1, 2].map(|i| {
            let c = ((p[i] - self.origin[i]) / self.cell).floor();
            (c.max(0.0) as usize).min(self.dims[i] - 1)
        })
    }

    fn bucket(&self, c: [usize; 3]) -> usize {
        (c[0] * self.dims[1] + c[1]) * self.dims[2] + c[2]
    }

    pub(crate) fn insert(&mut self, p: Vector3<f64>) -> usize {
        let id = self.points.len();
        let b = self.bucket(self.cell_of(&p));
        self.buckets[b].push(id);
        self.points.push(p);
        id
    }

    #[cfg(test)]
    pub(crate) fn len(&self) -> usize {
        self.points.len()
    }

    /// Closest stored point; ties resolve to the smallest id.
    pub(crate) fn nearest(&self, q: &Vector3<f64>) -> Option<usize> {
        self.nearest_where(q, |_| true)
    }

    /// Closest stored point among those accepted by `keep`.
    pub(crate) fn nearest_where(&self, q: &Vector3<f64>, keep: impl Fn(usize) -> bool) -> Option<usize> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = (f64::INFINITY, usize::MAX);
        let consider = |id: usize, best: &mut (f64, usize)| {
            if !keep(id) {
                return;
            }
            let d = (self.points[id] - q).norm_squared();
            if d < best.0 || (d == best.0 && id < best.1) {
                *best = (d, id);
            }
        };
        if self.points.len() <= LINEAR_SCAN_LIMIT {
            for id in 0..self.points.len() {
                consider(id, &mut best);
            }
            return (best.1 != usize::MAX).then_some(best.1);
        }
        let c = self.cell_of(q);
        let max_ring = *self.dims.iter().max().expect("three axes");
        for r in 0..=max_ring {
            self.for_shell(c, r, |b| {
                for &id in &self.buckets[b] {
                    consider(id, &mut best);
                }
            });
            // anything in ring r + 1 or beyond is at least r cells away
            let reach = r as f64 * self.cell;
            if best.1 != usize::MAX && best.0 <= reach * reach {
                break;
            }
        }
        (best.1 != usize::MAX).then_some(best.1)
    }

    /// Visits every in-grid bucket at Chebyshev distance exactly `r` from `c`.
    fn for_shell(&self, c: [usize; 3], r: usize, mut visit: impl FnMut(usize)) {
        let r = r as isize;
        let range = |axis: usize| {
            let lo = (c[axis] as isize - r).max(0);
            let hi = (c[axis] as isize + r).min(self.dims[axis] as isize - 1);
            lo..=hi
        };
        for i in range(0) {
            let di = (i - c[0] as isize).abs();
            for j in range(1) {
                let dj = (j - c[1] as isize).abs();
                if di == r || dj == r {
                    for k in range(2) {
                        visit(self.bucket([i as usize, j as usize, k as usize]));
                    }
                } else {
                    // interior column: only the two caps (r > 0 here)
                    for k in [c[2] as isize - r, c[2] as isize + r] {
                        if k >= 0 && k < self.dims[2] as isize {
                            visit(self.bucket([i as usize, j as usize, k as usize]));
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_brute_force() {
        let bounds = Aabb {
            min: Vector3::new(-0.1, -0.05, 0.0),
            max: Vector3::new(0.1, 0.05, 0.3),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut index = GridIndex::new(&bounds, 0.005);
        let mut pts = Vec::new();
        let sample = |rng: &mut ChaCha8Rng| {
            Vector3::new(
                rng.random_range(-0.1..0.1),
                rng.random_range(-0.05..0.05),
                rng.random_range(0.0..0.3),
            )
        };
        for n in 0..3000 {
            // clustered points stress the ring termination
            let p = if n % 3 == 0 { sample(&mut rng) } else { sample(&mut rng) * 0.1 };
            pts.push(p);
            index.insert(p);
            if n % 50 == 0 {
                for _ in 0..20 {
                    let q = sample(&mut rng);
                    let got = index.nearest(&q).unwrap();
                    let best = pts
                        .iter()
                        .map(|p| (p - q).norm_squared())
                        .fold(f64::INFINITY, f64::min);
                    assert_eq!((pts[got] - q).norm_squared(), best);
                    let odd = index.nearest_where(&q, |id| id % 2 == 1);
                    let best_odd = pts
                        .iter()
                        .skip(1)
                        .step_by(2)
                        .map(|p| (p - q).norm_squared())
                        .fold(f64::INFINITY, f64::min);
                    match odd {
                        Some(id) => assert_eq!((pts[id] - q).norm_squared(), best_odd),
                        None => assert_eq!(pts.len(), 1),
                    }
                }
            }
        }
        assert_eq!(index.len(), 3000);
    }

    #[test]
    fn shell_visits_each_bucket_once() {
        let bounds = Aabb {
            min: Vector3::zeros(),
            max: Vector3::new(1.0, 1.0, 1.0),
        };
        let index = GridIndex::new(&bounds, 0.1);
        let mut seen = vec![0; index.buckets.len()];
        for r in 0..=10 {
            index.for_shell([3, 7, 0], r, |b| seen[b] += 1);
        }
        assert!(seen.iter().all(|&n| n == 1));
    }
}
