//! Point clouds with a uniform-grid spatial index.

use serde::{Deserialize, Serialize};

use crate::error::{CurvError, Result};
use crate::geometry::Vec3;

#[derive(Debug, Clone)]
struct Grid {
    origin: Vec3,
    cell: f64,
    dims: [usize; 3],
    cells: Vec<Vec<u32>>,
}

impl Grid {
    fn build(points: &[Vec3], cell: f64) -> Self {
        let (lo, hi) = bounds(points);
        let ext = hi - lo;
        let mut cell = cell;
        // Keep the cell count proportional to the number of points.
        let budget = 8.0 * points.len().max(1) as f64 + 64.0;
        loop {
            let n: f64 = (0..3).map(|a| (ext[a] / cell).floor() + 1.0).product();
            if n <= budget {
                break;
            }
            cell *= 1.5;
        }
        let dims = [0, 1, 2].map(|a| (ext[a] / cell).floor() as usize + 1);
        let mut cells = vec![Vec::new(); dims[0] * dims[1] * dims[2]];
        let mut g = Self { origin: lo, cell, dims, cells: Vec::new() };
        for (i, p) in points.iter().enumerate() {
            let c = g.clamped(p);
            cells[g.flat(c)].push(i as u32);
        }
        g.cells = cells;
        g
    }

    fn coord(&self, x: f64, axis: usize) -> i64 {
        ((x - self.origin[axis]) / self.cell).floor() as i64
    }

    fn clamped(&self, p: &Vec3) -> [usize; 3] {
        [0, 1, 2].map(|a| self.coord(p[a], a).clamp(0, self.dims[a] as i64 - 1) as usize)
    }

    fn flat(&self, c: [usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }
}

fn bounds(points: &[Vec3]) -> (Vec3, Vec3) {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    if points.is_empty() {
        (Vec3::zeros(), Vec3::zeros())
    } else {
        (lo, hi)
    }
}

/// A finite point set with a radius-query index.
#[derive(Debug, Clone)]
pub struct PointCloud {
    points: Vec<Vec3>,
    grid: Grid,
}

#[derive(Serialize, Deserialize)]
struct CloudRepr {
    points: Vec<Vec3>,
}

impl Serialize for PointCloud {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CloudRepr { points: self.points.clone() }.serialize(s)
    }
}

impl PointCloud {
    /// Builds a cloud, rejecting points that coincide within `tol`.
    pub fn new(points: Vec<Vec3>, tol: f64) -> Result<Self> {
        let cell = default_cell(&points);
        Self::with_cell_size(points, cell, tol)
    }

    /// Builds a cloud indexed for neighbor queries at offset radius `r`
    /// (cell size `2r`).
    pub fn for_radius(points: Vec<Vec3>, r: f64, tol: f64) -> Result<Self> {
        Self::with_cell_size(points, 2.0 * r, tol)
    }

    pub fn with_cell_size(points: Vec<Vec3>, cell: f64, tol: f64) -> Result<Self> {
        if let Some(bad) = points.iter().position(|p| !p.iter().all(|x| x.is_finite())) {
            return Err(CurvError::InvalidParameter(format!("point {bad} has a non-finite coordinate")));
        }
        let cell = if cell > 0.0 && cell.is_finite() { cell } else { 1.0 };
        let cloud = Self { grid: Grid::build(&points, cell), points };
        if let Some((first, dup)) = cloud.find_duplicate(tol) {
            return Err(CurvError::DuplicatePoint { location: format!("point {dup}"), first });
        }
        Ok(cloud)
    }

    /// Same points, re-indexed for offset radius `r`.
    pub fn reindexed(&self, r: f64) -> Self {
        Self { grid: Grid::build(&self.points, 2.0 * r), points: self.points.clone() }
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> Vec3 {
        self.points[i]
    }

    pub fn cell_size(&self) -> f64 {
        self.grid.cell
    }

    /// Lowest-index pair `(i, j)`, `i < j`, of points closer than `tol`.
    fn find_duplicate(&self, tol: f64) -> Option<(usize, usize)> {
        self.points.iter().enumerate().find_map(|(j, p)| {
            self.within(p, tol).into_iter().find(|&i| i < j).map(|i| (i, j))
        })
    }

    /// Indices of all points `p` with `‖p − q‖ ≤ radius`, sorted.
    pub fn within(&self, q: &Vec3, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if self.points.is_empty() || !(radius >= 0.0) {
            return out;
        }
        let g = &self.grid;
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for a in 0..3 {
            let l = g.coord(q[a] - radius, a);
            let h = g.coord(q[a] + radius, a);
            if h < 0 || l >= g.dims[a] as i64 {
                return out;
            }
            lo[a] = l.max(0) as usize;
            hi[a] = h.min(g.dims[a] as i64 - 1) as usize;
        }
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    for &i in &g.cells[g.flat([x, y, z])] {
                        if (self.points[i as usize] - q).norm() <= radius {
                            out.push(i as usize);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Nearest point (lowest index on ties) and its distance. Returns the
    /// same value as a brute-force scan.
    pub fn nearest(&self, q: &Vec3) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let g = &self.grid;
        let c = g.clamped(q);
        let max_ring = (0..3).map(|a| c[a].max(g.dims[a] - 1 - c[a])).max().unwrap();
        let mut best = (usize::MAX, f64::INFINITY);
        for k in 0..=max_ring {
            let k = k as i64;
            for dz in -k..=k {
                for dy in -k..=k {
                    for dx in -k..=k {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != k {
                            continue;
                        }
                        let cc = [c[0] as i64 + dx, c[1] as i64 + dy, c[2] as i64 + dz];
                        if (0..3).any(|a| cc[a] < 0 || cc[a] >= g.dims[a] as i64) {
                            continue;
                        }
                        let idx = g.flat([cc[0] as usize, cc[1] as usize, cc[2] as usize]);
                        for &i in &g.cells[idx] {
                            let d = (self.points[i as usize] - q).norm();
                            let i = i as usize;
                            if d < best.1 || (d == best.1 && i < best.0) {
                                best = (i, d);
                            }
                        }
                    }
                }
            }
            // Cells beyond ring k lie outside the box of rings 0..=k.
            let mut margin = f64::INFINITY;
            for a in 0..3 {
                let lo = g.origin[a] + (c[a] as i64 - k) as f64 * g.cell;
                let hi = g.origin[a] + (c[a] as i64 + k + 1) as f64 * g.cell;
                let open_lo = c[a] as i64 - k > 0;
                let open_hi = c[a] as i64 + k + 1 < g.dims[a] as i64;
                if open_lo {
                    margin = margin.min(q[a] - lo);
                }
                if open_hi {
                    margin = margin.min(hi - q[a]);
                }
            }
            if best.1 < margin.max(0.0) {
                break;
            }
        }
        Some(best)
    }

    /// Distance to the cloud.
    pub fn distance(&self, q: &Vec3) -> f64 {
        self.nearest(q).map_or(f64::INFINITY, |(_, d)| d)
    }

    /// Applies `x ↦ rot·x + t` to every point.
    pub fn transformed(&self, rot: &nalgebra::Matrix3<f64>, t: &Vec3) -> Self {
        let pts: Vec<Vec3> = self.points.iter().map(|p| rot * p + t).collect();
        Self { grid: Grid::build(&pts, self.grid.cell), points: pts }
    }

    /// Same points in a different order.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let pts: Vec<Vec3> = order.iter().map(|&i| self.points[i]).collect();
        Self { grid: Grid::build(&pts, self.grid.cell), points: pts }
    }

    /// Smallest ball radius around a point of the bounding box that covers it.
    pub fn bounding_radius(&self) -> (Vec3, f64) {
        let (lo, hi) = bounds(&self.points);
        let c = 0.5 * (lo + hi);
        let r = self.points.iter().map(|p| (p - c).norm()).fold(0.0, f64::max);
        (c, r)
    }
}

fn default_cell(points: &[Vec3]) -> f64 {
    let (lo, hi) = bounds(points);
    let diag = (hi - lo).norm();
    let n = points.len().max(1) as f64;
    (diag / n.cbrt()).max(1e-6)
}

/// Brute-force distance from `q` to a point set.
pub fn brute_distance(points: &[Vec3], q: &Vec3) -> f64 {
    points.iter().map(|p| (p - q).norm()).fold(f64::INFINITY, f64::min)
}

/// Brute-force two-sided Hausdorff distance.
pub fn hausdorff_brute(a: &[Vec3], b: &[Vec3]) -> f64 {
    let one = |x: &[Vec3], y: &[Vec3]| x.iter().map(|p| brute_distance(y, p)).fold(0.0, f64::max);
    one(a, b).max(one(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_cloud(n: usize, seed: u64) -> Vec<Vec3> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| Vec3::new(rng.gen(), rng.gen::<f64>() * 2.0, rng.gen::<f64>() * 0.5)).collect()
    }

    #[test]
    fn radius_queries_match_brute_force() {
        let pts = random_cloud(500, 1);
        let cloud = PointCloud::for_radius(pts.clone(), 0.05, 1e-9).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let q = Vec3::new(rng.gen_range(-0.5..1.5), rng.gen_range(-0.5..2.5), rng.gen_range(-0.5..1.0));
            let rad = rng.gen_range(0.0..0.4);
            let brute: Vec<usize> = (0..pts.len()).filter(|&i| (pts[i] - q).norm() <= rad).collect();
            assert_eq!(cloud.within(&q, rad), brute);
        }
    }

    #[test]
    fn nearest_matches_brute_force() {
        let pts = random_cloud(300, 3);
        let cloud = PointCloud::new(pts.clone(), 1e-9).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..2000 {
            let q = Vec3::new(rng.gen_range(-3.0..4.0), rng.gen_range(-3.0..5.0), rng.gen_range(-3.0..3.0));
            assert_eq!(cloud.distance(&q), brute_distance(&pts, &q));
        }
    }

    #[test]
    fn duplicates_rejected() {
        let pts = vec![Vec3::zeros(), Vec3::x(), Vec3::new(1.0, 0.0, 1e-12)];
        match PointCloud::new(pts, 1e-9) {
            Err(CurvError::DuplicatePoint { first, location }) => {
                assert_eq!(first, 1);
                assert_eq!(location, "point 2");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn hausdorff_of_shifted_set() {
        let a = vec![Vec3::zeros(), Vec3::x()];
        let b = vec![Vec3::new(0.0, 0.1, 0.0), Vec3::new(1.0, 0.2, 0.0)];
        assert!((hausdorff_brute(&a, &b) - 0.2).abs() < 1e-15);
    }
}
