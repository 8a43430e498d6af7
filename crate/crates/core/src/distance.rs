//! Distance function of a point cloud, its generalized gradient, sampled
//! critical function and μ-reach estimate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{circumcircle, circumsphere};
use crate::cloud::PointCloud;
use crate::error::{CurvError, Result};
use crate::geometry::{any_perpendicular, Vec3};

/// Points within this distance of the minimum join the nearest set.
pub const NEAREST_SET_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientInfo {
    pub distance: f64,
    /// Ids of the points within [`NEAREST_SET_TOLERANCE`] of the minimum.
    pub nearest_set: Vec<usize>,
    /// Center of the smallest ball enclosing the nearest set.
    pub theta: Vec3,
    /// Radius of that ball.
    pub enclosing_radius: f64,
    pub gradient: Vec3,
}

impl GradientInfo {
    pub fn norm(&self) -> f64 {
        self.gradient.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub center: Vec3,
    pub radius: f64,
}

impl Ball {
    fn contains(&self, p: &Vec3) -> bool {
        (p - self.center).norm() <= self.radius * (1.0 + 1e-12) + 1e-15
    }
}

/// Smallest ball through every point of `support` (at most 4 points) that
/// encloses all of them.
fn ball_of(support: &[Vec3]) -> Option<Ball> {
    let fits = |b: &Ball| support.iter().all(|p| b.contains(p));
    match support.len() {
        0 => None,
        1 => Some(Ball { center: support[0], radius: 0.0 }),
        2 => {
            let c = 0.5 * (support[0] + support[1]);
            Some(Ball { center: c, radius: 0.5 * (support[0] - support[1]).norm() })
        }
        n => {
            let exact = if n == 3 {
                circumcircle(&support[0], &support[1], &support[2])
            } else {
                circumsphere(&support[0], &support[1], &support[2], &support[3])
            };
            if let Some((center, radius)) = exact {
                return Some(Ball { center, radius });
            }
            // Degenerate support: the best ball of a proper subset.
            let mut best: Option<Ball> = None;
            for mask in 1u32..(1 << n) - 1 {
                let sub: Vec<Vec3> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| support[i]).collect();
                if let Some(b) = ball_of(&sub) {
                    if fits(&b) && best.map_or(true, |x| b.radius < x.radius) {
                        best = Some(b);
                    }
                }
            }
            best
        }
    }
}

fn move_to_front(pts: &mut Vec<Vec3>, end: usize, support: &mut Vec<Vec3>) -> Option<Ball> {
    let mut ball = ball_of(support);
    if support.len() == 4 {
        return ball;
    }
    for i in 0..end {
        let p = pts[i];
        if ball.map_or(true, |b| !b.contains(&p)) {
            support.push(p);
            ball = move_to_front(pts, i, support);
            support.pop();
            pts.remove(i);
            pts.insert(0, p);
        }
    }
    ball
}

/// Smallest ball enclosing `points` (Welzl's move-to-front scheme).
pub fn smallest_enclosing_ball(points: &[Vec3]) -> Option<Ball> {
    let mut pts = points.to_vec();
    let n = pts.len();
    move_to_front(&mut pts, n, &mut Vec::with_capacity(4))
}

/// Generalized gradient of the distance function of `cloud` at `x`.
pub fn gradient_at(cloud: &PointCloud, x: &Vec3) -> GradientInfo {
    let Some((_, d)) = cloud.nearest(x) else {
        return GradientInfo {
            distance: f64::INFINITY,
            nearest_set: Vec::new(),
            theta: *x,
            enclosing_radius: 0.0,
            gradient: Vec3::zeros(),
        };
    };
    let nearest_set = cloud.within(x, d + NEAREST_SET_TOLERANCE);
    let pts: Vec<Vec3> = nearest_set.iter().map(|&i| cloud.point(i)).collect();
    let ball = smallest_enclosing_ball(&pts).expect("nearest set is not empty");
    let gradient = if d > 0.0 { (x - ball.center) / d } else { Vec3::zeros() };
    // Rounding can push the norm marginally above one.
    let n = gradient.norm();
    let gradient = if n > 1.0 { gradient / n } else { gradient };
    GradientInfo { distance: d, nearest_set, theta: ball.center, enclosing_radius: ball.radius, gradient }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalFunctionSample {
    pub radii: Vec<f64>,
    /// Smallest gradient norm found on each level set. This over-estimates
    /// the infimum whenever sampling misses the minimizer.
    pub chi_lower: Vec<f64>,
    pub probe_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuReachEstimate {
    pub mu: f64,
    pub r_mu_lower: f64,
    /// Always false: the estimate comes from sampling.
    pub certified: bool,
}

/// Point `i` of a spherical Fibonacci set of `n` directions.
fn fibonacci_direction(i: usize, n: usize) -> Vec3 {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
    let rho = (1.0 - z * z).max(0.0).sqrt();
    let phi = golden * i as f64;
    Vec3::new(rho * phi.cos(), rho * phi.sin(), z)
}

fn nearest_neighbors(cloud: &PointCloud, i: usize, k: usize) -> Vec<usize> {
    let p = cloud.point(i);
    let mut radius = cloud.cell_size();
    loop {
        let mut ids: Vec<usize> = cloud.within(&p, radius).into_iter().filter(|&j| j != i).collect();
        if ids.len() >= k || ids.len() + 1 == cloud.len() {
            ids.sort_by(|&a, &b| (cloud.point(a) - p).norm().total_cmp(&(cloud.point(b) - p).norm()).then(a.cmp(&b)));
            ids.truncate(k);
            return ids;
        }
        radius *= 2.0;
    }
}

/// Point on the ray `origin + t·dir` (t > 0) where the distance reaches `d`.
pub(crate) fn ray_to_level(cloud: &PointCloud, origin: &Vec3, dir: &Vec3, d: f64) -> Vec3 {
    let mut lo = 0.0;
    let mut hi = d;
    let mut guard = 0;
    while cloud.distance(&(origin + hi * dir)) < d && guard < 200 {
        lo = hi;
        hi *= 2.0;
        guard += 1;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cloud.distance(&(origin + mid * dir)) < d {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    origin + hi * dir
}

/// Newton steps along the generalized gradient back onto the level set.
fn polish(cloud: &PointCloud, mut x: Vec3, d: f64) -> Vec3 {
    for _ in 0..4 {
        let g = gradient_at(cloud, &x);
        let gn = g.gradient.norm_squared();
        let res = d - g.distance;
        if gn < 1e-6 || res.abs() < 1e-15 * d.max(1.0) {
            break;
        }
        let y = x + res * g.gradient / gn;
        if (cloud.distance(&y) - d).abs() < res.abs() {
            x = y;
        } else {
            break;
        }
    }
    x
}

fn probes_at(cloud: &PointCloud, d: f64, n_probes: usize, neighbors: &[Vec<usize>], bases: &[usize]) -> (f64, usize) {
    let n = cloud.len();
    let mut best = 1.0f64;
    let mut count = 0usize;
    let mut take = |x: &Vec3, require_level: bool| {
        let g = gradient_at(cloud, x);
        if require_level && (g.distance - d).abs() > NEAREST_SET_TOLERANCE * d.max(1.0) {
            return;
        }
        best = best.min(g.norm());
        count += 1;
    };
    for j in 0..n_probes {
        let origin = cloud.point(j % n);
        let dir = fibonacci_direction(j, n_probes);
        let x = polish(cloud, ray_to_level(cloud, &origin, &dir, d), d);
        take(&x, false);
    }
    // Points equidistant to a pair or triple of nearby samples.
    for (slot, &i) in bases.iter().enumerate() {
        let p = cloud.point(i);
        let nb = &neighbors[slot];
        for &j in nb {
            let q = cloud.point(j);
            let h2 = d * d - 0.25 * (q - p).norm_squared();
            if h2 < 0.0 {
                continue;
            }
            let m = 0.5 * (p + q);
            let e1 = any_perpendicular(&(q - p).normalize());
            let e2 = (q - p).normalize().cross(&e1);
            for e in [e1, -e1, e2, -e2] {
                take(&(m + h2.sqrt() * e), true);
            }
        }
        for a in 0..nb.len() {
            for b in a + 1..nb.len() {
                let (qa, qb) = (cloud.point(nb[a]), cloud.point(nb[b]));
                let Some((c, rho)) = circumcircle(&p, &qa, &qb) else { continue };
                let h2 = d * d - rho * rho;
                if h2 < 0.0 {
                    continue;
                }
                let normal = (qa - p).cross(&(qb - p)).normalize();
                for s in [1.0, -1.0] {
                    take(&(c + s * h2.sqrt() * normal), true);
                }
            }
        }
    }
    (best.clamp(0.0, 1.0), count)
}

/// Samples the critical function on `n_radii` evenly spaced radii.
pub fn sample_critical_function(
    cloud: &PointCloud,
    r_min: f64,
    r_max: f64,
    n_radii: usize,
    n_probes: usize,
) -> Result<CriticalFunctionSample> {
    if !(r_min > 0.0 && r_min < r_max) {
        return Err(CurvError::InvalidParameter(format!("need 0 < r_min < r_max, got {r_min}, {r_max}")));
    }
    if n_probes == 0 || n_radii == 0 {
        return Err(CurvError::InvalidParameter("need at least one radius and one probe".into()));
    }
    if cloud.is_empty() {
        return Err(CurvError::InvalidParameter("empty cloud".into()));
    }
    let radii: Vec<f64> = if n_radii == 1 {
        vec![r_min]
    } else {
        (0..n_radii).map(|i| r_min + (r_max - r_min) * i as f64 / (n_radii - 1) as f64).collect()
    };
    let n = cloud.len();
    let stride = n.div_ceil(n_probes).max(1);
    let bases: Vec<usize> = (0..n).step_by(stride).collect();
    let neighbors: Vec<Vec<usize>> = bases.par_iter().map(|&i| nearest_neighbors(cloud, i, 6)).collect();
    let per_radius: Vec<(f64, usize)> =
        radii.par_iter().map(|&d| probes_at(cloud, d, n_probes, &neighbors, &bases)).collect();
    Ok(CriticalFunctionSample {
        radii,
        chi_lower: per_radius.iter().map(|p| p.0).collect(),
        probe_count: per_radius.iter().map(|p| p.1).sum(),
    })
}

/// Largest sampled radius of the prefix on which the critical function stays
/// at or above `mu`.
pub fn estimate_mu_reach(sample: &CriticalFunctionSample, mu: f64) -> MuReachEstimate {
    let mut r = sample.radii.first().copied().unwrap_or(0.0);
    for (d, chi) in sample.radii.iter().zip(&sample.chi_lower) {
        if *chi < mu {
            break;
        }
        r = *d;
    }
    MuReachEstimate { mu, r_mu_lower: r, certified: false }
}

/// Whether `epsilon < mu²/(60 + 9mu²)·r`.
pub fn theorem2_radius_check(mu: f64, r: f64, epsilon: f64) -> bool {
    if !(mu > 0.0 && mu <= 1.0 && r > 0.0 && epsilon >= 0.0) {
        return false;
    }
    epsilon < mu * mu / (60.0 + 9.0 * mu * mu) * r
}

/// Largest Hausdorff perturbation allowed by [`theorem2_radius_check`].
pub fn theorem2_epsilon_bound(mu: f64, r: f64) -> f64 {
    mu * mu / (60.0 + 9.0 * mu * mu) * r
}
